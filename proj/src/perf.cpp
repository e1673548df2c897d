#include "gmsel/perf.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <random>
#include <set>
#include <unordered_set>

namespace gmsel {

void PerformanceMatrix::check() const {
  if (values.rows() != mask.rows() || values.cols() != mask.cols() ||
      static_cast<Eigen::Index>(graph_ids.size()) != values.rows() ||
      static_cast<Eigen::Index>(model_ids.size()) != values.cols())
    throw DataError("performance matrix dimensions inconsistent");
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    bool any = false;
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      if (mask(i, j)) {
        any = true;
        if (!std::isfinite(values(i, j)))
          throw DataError("non-finite observed performance at row " +
                          graph_ids[i]);
      }
    }
    if (!any)
      throw DataError("performance row with no observations: " +
                      graph_ids[i]);
  }
}

std::string ModelConfig::canonical_key() const {
  nlohmann::json j(hyperparameters);  // std::map keeps keys sorted
  return method + "|" + j.dump();
}

PerformanceMatrix load_performance_matrix(const std::string& path) {
  const auto rows = csv::read_file(path);
  if (rows.empty() || rows[0].empty() || rows[0][0] != "graph_id")
    throw DataError(path + ": expected performance matrix header");

  PerformanceMatrix P;
  P.model_ids.assign(rows[0].begin() + 1, rows[0].end());
  std::unordered_set<std::string> seen(P.model_ids.begin(),
                                       P.model_ids.end());
  if (seen.size() != P.model_ids.size())
    throw DataError(path + ": duplicate model_id");

  const Eigen::Index m = static_cast<Eigen::Index>(P.model_ids.size());
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size() - 1);
  P.values = Eigen::MatrixXd::Zero(n, m);
  P.mask = Mask::Constant(n, m, false);
  std::unordered_set<std::string> seen_graphs;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[i + 1];
    if (static_cast<Eigen::Index>(r.size()) != m + 1)
      throw DataError(path + ": row " + std::to_string(i + 2) +
                      " has wrong field count");
    if (!seen_graphs.insert(r[0]).second)
      throw DataError(path + ": duplicate graph_id " + r[0]);
    P.graph_ids.push_back(r[0]);
    for (Eigen::Index j = 0; j < m; ++j) {
      const std::string& cell = r[j + 1];
      if (cell.empty()) continue;
      try {
        size_t pos = 0;
        P.values(i, j) = std::stod(cell, &pos);
        if (pos != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw DataError(path + ": non-numeric cell at row " +
                        std::to_string(i + 2) + ", column " +
                        P.model_ids[j]);
      }
      P.mask(i, j) = true;
    }
  }
  P.check();
  return P;
}

void save_performance_matrix(const PerformanceMatrix& P,
                             const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "graph_id";
  for (const auto& id : P.model_ids) out << ',' << id;
  out << '\n';
  for (Eigen::Index i = 0; i < P.num_graphs(); ++i) {
    out << P.graph_ids[i];
    for (Eigen::Index j = 0; j < P.num_models(); ++j) {
      out << ',';
      if (P.mask(i, j)) out << csv::format_double(P.values(i, j));
    }
    out << '\n';
  }
}

std::vector<ModelConfig> load_model_catalog(const std::string& path) {
  const auto rows = csv::read_file(path);
  if (rows.empty() || rows[0].empty() || rows[0][0] != "model_id")
    throw DataError(path + ": expected model catalog header");
  std::vector<ModelConfig> models;
  std::set<std::string> ids, keys;
  for (size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() < 3)
      throw DataError(path + ": catalog row " + std::to_string(i + 1) +
                      " has too few fields");
    ModelConfig mc;
    mc.model_id = r[0];
    mc.method = r[1];
    std::string json_text = r[2];
    std::replace(json_text.begin(), json_text.end(), ';', ',');
    const auto j = nlohmann::json::parse(json_text);
    for (const auto& [key, value] : j.items())
      mc.hyperparameters[key] =
          value.is_string() ? value.get<std::string>() : value.dump();
    if (!ids.insert(mc.model_id).second)
      throw DataError(path + ": duplicate model_id " + mc.model_id);
    if (!keys.insert(mc.canonical_key()).second)
      throw DataError(path + ": duplicate (method, hyperparameters) for " +
                      mc.model_id);
    models.push_back(std::move(mc));
  }
  return models;
}

void save_model_catalog(const std::vector<ModelConfig>& models,
                        const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "model_id,method,hyperparams_json\n";
  for (const auto& mc : models) {
    nlohmann::json j(mc.hyperparameters);
    std::string text = j.dump();
    std::replace(text.begin(), text.end(), ',', ';');
    out << mc.model_id << ',' << mc.method << ',' << text << '\n';
  }
}

PerformanceMatrix sparsify_rows(const PerformanceMatrix& P, double p,
                                std::uint64_t seed) {
  if (p <= 0.0 || p > 1.0)
    throw DataError("sparsify_rows: p must be in (0, 1]");
  const Eigen::Index m = P.num_models();
  const Eigen::Index keep = std::max<Eigen::Index>(
      1, static_cast<Eigen::Index>(std::floor(p * m + 0.5)));

  PerformanceMatrix out = P;
  if (keep >= m) return out;
  std::mt19937_64 rng(seed);
  std::vector<Eigen::Index> cols(m);
  for (Eigen::Index j = 0; j < m; ++j) cols[j] = j;
  for (Eigen::Index i = 0; i < P.num_graphs(); ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      if (!P.mask(i, j))
        throw DataError("sparsify_rows: row " + P.graph_ids[i] +
                        " is not fully observed");
    }
    std::shuffle(cols.begin(), cols.end(), rng);
    for (Eigen::Index j = 0; j < m; ++j)
      out.mask(i, cols[j]) = j < keep;
  }
  return out;
}

}  // namespace gmsel
