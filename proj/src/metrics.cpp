#include "gmsel/metrics.hpp"

#include <cmath>
#include <fstream>
#include <future>
#include <sstream>
#include <unordered_map>

#include "gmsel/csv.hpp"

namespace gmsel {

double top1_auc(const Eigen::VectorXd& scores, Eigen::Index best_index) {
  const Eigen::Index m = scores.size();
  if (m < 2) throw DataError("top1_auc: need at least 2 models");
  const double s = scores[best_index];
  double wins = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    if (j == best_index) continue;
    if (s > scores[j])
      wins += 1.0;
    else if (s == scores[j])
      wins += 0.5;
  }
  return wins / static_cast<double>(m - 1);
}

double mrr(const Eigen::VectorXd& scores, Eigen::Index best_index) {
  const double s = scores[best_index];
  long above = 0, tied = 0;
  for (Eigen::Index j = 0; j < scores.size(); ++j) {
    if (scores[j] > s)
      ++above;
    else if (scores[j] == s)
      ++tied;  // includes best_index itself
  }
  const double rank = 1.0 + above + (tied - 1) / 2.0;
  return 1.0 / rank;
}

double ndcg_at_1(const Eigen::VectorXd& scores,
                 const Eigen::VectorXd& perfs) {
  const double shift = perfs.minCoeff();
  const double max_rel = perfs.maxCoeff() - shift;
  if (max_rel == 0.0) return 1.0;
  Eigen::Index top = 0;
  scores.maxCoeff(&top);
  return (perfs[top] - shift) / max_rel;
}

Eigen::Index best_model_index(const Eigen::VectorXd& perfs) {
  Eigen::Index best = 0;
  perfs.maxCoeff(&best);
  return best;
}

namespace {

struct Totals {
  std::vector<double> auc, mrr_v, ndcg;
};

void finish_metric(const std::vector<double>& values, double& mean,
                   double& se) {
  const size_t n = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  mean = n ? sum / static_cast<double>(n) : 0.0;
  if (n < 2) {
    se = 0.0;
    return;
  }
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  se = std::sqrt(ss / static_cast<double>(n - 1)) /
       std::sqrt(static_cast<double>(n));
}

Totals evaluate_fold(const Fold& fold, const PerformanceMatrix& P,
                     const Eigen::MatrixXd& M,
                     const std::unordered_map<std::string, Eigen::Index>& row,
                     Algorithm algorithm, const SelectorConfig& config,
                     std::uint64_t seed) {
  TrainCorpus corpus;
  const Eigen::Index n_train =
      static_cast<Eigen::Index>(fold.train_ids.size());
  corpus.M.resize(n_train, M.cols());
  corpus.P.model_ids = P.model_ids;
  corpus.P.graph_ids = fold.train_ids;
  corpus.P.values.resize(n_train, P.num_models());
  corpus.P.mask.resize(n_train, P.num_models());
  for (Eigen::Index r = 0; r < n_train; ++r) {
    const Eigen::Index src = row.at(fold.train_ids[r]);
    corpus.M.row(r) = M.row(src);
    corpus.P.values.row(r) = P.values.row(src);
    corpus.P.mask.row(r) = P.mask.row(src);
  }
  if (fold.train_mask) {
    if (fold.train_mask->rows() != n_train ||
        fold.train_mask->cols() != P.num_models())
      throw DataError("evaluate: fold train mask shape mismatch");
    corpus.P.mask = corpus.P.mask.array() && fold.train_mask->array();
  }

  const SelectorModel model = fit_selector(algorithm, corpus, config, seed);

  Totals totals;
  for (const auto& id : fold.test_ids) {
    const Eigen::Index src = row.at(id);
    if (!P.mask.row(src).all())
      throw DataError("evaluate: test row not fully observed: " + id);
    const Eigen::VectorXd scores = model.predict(M.row(src).transpose());
    const Eigen::VectorXd perfs = P.values.row(src).transpose();
    const Eigen::Index best = best_model_index(perfs);
    totals.auc.push_back(top1_auc(scores, best));
    totals.mrr_v.push_back(mrr(scores, best));
    totals.ndcg.push_back(ndcg_at_1(scores, perfs));
  }
  return totals;
}

}  // namespace

EvaluationReport evaluate(const TestbedSplit& split,
                          const PerformanceMatrix& P,
                          const Eigen::MatrixXd& M, Algorithm algorithm,
                          const SelectorConfig& config, std::uint64_t seed,
                          int jobs) {
  if (M.rows() != P.num_graphs())
    throw DataError("evaluate: feature matrix not aligned with P");
  std::unordered_map<std::string, Eigen::Index> row;
  for (Eigen::Index i = 0; i < P.num_graphs(); ++i) row[P.graph_ids[i]] = i;
  for (const auto& fold : split.folds)
    for (const auto& id : fold.train_ids)
      if (!row.count(id))
        throw DataError("evaluate: split graph missing from P: " + id);

  const int n_folds = static_cast<int>(split.folds.size());
  std::vector<Totals> per_fold(n_folds);
  if (jobs > 1 && n_folds > 1) {
    std::vector<std::future<Totals>> futures;
    futures.reserve(n_folds);
    for (int f = 0; f < n_folds; ++f)
      futures.push_back(std::async(std::launch::async, [&, f] {
        return evaluate_fold(split.folds[f], P, M, row, algorithm, config,
                             seed);
      }));
    for (int f = 0; f < n_folds; ++f) per_fold[f] = futures[f].get();
  } else {
    for (int f = 0; f < n_folds; ++f)
      per_fold[f] =
          evaluate_fold(split.folds[f], P, M, row, algorithm, config, seed);
  }

  EvaluationReport report;
  report.testbed = testbed_name(split.testbed);
  report.algorithm = algorithm_name(algorithm);
  Totals all;
  for (int f = 0; f < n_folds; ++f) {
    const Totals& t = per_fold[f];
    FoldMetrics fm;
    fm.fold = f;
    fm.count = static_cast<long>(t.auc.size());
    double unused_se = 0.0;
    finish_metric(t.auc, fm.auc, unused_se);
    finish_metric(t.mrr_v, fm.mrr, unused_se);
    finish_metric(t.ndcg, fm.ndcg1, unused_se);
    fm.map = fm.mrr;
    report.folds.push_back(fm);
    all.auc.insert(all.auc.end(), t.auc.begin(), t.auc.end());
    all.mrr_v.insert(all.mrr_v.end(), t.mrr_v.begin(), t.mrr_v.end());
    all.ndcg.insert(all.ndcg.end(), t.ndcg.begin(), t.ndcg.end());
  }
  report.count = static_cast<long>(all.auc.size());
  finish_metric(all.auc, report.mean_auc, report.se_auc);
  finish_metric(all.mrr_v, report.mean_mrr, report.se_mrr);
  finish_metric(all.ndcg, report.mean_ndcg1, report.se_ndcg1);
  report.mean_map = report.mean_mrr;
  report.se_map = report.se_mrr;
  return report;
}

namespace {

const char* kMetricNames[] = {"auc", "mrr", "map", "ndcg1"};

double fold_metric(const FoldMetrics& fm, int which) {
  switch (which) {
    case 0: return fm.auc;
    case 1: return fm.mrr;
    case 2: return fm.map;
    default: return fm.ndcg1;
  }
}

}  // namespace

void save_report_csv(const std::vector<EvaluationReport>& reports,
                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "testbed,algorithm,metric,fold,value\n";
  for (const auto& r : reports) {
    const double means[] = {r.mean_auc, r.mean_mrr, r.mean_map, r.mean_ndcg1};
    const double ses[] = {r.se_auc, r.se_mrr, r.se_map, r.se_ndcg1};
    for (int w = 0; w < 4; ++w) {
      for (const auto& fm : r.folds)
        out << r.testbed << ',' << r.algorithm << ',' << kMetricNames[w]
            << ',' << fm.fold << ',' << csv::format_double(fold_metric(fm, w))
            << '\n';
      out << r.testbed << ',' << r.algorithm << ',' << kMetricNames[w]
          << ",mean," << csv::format_double(means[w]) << '\n';
      out << r.testbed << ',' << r.algorithm << ',' << kMetricNames[w]
          << ",stderr," << csv::format_double(ses[w]) << '\n';
    }
    for (const auto& fm : r.folds)
      out << r.testbed << ',' << r.algorithm << ",count," << fm.fold << ','
          << fm.count << '\n';
    out << r.testbed << ',' << r.algorithm << ",count,total," << r.count
        << '\n';
  }
}

std::vector<EvaluationReport> load_report_csv(const std::string& path) {
  std::vector<EvaluationReport> reports;
  auto find = [&](const std::string& testbed,
                  const std::string& algorithm) -> EvaluationReport& {
    for (auto& r : reports)
      if (r.testbed == testbed && r.algorithm == algorithm) return r;
    reports.emplace_back();
    reports.back().testbed = testbed;
    reports.back().algorithm = algorithm;
    return reports.back();
  };
  bool header = true;
  for (const auto& row : csv::read_file(path)) {
    if (header) {
      header = false;
      continue;
    }
    if (row.size() != 5) throw DataError(path + ": malformed report row");
    EvaluationReport& r = find(row[0], row[1]);
    const std::string& metric = row[2];
    const double value = std::stod(row[4]);
    if (metric == "count") {
      if (row[3] == "total") {
        r.count = static_cast<long>(value);
      } else {
        const int f = std::stoi(row[3]);
        if (f >= static_cast<int>(r.folds.size())) r.folds.resize(f + 1);
        r.folds[f].fold = f;
        r.folds[f].count = static_cast<long>(value);
      }
      continue;
    }
    double* mean_slot = nullptr;
    double* se_slot = nullptr;
    if (metric == "auc") {
      mean_slot = &r.mean_auc;
      se_slot = &r.se_auc;
    } else if (metric == "mrr") {
      mean_slot = &r.mean_mrr;
      se_slot = &r.se_mrr;
    } else if (metric == "map") {
      mean_slot = &r.mean_map;
      se_slot = &r.se_map;
    } else if (metric == "ndcg1") {
      mean_slot = &r.mean_ndcg1;
      se_slot = &r.se_ndcg1;
    } else {
      throw DataError(path + ": unknown metric " + metric);
    }
    if (row[3] == "mean") {
      *mean_slot = value;
    } else if (row[3] == "stderr") {
      *se_slot = value;
    } else {
      const int f = std::stoi(row[3]);
      if (f >= static_cast<int>(r.folds.size())) r.folds.resize(f + 1);
      r.folds[f].fold = f;
      if (metric == "auc")
        r.folds[f].auc = value;
      else if (metric == "mrr")
        r.folds[f].mrr = value;
      else if (metric == "map")
        r.folds[f].map = value;
      else
        r.folds[f].ndcg1 = value;
    }
  }
  return reports;
}

std::string report_markdown(const std::vector<EvaluationReport>& reports) {
  std::ostringstream out;
  out << "| Testbed | Algorithm | AUC | MRR | MAP | NDCG@1 |\n";
  out << "|---|---|---|---|---|---|\n";
  auto cell = [](double mean, double se) {
    std::ostringstream c;
    c.setf(std::ios::fixed);
    c.precision(3);
    c << mean << " (" << se << ")";
    return c.str();
  };
  for (const auto& r : reports) {
    out << "| " << r.testbed << " | " << r.algorithm << " | "
        << cell(r.mean_auc, r.se_auc) << " | " << cell(r.mean_mrr, r.se_mrr)
        << " | " << cell(r.mean_map, r.se_map) << " | "
        << cell(r.mean_ndcg1, r.se_ndcg1) << " |\n";
  }
  return out.str();
}

}  // namespace gmsel
