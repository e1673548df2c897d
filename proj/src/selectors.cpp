#include "gmsel/selectors.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <cstring>
#include <numeric>
#include <random>

#include "gmsel/kmeans.hpp"
#include "gmsel/nmf.hpp"

namespace gmsel {

namespace {

constexpr const char* kAlgorithmNames[] = {
    "random_selection", "gb_avgperf", "gb_avgrank", "isac", "argosmart",
    "s2",               "alors",      "ncf",        "metaod",
    "metagl_lite"};

}  // namespace

Algorithm parse_algorithm(const std::string& name) {
  std::string key = name;
  if (key == "randsel" || key == "random") key = "random_selection";
  if (key == "as") key = "argosmart";
  if (key == "metagl") key = "metagl_lite";
  for (int i = 0; i < 10; ++i)
    if (key == kAlgorithmNames[i]) return static_cast<Algorithm>(i);
  throw DataError("unknown algorithm: " + name);
}

std::string algorithm_name(Algorithm a) {
  return kAlgorithmNames[static_cast<int>(a)];
}

const std::vector<Algorithm>& all_algorithms() {
  static const std::vector<Algorithm> all = [] {
    std::vector<Algorithm> v;
    for (int i = 0; i < 10; ++i) v.push_back(static_cast<Algorithm>(i));
    return v;
  }();
  return all;
}

void TrainCorpus::check() const {
  P.check();
  if (M.rows() != P.num_graphs())
    throw DataError("corpus: meta-feature rows do not match P rows");
  if (M.cols() == 0) throw DataError("corpus: zero-dimensional features");
}

double SelectorConfig::get(const std::string& key, double fallback) const {
  auto it = entries.find(key);
  return it == entries.end() ? fallback : std::stod(it->second);
}

int SelectorConfig::get_int(const std::string& key, int fallback) const {
  auto it = entries.find(key);
  return it == entries.end() ? fallback : std::stoi(it->second);
}

std::string SelectorConfig::get_str(const std::string& key,
                                    const std::string& fallback) const {
  auto it = entries.find(key);
  return it == entries.end() ? fallback : it->second;
}

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

std::vector<int> top_cosine_neighbors(const Eigen::MatrixXd& X, int i,
                                      int k) {
  std::vector<std::pair<double, int>> sims;
  for (Eigen::Index j = 0; j < X.rows(); ++j) {
    if (j == i) continue;
    sims.emplace_back(cosine_similarity(X.row(i), X.row(j)),
                      static_cast<int>(j));
  }
  std::stable_sort(sims.begin(), sims.end(), [](const auto& a, const auto& b) {
    return a.first > b.first;
  });
  std::vector<int> out;
  for (int t = 0; t < std::min<int>(k, (int)sims.size()); ++t)
    out.push_back(sims[t].second);
  return out;
}

Eigen::VectorXd top1_probabilities(const Eigen::VectorXd& scores) {
  const double max_v = scores.maxCoeff();
  Eigen::VectorXd p = (scores.array() - max_v).exp();
  return p / p.sum();
}

namespace {

struct ZScore {
  Eigen::VectorXd mean, std;

  static ZScore fit(const Eigen::MatrixXd& M) {
    ZScore z;
    z.mean = M.colwise().mean();
    z.std.resize(M.cols());
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      const double var =
          (M.col(j).array() - z.mean[j]).square().mean();
      z.std[j] = var > 1e-24 ? std::sqrt(var) : 1.0;  // constant dim -> 1
    }
    return z;
  }

  Eigen::MatrixXd apply(const Eigen::MatrixXd& M) const {
    return (M.rowwise() - mean.transpose()).array().rowwise() /
           std.transpose().array();
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
    return (x - mean).cwiseQuotient(std);
  }
};

/// Column means over observed entries; unobserved-everywhere columns get
/// the rank-last sentinel.
Eigen::VectorXd masked_column_means(const PerformanceMatrix& P) {
  Eigen::VectorXd scores(P.num_models());
  for (Eigen::Index j = 0; j < P.num_models(); ++j) {
    double sum = 0.0;
    long count = 0;
    for (Eigen::Index i = 0; i < P.num_graphs(); ++i) {
      if (P.mask(i, j)) {
        sum += P.values(i, j);
        ++count;
      }
    }
    scores[j] = count > 0 ? sum / count : kUnobservedScore;
  }
  return scores;
}

/// Ascending percentile ranks over the observed entries of one row; ties
/// get the average of their tied ranks; best observed value maps to 1.0.
Eigen::VectorXd row_rank_percentiles(const Eigen::VectorXd& row,
                                     const Mask& mask, Eigen::Index i) {
  std::vector<int> obs;
  for (Eigen::Index j = 0; j < row.size(); ++j)
    if (mask(i, j)) obs.push_back(static_cast<int>(j));
  std::sort(obs.begin(), obs.end(),
            [&](int a, int b) { return row[a] < row[b]; });
  Eigen::VectorXd pct = Eigen::VectorXd::Zero(row.size());
  const double denom = static_cast<double>(obs.size());
  size_t s = 0;
  while (s < obs.size()) {
    size_t e = s;
    while (e + 1 < obs.size() && row[obs[e + 1]] == row[obs[s]]) ++e;
    const double avg_rank = (static_cast<double>(s + 1 + e + 1)) / 2.0;
    for (size_t t = s; t <= e; ++t) pct[obs[t]] = avg_rank / denom;
    s = e + 1;
  }
  return pct;
}

std::vector<bool> observed_columns(const PerformanceMatrix& P) {
  std::vector<bool> obs(P.num_models(), false);
  for (Eigen::Index j = 0; j < P.num_models(); ++j)
    for (Eigen::Index i = 0; i < P.num_graphs(); ++i)
      if (P.mask(i, j)) {
        obs[j] = true;
        break;
      }
  return obs;
}

// ---------------------------------------------------------------------------
// Small MLP helpers on top of the autodiff tape. Parameter layout per layer:
// weight (in x out) followed by bias (1 x out).

std::vector<ad::Parameter> init_mlp(const std::vector<int>& dims,
                                    std::mt19937_64& rng,
                                    const std::string& prefix) {
  std::vector<ad::Parameter> params;
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    const double bound = std::sqrt(6.0 / (dims[l] + dims[l + 1]));
    std::uniform_real_distribution<double> u(-bound, bound);
    Eigen::MatrixXd W(dims[l], dims[l + 1]);
    for (Eigen::Index i = 0; i < W.rows(); ++i)
      for (Eigen::Index j = 0; j < W.cols(); ++j) W(i, j) = u(rng);
    params.emplace_back(prefix + "_w" + std::to_string(l), std::move(W));
    params.emplace_back(prefix + "_b" + std::to_string(l),
                        Eigen::MatrixXd::Zero(1, dims[l + 1]));
  }
  return params;
}

/// Forward through the layers stored at params[offset .. offset+2L).
/// ReLU between layers, linear output.
ad::Tape::Var mlp_forward(ad::Tape& tape, std::vector<ad::Parameter>& params,
                          size_t offset, size_t n_layers,
                          ad::Tape::Var input) {
  ad::Tape::Var h = input;
  for (size_t l = 0; l < n_layers; ++l) {
    h = tape.matmul(h, tape.leaf(params[offset + 2 * l]));
    h = tape.add_row(h, tape.leaf(params[offset + 2 * l + 1]));
    if (l + 1 < n_layers) h = tape.relu(h);
  }
  return h;
}

/// Tape-free forward pass for prediction.
Eigen::MatrixXd mlp_eval(const std::vector<ad::Parameter>& params,
                         size_t offset, size_t n_layers,
                         const Eigen::MatrixXd& input) {
  Eigen::MatrixXd h = input;
  for (size_t l = 0; l < n_layers; ++l) {
    h = h * params[offset + 2 * l].value;
    h.rowwise() += params[offset + 2 * l + 1].value.row(0);
    if (l + 1 < n_layers) h = h.cwiseMax(0.0);
  }
  return h;
}

struct TrainOptions {
  int epochs = 500;
  std::string optimizer = "sgd";  // sgd | adam
  double lr = 0.01;
  double momentum = 0.9;
  double weight_decay = 0.0;
  double plateau_tol = 1e-10;
  int patience = 25;
};

TrainOptions train_options(const SelectorConfig& cfg,
                           const std::string& default_optimizer,
                           double default_lr, double default_wd) {
  TrainOptions o;
  o.epochs = cfg.get_int("epochs", 500);
  o.optimizer = cfg.get_str("optimizer", default_optimizer);
  o.lr = cfg.get("lr", default_lr);
  o.momentum = cfg.get("momentum", 0.9);
  o.weight_decay = cfg.get("weight_decay", default_wd);
  return o;
}

/// Full-batch gradient descent with plateau early stopping. `step` must
/// zero grads, run forward+backward, and return the loss.
void train_loop(std::vector<ad::Parameter>& params,
                const std::function<double()>& step,
                const TrainOptions& opts) {
  ad::SgdMomentum sgd;
  sgd.lr = opts.lr;
  sgd.momentum = opts.momentum;
  sgd.weight_decay = opts.weight_decay;
  ad::Adam adam;
  adam.lr = opts.lr;
  adam.weight_decay = opts.weight_decay;

  double best = std::numeric_limits<double>::infinity();
  int stale = 0;
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    ad::zero_grads(params);
    const double loss = step();
    if (!std::isfinite(loss))
      throw DataError("training diverged at epoch " + std::to_string(epoch));
    if (loss < best - opts.plateau_tol) {
      best = loss;
      stale = 0;
    } else if (++stale > opts.patience) {
      break;
    }
    if (opts.optimizer == "adam")
      adam.step(params);
    else
      sgd.step(params);
  }
}

// ---------------------------------------------------------------------------
// Per-algorithm fitting.

void fit_random(SelectorModel&, const TrainCorpus&) {}

void fit_gb_avgperf(SelectorModel& model, const TrainCorpus& corpus) {
  model.state.global_scores = masked_column_means(corpus.P);
}

void fit_gb_avgrank(SelectorModel& model, const TrainCorpus& corpus) {
  const auto& P = corpus.P;
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(P.num_models());
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(P.num_models());
  for (Eigen::Index i = 0; i < P.num_graphs(); ++i) {
    const Eigen::VectorXd pct = row_rank_percentiles(P.values.row(i), P.mask, i);
    for (Eigen::Index j = 0; j < P.num_models(); ++j) {
      if (P.mask(i, j)) {
        sums[j] += pct[j];
        counts[j] += 1.0;
      }
    }
  }
  model.state.global_scores.resize(P.num_models());
  for (Eigen::Index j = 0; j < P.num_models(); ++j)
    model.state.global_scores[j] =
        counts[j] > 0 ? sums[j] / counts[j] : kUnobservedScore;
}

void fit_isac(SelectorModel& model, const TrainCorpus& corpus) {
  const int k = std::min<int>(model.config.get_int("k", 5),
                              (int)corpus.M.rows());
  const ZScore z = ZScore::fit(corpus.M);
  model.state.feature_mean = z.mean;
  model.state.feature_std = z.std;
  const Eigen::MatrixXd Mz = z.apply(corpus.M);
  const auto km = kmeans(Mz, k, model.seed);
  model.state.centroids = km.centroids;

  const Eigen::VectorXd global = masked_column_means(corpus.P);
  model.state.cluster_scores.resize(k, corpus.P.num_models());
  for (int c = 0; c < k; ++c) {
    for (Eigen::Index j = 0; j < corpus.P.num_models(); ++j) {
      double sum = 0.0;
      long count = 0;
      for (Eigen::Index i = 0; i < corpus.P.num_graphs(); ++i) {
        if (km.assignments[i] == c && corpus.P.mask(i, j)) {
          sum += corpus.P.values(i, j);
          ++count;
        }
      }
      model.state.cluster_scores(c, j) = count > 0 ? sum / count : global[j];
    }
  }
}

void fit_argosmart(SelectorModel& model, const TrainCorpus& corpus) {
  model.state.train_features = corpus.M;  // cosine works on raw features
  model.state.train_rows = corpus.P.values;
  // Impute each row's unobserved entries with the row's observed mean.
  for (Eigen::Index i = 0; i < corpus.P.num_graphs(); ++i) {
    double sum = 0.0;
    long count = 0;
    for (Eigen::Index j = 0; j < corpus.P.num_models(); ++j)
      if (corpus.P.mask(i, j)) {
        sum += corpus.P.values(i, j);
        ++count;
      }
    const double mean = count > 0 ? sum / count : 0.0;
    for (Eigen::Index j = 0; j < corpus.P.num_models(); ++j)
      if (!corpus.P.mask(i, j)) model.state.train_rows(i, j) = mean;
  }
}

void fit_s2(SelectorModel& model, const TrainCorpus& corpus) {
  const ZScore z = ZScore::fit(corpus.M);
  model.state.feature_mean = z.mean;
  model.state.feature_std = z.std;
  const Eigen::MatrixXd Mz = z.apply(corpus.M);

  const int hidden = model.config.get_int("hidden", 32);
  const int hidden_layers = model.config.get_int("hidden_layers", 2);
  std::vector<int> dims = {(int)Mz.cols()};
  for (int l = 0; l < hidden_layers; ++l) dims.push_back(hidden);
  dims.push_back((int)corpus.P.num_models());

  std::mt19937_64 rng(model.seed);
  model.state.params = init_mlp(dims, rng, "s2");
  const size_t n_layers = dims.size() - 1;

  const auto opts = train_options(model.config, "adam", 0.01, 0.0);
  train_loop(model.state.params, [&] {
    ad::Tape tape;
    auto pred = mlp_forward(tape, model.state.params, 0, n_layers,
                            tape.constant(Mz));
    auto loss = tape.masked_mse(pred, corpus.P.values, corpus.P.mask);
    tape.backward(loss);
    return tape.value(loss)(0, 0);
  }, opts);
}

void fit_alors(SelectorModel& model, const TrainCorpus& corpus) {
  const auto& P = corpus.P;
  // Low default rank: the factorization should compress P, not memorize
  // per-cell noise the regressor then has to reproduce.
  const int rank =
      std::min<int>({model.config.get_int("rank", 8),
                     (int)P.num_graphs(), (int)P.num_models()});

  // Shift observed values to nonnegativity for the factorization.
  double min_obs = 0.0;
  for (Eigen::Index i = 0; i < P.num_graphs(); ++i)
    for (Eigen::Index j = 0; j < P.num_models(); ++j)
      if (P.mask(i, j)) min_obs = std::min(min_obs, P.values(i, j));
  model.state.value_shift = min_obs < 0.0 ? -min_obs : 0.0;
  Eigen::MatrixXd shifted = P.values.array() + model.state.value_shift;

  const auto factors = nmf(shifted, P.mask, rank, model.seed,
                           model.config.get_int("nmf_iter", 500));
  model.state.factors_v = factors.V;

  // Regressor: meta-features -> latent graph factors.
  const ZScore z = ZScore::fit(corpus.M);
  model.state.feature_mean = z.mean;
  model.state.feature_std = z.std;
  const Eigen::MatrixXd Mz = z.apply(corpus.M);
  const int hidden = model.config.get_int("hidden", 32);
  std::vector<int> dims = {(int)Mz.cols(), hidden, hidden, rank};

  std::mt19937_64 rng(model.seed + 1);
  model.state.params = init_mlp(dims, rng, "alors");
  const size_t n_layers = dims.size() - 1;
  const Mask full = Mask::Constant(factors.U.rows(), factors.U.cols(), true);

  const auto opts = train_options(model.config, "adam", 0.01, 0.0);
  train_loop(model.state.params, [&] {
    ad::Tape tape;
    auto pred = mlp_forward(tape, model.state.params, 0, n_layers,
                            tape.constant(Mz));
    auto loss = tape.masked_mse(pred, factors.U, full);
    tape.backward(loss);
    return tape.value(loss)(0, 0);
  }, opts);
}

void fit_ncf(SelectorModel& model, const TrainCorpus& corpus) {
  const auto& P = corpus.P;
  const int latent = model.config.get_int("latent", 32);
  const int hidden = model.config.get_int("hidden", 32);
  const ZScore z = ZScore::fit(corpus.M);
  model.state.feature_mean = z.mean;
  model.state.feature_std = z.std;
  const Eigen::MatrixXd Mz = z.apply(corpus.M);

  std::mt19937_64 rng(model.seed);
  // Regressor meta-features -> graph factor (two hidden layers).
  std::vector<int> reg_dims = {(int)Mz.cols(), hidden, hidden, latent};
  auto params = init_mlp(reg_dims, rng, "ncf_reg");
  const size_t reg_layers = reg_dims.size() - 1;
  const size_t reg_count = params.size();

  // Scoring network on [graph factor; model factor].
  std::vector<int> score_dims = {2 * latent, hidden, 1};
  auto score_params = init_mlp(score_dims, rng, "ncf_score");
  const size_t score_layers = score_dims.size() - 1;
  for (auto& p : score_params) params.push_back(std::move(p));

  // Free model factors.
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  Eigen::MatrixXd V0(P.num_models(), latent);
  for (Eigen::Index i = 0; i < V0.rows(); ++i)
    for (Eigen::Index j = 0; j < V0.cols(); ++j) V0(i, j) = u(rng);
  params.emplace_back("ncf_v", std::move(V0));
  const size_t v_index = params.size() - 1;

  const auto opts = train_options(model.config, "adam", 0.01, 1e-4);
  train_loop(params, [&] {
    ad::Tape tape;
    auto graph_factors =
        mlp_forward(tape, params, 0, reg_layers, tape.constant(Mz));
    auto pairs =
        tape.pairwise_concat(graph_factors, tape.leaf(params[v_index]));
    auto scores_col =
        mlp_forward(tape, params, reg_count, score_layers, pairs);
    auto scores =
        tape.reshape_rows(scores_col, P.num_graphs(), P.num_models());
    auto loss = tape.masked_mse(scores, P.values, P.mask);
    tape.backward(loss);
    return tape.value(loss)(0, 0);
  }, opts);

  model.state.params = std::move(params);
  model.state.factors_v = model.state.params[v_index].value;
}

void fit_metaod(SelectorModel& model, const TrainCorpus& corpus) {
  const auto& P = corpus.P;
  const int rank =
      std::min<int>({model.config.get_int("rank", 32),
                     (int)P.num_graphs(), (int)P.num_models()});

  // Factorize P under the soft top-1 rank surrogate.
  std::mt19937_64 rng(model.seed);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  Eigen::MatrixXd U0(P.num_graphs(), rank), V0(P.num_models(), rank);
  for (Eigen::Index i = 0; i < U0.rows(); ++i)
    for (int k = 0; k < rank; ++k) U0(i, k) = u(rng);
  for (Eigen::Index j = 0; j < V0.rows(); ++j)
    for (int k = 0; k < rank; ++k) V0(j, k) = u(rng);
  std::vector<ad::Parameter> params;
  params.emplace_back("metaod_u", std::move(U0));
  params.emplace_back("metaod_v", std::move(V0));

  auto opts = train_options(model.config, "adam", 0.05, 0.0);
  train_loop(params, [&] {
    ad::Tape tape;
    auto scores = tape.matmul_nt(tape.leaf(params[0]), tape.leaf(params[1]));
    auto loss = tape.listnet_top1(scores, P.values, P.mask);
    tape.backward(loss);
    return tape.value(loss)(0, 0);
  }, opts);
  model.state.factors_v = params[1].value;

  // Random forest regressor: meta-features -> latent graph factors.
  const ZScore z = ZScore::fit(corpus.M);
  model.state.feature_mean = z.mean;
  model.state.feature_std = z.std;
  ForestConfig fc;
  fc.n_trees = model.config.get_int("n_trees", 100);
  fc.max_depth = model.config.get_int("max_depth", 10);
  fc.seed = model.seed + 7;
  model.state.forest.fit(z.apply(corpus.M), params[0].value, fc);
  model.state.params = std::move(params);
}

void fit_metagl_lite(SelectorModel& model, const TrainCorpus& corpus) {
  const auto& P = corpus.P;
  const Eigen::Index n = P.num_graphs(), m = P.num_models();
  const Eigen::Index total = n + m;
  const int embed = model.config.get_int("embed", 32);
  const int topk = model.config.get_int("topk", 30);

  const ZScore z = ZScore::fit(corpus.M);
  model.state.feature_mean = z.mean;
  model.state.feature_std = z.std;
  const Eigen::MatrixXd Mz = z.apply(corpus.M);
  model.state.train_features = Mz;

  // G-M network relations, each row-normalized for mean aggregation.
  auto row_normalize = [](Eigen::MatrixXd A) {
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      const double d = A.row(i).cwiseAbs().sum();
      if (d > 0.0) A.row(i) /= d;
    }
    return A;
  };
  Eigen::MatrixXd gm = Eigen::MatrixXd::Zero(total, total);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      if (P.mask(i, j)) gm(i, n + j) = P.values(i, j);
  Eigen::MatrixXd mg = gm.transpose();

  Eigen::MatrixXd gg = Eigen::MatrixXd::Zero(total, total);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int j : top_cosine_neighbors(Mz, (int)i, topk))
      gg(i, j) = std::max(cosine_similarity(Mz.row(i), Mz.row(j)), 0.0);

  // Model-model similarity over mean-filled performance columns.
  Eigen::MatrixXd cols = P.values.transpose();  // m x n
  for (Eigen::Index j = 0; j < m; ++j) {
    double sum = 0.0;
    long count = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (P.mask(i, j)) {
        sum += P.values(i, j);
        ++count;
      }
    const double mean = count > 0 ? sum / count : 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (!P.mask(i, j)) cols(j, i) = mean;
  }
  Eigen::MatrixXd mm = Eigen::MatrixXd::Zero(total, total);
  for (Eigen::Index a = 0; a < m; ++a)
    for (int b : top_cosine_neighbors(cols, (int)a, topk))
      mm(n + a, n + b) =
          std::max(cosine_similarity(cols.row(a), cols.row(b)), 0.0);

  const std::vector<Eigen::MatrixXd> relations = {
      row_normalize(std::move(gm)), row_normalize(std::move(mg)),
      row_normalize(std::move(gg)), row_normalize(std::move(mm))};

  // Parameters: graph input projection, free model embeddings, then per
  // layer one weight per relation plus a self weight and bias.
  std::mt19937_64 rng(model.seed);
  auto rand_matrix = [&](Eigen::Index r, Eigen::Index c) {
    const double bound = std::sqrt(6.0 / (r + c));
    std::uniform_real_distribution<double> u(-bound, bound);
    Eigen::MatrixXd W(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) W(i, j) = u(rng);
    return W;
  };

  std::vector<ad::Parameter> params;
  params.emplace_back("metagl_in_g", rand_matrix(Mz.cols(), embed));
  params.emplace_back("metagl_emb_m", rand_matrix(m, embed));
  const int layers = 2;
  for (int l = 0; l < layers; ++l) {
    for (size_t r = 0; r < relations.size(); ++r)
      params.emplace_back("metagl_l" + std::to_string(l) + "_rel" +
                              std::to_string(r),
                          rand_matrix(embed, embed));
    params.emplace_back("metagl_l" + std::to_string(l) + "_self",
                        rand_matrix(embed, embed));
    params.emplace_back("metagl_l" + std::to_string(l) + "_bias",
                        Eigen::MatrixXd::Zero(1, embed));
  }

  // Constant selectors stacking graph and model inputs into one matrix.
  Eigen::MatrixXd sel_g = Eigen::MatrixXd::Zero(total, n);
  Eigen::MatrixXd sel_m = Eigen::MatrixXd::Zero(total, m);
  for (Eigen::Index i = 0; i < n; ++i) sel_g(i, i) = 1.0;
  for (Eigen::Index j = 0; j < m; ++j) sel_m(n + j, j) = 1.0;

  auto forward = [&](ad::Tape& tape) {
    auto h = tape.add(
        tape.matmul(tape.constant(sel_g),
                    tape.matmul(tape.constant(Mz), tape.leaf(params[0]))),
        tape.matmul(tape.constant(sel_m), tape.leaf(params[1])));
    size_t p = 2;
    for (int l = 0; l < layers; ++l) {
      auto acc = tape.matmul(h, tape.leaf(params[p + relations.size()]));
      for (size_t r = 0; r < relations.size(); ++r) {
        acc = tape.add(acc,
                       tape.matmul(tape.matmul(tape.constant(relations[r]), h),
                                   tape.leaf(params[p + r])));
      }
      acc = tape.add_row(acc, tape.leaf(params[p + relations.size() + 1]));
      h = tape.relu(acc);
      p += relations.size() + 2;
    }
    auto graph_emb = tape.slice_rows(h, 0, n);
    auto model_emb = tape.slice_rows(h, n, m);
    return std::make_tuple(graph_emb, model_emb,
                           tape.matmul_nt(graph_emb, model_emb));
  };

  const auto opts = train_options(model.config, "adam", 0.00075, 1e-4);
  train_loop(params, [&] {
    ad::Tape tape;
    auto [ge, me, scores] = forward(tape);
    auto loss = tape.listnet_top1(scores, P.values, P.mask);
    tape.backward(loss);
    return tape.value(loss)(0, 0);
  }, opts);

  // Freeze the trained embeddings for prediction.
  ad::Tape tape;
  auto [ge, me, scores] = forward(tape);
  model.state.graph_embeddings = tape.value(ge);
  model.state.model_embeddings = tape.value(me);
  model.state.params = std::move(params);
}

std::uint64_t hash_query(const Eigen::VectorXd& q, std::uint64_t seed) {
  std::uint64_t h = seed ^ 0x9e3779b97f4a7c15ULL;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    std::uint64_t bits;
    const double v = q[i];
    std::memcpy(&bits, &v, sizeof(bits));
    h ^= bits + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

}  // namespace

SelectorModel fit_selector(Algorithm algorithm, const TrainCorpus& corpus,
                           const SelectorConfig& config, std::uint64_t seed) {
  corpus.check();
  SelectorModel model;
  model.algorithm = algorithm;
  model.config = config;
  model.seed = seed;
  model.model_ids_ = corpus.P.model_ids;
  model.state.model_ids = corpus.P.model_ids;
  model.state.column_observed = observed_columns(corpus.P);

  switch (algorithm) {
    case Algorithm::random_selection: fit_random(model, corpus); break;
    case Algorithm::gb_avgperf: fit_gb_avgperf(model, corpus); break;
    case Algorithm::gb_avgrank: fit_gb_avgrank(model, corpus); break;
    case Algorithm::isac: fit_isac(model, corpus); break;
    case Algorithm::argosmart: fit_argosmart(model, corpus); break;
    case Algorithm::s2: fit_s2(model, corpus); break;
    case Algorithm::alors: fit_alors(model, corpus); break;
    case Algorithm::ncf: fit_ncf(model, corpus); break;
    case Algorithm::metaod: fit_metaod(model, corpus); break;
    case Algorithm::metagl_lite: fit_metagl_lite(model, corpus); break;
  }
  return model;
}

Eigen::VectorXd SelectorModel::predict(const Eigen::VectorXd& query) const {
  Eigen::VectorXd scores;
  switch (algorithm) {
    case Algorithm::random_selection: {
      std::mt19937_64 rng(hash_query(query, seed));
      std::uniform_real_distribution<double> u(0.0, 1.0);
      scores.resize(model_ids_.size());
      for (Eigen::Index j = 0; j < scores.size(); ++j) scores[j] = u(rng);
      break;
    }
    case Algorithm::gb_avgperf:
    case Algorithm::gb_avgrank:
      scores = state.global_scores;
      break;
    case Algorithm::isac: {
      const Eigen::VectorXd q =
          (query - state.feature_mean).cwiseQuotient(state.feature_std);
      const int c = nearest_centroid(state.centroids, q);
      scores = state.cluster_scores.row(c).transpose();
      break;
    }
    case Algorithm::argosmart: {
      int best = 0;
      double best_sim = -std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < state.train_features.rows(); ++i) {
        const double sim =
            cosine_similarity(state.train_features.row(i), query);
        if (sim > best_sim) {  // ties keep the lowest index
          best_sim = sim;
          best = static_cast<int>(i);
        }
      }
      scores = state.train_rows.row(best).transpose();
      break;
    }
    case Algorithm::s2: {
      const Eigen::VectorXd q =
          (query - state.feature_mean).cwiseQuotient(state.feature_std);
      scores = mlp_eval(state.params, 0, state.params.size() / 2,
                        q.transpose())
                   .row(0)
                   .transpose();
      break;
    }
    case Algorithm::alors: {
      const Eigen::VectorXd q =
          (query - state.feature_mean).cwiseQuotient(state.feature_std);
      const Eigen::MatrixXd u =
          mlp_eval(state.params, 0, state.params.size() / 2, q.transpose());
      scores = (u * state.factors_v.transpose()).row(0).transpose();
      scores.array() -= state.value_shift;
      break;
    }
    case Algorithm::ncf: {
      const Eigen::VectorXd q =
          (query - state.feature_mean).cwiseQuotient(state.feature_std);
      // Layout: regressor (3 layers), scorer (2 layers), model factors.
      const size_t reg_layers = 3, score_layers = 2;
      const size_t score_offset = reg_layers * 2;
      const Eigen::MatrixXd u =
          mlp_eval(state.params, 0, reg_layers, q.transpose());
      const Eigen::MatrixXd& V = state.factors_v;
      scores.resize(V.rows());
      Eigen::MatrixXd pair(1, u.cols() + V.cols());
      for (Eigen::Index j = 0; j < V.rows(); ++j) {
        pair << u.row(0), V.row(j);
        scores[j] =
            mlp_eval(state.params, score_offset, score_layers, pair)(0, 0);
      }
      break;
    }
    case Algorithm::metaod: {
      const Eigen::VectorXd q =
          (query - state.feature_mean).cwiseQuotient(state.feature_std);
      const Eigen::VectorXd u = state.forest.predict(q);
      scores = state.factors_v * u;
      break;
    }
    case Algorithm::metagl_lite: {
      const Eigen::VectorXd q =
          (query - state.feature_mean).cwiseQuotient(state.feature_std);
      // Attach the query to the G-M network via its most similar graphs.
      const int topk = config.get_int("topk", 30);
      std::vector<std::pair<double, int>> sims;
      for (Eigen::Index i = 0; i < state.train_features.rows(); ++i)
        sims.emplace_back(
            cosine_similarity(state.train_features.row(i), q),
            static_cast<int>(i));
      std::stable_sort(sims.begin(), sims.end(),
                       [](const auto& a, const auto& b) {
                         return a.first > b.first;
                       });
      Eigen::VectorXd emb =
          Eigen::VectorXd::Zero(state.graph_embeddings.cols());
      double total = 0.0;
      for (int t = 0; t < std::min<int>(topk, (int)sims.size()); ++t) {
        const double w = std::max(sims[t].first, 0.0) + 1e-12;
        emb += w * state.graph_embeddings.row(sims[t].second).transpose();
        total += w;
      }
      emb /= total;
      scores = state.model_embeddings * emb;
      break;
    }
  }
  // Models with no observation anywhere rank last everywhere.
  for (Eigen::Index j = 0; j < scores.size(); ++j) {
    if (!state.column_observed.empty() && !state.column_observed[j])
      scores[j] = kUnobservedScore;
    if (!std::isfinite(scores[j])) scores[j] = kUnobservedScore;
  }
  return scores;
}

// ---------------------------------------------------------------------------
// Bundle serialization: a directory with manifest.json plus CSV payloads.

namespace {

constexpr int kBundleVersion = 1;

void write_matrix_csv(const Eigen::MatrixXd& M, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << M.rows() << ',' << M.cols() << '\n';
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      if (j) out << ',';
      out << csv::format_double(M(i, j));
    }
    out << '\n';
  }
}

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
  const auto rows = csv::read_file(path);
  if (rows.empty() || rows[0].size() != 2)
    throw DataError(path + ": expected matrix header");
  const Eigen::Index r = std::stol(rows[0][0]);
  const Eigen::Index c = std::stol(rows[0][1]);
  Eigen::MatrixXd M(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j)
      M(i, j) = std::stod(rows[i + 1][j]);
  return M;
}

}  // namespace

void SelectorModel::save(const std::string& dir) const {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  nlohmann::json manifest;
  manifest["version"] = kBundleVersion;
  manifest["algorithm"] = algorithm_name(algorithm);
  manifest["seed"] = seed;
  manifest["config"] = config.entries;
  manifest["model_ids"] = model_ids_;
  manifest["value_shift"] = state.value_shift;
  manifest["column_observed"] = state.column_observed;

  auto save_matrix = [&](const char* name, const Eigen::MatrixXd& M) {
    if (M.size() == 0) return;
    write_matrix_csv(M, dir + "/" + name + ".csv");
    manifest["matrices"].push_back(name);
  };
  save_matrix("feature_mean", state.feature_mean);
  save_matrix("feature_std", state.feature_std);
  save_matrix("global_scores", state.global_scores);
  save_matrix("centroids", state.centroids);
  save_matrix("cluster_scores", state.cluster_scores);
  save_matrix("train_features", state.train_features);
  save_matrix("train_rows", state.train_rows);
  save_matrix("factors_v", state.factors_v);
  save_matrix("graph_embeddings", state.graph_embeddings);
  save_matrix("model_embeddings", state.model_embeddings);

  for (const auto& p : state.params) {
    write_matrix_csv(p.value, dir + "/param_" + p.name + ".csv");
    manifest["params"].push_back(p.name);
  }
  if (state.forest.trained()) {
    std::ofstream out(dir + "/forest.csv");
    for (const auto& row : state.forest.serialize()) out << row << '\n';
    manifest["forest"] = true;
  }
  std::ofstream mout(dir + "/manifest.json");
  if (!mout) throw DataError("cannot write manifest in " + dir);
  mout << manifest.dump(2) << '\n';
}

SelectorModel SelectorModel::load(const std::string& dir) {
  std::ifstream min(dir + "/manifest.json");
  if (!min) throw DataError("missing manifest: " + dir);
  nlohmann::json manifest;
  min >> manifest;
  if (manifest.value("version", 0) != kBundleVersion)
    throw DataError(dir + ": unsupported bundle version");

  SelectorModel model;
  model.algorithm = parse_algorithm(manifest.at("algorithm"));
  model.seed = manifest.value("seed", 0ULL);
  model.config.entries =
      manifest.value("config", std::map<std::string, std::string>{});
  model.model_ids_ = manifest.at("model_ids").get<std::vector<std::string>>();
  model.state.model_ids = model.model_ids_;
  model.state.value_shift = manifest.value("value_shift", 0.0);
  model.state.column_observed =
      manifest.value("column_observed", std::vector<bool>{});

  auto maybe_matrix = [&](const char* name) -> Eigen::MatrixXd {
    for (const auto& entry : manifest.value("matrices", nlohmann::json::array()))
      if (entry == name) return read_matrix_csv(dir + "/" + name + ".csv");
    return {};
  };
  auto maybe_vector = [&](const char* name) -> Eigen::VectorXd {
    const Eigen::MatrixXd M = maybe_matrix(name);
    if (M.size() == 0) return {};
    return M.col(0);
  };
  model.state.feature_mean = maybe_vector("feature_mean");
  model.state.feature_std = maybe_vector("feature_std");
  model.state.global_scores = maybe_vector("global_scores");
  model.state.centroids = maybe_matrix("centroids");
  model.state.cluster_scores = maybe_matrix("cluster_scores");
  model.state.train_features = maybe_matrix("train_features");
  model.state.train_rows = maybe_matrix("train_rows");
  model.state.factors_v = maybe_matrix("factors_v");
  model.state.graph_embeddings = maybe_matrix("graph_embeddings");
  model.state.model_embeddings = maybe_matrix("model_embeddings");

  for (const auto& name : manifest.value("params", nlohmann::json::array())) {
    const std::string pname = name.get<std::string>();
    model.state.params.emplace_back(
        pname, read_matrix_csv(dir + "/param_" + pname + ".csv"));
  }
  if (manifest.value("forest", false)) {
    std::ifstream fin(dir + "/forest.csv");
    std::vector<std::string> rows;
    std::string line;
    while (std::getline(fin, line))
      if (!line.empty()) rows.push_back(line);
    model.state.forest = RandomForest::deserialize(rows);
  }
  return model;
}

}  // namespace gmsel
