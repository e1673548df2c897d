#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <random>

#include "gmsel/autodiff.hpp"
#include "gmsel/kmeans.hpp"
#include "gmsel/nmf.hpp"
#include "gmsel/forest.hpp"
#include "gmsel/selectors.hpp"
#include "oracles.hpp"

using namespace gmsel;
namespace fs = std::filesystem;

namespace {

TrainCorpus random_corpus(int n, int d, int m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  TrainCorpus c;
  c.M.resize(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) c.M(i, j) = u(rng);
  c.P.values.resize(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) c.P.values(i, j) = u(rng);
  c.P.mask = Mask::Constant(n, m, true);
  for (int i = 0; i < n; ++i) c.P.graph_ids.push_back("g" + std::to_string(i));
  for (int j = 0; j < m; ++j) c.P.model_ids.push_back("m" + std::to_string(j));
  return c;
}

}  // namespace

// ---------------------------------------------------------------------------
// Numeric building blocks.

TEST_CASE("kmeans: inertia is monotone and k=n separates points") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd X(30, 4);
  for (int i = 0; i < 30; ++i)
    for (int j = 0; j < 4; ++j) X(i, j) = u(rng);

  const auto result = kmeans(X, 5, 11);
  for (size_t t = 1; t < result.inertia_trace.size(); ++t)
    CHECK(result.inertia_trace[t] <= result.inertia_trace[t - 1] + 1e-9);
  CHECK(result.assignments.size() == 30);

  const auto exact = kmeans(X, 30, 11);
  CHECK(exact.inertia == doctest::Approx(0.0).epsilon(1e-12));

  SUBCASE("duplicate points do not break seeding") {
    Eigen::MatrixXd D(6, 2);
    D << 1, 1, 1, 1, 1, 1, 5, 5, 5, 5, 5, 5;
    const auto r = kmeans(D, 2, 0);
    CHECK(r.inertia == doctest::Approx(0.0));
  }
  SUBCASE("deterministic") {
    const auto a = kmeans(X, 4, 9);
    const auto b = kmeans(X, 4, 9);
    CHECK(a.assignments == b.assignments);
    CHECK((a.centroids - b.centroids).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("nmf: masked objective non-increasing, reconstructs low rank") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd A(12, 3), B(8, 3);
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 3; ++j) A(i, j) = u(rng);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 3; ++j) B(i, j) = u(rng);
  const Eigen::MatrixXd P = A * B.transpose();
  Mask mask = Mask::Constant(12, 8, true);
  mask(0, 0) = mask(3, 5) = mask(7, 2) = false;

  const auto result = nmf(P, mask, 3, 42, 500);
  for (size_t t = 1; t < result.objective_trace.size(); ++t)
    CHECK(result.objective_trace[t] <= result.objective_trace[t - 1] + 1e-9);
  const Eigen::MatrixXd R = result.U * result.V.transpose();
  double err = 0.0;
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 8; ++j)
      if (mask(i, j)) err = std::max(err, std::fabs(R(i, j) - P(i, j)));
  CHECK(err < 0.05);

  SUBCASE("negative observed entries rejected") {
    Eigen::MatrixXd N = P;
    N(1, 1) = -0.5;
    CHECK_THROWS_AS(nmf(N, mask, 3, 1), DataError);
  }
}

TEST_CASE("random forest: fit, predict, serialize") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const int n = 200, d = 4;
  Eigen::MatrixXd X(n, d);
  Eigen::MatrixXd Y(n, 2);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) X(i, j) = u(rng);
    Y(i, 0) = X(i, 0) > 0 ? 1.0 : -1.0;  // axis-aligned signal
    Y(i, 1) = X(i, 1) + X(i, 2);
  }
  RandomForest forest;
  ForestConfig fc;
  fc.n_trees = 50;
  fc.seed = 33;
  forest.fit(X, Y, fc);
  double acc = 0.0, mse = 0.0;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd pred = forest.predict(X.row(i).transpose());
    acc += (pred[0] > 0) == (Y(i, 0) > 0);
    mse += std::pow(pred[1] - Y(i, 1), 2);
  }
  CHECK(acc / n > 0.95);
  CHECK(mse / n < 0.5);

  const RandomForest copy = RandomForest::deserialize(forest.serialize());
  for (int i = 0; i < 20; ++i) {
    const Eigen::VectorXd x = X.row(i).transpose();
    CHECK((forest.predict(x) - copy.predict(x)).cwiseAbs().maxCoeff() == 0.0);
  }
}

// ---------------------------------------------------------------------------
// Autodiff gradient checks, shaped like the four trained selectors.

namespace {

std::vector<ad::Parameter> random_params(
    const std::vector<std::pair<int, int>>& shapes, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::vector<ad::Parameter> params;
  int idx = 0;
  for (const auto& [r, c] : shapes) {
    Eigen::MatrixXd W(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) W(i, j) = u(rng);
    params.emplace_back("p" + std::to_string(idx++), std::move(W));
  }
  return params;
}

}  // namespace

TEST_CASE("gradient check: MLP with masked MSE (S2 / ALORS shape)") {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n = 6, d = 5, h = 4, m = 3;
  Eigen::MatrixXd X(n, d), T(n, m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) X(i, j) = u(rng);
    for (int j = 0; j < m; ++j) T(i, j) = u(rng);
  }
  Mask mask = Mask::Constant(n, m, true);
  mask(0, 1) = mask(4, 2) = false;

  for (int init = 0; init < 10; ++init) {
    auto params = random_params({{d, h}, {1, h}, {h, m}, {1, m}}, rng);
    auto forward = [&](ad::Tape& tape) {
      auto h1 = tape.relu(tape.add_row(
          tape.matmul(tape.constant(X), tape.leaf(params[0])),
          tape.leaf(params[1])));
      auto out = tape.add_row(tape.matmul(h1, tape.leaf(params[2])),
                              tape.leaf(params[3]));
      return tape.masked_mse(out, T, mask);
    };
    auto loss = [&] {
      ad::Tape tape;
      return tape.value(forward(tape))(0, 0);
    };
    auto grads = [&] {
      ad::zero_grads(params);
      ad::Tape tape;
      tape.backward(forward(tape));
    };
    CHECK(ad::gradient_check(params, loss, grads) < 1e-4);
  }
}

TEST_CASE("gradient check: NCF pipeline") {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n = 4, d = 3, latent = 3, m = 3;
  Eigen::MatrixXd X(n, d), T(n, m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) X(i, j) = u(rng);
    for (int j = 0; j < m; ++j) T(i, j) = u(rng);
  }
  Mask mask = Mask::Constant(n, m, true);
  mask(2, 0) = false;

  for (int init = 0; init < 10; ++init) {
    // Regressor (1 hidden layer), model factors, scorer (1 hidden layer).
    auto params = random_params({{d, 4}, {1, 4}, {4, latent}, {1, latent},
                                 {m, latent},
                                 {2 * latent, 4}, {1, 4}, {4, 1}, {1, 1}},
                                rng);
    auto forward = [&](ad::Tape& tape) {
      auto g1 = tape.relu(tape.add_row(
          tape.matmul(tape.constant(X), tape.leaf(params[0])),
          tape.leaf(params[1])));
      auto gfac = tape.add_row(tape.matmul(g1, tape.leaf(params[2])),
                               tape.leaf(params[3]));
      auto pairs = tape.pairwise_concat(gfac, tape.leaf(params[4]));
      auto s1 = tape.relu(tape.add_row(
          tape.matmul(pairs, tape.leaf(params[5])), tape.leaf(params[6])));
      auto col = tape.add_row(tape.matmul(s1, tape.leaf(params[7])),
                              tape.leaf(params[8]));
      auto scores = tape.reshape_rows(col, n, m);
      return tape.masked_mse(scores, T, mask);
    };
    auto loss = [&] {
      ad::Tape tape;
      return tape.value(forward(tape))(0, 0);
    };
    auto grads = [&] {
      ad::zero_grads(params);
      ad::Tape tape;
      tape.backward(forward(tape));
    };
    CHECK(ad::gradient_check(params, loss, grads) < 1e-4);
  }
}

TEST_CASE("gradient check: relational message passing with ListNet loss") {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n = 4, m = 3, total = n + m, d = 3, e = 4;
  Eigen::MatrixXd X(total, d), T(n, m);
  for (int i = 0; i < total; ++i)
    for (int j = 0; j < d; ++j) X(i, j) = u(rng);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) T(i, j) = u(rng);
  Mask mask = Mask::Constant(n, m, true);
  mask(1, 1) = false;
  std::vector<Eigen::MatrixXd> relations;
  for (int r = 0; r < 2; ++r) {
    Eigen::MatrixXd R(total, total);
    for (int i = 0; i < total; ++i)
      for (int j = 0; j < total; ++j) R(i, j) = std::max(u(rng), 0.0);
    relations.push_back(R);
  }

  for (int init = 0; init < 10; ++init) {
    auto params = random_params({{d, e}, {e, e}, {e, e}, {e, e}, {1, e}}, rng);
    auto forward = [&](ad::Tape& tape) {
      auto h = tape.matmul(tape.constant(X), tape.leaf(params[0]));
      auto acc = tape.matmul(h, tape.leaf(params[3]));  // self weight
      for (int r = 0; r < 2; ++r)
        acc = tape.add(acc,
                       tape.matmul(tape.matmul(tape.constant(relations[r]), h),
                                   tape.leaf(params[1 + r])));
      h = tape.relu(tape.add_row(acc, tape.leaf(params[4])));
      auto ge = tape.slice_rows(h, 0, n);
      auto me = tape.slice_rows(h, n, m);
      auto scores = tape.matmul_nt(ge, me);
      return tape.listnet_top1(scores, T, mask);
    };
    auto loss = [&] {
      ad::Tape tape;
      return tape.value(forward(tape))(0, 0);
    };
    auto grads = [&] {
      ad::zero_grads(params);
      ad::Tape tape;
      tape.backward(forward(tape));
    };
    CHECK(ad::gradient_check(params, loss, grads) < 1e-4);
  }
}

// ---------------------------------------------------------------------------
// Selector semantics.

TEST_CASE("reduction identities on 50 random corpora") {
  for (int trial = 0; trial < 50; ++trial) {
    const TrainCorpus corpus = random_corpus(12, 6, 8, 1000 + trial);

    SelectorConfig k1;
    k1.set("k", "1");
    const SelectorModel isac1 =
        fit_selector(Algorithm::isac, corpus, k1, trial);
    const SelectorModel gb =
        fit_selector(Algorithm::gb_avgperf, corpus, {}, trial);
    const SelectorModel as =
        fit_selector(Algorithm::argosmart, corpus, {}, trial);

    for (int q = 0; q < 3; ++q) {
      const Eigen::VectorXd query = corpus.M.row((q * 5) % 12).transpose();
      // ISAC with one cluster degenerates to the global average.
      CHECK((isac1.predict(query) - gb.predict(query))
                .cwiseAbs()
                .maxCoeff() == 0.0);
    }
    for (int i = 0; i < 12; i += 4) {
      // 1-NN on a training query returns that graph's own row.
      const Eigen::VectorXd scores =
          as.predict(corpus.M.row(i).transpose());
      CHECK((scores - corpus.P.values.row(i).transpose())
                .cwiseAbs()
                .maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("determinism: same corpus, config, seed => identical predictions") {
  const TrainCorpus corpus = random_corpus(15, 8, 6, 77);
  const Eigen::VectorXd query = corpus.M.row(3).transpose() * 1.1;
  for (Algorithm algo : all_algorithms()) {
    SelectorConfig cfg;
    cfg.set("epochs", "30");  // keep trained models quick
    const SelectorModel a = fit_selector(algo, corpus, cfg, 123);
    const SelectorModel b = fit_selector(algo, corpus, cfg, 123);
    const Eigen::VectorXd sa = a.predict(query);
    const Eigen::VectorXd sb = b.predict(query);
    INFO("algorithm ", algorithm_name(algo));
    CHECK((sa - sb).cwiseAbs().maxCoeff() == 0.0);
    // Repeated prediction with the same model is also stable.
    CHECK((sa - a.predict(query)).cwiseAbs().maxCoeff() == 0.0);
    for (Eigen::Index j = 0; j < sa.size(); ++j) CHECK(std::isfinite(sa[j]));
  }
}

TEST_CASE("random selection is deterministic per query but varies across") {
  const TrainCorpus corpus = random_corpus(10, 4, 25, 5);
  const SelectorModel model =
      fit_selector(Algorithm::random_selection, corpus, {}, 9);
  const Eigen::VectorXd q1 = corpus.M.row(0).transpose();
  const Eigen::VectorXd q2 = corpus.M.row(1).transpose();
  CHECK((model.predict(q1) - model.predict(q1)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((model.predict(q1) - model.predict(q2)).cwiseAbs().maxCoeff() > 0.0);
  const SelectorModel other =
      fit_selector(Algorithm::random_selection, corpus, {}, 10);
  CHECK((model.predict(q1) - other.predict(q1)).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("never-observed models rank last for every algorithm") {
  TrainCorpus corpus = random_corpus(10, 5, 6, 21);
  for (int i = 0; i < 10; ++i) corpus.P.mask(i, 2) = false;  // m2 unseen
  const Eigen::VectorXd query = corpus.M.row(4).transpose();
  for (Algorithm algo : all_algorithms()) {
    if (algo == Algorithm::random_selection) continue;
    SelectorConfig cfg;
    cfg.set("epochs", "20");
    const SelectorModel model = fit_selector(algo, corpus, cfg, 3);
    const Eigen::VectorXd scores = model.predict(query);
    INFO("algorithm ", algorithm_name(algo));
    CHECK(scores[2] == kUnobservedScore);
    for (Eigen::Index j = 0; j < scores.size(); ++j)
      if (j != 2) CHECK(scores[j] > scores[2]);
  }
}

TEST_CASE("training divergence raises a DataError naming the epoch") {
  const TrainCorpus corpus = random_corpus(10, 5, 4, 8);
  SelectorConfig cfg;
  cfg.set("lr", "1e18");
  cfg.set("optimizer", "sgd");
  try {
    fit_selector(Algorithm::s2, corpus, cfg, 1);
    FAIL("expected divergence");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("epoch") != std::string::npos);
  }
}

TEST_CASE("bundle save/load round trip preserves predictions") {
  const TrainCorpus corpus = random_corpus(12, 6, 5, 31);
  const Eigen::VectorXd query = corpus.M.row(7).transpose() * 0.9;
  const auto dir_base =
      fs::temp_directory_path() / ("gmsel_bundle_" + std::to_string(::getpid()));
  for (Algorithm algo : all_algorithms()) {
    SelectorConfig cfg;
    cfg.set("epochs", "25");
    const SelectorModel model = fit_selector(algo, corpus, cfg, 17);
    const std::string dir =
        (dir_base / algorithm_name(algo)).string();
    model.save(dir);
    const SelectorModel loaded = SelectorModel::load(dir);
    CHECK(loaded.algorithm == algo);
    CHECK(loaded.model_ids() == model.model_ids());
    INFO("algorithm ", algorithm_name(algo));
    CHECK((model.predict(query) - loaded.predict(query))
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
  fs::remove_all(dir_base);
}

TEST_CASE("algorithm name round trip and aliases") {
  for (Algorithm algo : all_algorithms())
    CHECK(parse_algorithm(algorithm_name(algo)) == algo);
  CHECK(parse_algorithm("as") == Algorithm::argosmart);
  CHECK(parse_algorithm("randsel") == Algorithm::random_selection);
  CHECK(parse_algorithm("metagl") == Algorithm::metagl_lite);
  CHECK_THROWS_AS(parse_algorithm("what"), DataError);
}

TEST_CASE("top1_probabilities is a softmax") {
  Eigen::VectorXd s(3);
  s << 1.0, 2.0, 3.0;
  const Eigen::VectorXd p = top1_probabilities(s);
  CHECK(p.sum() == doctest::Approx(1.0));
  CHECK(p[2] > p[1]);
  CHECK(p[1] > p[0]);
  // Shift invariance.
  const Eigen::VectorXd p2 = top1_probabilities(s.array() + 100.0);
  CHECK((p - p2).cwiseAbs().maxCoeff() < 1e-12);
}
