#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <random>

#include "gmsel/metrics.hpp"
#include "oracles.hpp"

using namespace gmsel;
namespace fs = std::filesystem;

TEST_CASE("metric edge cases from the definitions") {
  Eigen::VectorXd s(4);
  SUBCASE("best strictly highest") {
    s << 0.1, 0.9, 0.3, 0.2;
    CHECK(top1_auc(s, 1) == 1.0);
    CHECK(mrr(s, 1) == 1.0);
  }
  SUBCASE("best strictly lowest") {
    s << 0.5, 0.0, 0.3, 0.2;
    CHECK(top1_auc(s, 1) == 0.0);
    CHECK(mrr(s, 1) == doctest::Approx(0.25));
  }
  SUBCASE("all scores equal") {
    s.setConstant(0.7);
    CHECK(top1_auc(s, 2) == 0.5);
    CHECK(mrr(s, 2) == doctest::Approx(1.0 / 2.5));  // average rank of 4 ties
  }
  SUBCASE("best ranked third of ten") {
    Eigen::VectorXd t(10);
    t << 9, 8, 5, 4, 3, 2, 1, 0, -1, -2;
    CHECK(mrr(t, 2) == doctest::Approx(1.0 / 3.0));
  }
  SUBCASE("ndcg ratio and degenerate conventions") {
    // Relevance subtracts the row min uniformly, a no-op when min = 0.
    Eigen::VectorXd perfs(3), scores(3);
    perfs << 1.0, 0.5, 0.0;
    scores << 0.0, 1.0, 0.5;  // predicts model 2
    CHECK(ndcg_at_1(scores, perfs) == doctest::Approx(0.5));
    perfs.setConstant(0.3);
    CHECK(ndcg_at_1(scores, perfs) == 1.0);
    // Negative performances are shifted, not clipped.
    Eigen::VectorXd neg(3), s3(3);
    neg << -1.0, -0.5, -2.0;
    s3 << 1.0, 0.0, 0.0;
    CHECK(ndcg_at_1(s3, neg) == doctest::Approx((-1.0 + 2.0) / 1.5));
  }
}

TEST_CASE("metrics match brute-force references on 1000 random instances") {
  std::mt19937_64 rng(424242);
  std::uniform_int_distribution<int> m_dist(2, 50);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> tie(0, 2);
  for (int trial = 0; trial < 1000; ++trial) {
    const int m = m_dist(rng);
    Eigen::VectorXd scores(m), perfs(m);
    for (int j = 0; j < m; ++j) {
      scores[j] = tie(rng) == 0 ? std::round(u(rng) * 4) / 4 : u(rng);
      perfs[j] = u(rng);
    }
    const Eigen::Index best = best_model_index(perfs);
    CHECK(std::fabs(top1_auc(scores, best) -
                    oracle::ref_top1_auc(scores, best)) <= 1e-12);
    CHECK(std::fabs(mrr(scores, best) - oracle::ref_mrr(scores, best)) <=
          1e-12);
    CHECK(std::fabs(ndcg_at_1(scores, perfs) -
                    oracle::ref_ndcg_at_1(scores, perfs)) <= 1e-12);
  }
}

TEST_CASE("monotone transform invariance") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd scores(12), perfs(12);
    for (int j = 0; j < 12; ++j) {
      scores[j] = u(rng);
      perfs[j] = u(rng);
    }
    const Eigen::Index best = best_model_index(perfs);
    const Eigen::VectorXd warped =
        (scores.array() * 3.0 + 1.0).exp();  // strictly increasing
    CHECK(top1_auc(scores, best) ==
          doctest::Approx(top1_auc(warped, best)).epsilon(1e-12));
    CHECK(mrr(scores, best) ==
          doctest::Approx(mrr(warped, best)).epsilon(1e-12));
    CHECK(ndcg_at_1(scores, perfs) ==
          doctest::Approx(ndcg_at_1(warped, perfs)).epsilon(1e-12));
  }
}

TEST_CASE("best-index tie convention: lowest index wins") {
  Eigen::VectorXd perfs(4);
  perfs << 0.3, 0.9, 0.9, 0.1;
  CHECK(best_model_index(perfs) == 1);
}

TEST_CASE("perfect selector scores 1.0 everywhere") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd perfs(20);
    for (int j = 0; j < 20; ++j) perfs[j] = u(rng);
    const Eigen::Index best = best_model_index(perfs);
    CHECK(top1_auc(perfs, best) == 1.0);
    CHECK(mrr(perfs, best) == 1.0);
    CHECK(ndcg_at_1(perfs, perfs) == 1.0);
  }
}

TEST_CASE("evaluate: end-to-end over a fully observed testbed") {
  const oracle::PlantedCorpus corpus = oracle::planted_corpus(5, 8, 10, 3);
  const TestbedSplit split = fully_observed_splits(corpus.catalog, 1);

  const EvaluationReport as = evaluate(split, corpus.P, corpus.M,
                                       Algorithm::argosmart, {}, 1);
  CHECK(as.testbed == "fully_observed");
  CHECK(as.algorithm == "argosmart");
  CHECK(as.folds.size() == 5);
  CHECK(as.count == 40);
  CHECK(as.mean_mrr > 0.5);  // planted structure is easy for 1-NN
  CHECK(as.mean_map == as.mean_mrr);
  CHECK(as.se_mrr >= 0.0);
  CHECK(as.mean_auc >= 0.0);
  CHECK(as.mean_auc <= 1.0);

  SUBCASE("jobs parallelism does not change results") {
    const EvaluationReport par = evaluate(split, corpus.P, corpus.M,
                                          Algorithm::argosmart, {}, 1, 4);
    CHECK(par.mean_mrr == as.mean_mrr);
    CHECK(par.se_auc == as.se_auc);
    for (size_t f = 0; f < par.folds.size(); ++f)
      CHECK(par.folds[f].ndcg1 == as.folds[f].ndcg1);
  }
  SUBCASE("test rows must be fully observed") {
    PerformanceMatrix broken = corpus.P;
    broken.mask(0, 0) = false;  // g0 tests in some fold
    CHECK_THROWS_AS(
        evaluate(split, broken, corpus.M, Algorithm::gb_avgperf, {}, 1),
        DataError);
  }
}

TEST_CASE("report CSV round trip and markdown emission") {
  const oracle::PlantedCorpus corpus = oracle::planted_corpus(5, 6, 8, 4);
  const TestbedSplit split = fully_observed_splits(corpus.catalog, 2);
  std::vector<EvaluationReport> reports;
  reports.push_back(evaluate(split, corpus.P, corpus.M,
                             Algorithm::random_selection, {}, 2));
  reports.push_back(
      evaluate(split, corpus.P, corpus.M, Algorithm::gb_avgperf, {}, 2));

  const auto path =
      (fs::temp_directory_path() / "gmsel_report_rt.csv").string();
  save_report_csv(reports, path);
  const auto loaded = load_report_csv(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].algorithm == "random_selection");
  CHECK(loaded[1].algorithm == "gb_avgperf");
  CHECK(loaded[0].mean_mrr == reports[0].mean_mrr);  // bit-exact round trip
  CHECK(loaded[1].se_ndcg1 == reports[1].se_ndcg1);
  CHECK(loaded[1].folds.size() == 5);
  CHECK(loaded[1].folds[3].auc == reports[1].folds[3].auc);
  fs::remove(path);

  const std::string md = report_markdown(loaded);
  CHECK(md.find("| Testbed | Algorithm |") != std::string::npos);
  CHECK(md.find("gb_avgperf") != std::string::npos);
  CHECK(std::count(md.begin(), md.end(), '\n') == 4);  // header + rule + 2
}
