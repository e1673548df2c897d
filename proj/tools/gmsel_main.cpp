#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <mutex>

#include "gmsel/features.hpp"
#include "gmsel/graph.hpp"
#include "gmsel/metrics.hpp"
#include "gmsel/perf.hpp"
#include "gmsel/selectors.hpp"
#include "gmsel/testbeds.hpp"

namespace fs = std::filesystem;
using namespace gmsel;

namespace {

std::mutex g_log_mutex;

void log_line(const char* level, const std::string& component,
              const std::string& message) {
  const auto now = std::chrono::system_clock::now();
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      now.time_since_epoch())
                      .count();
  std::lock_guard<std::mutex> lock(g_log_mutex);
  std::cerr << level << ' ' << ms << ' ' << component << ' ' << message
            << '\n';
}

void log_info(const std::string& component, const std::string& message) {
  log_line("info", component, message);
}
void log_warn(const std::string& component, const std::string& message) {
  log_line("warn", component, message);
}
void log_error(const std::string& component, const std::string& message) {
  log_line("error", component, message);
}

fs::path graph_file(const std::string& catalog_path,
                    const std::string& graph_id) {
  return fs::path(catalog_path).parent_path() / (graph_id + ".edges");
}

void check_overwrite(const fs::path& path, bool force) {
  if (fs::exists(path) && !force)
    throw DataError(path.string() + " exists; pass --force to overwrite");
}

std::vector<FeatureSchema> parse_schema_list(const std::string& text) {
  if (text == "all")
    return {FeatureSchema::regular, FeatureSchema::graphlets,
            FeatureSchema::compact, FeatureSchema::reg_plus_graphlets};
  std::vector<FeatureSchema> schemas;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) schemas.push_back(parse_schema(item));
  if (schemas.empty()) throw DataError("no schema given");
  return schemas;
}

std::vector<Algorithm> parse_algorithm_list(const std::string& text) {
  if (text == "all") return all_algorithms();
  std::vector<Algorithm> algos;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) algos.push_back(parse_algorithm(item));
  if (algos.empty()) throw DataError("no algorithm given");
  return algos;
}

/// Fixed-order parallel map: out[i] = fn(i) regardless of jobs.
template <typename Fn>
void parallel_for(int count, int jobs, Fn&& fn) {
  jobs = std::max(1, jobs);
  if (jobs == 1 || count <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> workers;
  const int n_workers = std::min(jobs, count);
  workers.reserve(n_workers);
  for (int w = 0; w < n_workers; ++w)
    workers.emplace_back([&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    });
  for (auto& t : workers) t.join();
}

int cmd_features(const std::string& graphs_path, const std::string& schema_arg,
                 const std::string& out_dir, bool force, int jobs) {
  const auto catalog = load_graph_catalog(graphs_path);
  const auto schemas = parse_schema_list(schema_arg);
  fs::create_directories(out_dir);

  const int n = static_cast<int>(catalog.size());
  std::vector<std::optional<Graph>> loaded(n);
  std::vector<std::string> load_errors(n);
  parallel_for(n, jobs, [&](int i) {
    try {
      Graph g = load_edge_list(graph_file(graphs_path, catalog[i].graph_id)
                                   .string());
      g.id = catalog[i].graph_id;
      g.domain = catalog[i].domain;
      loaded[i] = std::move(g);
    } catch (const std::exception& e) {
      load_errors[i] = e.what();
    }
  });

  bool any_failed = false;
  for (int i = 0; i < n; ++i) {
    if (!loaded[i]) {
      any_failed = true;
      log_error("features",
                "graph " + catalog[i].graph_id + ": " + load_errors[i]);
    }
  }

  for (const auto schema : schemas) {
    const fs::path out_path =
        fs::path(out_dir) / ("features_" + schema_name(schema) + ".csv");
    check_overwrite(out_path, force);
    std::vector<std::optional<MetaFeatureVector>> rows(n);
    parallel_for(n, jobs, [&](int i) {
      if (loaded[i]) rows[i] = meta_features(*loaded[i], schema);
    });
    std::vector<MetaFeatureVector> ok_rows;
    for (int i = 0; i < n; ++i)
      if (rows[i]) ok_rows.push_back(std::move(*rows[i]));
    save_feature_matrix(ok_rows, out_path.string());
    log_info("features", "wrote " + out_path.string() + " (" +
                             std::to_string(ok_rows.size()) + " graphs x " +
                             std::to_string(schema_dim(schema)) +
                             " features)");
  }
  return any_failed ? 2 : 0;
}

int cmd_splits(const std::string& graphs_path, std::uint64_t seed,
               const std::string& out_dir, bool force, int jobs) {
  const auto catalog = load_graph_catalog(graphs_path);
  fs::create_directories(out_dir);
  const int n = static_cast<int>(catalog.size());
  for (const auto& e : catalog) {
    check_overwrite(fs::path(out_dir) / (e.graph_id + ".nodes.csv"), force);
    check_overwrite(fs::path(out_dir) / (e.graph_id + ".links.csv"), force);
  }
  std::vector<std::string> errors(n);
  parallel_for(n, jobs, [&](int i) {
    try {
      const Graph g = load_edge_list(
          graph_file(graphs_path, catalog[i].graph_id).string());
      const auto ns = generate_node_split(g, seed);
      save_node_split(
          ns, (fs::path(out_dir) / (catalog[i].graph_id + ".nodes.csv"))
                  .string());
      const auto es = generate_edge_split(g, seed);
      save_edge_split(
          es, (fs::path(out_dir) / (catalog[i].graph_id + ".links.csv"))
                  .string());
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  bool any_failed = false;
  for (int i = 0; i < n; ++i) {
    if (!errors[i].empty()) {
      any_failed = true;
      log_error("splits",
                "graph " + catalog[i].graph_id + ": " + errors[i]);
    }
  }
  log_info("splits", "wrote node and link splits for " +
                         std::to_string(n) + " graphs to " + out_dir);
  return any_failed ? 2 : 0;
}

void warn_sparsity(double p) {
  for (double grid : {0.1, 0.3, 0.5, 0.7, 0.9})
    if (std::abs(p - grid) < 1e-12) return;
  log_warn("testbed", "sparsity " + std::to_string(p) +
                          " is off the usual grid {0.1,0.3,0.5,0.7,0.9}");
}

TestbedSplit build_testbed(Testbed testbed,
                           const std::vector<CatalogEntry>& catalog,
                           const PerformanceMatrix* P, double sparsity,
                           long epsilon, std::uint64_t seed) {
  switch (testbed) {
    case Testbed::fully_observed:
      return fully_observed_splits(catalog, seed);
    case Testbed::sparse:
      if (!P) throw DataError("sparse testbed needs --perf");
      warn_sparsity(sparsity);
      return sparse_testbed(catalog, *P, sparsity, seed);
    case Testbed::out_of_domain:
      return out_of_domain_splits(catalog, seed);
    case Testbed::small_to_large:
      return small_to_large_split(catalog, epsilon);
    case Testbed::cross_task:
      throw DataError(
          "cross_task needs source and target tasks; use the dedicated "
          "flags of `run`");
  }
  throw DataError("unreachable testbed");
}

int cmd_testbed(const std::string& graphs_path, const std::string& perf_path,
                const std::string& testbed_arg, double sparsity, long epsilon,
                std::uint64_t seed, const std::string& out_dir, bool force) {
  const auto catalog = load_graph_catalog(graphs_path);
  std::optional<PerformanceMatrix> P;
  if (!perf_path.empty()) P = load_performance_matrix(perf_path);
  const Testbed testbed = parse_testbed(testbed_arg);
  const TestbedSplit split = build_testbed(
      testbed, catalog, P ? &*P : nullptr, sparsity, epsilon, seed);
  fs::create_directories(out_dir);
  const fs::path out_path =
      fs::path(out_dir) / ("testbed_" + testbed_name(testbed) + ".csv");
  check_overwrite(out_path, force);
  save_testbed_split(split, P ? P->model_ids : std::vector<std::string>{},
                     out_path.string());
  log_info("testbed", "wrote " + out_path.string() + " (" +
                          std::to_string(split.folds.size()) + " folds)");
  return 0;
}

struct CrossTaskInputs {
  std::string target_graphs, target_perf, source_models, target_models;
  bool given() const { return !target_perf.empty(); }
};

int cmd_run(const std::string& graphs_path, const std::string& perf_path,
            const std::string& features_path, const std::string& testbed_arg,
            double sparsity, long epsilon, const std::string& algorithms_arg,
            std::uint64_t seed, int jobs, const std::string& out_dir,
            bool force, const CrossTaskInputs& ct) {
  const auto catalog = load_graph_catalog(graphs_path);
  PerformanceMatrix P = load_performance_matrix(perf_path);
  auto [M, feature_ids] = load_feature_matrix(features_path);
  const Testbed testbed = parse_testbed(testbed_arg);

  TestbedSplit split;
  if (testbed == Testbed::cross_task) {
    if (!ct.given())
      throw DataError(
          "cross_task needs --target-graphs, --target-perf, "
          "--source-models, --target-models");
    const auto target_catalog = load_graph_catalog(ct.target_graphs);
    const PerformanceMatrix P_target =
        load_performance_matrix(ct.target_perf);
    const auto source_models = load_model_catalog(ct.source_models);
    const auto target_models = load_model_catalog(ct.target_models);
    const CrossTaskResult result =
        cross_task_split(catalog, P, source_models, target_catalog, P_target,
                         target_models);
    split = result.split;
    // Merge: train rows from the source task, test rows from the target
    // task, restricted to the shared model columns (source ids).
    const Eigen::Index shared =
        static_cast<Eigen::Index>(result.source_columns.size());
    PerformanceMatrix merged;
    for (Eigen::Index c = 0; c < shared; ++c)
      merged.model_ids.push_back(P.model_ids[result.source_columns[c]]);
    merged.graph_ids = split.folds[0].train_ids;
    for (const auto& id : split.folds[0].test_ids)
      merged.graph_ids.push_back(id);
    const Eigen::Index rows =
        static_cast<Eigen::Index>(merged.graph_ids.size());
    merged.values.resize(rows, shared);
    merged.mask.resize(rows, shared);
    std::unordered_map<std::string, Eigen::Index> src_row, tgt_row;
    for (Eigen::Index i = 0; i < P.num_graphs(); ++i)
      src_row[P.graph_ids[i]] = i;
    for (Eigen::Index i = 0; i < P_target.num_graphs(); ++i)
      tgt_row[P_target.graph_ids[i]] = i;
    for (Eigen::Index r = 0; r < rows; ++r) {
      const bool is_train =
          r < static_cast<Eigen::Index>(split.folds[0].train_ids.size());
      const auto& row_map = is_train ? src_row : tgt_row;
      const auto& cols =
          is_train ? result.source_columns : result.target_columns;
      const PerformanceMatrix& src = is_train ? P : P_target;
      const auto it = row_map.find(merged.graph_ids[r]);
      if (it == row_map.end())
        throw DataError("cross_task: graph missing from performance data: " +
                        merged.graph_ids[r]);
      for (Eigen::Index c = 0; c < shared; ++c) {
        merged.values(r, c) = src.values(it->second, cols[c]);
        merged.mask(r, c) = src.mask(it->second, cols[c]);
      }
    }
    P = std::move(merged);
    log_info("run", "cross_task: " + std::to_string(shared) +
                        " shared models, " +
                        std::to_string(split.folds[0].train_ids.size()) +
                        " train / " +
                        std::to_string(split.folds[0].test_ids.size()) +
                        " test graphs");
  } else {
    split = build_testbed(testbed, catalog, &P, sparsity, epsilon, seed);
  }

  // Align the feature matrix with P's row order.
  std::unordered_map<std::string, Eigen::Index> feat_row;
  for (size_t i = 0; i < feature_ids.size(); ++i)
    feat_row[feature_ids[i]] = static_cast<Eigen::Index>(i);
  Eigen::MatrixXd M_aligned(P.num_graphs(), M.cols());
  for (Eigen::Index i = 0; i < P.num_graphs(); ++i) {
    const auto it = feat_row.find(P.graph_ids[i]);
    if (it == feat_row.end())
      throw DataError("no features for graph " + P.graph_ids[i]);
    M_aligned.row(i) = M.row(it->second);
  }

  fs::create_directories(out_dir);
  const fs::path csv_path = fs::path(out_dir) / "report.csv";
  const fs::path md_path = fs::path(out_dir) / "report.md";
  check_overwrite(csv_path, force);
  check_overwrite(md_path, force);

  const auto algos = parse_algorithm_list(algorithms_arg);
  std::vector<EvaluationReport> reports;
  for (const auto algo : algos) {
    log_info("run", "evaluating " + algorithm_name(algo) + " on " +
                        testbed_name(testbed));
    reports.push_back(
        evaluate(split, P, M_aligned, algo, SelectorConfig{}, seed, jobs));
    const auto& r = reports.back();
    log_info("run", algorithm_name(algo) +
                        ": mrr=" + csv::format_double(r.mean_mrr) +
                        " auc=" + csv::format_double(r.mean_auc) +
                        " ndcg1=" + csv::format_double(r.mean_ndcg1));
  }
  save_report_csv(reports, csv_path.string());
  std::ofstream md(md_path);
  md << report_markdown(reports);
  log_info("run", "wrote " + csv_path.string() + " and " + md_path.string());
  return 0;
}

int cmd_select(const std::string& bundle_dir, const std::string& features_path,
               const std::string& perf_path, const std::string& algorithm_arg,
               std::uint64_t seed, const std::string& query_path,
               const std::string& save_bundle, const std::string& schema_arg) {
  SelectorModel model;
  FeatureSchema schema = parse_schema(schema_arg);
  if (!bundle_dir.empty()) {
    model = SelectorModel::load(bundle_dir);
  } else {
    if (features_path.empty() || perf_path.empty())
      throw DataError("select needs --bundle, or --features and --perf");
    TrainCorpus corpus;
    std::vector<std::string> feature_ids;
    std::tie(corpus.M, feature_ids) =
        load_feature_matrix(features_path, &schema);
    corpus.P = load_performance_matrix(perf_path);
    if (feature_ids != corpus.P.graph_ids) {
      std::unordered_map<std::string, Eigen::Index> feat_row;
      for (size_t i = 0; i < feature_ids.size(); ++i)
        feat_row[feature_ids[i]] = static_cast<Eigen::Index>(i);
      Eigen::MatrixXd aligned(corpus.P.num_graphs(), corpus.M.cols());
      for (Eigen::Index i = 0; i < corpus.P.num_graphs(); ++i) {
        const auto it = feat_row.find(corpus.P.graph_ids[i]);
        if (it == feat_row.end())
          throw DataError("no features for graph " + corpus.P.graph_ids[i]);
        aligned.row(i) = corpus.M.row(it->second);
      }
      corpus.M = std::move(aligned);
    }
    const Algorithm algo = parse_algorithm(algorithm_arg);
    log_info("select", "fitting " + algorithm_name(algo) + " on " +
                           std::to_string(corpus.P.num_graphs()) +
                           " graphs x " +
                           std::to_string(corpus.P.num_models()) + " models");
    model = fit_selector(algo, corpus, SelectorConfig{}, seed);
    if (!save_bundle.empty()) {
      model.save(save_bundle);
      log_info("select", "saved selector bundle to " + save_bundle);
    }
  }

  const Graph query = load_edge_list(query_path);
  const MetaFeatureVector features = meta_features(query, schema);
  const Eigen::VectorXd scores = model.predict(features.values);

  std::vector<Eigen::Index> order(scores.size());
  for (Eigen::Index j = 0; j < scores.size(); ++j) order[j] = j;
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) {
                     return scores[a] > scores[b];
                   });
  std::cout << "rank,model_id,score,top1\n";
  for (size_t r = 0; r < order.size(); ++r)
    std::cout << r + 1 << ',' << model.model_ids()[order[r]] << ','
              << csv::format_double(scores[order[r]]) << ','
              << (r == 0 ? "*" : "") << '\n';
  return 0;
}

int cmd_report(const std::string& in_path, const std::string& out_path) {
  const auto reports = load_report_csv(in_path);
  const std::string md = report_markdown(reports);
  if (out_path.empty()) {
    std::cout << md;
  } else {
    std::ofstream out(out_path);
    if (!out) throw DataError("cannot write " + out_path);
    out << md;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Instantaneous model selection for graph learning"};
  app.require_subcommand(1);
  app.set_config("--config")->configurable(false);

  std::string graphs, perf, features, out, schema = "compact";
  std::string testbed = "fully_observed", algorithms = "all";
  std::string bundle, query, save_bundle, algorithm = "argosmart";
  std::string report_in, report_out;
  double sparsity = 0.5;
  long epsilon = 10000;
  std::uint64_t seed = 0;
  int jobs = 1;
  bool force = false;

  CrossTaskInputs ct;

  auto* c_features = app.add_subcommand("features",
                                        "Extract meta-feature matrices");
  c_features->add_option("--graphs", graphs, "Graph catalog CSV")->required();
  c_features->add_option("--schema", schema,
                         "Schema list (regular,graphlets,compact,"
                         "regular_graphlets) or 'all'");
  c_features->add_option("--out", out, "Output directory")->required();
  c_features->add_option("--jobs", jobs, "Parallel workers");
  c_features->add_flag("--force", force, "Overwrite existing outputs");

  auto* c_splits =
      app.add_subcommand("splits", "Generate node and link task splits");
  c_splits->add_option("--graphs", graphs, "Graph catalog CSV")->required();
  c_splits->add_option("--seed", seed, "Random seed")->required();
  c_splits->add_option("--out", out, "Output directory")->required();
  c_splits->add_option("--jobs", jobs, "Parallel workers");
  c_splits->add_flag("--force", force, "Overwrite existing outputs");

  auto* c_testbed =
      app.add_subcommand("testbed", "Materialize a testbed split file");
  c_testbed->add_option("--graphs", graphs, "Graph catalog CSV")->required();
  c_testbed->add_option("--perf", perf, "Performance matrix CSV");
  c_testbed->add_option("--testbed", testbed, "Testbed name")->required();
  c_testbed->add_option("--sparsity", sparsity, "Observed fraction p");
  c_testbed->add_option("--epsilon", epsilon, "Node-count threshold");
  c_testbed->add_option("--seed", seed, "Random seed")->required();
  c_testbed->add_option("--out", out, "Output directory")->required();
  c_testbed->add_flag("--force", force, "Overwrite existing outputs");

  auto* c_run = app.add_subcommand("run", "Evaluate algorithms on a testbed");
  c_run->add_option("--graphs", graphs, "Graph catalog CSV")->required();
  c_run->add_option("--perf", perf, "Performance matrix CSV")->required();
  c_run->add_option("--features", features, "Feature matrix CSV")->required();
  c_run->add_option("--testbed", testbed, "Testbed name");
  c_run->add_option("--sparsity", sparsity, "Observed fraction p");
  c_run->add_option("--epsilon", epsilon, "Node-count threshold");
  c_run->add_option("--algorithms", algorithms,
                    "Comma-separated algorithm list or 'all'");
  c_run->add_option("--seed", seed, "Random seed")->required();
  c_run->add_option("--jobs", jobs, "Parallel workers");
  c_run->add_option("--out", out, "Output directory")->required();
  c_run->add_flag("--force", force, "Overwrite existing outputs");
  c_run->add_option("--target-graphs", ct.target_graphs,
                    "cross_task: target graph catalog CSV");
  c_run->add_option("--target-perf", ct.target_perf,
                    "cross_task: target performance CSV");
  c_run->add_option("--source-models", ct.source_models,
                    "cross_task: source model catalog CSV");
  c_run->add_option("--target-models", ct.target_models,
                    "cross_task: target model catalog CSV");

  auto* c_select =
      app.add_subcommand("select", "Rank models for a query graph");
  c_select->add_option("--query", query, "Query graph edge list")->required();
  c_select->add_option("--bundle", bundle, "Fitted selector bundle directory");
  c_select->add_option("--features", features, "Feature matrix CSV");
  c_select->add_option("--perf", perf, "Performance matrix CSV");
  c_select->add_option("--algorithms", algorithm, "Algorithm to fit");
  c_select->add_option("--seed", seed, "Random seed");
  c_select->add_option("--save-bundle", save_bundle,
                       "Persist the fitted selector here");
  c_select->add_option("--schema", schema,
                       "Feature schema when loading a bundle");

  auto* c_report =
      app.add_subcommand("report", "Render a report CSV as Markdown");
  c_report->add_option("--in", report_in, "Report CSV")->required();
  c_report->add_option("--out", report_out, "Markdown output (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Usage errors exit 1; --help and --version exit 0.
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (c_features->parsed())
      return cmd_features(graphs, schema, out, force, jobs);
    if (c_splits->parsed())
      return cmd_splits(graphs, seed, out, force, jobs);
    if (c_testbed->parsed())
      return cmd_testbed(graphs, perf, testbed, sparsity, epsilon, seed, out,
                         force);
    if (c_run->parsed())
      return cmd_run(graphs, perf, features, testbed, sparsity, epsilon,
                     algorithms, seed, jobs, out, force, ct);
    if (c_select->parsed())
      return cmd_select(bundle, features, perf, algorithm, seed, query,
                        save_bundle, schema);
    if (c_report->parsed()) return cmd_report(report_in, report_out);
  } catch (const DataError& e) {
    log_error("cli", e.what());
    return 2;
  } catch (const std::exception& e) {
    log_error("cli", e.what());
    return 3;
  }
  return 1;
}
