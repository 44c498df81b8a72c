#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "isearch/experiment.hpp"

namespace {

struct GlobalFlags {
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string trace;
  std::optional<double> admm_rho;
  std::optional<double> admm_tol;
  std::optional<int> admm_max_iters;
  std::string solver_stats;
};

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw isearch::IoError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw isearch::InvalidSpec(path, e.what());
  }
}

// Accepts either a bare model object or a config with a "model" member.
isearch::ModelSpec load_model(const std::string& path) {
  const nlohmann::json j = load_json(path);
  const nlohmann::json& m = j.contains("model") ? j.at("model") : j;
  try {
    return isearch::model_from_json(m);
  } catch (const isearch::InvalidSpec& e) {
    const std::string what = e.what();
    throw isearch::InvalidSpec("model." + e.field(), what.substr(e.field().size() + 2));
  }
}

void apply_globals(const GlobalFlags& g, isearch::ExperimentConfig& c) {
  if (g.seed) c.seed = *g.seed;
  if (g.threads) c.threads = *g.threads;
  if (!g.trace.empty()) c.io.trace = g.trace;
  if (!g.solver_stats.empty()) c.io.solver_stats = g.solver_stats;
  auto& s = c.method.isearch.solver;
  if (g.admm_rho) s.rho = *g.admm_rho;
  if (g.admm_tol) s.feas_tol = s.dual_tol = *g.admm_tol;
  if (g.admm_max_iters) s.max_iters = *g.admm_max_iters;
}

int report(const std::exception& e, int code) {
  std::cerr << isearch::error_json(e).dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Innovation Search: outlier detection, subspace recovery and clustering"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  app.add_option("--seed", g.seed, "Master seed (u64)");
  app.add_option("--threads", g.threads, "Worker thread cap (0 = OpenMP default)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--trace", g.trace, "Write one JSON line per trial (sweep)");
  app.add_option("--admm-rho", g.admm_rho, "ADMM penalty")->check(CLI::PositiveNumber);
  app.add_option("--admm-tol", g.admm_tol, "ADMM primal and dual tolerance")
      ->check(CLI::PositiveNumber);
  app.add_option("--admm-max-iters", g.admm_max_iters, "ADMM iteration cap")
      ->check(CLI::PositiveNumber);
  app.add_option("--solver-stats", g.solver_stats, "Write per-column solver stats JSON");

  isearch::ExperimentConfig c;
  std::string model_path;
  std::string config_path;
  int rank = 0;
  double keep_fraction = 0.0;
  bool adaptive = false;
  double residual_threshold = -1.0;
  bool print_config = false;

  auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset directory");
  gen->add_option("--model", model_path, "Model JSON (bare or inside a config)")->required();
  gen->add_option("--out", c.io.out_dir, "Output directory")->required();

  auto* run = app.add_subcommand("run", "Innovation values, basis and outlier verdicts");
  run->add_option("--data", c.io.data, "Data matrix CSV");
  run->add_option("--model", model_path, "Generate the data from a model instead");
  run->add_option("--rank", rank, "Inlier subspace dimension")->check(CLI::PositiveNumber);
  auto* kf = run->add_option("--keep-fraction", keep_fraction,
                             "Span of this fraction of least innovative columns");
  auto* ad = run->add_flag("--adaptive", adaptive, "Adaptive column sampling (default)");
  kf->excludes(ad);
  run->add_option("--residual-threshold", residual_threshold, "Outlier residual threshold");
  run->add_option("--out-scores", c.io.scores, "Per-column scores CSV");
  run->add_option("--out-basis", c.io.basis, "Recovered basis CSV");

  auto* cop = app.add_subcommand("cop", "Coherence values");
  cop->add_option("--data", c.io.data, "Data matrix CSV");
  cop->add_option("--model", model_path, "Generate the data from a model instead");
  cop->add_option("--out", c.io.scores, "Coherence scores CSV");
  cop->add_option("--rank", rank, "Also recover a basis of this rank")
      ->check(CLI::PositiveNumber);
  cop->add_option("--out-basis", c.io.basis, "Recovered basis CSV");

  auto* pca = app.add_subcommand("pca", "Top singular subspace");
  pca->add_option("--data", c.io.data, "Data matrix CSV");
  pca->add_option("--model", model_path, "Generate the data from a model instead");
  pca->add_option("--rank", rank, "Subspace dimension")->check(CLI::PositiveNumber);
  pca->add_option("--out", c.io.basis, "Basis CSV");

  auto* cluster = app.add_subcommand("cluster", "Spectral clustering on innovation affinity");
  cluster->add_option("--data", c.io.data, "Data matrix CSV");
  cluster->add_option("--model", model_path, "Generate the data from a model instead");
  cluster->add_option("--num-clusters", c.num_clusters, "Number of clusters")
      ->check(CLI::PositiveNumber);
  cluster->add_option("--out", c.io.labels, "Labels CSV");

  auto* correct = app.add_subcommand("correct", "Reassign points of an initial clustering");
  correct->add_option("--clusters", c.io.clusters, "Directory of cluster_<k>.csv")->required();
  correct->add_option("--rank", rank, "Per-cluster subspace dimension")
      ->required()
      ->check(CLI::PositiveNumber);
  correct->add_option("--out", c.io.labels, "Labels CSV");

  auto* sweep = app.add_subcommand("sweep", "Monte Carlo grid over model parameters");
  sweep->add_option("--config", config_path, "Sweep config JSON")->required();
  sweep->add_option("--out", c.io.grid, "Grid CSV");
  sweep->add_flag("--extended", c.extended_csv, "Append per-cell statistics");

  auto* config = app.add_subcommand("config", "Run an experiment config file");
  config->add_option("path", config_path, "Config JSON")->required();
  config->add_flag("--print", print_config, "Print the normalized config and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*sweep || *config) {
      const std::string grid = c.io.grid;
      const bool extended = c.extended_csv;
      c = isearch::config_from_json(load_json(config_path));
      if (*sweep) {
        if (c.mode != isearch::Mode::Sweep) {
          throw isearch::InvalidSpec("mode", "sweep expects a config with mode \"sweep\"");
        }
        if (!grid.empty()) c.io.grid = grid;
        c.extended_csv = c.extended_csv || extended;
      }
    } else {
      if (*gen) c.mode = isearch::Mode::Gen;
      if (*run) c.mode = isearch::Mode::Run;
      if (*cop) c.mode = isearch::Mode::Cop;
      if (*pca) c.mode = isearch::Mode::Pca;
      if (*cluster) c.mode = isearch::Mode::Cluster;
      if (*correct) c.mode = isearch::Mode::Correct;
      if (!model_path.empty()) c.model = load_model(model_path);
      if (rank > 0) c.rank = rank;
      if (*run) {
        if (keep_fraction > 0.0) {
          c.method.isearch.rule = isearch::BasisRule::Fraction;
          c.method.isearch.keep_fraction = keep_fraction;
        }
        if (residual_threshold >= 0.0) c.method.isearch.residual_threshold = residual_threshold;
      }
    }
    apply_globals(g, c);
    c.method.isearch.solver.validate();
    if (print_config) {
      c.validate();
      std::cout << isearch::to_json(c).dump(2) << '\n';
      return 0;
    }
  } catch (const isearch::IoError& e) {
    return report(e, 1);
  } catch (const std::exception& e) {
    return report(e, 2);
  }
  return isearch::run_experiment(c, std::cout, std::cerr);
}
