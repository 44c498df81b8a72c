#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "isearch/evalkit.hpp"

namespace isearch {

enum class Mode { Gen, Run, Cop, Pca, Cluster, Correct, Sweep };

const char* to_string(Mode m);
Mode mode_from_string(const std::string& name);

// Relative paths are resolved against the working directory.
struct IoPaths {
  std::string data;          // input matrix CSV (otherwise generated from `model`)
  std::string clusters;      // correct: directory of cluster_<k>.csv files
  std::string out_dir;       // gen: dataset directory
  std::string scores;        // run / cop
  std::string basis;         // run / cop / pca
  std::string labels;        // cluster / correct
  std::string grid;          // sweep
  std::string trace;         // sweep: JSON lines, one TrialRecord per trial
  std::string solver_stats;  // run / cluster: per-column solver stats JSON
};

struct ExperimentConfig {
  Mode mode = Mode::Run;
  std::uint64_t seed = 0;
  int threads = 0;  // 0 keeps the OpenMP default
  std::optional<ModelSpec> model;
  TrialOptions method;
  std::optional<int> rank;  // defaults to the model's rank
  int num_clusters = 0;     // cluster: defaults to the model's subspace count
  // sweep only
  std::vector<SweepAxis> axes;
  std::vector<Method> methods{Method::ISearch};
  int trials_per_cell = 20;
  SweepMetric metric = SweepMetric::Recovery;
  bool extended_csv = false;
  IoPaths io;

  // Mode-specific requirements; throws InvalidSpec naming the field.
  void validate() const;
  SweepSpec sweep_spec() const;
};

nlohmann::json to_json(const ExperimentConfig& c);
ExperimentConfig config_from_json(const nlohmann::json& j);

// Runs the configured mode, writes the declared outputs and prints a one-line
// summary to `out`. Returns 0 on success, 2 for an invalid configuration and
// 1 for runtime failures; failures print a JSON object to `err`.
int run_experiment(const ExperimentConfig& config, std::ostream& out, std::ostream& err);
int run_experiment_config(const std::filesystem::path& path, std::ostream& out,
                          std::ostream& err);

// {"error": kind, "message": ..., "field": ...} for an exception.
nlohmann::json error_json(const std::exception& e);

}  // namespace isearch
