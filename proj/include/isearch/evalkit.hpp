#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "isearch/cluster.hpp"
#include "isearch/isearch.hpp"
#include "isearch/synthgen.hpp"

namespace isearch {

// ||(I - U U^T) V||_F / ||U||_F
double recovery_error(const SubspaceBasis& truth, const SubspaceBasis& recovered);

// Every inlier residual strictly below every outlier residual.
bool detection_success(const Vector& residuals, const std::vector<ColumnLabel>& labels);

// min over outliers - max over inliers; positive iff the scores separate.
// NaN when either class is empty.
double separation_margin(const Vector& scores, const std::vector<ColumnLabel>& labels);

// Fraction of misassigned points under the best matching of cluster ids
// (at most 8 clusters).
double clustering_error(const std::vector<int>& truth, const std::vector<int>& predicted);

enum class Method { ISearch, CoP, PCA };

const char* to_string(Method m);
Method method_from_string(const std::string& name);

struct TrialOptions {
  ISearchOptions isearch;  // rank is taken from the model
  // Defaults to 1e-3, or 5e-2 when the model is noisy.
  std::optional<double> add_tol;
  int coherence_p = 2;
};

nlohmann::json to_json(const TrialOptions& o);
TrialOptions trial_options_from_json(const nlohmann::json& j);

// Floor applied before taking log10 of a zero recovery error.
inline constexpr double kLogErrorFloor = 1e-16;

struct TrialRecord {
  ModelSpec spec;
  std::uint64_t seed = 0;
  Method method = Method::ISearch;
  double recovery_error = 1.0;
  double log_recovery_error = 0.0;
  bool success = false;
  bool detection_success = false;
  // Oriented so that positive means the method's column scores separate the
  // classes: innovation (iSearch), coherence (CoP), residual (PCA).
  double separation_margin = 0.0;
  int unconverged_columns = 0;
  double wall_time = 0.0;
  std::string error_kind;  // empty on success
  std::string error;
};

nlohmann::json to_json(const TrialRecord& rec);

// Errors raised by the method end up in the record, never as exceptions.
TrialRecord run_trial(const ModelSpec& spec, Method method, std::uint64_t seed,
                      const TrialOptions& opts = {});

// Method applied to an already generated dataset.
TrialRecord evaluate_method(const Dataset& ds, Method method, const TrialOptions& opts = {});

struct SweepAxis {
  std::string name;
  std::vector<double> values;
};

// Axis names understood by apply_axis.
const std::vector<std::string>& sweep_axis_names();
void apply_axis(ModelSpec& spec, const std::string& name, double value);

enum class SweepMetric { Recovery, Detection, Separation };

struct SweepSpec {
  ModelSpec base;
  std::vector<SweepAxis> axes;
  std::vector<Method> methods{Method::ISearch};
  int trials_per_cell = 20;
  SweepMetric metric = SweepMetric::Recovery;
  TrialOptions trial;

  void validate() const;
};

nlohmann::json to_json(const SweepSpec& s);
SweepSpec sweep_from_json(const nlohmann::json& j);

struct SweepCell {
  std::vector<double> coords;
  Method method = Method::ISearch;
  int trials = 0;
  int successes = 0;
  double probability = 0.0;
  double mean_log_error = 0.0;
  double mean_margin = 0.0;
  int failed_trials = 0;  // trials that ended in an error
};

struct SweepGrid {
  std::vector<std::string> axis_names;
  bool method_column = false;
  int trials_per_cell = 0;
  std::vector<SweepCell> cells;
};

// Called once per trial, in deterministic (cell, method, trial) order.
using TrialSink = std::function<void(const TrialRecord&, std::size_t cell, std::size_t trial)>;

// Trial t of cell c uses seed derive_seed(master_seed, c, t) for every
// method, so methods are compared on identical data.
SweepGrid run_sweep(const SweepSpec& spec, std::uint64_t master_seed, const TrialSink& sink = {});

// Header: axis names [, method], probability [, extended columns].
std::string format_sweep_csv(const SweepGrid& grid, bool extended = false);

}  // namespace isearch
