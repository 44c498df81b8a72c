#include "isearch/evalkit.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "isearch/baselines.hpp"

namespace isearch {

double recovery_error(const SubspaceBasis& truth, const SubspaceBasis& recovered) {
  if (truth.ambient_dim() != recovered.ambient_dim()) {
    throw InvalidInput("recovery_error: bases live in different ambient dimensions");
  }
  const Eigen::MatrixXd& u = truth.matrix();
  const Eigen::MatrixXd& v = recovered.matrix();
  const Eigen::MatrixXd residual = v - u * (u.transpose() * v);
  return residual.norm() / u.norm();
}

bool detection_success(const Vector& residuals, const std::vector<ColumnLabel>& labels) {
  const double margin = separation_margin(residuals, labels);
  return std::isnan(margin) || margin > 0.0;
}

double separation_margin(const Vector& scores, const std::vector<ColumnLabel>& labels) {
  if (static_cast<std::size_t>(scores.size()) != labels.size()) {
    throw InvalidInput("separation_margin: one label per score required");
  }
  double min_out = std::numeric_limits<double>::infinity();
  double max_in = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double s = scores(static_cast<Eigen::Index>(i));
    if (labels[i] == ColumnLabel::Outlier) {
      min_out = std::min(min_out, s);
    } else {
      max_in = std::max(max_in, s);
    }
  }
  if (std::isinf(min_out) || std::isinf(max_in)) return std::numeric_limits<double>::quiet_NaN();
  return min_out - max_in;
}

double clustering_error(const std::vector<int>& truth, const std::vector<int>& predicted) {
  if (truth.size() != predicted.size() || truth.empty()) {
    throw InvalidInput("clustering_error: label vectors must have equal, nonzero length");
  }
  int k = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || predicted[i] < 0) throw InvalidInput("clustering_error: negative label");
    k = std::max({k, truth[i] + 1, predicted[i] + 1});
  }
  if (k > 8) throw SizeLimit("clustering_error supports at most 8 clusters");
  std::vector<std::vector<int>> confusion(static_cast<std::size_t>(k),
                                          std::vector<int>(static_cast<std::size_t>(k), 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ++confusion[static_cast<std::size_t>(predicted[i])][static_cast<std::size_t>(truth[i])];
  }
  std::vector<int> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);
  int best = 0;
  do {
    int hits = 0;
    for (int p = 0; p < k; ++p) {
      hits += confusion[static_cast<std::size_t>(p)][static_cast<std::size_t>(perm[static_cast<std::size_t>(p)])];
    }
    best = std::max(best, hits);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return 1.0 - static_cast<double>(best) / static_cast<double>(truth.size());
}

const char* to_string(Method m) {
  switch (m) {
    case Method::ISearch: return "isearch";
    case Method::CoP: return "cop";
    case Method::PCA: return "pca";
  }
  return "unknown";
}

Method method_from_string(const std::string& name) {
  if (name == "isearch") return Method::ISearch;
  if (name == "cop") return Method::CoP;
  if (name == "pca") return Method::PCA;
  throw InvalidSpec("method", "unknown method '" + name + "' (isearch, cop, pca)");
}

nlohmann::json to_json(const TrialOptions& o) {
  nlohmann::json j = {
      {"skip_reduction", o.isearch.preprocess.skip_reduction},
      {"rank_ratio", o.isearch.preprocess.rank_ratio},
      {"rule", o.isearch.rule == BasisRule::Adaptive ? "adaptive" : "fraction"},
      {"keep_fraction", o.isearch.keep_fraction},
      {"truncate_fraction", o.isearch.truncate_fraction},
      {"residual_threshold", o.isearch.residual_threshold},
      {"accept_unconverged", o.isearch.accept_unconverged},
      {"coherence_p", o.coherence_p},
      {"admm", to_json(o.isearch.solver)},
  };
  if (o.add_tol) j["add_tol"] = *o.add_tol;
  return j;
}

namespace {

template <typename T>
void read_field(const nlohmann::json& j, const char* key, const std::string& prefix, T& dst) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  const std::string field = prefix + key;
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) throw InvalidSpec(field, "expected a boolean");
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) throw InvalidSpec(field, "expected an integer");
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) throw InvalidSpec(field, "expected a number");
  } else {
    if (!v.is_string()) throw InvalidSpec(field, "expected a string");
  }
  dst = v.get<T>();
}

}  // namespace

TrialOptions trial_options_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidSpec("method", "expected an object");
  TrialOptions o;
  const std::string p = "method.";
  read_field(j, "skip_reduction", p, o.isearch.preprocess.skip_reduction);
  read_field(j, "rank_ratio", p, o.isearch.preprocess.rank_ratio);
  std::string rule = "adaptive";
  read_field(j, "rule", p, rule);
  if (rule == "adaptive") {
    o.isearch.rule = BasisRule::Adaptive;
  } else if (rule == "fraction") {
    o.isearch.rule = BasisRule::Fraction;
  } else {
    throw InvalidSpec("method.rule", "expected 'adaptive' or 'fraction'");
  }
  read_field(j, "keep_fraction", p, o.isearch.keep_fraction);
  read_field(j, "truncate_fraction", p, o.isearch.truncate_fraction);
  read_field(j, "residual_threshold", p, o.isearch.residual_threshold);
  read_field(j, "accept_unconverged", p, o.isearch.accept_unconverged);
  read_field(j, "coherence_p", p, o.coherence_p);
  if (j.contains("add_tol")) {
    double tol = 0.0;
    read_field(j, "add_tol", p, tol);
    o.add_tol = tol;
  }
  if (j.contains("admm")) o.isearch.solver = solver_options_from_json(j.at("admm"));
  const double rr = o.isearch.preprocess.rank_ratio;
  if (!(rr > 0.0 && rr < 1.0)) throw InvalidSpec("method.rank_ratio", "must lie in (0, 1)");
  const double kf = o.isearch.keep_fraction;
  if (!(kf > 0.0 && kf < 1.0)) throw InvalidSpec("method.keep_fraction", "must lie in (0, 1)");
  if (o.add_tol && !(*o.add_tol > 0.0 && *o.add_tol < 1.0)) {
    throw InvalidSpec("method.add_tol", "must lie in (0, 1)");
  }
  if (o.coherence_p != 1 && o.coherence_p != 2) {
    throw InvalidSpec("method.coherence_p", "must be 1 or 2");
  }
  return o;
}

nlohmann::json to_json(const TrialRecord& rec) {
  auto num = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  nlohmann::json j = {
      {"spec", to_json(rec.spec)},
      {"seed", rec.seed},
      {"method", to_string(rec.method)},
      {"recovery_error", num(rec.recovery_error)},
      {"log_recovery_error", num(rec.log_recovery_error)},
      {"success", rec.success},
      {"detection_success", rec.detection_success},
      {"separation_margin", num(rec.separation_margin)},
      {"unconverged_columns", rec.unconverged_columns},
      {"wall_time", rec.wall_time},
  };
  if (!rec.error_kind.empty()) {
    j["error_kind"] = rec.error_kind;
    j["error"] = rec.error;
  }
  return j;
}

TrialRecord evaluate_method(const Dataset& ds, Method method, const TrialOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  TrialRecord rec;
  rec.spec = ds.spec;
  rec.seed = ds.seed;
  rec.method = method;
  const int r = ds.spec.rank();
  const bool noisy = ds.spec.sigma_n.value_or(0.0) > 0.0;
  const double add_tol = opts.add_tol.value_or(noisy ? 5e-2 : 1e-3);
  try {
    if (ds.n_i() < r) {
      // The inliers span at most n_i dimensions of U.
      throw RankDeficient(r, ds.n_i());
    }
    SubspaceBasis basis;
    switch (method) {
      case Method::ISearch: {
        ISearchOptions o = opts.isearch;
        o.rank = r;
        o.add_tol = add_tol;
        const ISearchResult res = run_isearch(ds.data, o);
        basis = res.recovery.basis;
        rec.separation_margin = separation_margin(res.profile.values, ds.labels);
        rec.unconverged_columns = static_cast<int>(res.unconverged.size());
        break;
      }
      case Method::CoP: {
        const PreprocessedData pre = preprocess(ds.data, opts.isearch.preprocess);
        const CoherenceProfile coh = coherence_values(pre, opts.coherence_p);
        basis = cop_recover(pre, coh, r, add_tol).basis;
        rec.separation_margin = separation_margin(-coh.values, ds.labels);
        break;
      }
      case Method::PCA: {
        basis = pca_recover(ds.data, r);
        break;
      }
    }
    const Vector residuals = residual_scores(ds.data, basis);
    if (method == Method::PCA) rec.separation_margin = separation_margin(residuals, ds.labels);
    rec.recovery_error = recovery_error(ds.truth_basis, basis);
    rec.success = rec.recovery_error < 1e-2;
    rec.detection_success = detection_success(residuals, ds.labels);
  } catch (const Error& e) {
    rec.error_kind = to_string(e.kind());
    rec.error = e.what();
    rec.recovery_error = 1.0;
    rec.success = false;
    rec.detection_success = false;
    rec.separation_margin = std::numeric_limits<double>::quiet_NaN();
  }
  rec.log_recovery_error = std::log10(std::max(rec.recovery_error, kLogErrorFloor));
  rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

TrialRecord run_trial(const ModelSpec& spec, Method method, std::uint64_t seed,
                      const TrialOptions& opts) {
  spec.validate();
  RandomSource rng(seed);
  const auto start = std::chrono::steady_clock::now();
  const Dataset ds = gen_dataset(spec, rng);
  TrialRecord rec = evaluate_method(ds, method, opts);
  rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

// ---------------------------------------------------------------------------
// Sweeps

const std::vector<std::string>& sweep_axis_names() {
  static const std::vector<std::string> names = {
      "M1", "n_i", "n_o", "r", "n_i_over_r", "n_o_over_M1", "eta", "gamma", "snr", "sigma_n"};
  return names;
}

namespace {

template <typename... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <typename... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

int as_count(const std::string& name, double v) {
  const double rounded = std::round(v);
  if (rounded < 0.0 || std::abs(rounded - v) > 1e-9) {
    throw InvalidSpec("sweep.axes." + name, "expected a nonnegative integer value");
  }
  return static_cast<int>(rounded);
}

void set_n_i(ModelSpec& spec, int n_i) {
  spec.n_i = n_i;
  if (auto* u = std::get_if<UnionOfSubspaces>(&spec.inliers)) u->counts.clear();
}

void set_eta(OutlierModel& model, double eta) {
  if (auto* c = std::get_if<ClusteredOutliers>(&model)) c->eta = eta;
}

}  // namespace

void apply_axis(ModelSpec& spec, const std::string& name, double value) {
  if (name == "M1") {
    spec.M1 = as_count(name, value);
  } else if (name == "n_i") {
    set_n_i(spec, as_count(name, value));
  } else if (name == "n_o") {
    spec.n_o = as_count(name, value);
  } else if (name == "r") {
    const int r = as_count(name, value);
    std::visit(overloaded{
                   [&](UniformOnSubspace& u) { u.r = r; },
                   [&](ClusteredInliers& c) { c.r = r; },
                   [&](UnionOfSubspaces&) {
                     throw InvalidSpec("sweep.axes.r", "not defined for union inliers");
                   },
               },
               spec.inliers);
  } else if (name == "n_i_over_r") {
    set_n_i(spec, static_cast<int>(std::lround(value * spec.rank())));
  } else if (name == "n_o_over_M1") {
    spec.n_o = static_cast<int>(std::lround(value * spec.M1));
  } else if (name == "eta") {
    set_eta(spec.outliers, value);
    for (auto& block : spec.extra_outliers) set_eta(block.model, value);
  } else if (name == "gamma") {
    auto* c = std::get_if<ClusteredInliers>(&spec.inliers);
    if (!c) throw InvalidSpec("sweep.axes.gamma", "requires clustered inliers");
    c->gamma = value;
  } else if (name == "snr") {
    if (!(value > 0.0)) throw InvalidSpec("sweep.axes.snr", "must be positive");
    spec.sigma_n = sigma_for_snr(value);
  } else if (name == "sigma_n") {
    if (!(value >= 0.0)) throw InvalidSpec("sweep.axes.sigma_n", "must be >= 0");
    spec.sigma_n = value;
  } else {
    throw InvalidSpec("sweep.axes", "unknown axis '" + name + "'");
  }
}

namespace {

const char* metric_name(SweepMetric m) {
  switch (m) {
    case SweepMetric::Recovery: return "recovery";
    case SweepMetric::Detection: return "detection";
    case SweepMetric::Separation: return "separation";
  }
  return "recovery";
}

bool trial_success(const TrialRecord& rec, SweepMetric metric) {
  switch (metric) {
    case SweepMetric::Recovery: return rec.success;
    case SweepMetric::Detection: return rec.detection_success;
    case SweepMetric::Separation: return rec.separation_margin > 0.0;
  }
  return false;
}

std::vector<std::vector<double>> cell_coordinates(const std::vector<SweepAxis>& axes) {
  std::vector<std::vector<double>> out{{}};
  for (const auto& axis : axes) {
    std::vector<std::vector<double>> next;
    for (const auto& prefix : out) {
      for (double v : axis.values) {
        auto c = prefix;
        c.push_back(v);
        next.push_back(std::move(c));
      }
    }
    out = std::move(next);
  }
  return out;
}

}  // namespace

void SweepSpec::validate() const {
  if (axes.empty()) throw InvalidSpec("sweep.axes", "at least one axis required");
  for (std::size_t a = 0; a < axes.size(); ++a) {
    const auto& names = sweep_axis_names();
    if (std::find(names.begin(), names.end(), axes[a].name) == names.end()) {
      throw InvalidSpec("sweep.axes[" + std::to_string(a) + "].name",
                        "unknown axis '" + axes[a].name + "'");
    }
    if (axes[a].values.empty()) {
      throw InvalidSpec("sweep.axes[" + std::to_string(a) + "].values", "must not be empty");
    }
  }
  if (methods.empty()) throw InvalidSpec("sweep.methods", "at least one method required");
  if (trials_per_cell < 1) throw InvalidSpec("sweep.trials_per_cell", "must be >= 1");
  // Every cell must describe a valid model.
  for (const auto& c : cell_coordinates(axes)) {
    ModelSpec spec = base;
    for (std::size_t a = 0; a < axes.size(); ++a) apply_axis(spec, axes[a].name, c[a]);
    spec.validate();
  }
}

nlohmann::json to_json(const SweepSpec& s) {
  nlohmann::json axes = nlohmann::json::array();
  for (const auto& a : s.axes) axes.push_back({{"name", a.name}, {"values", a.values}});
  nlohmann::json methods = nlohmann::json::array();
  for (Method m : s.methods) methods.push_back(to_string(m));
  return {{"model", to_json(s.base)},
          {"axes", axes},
          {"methods", methods},
          {"trials_per_cell", s.trials_per_cell},
          {"metric", metric_name(s.metric)},
          {"method", to_json(s.trial)}};
}

SweepSpec sweep_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidSpec("sweep", "expected an object");
  SweepSpec s;
  if (!j.contains("model")) throw InvalidSpec("model", "required");
  s.base = model_from_json(j.at("model"));
  if (!j.contains("axes") || !j.at("axes").is_array()) {
    throw InvalidSpec("sweep.axes", "expected an array");
  }
  s.axes.clear();
  for (std::size_t a = 0; a < j.at("axes").size(); ++a) {
    const auto& ja = j.at("axes")[a];
    const std::string path = "sweep.axes[" + std::to_string(a) + "]";
    if (!ja.is_object() || !ja.contains("name") || !ja.at("name").is_string()) {
      throw InvalidSpec(path + ".name", "expected a string");
    }
    if (!ja.contains("values") || !ja.at("values").is_array()) {
      throw InvalidSpec(path + ".values", "expected an array of numbers");
    }
    SweepAxis axis;
    axis.name = ja.at("name").get<std::string>();
    for (const auto& v : ja.at("values")) {
      if (!v.is_number()) throw InvalidSpec(path + ".values", "expected an array of numbers");
      axis.values.push_back(v.get<double>());
    }
    s.axes.push_back(std::move(axis));
  }
  if (j.contains("methods")) {
    if (!j.at("methods").is_array()) throw InvalidSpec("sweep.methods", "expected an array");
    s.methods.clear();
    for (const auto& m : j.at("methods")) {
      if (!m.is_string()) throw InvalidSpec("sweep.methods", "expected method names");
      try {
        s.methods.push_back(method_from_string(m.get<std::string>()));
      } catch (const InvalidSpec& e) {
        throw InvalidSpec("sweep.methods", e.what());
      }
    }
  }
  read_field(j, "trials_per_cell", "sweep.", s.trials_per_cell);
  std::string metric = "recovery";
  read_field(j, "metric", "sweep.", metric);
  if (metric == "recovery") {
    s.metric = SweepMetric::Recovery;
  } else if (metric == "detection") {
    s.metric = SweepMetric::Detection;
  } else if (metric == "separation") {
    s.metric = SweepMetric::Separation;
  } else {
    throw InvalidSpec("sweep.metric", "expected recovery, detection or separation");
  }
  if (j.contains("method")) s.trial = trial_options_from_json(j.at("method"));
  s.validate();
  return s;
}

SweepGrid run_sweep(const SweepSpec& spec, std::uint64_t master_seed, const TrialSink& sink) {
  spec.validate();
  const auto coords = cell_coordinates(spec.axes);
  const std::size_t n_methods = spec.methods.size();
  const auto trials = static_cast<std::size_t>(spec.trials_per_cell);
  const std::size_t total = coords.size() * n_methods * trials;

  std::vector<ModelSpec> models;
  for (const auto& c : coords) {
    ModelSpec m = spec.base;
    for (std::size_t a = 0; a < spec.axes.size(); ++a) apply_axis(m, spec.axes[a].name, c[a]);
    models.push_back(std::move(m));
  }

  std::vector<TrialRecord> records(total);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t flat = 0; flat < total; ++flat) {
    const std::size_t t = flat % trials;
    const std::size_t mi = (flat / trials) % n_methods;
    const std::size_t cell = flat / (trials * n_methods);
    const std::uint64_t seed = derive_seed(master_seed, cell, t);
    records[flat] = run_trial(models[cell], spec.methods[mi], seed, spec.trial);
  }

  SweepGrid grid;
  for (const auto& a : spec.axes) grid.axis_names.push_back(a.name);
  grid.method_column = n_methods > 1;
  grid.trials_per_cell = spec.trials_per_cell;
  for (std::size_t cell = 0; cell < coords.size(); ++cell) {
    for (std::size_t mi = 0; mi < n_methods; ++mi) {
      SweepCell out;
      out.coords = coords[cell];
      out.method = spec.methods[mi];
      out.trials = spec.trials_per_cell;
      double log_sum = 0.0;
      double margin_sum = 0.0;
      int margin_count = 0;
      for (std::size_t t = 0; t < trials; ++t) {
        const TrialRecord& rec = records[(cell * n_methods + mi) * trials + t];
        if (sink) sink(rec, cell, t);
        if (trial_success(rec, spec.metric)) ++out.successes;
        if (!rec.error_kind.empty()) ++out.failed_trials;
        log_sum += rec.log_recovery_error;
        if (std::isfinite(rec.separation_margin)) {
          margin_sum += rec.separation_margin;
          ++margin_count;
        }
      }
      out.probability = static_cast<double>(out.successes) / out.trials;
      out.mean_log_error = log_sum / out.trials;
      out.mean_margin = margin_count ? margin_sum / margin_count
                                     : std::numeric_limits<double>::quiet_NaN();
      grid.cells.push_back(std::move(out));
    }
  }
  return grid;
}

std::string format_sweep_csv(const SweepGrid& grid, bool extended) {
  std::ostringstream out;
  out.precision(17);
  for (const auto& name : grid.axis_names) out << name << ',';
  if (grid.method_column) out << "method,";
  out << "probability";
  if (extended) out << ",trials,successes,mean_log_error,mean_margin,failed_trials";
  out << '\n';
  for (const auto& cell : grid.cells) {
    for (double c : cell.coords) out << c << ',';
    if (grid.method_column) out << to_string(cell.method) << ',';
    out << cell.probability;
    if (extended) {
      out << ',' << cell.trials << ',' << cell.successes << ',' << cell.mean_log_error << ',';
      if (std::isfinite(cell.mean_margin)) out << cell.mean_margin;
      out << ',' << cell.failed_trials;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace isearch
