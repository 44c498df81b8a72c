#include "isearch/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <regex>
#include <sstream>

#include <omp.h>

#include "isearch/baselines.hpp"
#include "isearch/cluster.hpp"

namespace isearch {

namespace {

const std::map<std::string, Mode>& mode_table() {
  static const std::map<std::string, Mode> table = {
      {"gen", Mode::Gen},         {"run", Mode::Run},         {"cop", Mode::Cop},
      {"pca", Mode::Pca},         {"cluster", Mode::Cluster}, {"correct", Mode::Correct},
      {"sweep", Mode::Sweep},
  };
  return table;
}

// Strip the "field: " prefix InvalidSpec adds to its message.
std::string bare_message(const InvalidSpec& e) {
  const std::string what = e.what();
  const std::string prefix = e.field() + ": ";
  return what.compare(0, prefix.size(), prefix) == 0 ? what.substr(prefix.size()) : what;
}

template <typename T>
void read_value(const nlohmann::json& j, const char* key, const std::string& path, T& dst) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  const std::string field = path.empty() ? key : path + "." + key;
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) throw InvalidSpec(field, "expected a boolean");
  } else if constexpr (std::is_same_v<T, std::uint64_t>) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      throw InvalidSpec(field, "expected a nonnegative integer");
    }
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) throw InvalidSpec(field, "expected an integer");
  } else {
    if (!v.is_string()) throw InvalidSpec(field, "expected a string");
  }
  dst = v.get<T>();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("write failed for " + path);
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

struct Input {
  DataMatrix data;
  std::optional<Dataset> truth;
};

Input load_input(const ExperimentConfig& c) {
  Input in;
  if (!c.io.data.empty()) {
    in.data = read_matrix_csv(c.io.data);
    return in;
  }
  RandomSource rng(c.seed);
  in.truth = gen_dataset(*c.model, rng);
  in.data = in.truth->data;
  return in;
}

int resolve_rank(const ExperimentConfig& c, const DataMatrix& d) {
  const int rank = c.rank ? *c.rank : c.model->rank();
  if (rank > d.rows()) {
    throw InvalidSpec("method.rank", "exceeds the ambient dimension " + std::to_string(d.rows()));
  }
  return rank;
}

void write_stats(const ExperimentConfig& c, const DirectionSet& dirs) {
  if (c.io.solver_stats.empty()) return;
  write_text(c.io.solver_stats, stats_to_json(dirs).dump(2) + "\n");
}

void write_labels(const std::string& path, const std::vector<int>& labels) {
  std::ostringstream s;
  for (int l : labels) s << l << '\n';
  write_text(path, s.str());
}

double effective_add_tol(const ExperimentConfig& c) {
  const bool noisy = c.model && c.model->sigma_n.value_or(0.0) > 0.0;
  return c.method.add_tol.value_or(noisy ? 5e-2 : 1e-3);
}

ISearchOptions isearch_options(const ExperimentConfig& c, int rank) {
  ISearchOptions o = c.method.isearch;
  o.rank = rank;
  o.add_tol = effective_add_tol(c);
  return o;
}

std::string mode_gen(const ExperimentConfig& c) {
  RandomSource rng(c.seed);
  const Dataset ds = gen_dataset(*c.model, rng);
  save_dataset(ds, c.io.out_dir);
  return "gen: M1=" + std::to_string(ds.data.rows()) + " M2=" + std::to_string(ds.data.cols()) +
         " n_i=" + std::to_string(ds.n_i()) + " n_o=" + std::to_string(ds.n_o()) + " dir=" +
         c.io.out_dir;
}

std::string mode_run(const ExperimentConfig& c) {
  const Input in = load_input(c);
  const int rank = resolve_rank(c, in.data);
  const ISearchResult res = run_isearch(in.data, isearch_options(c, rank));
  write_stats(c, res.directions);
  if (!c.io.scores.empty()) {
    std::ostringstream s;
    s.precision(17);
    s << "column,innovation,residual,outlier\n";
    for (Eigen::Index j = 0; j < in.data.cols(); ++j) {
      s << j << ',' << res.profile.values(j) << ',' << res.verdicts.scores(j) << ','
        << (res.verdicts.outlier[static_cast<std::size_t>(j)] ? 1 : 0) << '\n';
    }
    write_text(c.io.scores, s.str());
  }
  if (!c.io.basis.empty()) write_matrix_csv(c.io.basis, res.recovery.basis.matrix());
  const auto flagged = std::count(res.verdicts.outlier.begin(), res.verdicts.outlier.end(), true);
  std::string line = "run: M2=" + std::to_string(in.data.cols()) + " r=" + std::to_string(rank) +
                     " r_d=" + std::to_string(res.pre.rank) +
                     " flagged=" + std::to_string(flagged) +
                     " unconverged=" + std::to_string(res.unconverged.size());
  if (in.truth) {
    line += " separation_margin=" + fmt(separation_margin(res.profile.values, in.truth->labels));
    line += " recovery_error=" + fmt(recovery_error(in.truth->truth_basis, res.recovery.basis));
    line += std::string(" detection_success=") +
            (detection_success(res.verdicts.scores, in.truth->labels) ? "true" : "false");
  }
  return line;
}

std::string mode_cop(const ExperimentConfig& c) {
  const Input in = load_input(c);
  const PreprocessedData pre = preprocess(in.data, c.method.isearch.preprocess);
  const CoherenceProfile coh = coherence_values(pre, c.method.coherence_p);
  if (!c.io.scores.empty()) {
    std::ostringstream s;
    s.precision(17);
    s << "column,coherence\n";
    for (Eigen::Index j = 0; j < coh.values.size(); ++j) s << j << ',' << coh.values(j) << '\n';
    write_text(c.io.scores, s.str());
  }
  std::string line = "cop: M2=" + std::to_string(in.data.cols());
  if (c.rank || c.model) {
    const int rank = resolve_rank(c, in.data);
    const RecoveryResult rec = cop_recover(pre, coh, rank, effective_add_tol(c));
    if (!c.io.basis.empty()) write_matrix_csv(c.io.basis, rec.basis.matrix());
    line += " r=" + std::to_string(rank);
    if (in.truth) {
      line += " recovery_error=" + fmt(recovery_error(in.truth->truth_basis, rec.basis));
    }
  }
  if (in.truth) {
    line += " separation_margin=" + fmt(separation_margin(-coh.values, in.truth->labels));
  }
  return line;
}

std::string mode_pca(const ExperimentConfig& c) {
  const Input in = load_input(c);
  const int rank = resolve_rank(c, in.data);
  const SubspaceBasis basis = pca_recover(in.data, rank);
  if (!c.io.basis.empty()) write_matrix_csv(c.io.basis, basis.matrix());
  std::string line = "pca: M2=" + std::to_string(in.data.cols()) + " r=" + std::to_string(rank);
  if (in.truth) line += " recovery_error=" + fmt(recovery_error(in.truth->truth_basis, basis));
  return line;
}

std::string mode_cluster(const ExperimentConfig& c) {
  const Input in = load_input(c);
  int clusters = c.num_clusters;
  if (clusters == 0) clusters = std::get<UnionOfSubspaces>(c.model->inliers).m;
  const PreprocessedData pre = preprocess(in.data, c.method.isearch.preprocess);
  const DirectionSet dirs = c.method.isearch.accept_unconverged
                                ? solve_all_partial(pre.reduced, c.method.isearch.solver)
                                : solve_all(pre.reduced, c.method.isearch.solver);
  write_stats(c, dirs);
  RandomSource rng(derive_seed(c.seed, 0xc1u));
  const Clustering result = spectral_cluster(affinity_from_directions(pre, dirs), clusters, rng);
  if (!c.io.labels.empty()) write_labels(c.io.labels, result.labels);
  std::string line = "cluster: M2=" + std::to_string(in.data.cols()) +
                     " L=" + std::to_string(clusters);
  if (in.truth && in.truth->n_o() == 0) {
    line += " clustering_error=" + fmt(clustering_error(in.truth->group, result.labels));
  }
  return line;
}

std::vector<std::filesystem::path> cluster_files(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  const std::regex pattern("cluster_([0-9]+)\\.csv");
  std::map<int, std::filesystem::path> found;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, pattern)) found[std::stoi(m[1].str())] = entry.path();
  }
  if (found.empty()) throw IoError("no cluster_<k>.csv files in " + dir.string());
  std::vector<std::filesystem::path> out;
  for (auto& [k, p] : found) out.push_back(p);
  return out;
}

std::string mode_correct(const ExperimentConfig& c) {
  std::vector<DataMatrix> clusters;
  for (const auto& p : cluster_files(c.io.clusters)) clusters.push_back(read_matrix_csv(p));
  const std::vector<int> ranks(clusters.size(), *c.rank);
  CorrectionOptions opts;
  opts.isearch = isearch_options(c, *c.rank);
  const CorrectionResult res = correct_clusters(clusters, ranks, opts);
  if (!c.io.labels.empty()) write_labels(c.io.labels, res.relabeled.labels);
  int moved = 0;
  std::size_t pos = 0;
  int total = 0;
  for (std::size_t k = 0; k < clusters.size(); ++k) {
    for (Eigen::Index j = 0; j < clusters[k].cols(); ++j, ++pos, ++total) {
      if (res.relabeled.labels[pos] != static_cast<int>(k)) ++moved;
    }
  }
  return "correct: clusters=" + std::to_string(clusters.size()) +
         " columns=" + std::to_string(total) + " moved=" + std::to_string(moved);
}

std::string mode_sweep(const ExperimentConfig& c) {
  const SweepSpec spec = c.sweep_spec();
  std::ofstream trace;
  if (!c.io.trace.empty()) {
    trace.open(c.io.trace);
    if (!trace) throw IoError("cannot write " + c.io.trace);
  }
  TrialSink sink;
  if (trace.is_open()) {
    sink = [&](const TrialRecord& rec, std::size_t cell, std::size_t t) {
      nlohmann::json j = to_json(rec);
      j["cell"] = cell;
      j["trial"] = t;
      trace << j.dump() << '\n';
    };
  }
  const SweepGrid grid = run_sweep(spec, c.seed, sink);
  const std::string csv = format_sweep_csv(grid, c.extended_csv);
  if (!c.io.grid.empty()) write_text(c.io.grid, csv);
  double mean = 0.0;
  for (const auto& cell : grid.cells) mean += cell.probability;
  mean /= static_cast<double>(grid.cells.size());
  std::string line = "sweep: cells=" + std::to_string(grid.cells.size()) +
                     " trials_per_cell=" + std::to_string(grid.trials_per_cell) +
                     " mean_probability=" + fmt(mean) + " probabilities=";
  for (std::size_t i = 0; i < grid.cells.size(); ++i) {
    line += (i ? "," : "") + fmt(grid.cells[i].probability);
  }
  return line;
}

}  // namespace

const char* to_string(Mode m) {
  for (const auto& [name, mode] : mode_table()) {
    if (mode == m) return name.c_str();
  }
  return "unknown";
}

Mode mode_from_string(const std::string& name) {
  const auto it = mode_table().find(name);
  if (it == mode_table().end()) throw InvalidSpec("mode", "unknown mode '" + name + "'");
  return it->second;
}

void ExperimentConfig::validate() const {
  if (threads < 0) throw InvalidSpec("threads", "must be >= 0");
  if (rank && *rank < 1) throw InvalidSpec("method.rank", "must be >= 1");
  if (model) {
    try {
      model->validate();
    } catch (const InvalidSpec& e) {
      throw InvalidSpec("model." + e.field(), bare_message(e));
    }
    if (rank && *rank > model->M1) throw InvalidSpec("method.rank", "exceeds model.M1");
  }
  const bool needs_input = mode == Mode::Run || mode == Mode::Cop || mode == Mode::Pca ||
                           mode == Mode::Cluster;
  if (needs_input && io.data.empty() && !model) {
    throw InvalidSpec("io.data", "either io.data or model is required");
  }
  if ((mode == Mode::Run || mode == Mode::Pca) && !rank && (!model || !io.data.empty())) {
    throw InvalidSpec("method.rank", "required when the data is not generated from a model");
  }
  switch (mode) {
    case Mode::Gen:
      if (!model) throw InvalidSpec("model", "required for gen");
      if (io.out_dir.empty()) throw InvalidSpec("io.out_dir", "required for gen");
      break;
    case Mode::Cluster:
      if (num_clusters < 0) throw InvalidSpec("num_clusters", "must be >= 1");
      if (num_clusters == 0 &&
          (!model || !std::holds_alternative<UnionOfSubspaces>(model->inliers))) {
        throw InvalidSpec("num_clusters", "required unless the model has union inliers");
      }
      break;
    case Mode::Correct:
      if (io.clusters.empty()) throw InvalidSpec("io.clusters", "required for correct");
      if (!rank) throw InvalidSpec("method.rank", "required for correct");
      break;
    case Mode::Sweep:
      if (!model) throw InvalidSpec("model", "required for sweep");
      sweep_spec().validate();
      break;
    default:
      break;
  }
}

SweepSpec ExperimentConfig::sweep_spec() const {
  SweepSpec s;
  if (model) s.base = *model;
  s.axes = axes;
  s.methods = methods;
  s.trials_per_cell = trials_per_cell;
  s.metric = metric;
  s.trial = method;
  return s;
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["mode"] = to_string(c.mode);
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  if (c.model) j["model"] = to_json(*c.model);
  nlohmann::json method = to_json(c.method);
  if (c.rank) method["rank"] = *c.rank;
  j["method"] = method;
  if (c.num_clusters) j["num_clusters"] = c.num_clusters;
  if (c.mode == Mode::Sweep) {
    const nlohmann::json s = to_json(c.sweep_spec());
    j["sweep"] = {{"axes", s.at("axes")},
                  {"methods", s.at("methods")},
                  {"trials_per_cell", c.trials_per_cell},
                  {"metric", s.at("metric")},
                  {"extended", c.extended_csv}};
  }
  nlohmann::json io = nlohmann::json::object();
  auto put = [&](const char* key, const std::string& v) {
    if (!v.empty()) io[key] = v;
  };
  put("data", c.io.data);
  put("clusters", c.io.clusters);
  put("out_dir", c.io.out_dir);
  put("scores", c.io.scores);
  put("basis", c.io.basis);
  put("labels", c.io.labels);
  put("grid", c.io.grid);
  put("trace", c.io.trace);
  put("solver_stats", c.io.solver_stats);
  j["io"] = io;
  return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidSpec("config", "expected a JSON object");
  static const std::vector<std::string> known = {"mode",         "seed",  "threads", "model",
                                                 "method",       "sweep", "io",      "num_clusters",
                                                 "description"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw InvalidSpec(key, "unknown field");
    }
  }
  ExperimentConfig c;
  if (!j.contains("mode") || !j.at("mode").is_string()) {
    throw InvalidSpec("mode", "required string");
  }
  c.mode = mode_from_string(j.at("mode").get<std::string>());
  read_value(j, "seed", "", c.seed);
  read_value(j, "threads", "", c.threads);
  read_value(j, "num_clusters", "", c.num_clusters);
  if (j.contains("model")) {
    try {
      c.model = model_from_json(j.at("model"));
    } catch (const InvalidSpec& e) {
      throw InvalidSpec("model." + e.field(), bare_message(e));
    }
  }
  if (j.contains("method")) {
    const auto& m = j.at("method");
    c.method = trial_options_from_json(m);
    if (m.contains("rank")) {
      int r = 0;
      read_value(m, "rank", "method", r);
      c.rank = r;
    }
  }
  if (j.contains("sweep")) {
    const auto& s = j.at("sweep");
    if (!s.is_object()) throw InvalidSpec("sweep", "expected an object");
    nlohmann::json spec = s;
    spec.erase("extended");
    if (c.model) spec["model"] = to_json(*c.model);
    if (j.contains("method")) spec["method"] = j.at("method");
    const SweepSpec parsed = sweep_from_json(spec);
    c.axes = parsed.axes;
    c.methods = parsed.methods;
    c.trials_per_cell = parsed.trials_per_cell;
    c.metric = parsed.metric;
    read_value(s, "extended", "sweep", c.extended_csv);
  }
  if (j.contains("io")) {
    const auto& io = j.at("io");
    if (!io.is_object()) throw InvalidSpec("io", "expected an object");
    read_value(io, "data", "io", c.io.data);
    read_value(io, "clusters", "io", c.io.clusters);
    read_value(io, "out_dir", "io", c.io.out_dir);
    read_value(io, "scores", "io", c.io.scores);
    read_value(io, "basis", "io", c.io.basis);
    read_value(io, "labels", "io", c.io.labels);
    read_value(io, "grid", "io", c.io.grid);
    read_value(io, "trace", "io", c.io.trace);
    read_value(io, "solver_stats", "io", c.io.solver_stats);
  }
  c.validate();
  return c;
}

nlohmann::json error_json(const std::exception& e) {
  nlohmann::json j;
  if (const auto* spec = dynamic_cast<const InvalidSpec*>(&e)) {
    j["error"] = "InvalidSpec";
    j["field"] = spec->field();
    j["message"] = bare_message(*spec);
  } else if (const auto* err = dynamic_cast<const Error*>(&e)) {
    j["error"] = to_string(err->kind());
    j["message"] = err->what();
  } else if (dynamic_cast<const nlohmann::json::exception*>(&e)) {
    j["error"] = "InvalidSpec";
    j["field"] = "config";
    j["message"] = e.what();
  } else {
    j["error"] = "Internal";
    j["message"] = e.what();
  }
  return j;
}

int run_experiment(const ExperimentConfig& c, std::ostream& out, std::ostream& err) {
  try {
    c.validate();
  } catch (const std::exception& e) {
    err << error_json(e).dump() << '\n';
    return 2;
  }
  try {
    if (c.threads > 0) omp_set_num_threads(c.threads);
    std::string line;
    switch (c.mode) {
      case Mode::Gen: line = mode_gen(c); break;
      case Mode::Run: line = mode_run(c); break;
      case Mode::Cop: line = mode_cop(c); break;
      case Mode::Pca: line = mode_pca(c); break;
      case Mode::Cluster: line = mode_cluster(c); break;
      case Mode::Correct: line = mode_correct(c); break;
      case Mode::Sweep: line = mode_sweep(c); break;
    }
    out << line << '\n';
    return 0;
  } catch (const InvalidSpec& e) {
    err << error_json(e).dump() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << error_json(e).dump() << '\n';
    return 1;
  }
}

int run_experiment_config(const std::filesystem::path& path, std::ostream& out,
                          std::ostream& err) {
  ExperimentConfig config;
  try {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    const nlohmann::json j = nlohmann::json::parse(in);
    config = config_from_json(j);
  } catch (const IoError& e) {
    err << error_json(e).dump() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << error_json(e).dump() << '\n';
    return 2;
  }
  return run_experiment(config, out, err);
}

}  // namespace isearch
