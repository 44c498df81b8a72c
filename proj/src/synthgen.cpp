#include "isearch/synthgen.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "isearch/errors.hpp"

namespace isearch {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw InvalidSpec(field, what);
}

std::vector<int> union_counts(const UnionOfSubspaces& u, int n_i) {
  if (!u.counts.empty()) return u.counts;
  std::vector<int> counts(static_cast<std::size_t>(u.m), n_i / u.m);
  for (int k = 0; k < n_i % u.m; ++k) ++counts[static_cast<std::size_t>(k)];
  return counts;
}

// Orthonormal basis of a random `dim`-dimensional subspace orthogonal to `u`.
Eigen::MatrixXd random_orthogonal_complement(RandomSource& rng,
                                             const Eigen::MatrixXd& u, int dim) {
  Eigen::MatrixXd g = sample_gaussian(rng, static_cast<int>(u.rows()), dim);
  g -= u * (u.transpose() * g);
  g -= u * (u.transpose() * g);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  return qr.householderQ() * Eigen::MatrixXd::Identity(u.rows(), dim);
}

struct InlierDraw {
  DataMatrix columns;
  std::vector<int> group;
  SubspaceBasis basis;
};

InlierDraw draw_inliers(const ModelSpec& spec, RandomSource& rng) {
  return std::visit(
      overloaded{
          [&](const UniformOnSubspace& m) {
            SubspaceBasis u = random_subspace(rng, spec.M1, m.r);
            DataMatrix a(spec.M1, spec.n_i);
            if (spec.n_i > 0) a = u.matrix() * sample_unit_sphere(rng, m.r, spec.n_i);
            return InlierDraw{std::move(a), std::vector<int>(spec.n_i, -1), std::move(u)};
          },
          [&](const UnionOfSubspaces& m) {
            const std::vector<int> counts = union_counts(m, spec.n_i);
            std::vector<SubspaceBasis> parts;
            Eigen::MatrixXd stacked(spec.M1, m.m * m.d);
            // The direct sum must have full dimension m d; continuous draws
            // satisfy this almost surely, redraw otherwise.
            for (int attempt = 0;; ++attempt) {
              parts.clear();
              for (int k = 0; k < m.m; ++k) {
                parts.push_back(random_subspace(rng, spec.M1, m.d));
                stacked.middleCols(k * m.d, m.d) = parts.back().matrix();
              }
              Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked);
              if (svd.singularValues().minCoeff() > 1e-6) break;
              if (attempt > 100) throw InvalidSpec("inliers", "degenerate union of subspaces");
            }
            DataMatrix a(spec.M1, spec.n_i);
            std::vector<int> group;
            Eigen::Index col = 0;
            for (int k = 0; k < m.m; ++k) {
              for (int i = 0; i < counts[static_cast<std::size_t>(k)]; ++i) {
                // Each inlier lies in exactly one U_k: redraw the (probability
                // zero) points that nearly fall into another component.
                Vector v;
                for (int attempt = 0;; ++attempt) {
                  v = parts[static_cast<std::size_t>(k)].matrix() *
                      sample_unit_sphere(rng, m.d, 1).col(0);
                  bool ok = true;
                  for (int other = 0; other < m.m && ok; ++other) {
                    if (other == k) continue;
                    const auto& uo = parts[static_cast<std::size_t>(other)].matrix();
                    ok = (v - uo * (uo.transpose() * v)).norm() >= 0.1;
                  }
                  if (ok || attempt > 1000) break;
                }
                a.col(col++) = v;
                group.push_back(k);
              }
            }
            return InlierDraw{std::move(a), std::move(group),
                              SubspaceBasis::from_span(stacked)};
          },
          [&](const ClusteredInliers& m) {
            SubspaceBasis u = random_subspace(rng, spec.M1, m.r);
            const Vector w = sample_unit_sphere(rng, m.r, 1).col(0);
            DataMatrix a(spec.M1, spec.n_i);
            for (Eigen::Index i = 0; i < spec.n_i; ++i) {
              Vector s;
              do {
                s = w + m.gamma * sample_unit_sphere(rng, m.r, 1).col(0);
              } while (s.norm() < 1e-12);
              const Vector v = u.matrix() * s;
              a.col(i) = v / v.norm();
            }
            return InlierDraw{std::move(a), std::vector<int>(spec.n_i, -1), std::move(u)};
          },
      },
      spec.inliers);
}

struct OutlierDraw {
  DataMatrix columns;
  std::optional<SubspaceBasis> basis;
};

OutlierDraw draw_outliers(const OutlierModel& model, int count, const ModelSpec& spec,
                          const SubspaceBasis& truth, RandomSource& rng) {
  const int M1 = spec.M1;
  if (count == 0) return {DataMatrix(M1, 0), std::nullopt};
  return std::visit(
      overloaded{
          [&](const UniformAmbient&) {
            return OutlierDraw{sample_unit_sphere(rng, M1, count), std::nullopt};
          },
          [&](const ClusteredOutliers& m) {
            Vector q;
            if (m.center == ClusterCenter::RandomDirection) {
              q = sample_unit_sphere(rng, M1, 1).col(0);
            } else {
              Eigen::MatrixXd up(M1, truth.dim() + 1);
              up.leftCols(truth.dim()) = truth.matrix();
              up.col(truth.dim()) = sample_unit_sphere(rng, M1, 1).col(0);
              const Vector h = sample_gaussian(rng, truth.dim() + 1, 1).col(0);
              q = up * h;
              q /= q.norm();
            }
            const DataMatrix v = sample_unit_sphere(rng, M1, count);
            DataMatrix b = (v * m.eta).colwise() + q;
            b /= std::sqrt(1.0 + m.eta * m.eta);
            return OutlierDraw{std::move(b), std::nullopt};
          },
          [&](const DependentOutliers& m) {
            Eigen::MatrixXd uo(M1, m.r_o);
            uo.leftCols(m.intersect_dim) = truth.matrix().leftCols(m.intersect_dim);
            uo.rightCols(m.r_o - m.intersect_dim) =
                random_orthogonal_complement(rng, truth.matrix(), m.r_o - m.intersect_dim);
            SubspaceBasis basis = SubspaceBasis::from_span(uo);
            DataMatrix b = basis.matrix() * sample_unit_sphere(rng, m.r_o, count);
            return OutlierDraw{std::move(b), std::move(basis)};
          },
          [&](const CloseOutliers& m) {
            const SubspaceBasis h = random_subspace(rng, M1, m.extra_dim);
            Eigen::MatrixXd uh(M1, truth.dim() + m.extra_dim);
            uh.leftCols(truth.dim()) = truth.matrix();
            uh.rightCols(m.extra_dim) = h.matrix();
            const DataMatrix g = sample_gaussian(rng, truth.dim() + m.extra_dim, count);
            return OutlierDraw{normalize_columns_unit(uh * g), std::nullopt};
          },
      },
      model);
}

nlohmann::json inliers_to_json(const InlierModel& m) {
  return std::visit(
      overloaded{
          [](const UniformOnSubspace& u) {
            return nlohmann::json{{"type", "uniform"}, {"r", u.r}};
          },
          [](const UnionOfSubspaces& u) {
            nlohmann::json j{{"type", "union"}, {"m", u.m}, {"d", u.d}};
            if (!u.counts.empty()) j["counts"] = u.counts;
            return j;
          },
          [](const ClusteredInliers& c) {
            return nlohmann::json{{"type", "clustered"}, {"r", c.r}, {"gamma", c.gamma}};
          },
      },
      m);
}

nlohmann::json outliers_to_json(const OutlierModel& m) {
  return std::visit(
      overloaded{
          [](const UniformAmbient&) { return nlohmann::json{{"type", "uniform"}}; },
          [](const ClusteredOutliers& c) {
            return nlohmann::json{
                {"type", "clustered"},
                {"eta", c.eta},
                {"center", c.center == ClusterCenter::RandomDirection ? "random"
                                                                       : "near_subspace"}};
          },
          [](const DependentOutliers& d) {
            return nlohmann::json{
                {"type", "dependent"}, {"r_o", d.r_o}, {"intersect_dim", d.intersect_dim}};
          },
          [](const CloseOutliers& c) {
            return nlohmann::json{{"type", "close"}, {"extra_dim", c.extra_dim}};
          },
      },
      m);
}

template <class T>
T get_field(const nlohmann::json& j, const std::string& key, const std::string& path,
            std::optional<T> fallback = std::nullopt) {
  if (!j.is_object()) throw InvalidSpec(path, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) {
    if (fallback) return *fallback;
    throw InvalidSpec(path.empty() ? key : path + "." + key, "missing field");
  }
  try {
    if constexpr (std::is_same_v<T, int>) {
      if (!it->is_number_integer()) throw std::invalid_argument("not an integer");
    } else if constexpr (std::is_same_v<T, double>) {
      if (!it->is_number()) throw std::invalid_argument("not a number");
    }
    return it->get<T>();
  } catch (const std::exception& e) {
    throw InvalidSpec(path.empty() ? key : path + "." + key,
                      std::string("bad value: ") + e.what());
  }
}

InlierModel inliers_from_json(const nlohmann::json& j) {
  const auto type = get_field<std::string>(j, "type", "inliers");
  if (type == "uniform") return UniformOnSubspace{get_field<int>(j, "r", "inliers")};
  if (type == "union") {
    UnionOfSubspaces u{get_field<int>(j, "m", "inliers"), get_field<int>(j, "d", "inliers"), {}};
    if (j.contains("counts")) {
      u.counts = get_field<std::vector<int>>(j, "counts", "inliers");
    }
    return u;
  }
  if (type == "clustered") {
    return ClusteredInliers{get_field<int>(j, "r", "inliers"),
                            get_field<double>(j, "gamma", "inliers")};
  }
  throw InvalidSpec("inliers.type", "unknown inlier model '" + type + "'");
}

OutlierModel outliers_from_json(const nlohmann::json& j, const std::string& path) {
  const auto type = get_field<std::string>(j, "type", path);
  if (type == "uniform") return UniformAmbient{};
  if (type == "clustered") {
    ClusteredOutliers c{get_field<double>(j, "eta", path), ClusterCenter::RandomDirection};
    const auto center = get_field<std::string>(j, "center", path, std::string("random"));
    if (center == "near_subspace") {
      c.center = ClusterCenter::NearSubspace;
    } else if (center != "random") {
      throw InvalidSpec(path + ".center", "expected 'random' or 'near_subspace'");
    }
    return c;
  }
  if (type == "dependent") {
    return DependentOutliers{get_field<int>(j, "r_o", path),
                             get_field<int>(j, "intersect_dim", path)};
  }
  if (type == "close") return CloseOutliers{get_field<int>(j, "extra_dim", path, 2)};
  throw InvalidSpec(path + ".type", "unknown outlier model '" + type + "'");
}

void validate_outlier_model(const OutlierModel& model, int r, int M1,
                            const std::string& path) {
  std::visit(overloaded{
                 [](const UniformAmbient&) {},
                 [&](const ClusteredOutliers& c) {
                   require(c.eta > 0.0, path + ".eta", "must be positive");
                 },
                 [&](const DependentOutliers& d) {
                   require(d.r_o >= 1, path + ".r_o", "must be >= 1");
                   require(d.r_o <= M1, path + ".r_o", "exceeds ambient dimension M1");
                   require(d.intersect_dim >= 0, path + ".intersect_dim", "must be >= 0");
                   require(d.intersect_dim <= std::min(r, d.r_o), path + ".intersect_dim",
                           "exceeds min(r, r_o)");
                   require(d.intersect_dim < d.r_o, path + ".intersect_dim",
                           "U_o would lie inside U");
                   require(r + d.r_o - d.intersect_dim <= M1, path + ".r_o",
                           "dim(U + U_o) exceeds M1");
                 },
                 [&](const CloseOutliers& c) {
                   require(c.extra_dim >= 1, path + ".extra_dim", "must be >= 1");
                   require(r + c.extra_dim <= M1, path + ".extra_dim",
                           "r + extra_dim exceeds M1");
                 },
             },
             model);
}

}  // namespace

int ModelSpec::rank() const {
  return std::visit(overloaded{
                        [](const UniformOnSubspace& u) { return u.r; },
                        [](const UnionOfSubspaces& u) { return u.m * u.d; },
                        [](const ClusteredInliers& c) { return c.r; },
                    },
                    inliers);
}

int ModelSpec::total_outliers() const {
  int total = n_o;
  for (const auto& block : extra_outliers) total += block.count;
  return total;
}

void ModelSpec::validate() const {
  require(M1 >= 1, "M1", "must be >= 1");
  require(n_i >= 0, "n_i", "must be >= 0");
  require(n_o >= 0, "n_o", "must be >= 0");
  for (std::size_t b = 0; b < extra_outliers.size(); ++b) {
    require(extra_outliers[b].count >= 0,
            "extra_outliers[" + std::to_string(b) + "].count", "must be >= 0");
  }
  require(columns() >= 1, "n_i", "dataset must have at least one column");
  const int r = rank();
  std::visit(overloaded{
                 [&](const UniformOnSubspace& u) {
                   require(u.r >= 1, "inliers.r", "must be >= 1");
                   require(u.r <= M1, "inliers.r", "exceeds ambient dimension M1");
                 },
                 [&](const UnionOfSubspaces& u) {
                   require(u.m >= 1, "inliers.m", "must be >= 1");
                   require(u.d >= 1, "inliers.d", "must be >= 1");
                   require(u.m * u.d <= M1, "inliers.m", "m * d exceeds M1");
                   if (!u.counts.empty()) {
                     require(static_cast<int>(u.counts.size()) == u.m, "inliers.counts",
                             "needs one count per subspace");
                     int sum = 0;
                     for (int c : u.counts) {
                       require(c >= 0, "inliers.counts", "counts must be >= 0");
                       sum += c;
                     }
                     require(sum == n_i, "inliers.counts", "counts must sum to n_i");
                   }
                 },
                 [&](const ClusteredInliers& c) {
                   require(c.r >= 1, "inliers.r", "must be >= 1");
                   require(c.r <= M1, "inliers.r", "exceeds ambient dimension M1");
                   require(c.gamma > 0.0, "inliers.gamma", "must be positive");
                 },
             },
             inliers);
  validate_outlier_model(outliers, r, M1, "outliers");
  for (std::size_t b = 0; b < extra_outliers.size(); ++b) {
    validate_outlier_model(extra_outliers[b].model, r, M1,
                           "extra_outliers[" + std::to_string(b) + "].model");
  }
  if (sigma_n) require(*sigma_n >= 0.0 && std::isfinite(*sigma_n), "sigma_n", "must be >= 0");
}

nlohmann::json to_json(const ModelSpec& spec) {
  nlohmann::json j{{"M1", spec.M1},
                   {"n_i", spec.n_i},
                   {"n_o", spec.n_o},
                   {"inliers", inliers_to_json(spec.inliers)},
                   {"outliers", outliers_to_json(spec.outliers)}};
  if (!spec.extra_outliers.empty()) {
    nlohmann::json blocks = nlohmann::json::array();
    for (const auto& b : spec.extra_outliers) {
      blocks.push_back({{"count", b.count}, {"model", outliers_to_json(b.model)}});
    }
    j["extra_outliers"] = blocks;
  }
  if (spec.sigma_n) j["sigma_n"] = *spec.sigma_n;
  return j;
}

ModelSpec model_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidSpec("model", "expected an object");
  ModelSpec spec;
  spec.M1 = get_field<int>(j, "M1", "");
  spec.n_i = get_field<int>(j, "n_i", "");
  spec.n_o = get_field<int>(j, "n_o", "", 0);
  if (j.contains("inliers")) spec.inliers = inliers_from_json(j.at("inliers"));
  if (j.contains("outliers")) spec.outliers = outliers_from_json(j.at("outliers"), "outliers");
  if (j.contains("extra_outliers")) {
    const auto& blocks = j.at("extra_outliers");
    if (!blocks.is_array()) throw InvalidSpec("extra_outliers", "expected an array");
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const std::string path = "extra_outliers[" + std::to_string(b) + "]";
      spec.extra_outliers.push_back(
          {outliers_from_json(blocks[b].at("model"), path + ".model"),
           get_field<int>(blocks[b], "count", path)});
    }
  }
  if (j.contains("sigma_n") && j.contains("snr")) {
    throw InvalidSpec("snr", "give either sigma_n or snr, not both");
  }
  if (j.contains("sigma_n")) spec.sigma_n = get_field<double>(j, "sigma_n", "");
  if (j.contains("snr")) {
    const double snr = get_field<double>(j, "snr", "");
    if (!(snr > 0.0)) throw InvalidSpec("snr", "must be positive");
    spec.sigma_n = sigma_for_snr(snr);
  }
  spec.validate();
  return spec;
}

int Dataset::n_i() const {
  return static_cast<int>(std::count(labels.begin(), labels.end(), ColumnLabel::Inlier));
}

int Dataset::n_o() const { return static_cast<int>(labels.size()) - n_i(); }

std::vector<std::size_t> Dataset::outlier_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == ColumnLabel::Outlier) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> Dataset::inlier_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == ColumnLabel::Inlier) out.push_back(i);
  }
  return out;
}

Dataset gen_dataset(const ModelSpec& spec, RandomSource& rng) {
  spec.validate();
  const std::uint64_t seed = rng.seed();
  InlierDraw inl = draw_inliers(spec, rng);

  const int n_o = spec.total_outliers();
  DataMatrix blocks(spec.M1, n_o + spec.n_i);
  std::optional<SubspaceBasis> outlier_basis;
  int filled = 0;
  auto add_block = [&](const OutlierModel& model, int count) {
    OutlierDraw o = draw_outliers(model, count, spec, inl.basis, rng);
    blocks.middleCols(filled, count) = o.columns;
    filled += count;
    if (o.basis && !outlier_basis) outlier_basis = std::move(o.basis);
  };
  add_block(spec.outliers, spec.n_o);
  for (const auto& block : spec.extra_outliers) add_block(block.model, block.count);
  blocks.rightCols(spec.n_i) = inl.columns;

  Dataset ds;
  ds.spec = spec;
  ds.seed = seed;
  ds.truth_basis = std::move(inl.basis);
  ds.outlier_basis = std::move(outlier_basis);
  ds.permutation = rng.permutation(static_cast<std::size_t>(blocks.cols()));
  ds.data = select_columns(blocks, ds.permutation);
  ds.labels.resize(ds.permutation.size());
  ds.group.resize(ds.permutation.size());
  for (std::size_t p = 0; p < ds.permutation.size(); ++p) {
    const std::size_t src = ds.permutation[p];
    const bool outlier = src < static_cast<std::size_t>(n_o);
    ds.labels[p] = outlier ? ColumnLabel::Outlier : ColumnLabel::Inlier;
    ds.group[p] = outlier ? -1 : inl.group[src - static_cast<std::size_t>(n_o)];
  }
  if (spec.sigma_n && *spec.sigma_n > 0.0) return apply_noise(ds, *spec.sigma_n, rng);
  return ds;
}

Dataset apply_noise(const Dataset& ds, double sigma_n, RandomSource& rng) {
  if (!(sigma_n >= 0.0)) throw InvalidInput("apply_noise: sigma_n must be >= 0");
  Dataset out = ds;
  out.spec.sigma_n = sigma_n;
  if (sigma_n == 0.0) return out;
  const double scale = 1.0 / (1.0 + sigma_n * sigma_n);
  for (std::size_t p = 0; p < out.labels.size(); ++p) {
    if (out.labels[p] != ColumnLabel::Inlier) continue;
    const auto col = static_cast<Eigen::Index>(p);
    const Vector u = sample_unit_sphere(rng, static_cast<int>(out.data.rows()), 1).col(0);
    out.data.col(col) = (out.data.col(col) + sigma_n * u) * scale;
  }
  return out;
}

double sigma_for_snr(double snr) {
  if (!(snr > 0.0)) throw InvalidInput("sigma_for_snr: snr must be positive");
  return 1.0 / std::sqrt(snr);
}

void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_matrix_csv(dir / "data.csv", ds.data);
  write_matrix_csv(dir / "basis.csv", ds.truth_basis.matrix());
  {
    std::ofstream labels(dir / "labels.csv");
    if (!labels) throw IoError("cannot write labels.csv");
    for (auto l : ds.labels) labels << static_cast<int>(l) << '\n';
  }
  nlohmann::json meta{{"model", to_json(ds.spec)},
                      {"seed", ds.seed},
                      {"permutation", ds.permutation},
                      {"group", ds.group}};
  std::ofstream out(dir / "meta.json");
  if (!out) throw IoError("cannot write meta.json");
  out << meta.dump(2) << '\n';
}

Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset ds;
  ds.data = read_matrix_csv(dir / "data.csv");
  ds.truth_basis = SubspaceBasis(read_matrix_csv(dir / "basis.csv"));
  std::ifstream labels(dir / "labels.csv");
  if (!labels) throw IoError("cannot open labels.csv");
  int v = 0;
  while (labels >> v) ds.labels.push_back(v ? ColumnLabel::Outlier : ColumnLabel::Inlier);
  if (ds.labels.size() != static_cast<std::size_t>(ds.data.cols())) {
    throw IoError("labels.csv length does not match data.csv columns");
  }
  std::ifstream meta_in(dir / "meta.json");
  if (meta_in) {
    const auto meta = nlohmann::json::parse(meta_in);
    ds.spec = model_from_json(meta.at("model"));
    ds.seed = meta.value("seed", std::uint64_t{0});
    ds.permutation = meta.value("permutation", std::vector<std::size_t>{});
    ds.group = meta.value("group", std::vector<int>{});
  }
  return ds;
}

}  // namespace isearch
