#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <variant>
#include <vector>

#include <json.hpp>

#include "isearch/matstore.hpp"

namespace isearch {

// ---- inlier models ----

// Inliers uniform on U ∩ S^{M1-1}, dim U = r.
struct UniformOnSubspace {
  int r = 5;
};

// Inliers in a union of m subspaces of dimension d whose direct sum is U
// (r = m d). counts[k] inliers are drawn from subspace k.
struct UnionOfSubspaces {
  int m = 5;
  int d = 2;
  std::vector<int> counts;
};

// a_i = U s_i / ||U s_i||, s_i = w + gamma z_i with w, z_i uniform on S^{r-1}.
struct ClusteredInliers {
  int r = 5;
  double gamma = 1.0;
};

using InlierModel = std::variant<UniformOnSubspace, UnionOfSubspaces, ClusteredInliers>;

// ---- outlier models ----

struct UniformAmbient {};

enum class ClusterCenter {
  RandomDirection,  // q uniform on S^{M1-1}
  NearSubspace,     // q = [U p] h / ||[U p] h||, p uniform, h ~ N(0, I_{r+1})
};

// b_i = (q + eta v_i) / sqrt(1 + eta^2), v_i uniform on S^{M1-1}.
struct ClusteredOutliers {
  double eta = 0.1;
  ClusterCenter center = ClusterCenter::RandomDirection;
};

// Outliers uniform on U_o ∩ S^{M1-1}; U_o shares exactly intersect_dim
// dimensions with U.
struct DependentOutliers {
  int r_o = 3;
  int intersect_dim = 0;
};

// Outliers b = [U H] g / ||[U H] g||, H an orthonormal basis of a random
// extra_dim-dimensional subspace, g ~ N(0, I). Close to U by construction.
struct CloseOutliers {
  int extra_dim = 2;
};

using OutlierModel =
    std::variant<UniformAmbient, ClusteredOutliers, DependentOutliers, CloseOutliers>;

// An outlier block made of several sub-blocks (e.g. 300 unstructured + 10
// clustered). The first entry may be given by `outlier_model`; the rest are
// appended in order.
struct OutlierBlock {
  OutlierModel model;
  int count = 0;
};

struct ModelSpec {
  int M1 = 40;
  int n_i = 200;
  int n_o = 50;
  InlierModel inliers = UniformOnSubspace{5};
  OutlierModel outliers = UniformAmbient{};
  // Optional additional outlier blocks; their counts add to n_o.
  std::vector<OutlierBlock> extra_outliers;
  std::optional<double> sigma_n;  // inlier noise level

  int rank() const;              // dim U
  int total_outliers() const;    // n_o + extra block counts
  int columns() const { return n_i + total_outliers(); }
  // Throws InvalidSpec naming the offending field.
  void validate() const;
};

nlohmann::json to_json(const ModelSpec& spec);
ModelSpec model_from_json(const nlohmann::json& j);

enum class ColumnLabel : std::uint8_t { Inlier = 0, Outlier = 1 };

struct Dataset {
  DataMatrix data;               // M1 x M2, columns shuffled by `permutation`
  std::vector<ColumnLabel> labels;
  // permutation[p] = index of column p in the unshuffled block layout [B A].
  std::vector<std::size_t> permutation;
  // Union-of-subspaces membership of each (shuffled) column, -1 for outliers
  // and for inlier models without groups.
  std::vector<int> group;
  SubspaceBasis truth_basis;
  std::optional<SubspaceBasis> outlier_basis;  // U_o for dependent outliers
  ModelSpec spec;
  std::uint64_t seed = 0;

  int n_i() const;
  int n_o() const;
  std::vector<std::size_t> outlier_indices() const;
  std::vector<std::size_t> inlier_indices() const;
};

Dataset gen_dataset(const ModelSpec& spec, RandomSource& rng);

// Inlier a -> (a + sigma_n u) / (1 + sigma_n^2), u uniform on the sphere.
Dataset apply_noise(const Dataset& ds, double sigma_n, RandomSource& rng);

// SNR = ||A||_F^2 / ||E||_F^2 with unit inliers and unit noise directions.
double sigma_for_snr(double snr);

// Directory layout: data.csv, labels.csv (1 = outlier), basis.csv, meta.json.
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace isearch
