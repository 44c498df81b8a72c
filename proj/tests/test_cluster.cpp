#include <doctest.h>

#include <cmath>
#include <numeric>

#include "isearch/cluster.hpp"
#include "isearch/errors.hpp"
#include "isearch/evalkit.hpp"
#include "isearch/synthgen.hpp"
#include "oracles.hpp"

using namespace isearch;

namespace {

Dataset union_data(int m, int d, int per, int M1, std::uint64_t seed) {
  ModelSpec s;
  s.M1 = M1;
  s.n_i = m * per;
  s.n_o = 0;
  s.inliers = UnionOfSubspaces{m, d, std::vector<int>(static_cast<std::size_t>(m), per)};
  RandomSource rng(seed);
  return gen_dataset(s, rng);
}

AffinityMatrix affinity_of(const DataMatrix& d) {
  const PreprocessedData pre = preprocess(d);
  return affinity_from_directions(pre, solve_all(pre.reduced, {}));
}

AffinityMatrix blocks(int a, int b) {
  AffinityMatrix w{Eigen::MatrixXd::Zero(a + b, a + b)};
  w.w.topLeftCorner(a, a).setOnes();
  w.w.bottomRightCorner(b, b).setOnes();
  w.w.diagonal().setZero();
  return w;
}

// Smallest principal angle between the spans of two groups, in degrees.
double min_angle_deg(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::MatrixXd qa = oracle::gram_schmidt(a);
  const Eigen::MatrixXd qb = oracle::gram_schmidt(b);
  const Eigen::MatrixXd g = qa.transpose() * qb;
  const double cos2 = oracle::jacobi_eigenvalues(g.transpose() * g).front();
  return std::acos(std::min(1.0, std::sqrt(std::max(0.0, cos2)))) * 180.0 / M_PI;
}

}  // namespace

TEST_CASE("affinity: orthonormal data has no off-diagonal weight") {
  const AffinityMatrix w = affinity_of(Eigen::MatrixXd::Identity(2, 2));
  CHECK(std::abs(w.w(0, 1)) < 1e-9);
  CHECK(w.w(0, 0) == 0.0);
}

TEST_CASE("affinity: a duplicated pair is maximally affine") {
  RandomSource rng(1);
  DataMatrix d = sample_unit_sphere(rng, 5, 12);
  d.col(7) = d.col(3);
  const AffinityMatrix w = affinity_of(d);
  for (Eigen::Index k = 0; k < d.cols(); ++k) {
    if (k == 3 || k == 7) continue;
    CHECK(w.w(3, 7) >= w.w(3, k) - 1e-9);
  }
}

TEST_CASE("affinity is symmetric, nonnegative, zero-diagonal and matches the reference") {
  const Dataset ds = union_data(3, 2, 15, 12, 2);
  const PreprocessedData pre = preprocess(ds.data);
  const DirectionSet dirs = solve_all(pre.reduced, {});
  const AffinityMatrix w = affinity_from_directions(pre, dirs);
  const AffinityMatrix ref = reference::affinity_from_directions(pre, dirs);
  CHECK((w.w - w.w.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(w.w.minCoeff() >= 0.0);
  CHECK(w.w.diagonal().cwiseAbs().maxCoeff() == 0.0);
  CHECK((w.w - ref.w).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("affinity concentrates within subspaces") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Dataset ds = union_data(2, 2, 20, 10, seed);
    const AffinityMatrix w = affinity_of(ds.data);
    double within = 0.0, cross = 0.0;
    int nw = 0, nc = 0;
    for (Eigen::Index i = 0; i < w.w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.w.cols(); ++j) {
        if (i == j) continue;
        if (ds.group[static_cast<std::size_t>(i)] == ds.group[static_cast<std::size_t>(j)]) {
          within += w.w(i, j);
          ++nw;
        } else {
          cross += w.w(i, j);
          ++nc;
        }
      }
    }
    CHECK(within / nw > 5.0 * (cross / nc));
  }
}

TEST_CASE("spectral clustering of an ideal block graph") {
  RandomSource rng(3);
  const Clustering c = spectral_cluster(blocks(4, 6), 2, rng);
  REQUIRE(c.labels.size() == 10);
  CHECK(c.num_clusters == 2);
  for (int i = 0; i < 10; ++i) CHECK(c.labels[static_cast<std::size_t>(i)] == (i < 4 ? 0 : 1));

  RandomSource prng(4);
  const auto perm = prng.permutation(10);
  AffinityMatrix p{Eigen::MatrixXd(10, 10)};
  const AffinityMatrix b = blocks(4, 6);
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      p.w(i, j) = b.w(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)]),
                      static_cast<Eigen::Index>(perm[static_cast<std::size_t>(j)]));
    }
  }
  RandomSource rng2(3);
  const Clustering cp = spectral_cluster(p, 2, rng2);
  std::vector<int> truth(10);
  for (int i = 0; i < 10; ++i) truth[static_cast<std::size_t>(i)] = perm[static_cast<std::size_t>(i)] < 4 ? 0 : 1;
  CHECK(oracle::permutation_clustering_error(truth, cp.labels) == 0.0);
}

TEST_CASE("spectral clustering edge cases") {
  RandomSource rng(5);
  AffinityMatrix w = blocks(3, 3);
  w.w.row(2).setZero();
  w.w.col(2).setZero();
  try {
    (void)spectral_cluster(w, 2, rng);
    FAIL("expected IsolatedNode");
  } catch (const IsolatedNode& e) {
    CHECK(e.index() == 2);
  }
  const Clustering one = spectral_cluster(blocks(3, 3), 1, rng);
  CHECK(std::all_of(one.labels.begin(), one.labels.end(), [](int l) { return l == 0; }));
  CHECK_THROWS_AS(spectral_cluster(blocks(2, 2), 5, rng), InvalidInput);
}

TEST_CASE("spectral clustering is deterministic per seed") {
  const Dataset ds = union_data(3, 2, 20, 12, 6);
  const AffinityMatrix w = affinity_of(ds.data);
  RandomSource a(9), b(9);
  CHECK(spectral_cluster(w, 3, a).labels == spectral_cluster(w, 3, b).labels);
}

TEST_CASE("two subspaces at >= 45 degrees cluster with at most 5% error") {
  int used = 0;
  for (std::uint64_t seed = 0; used < 10 && seed < 100; ++seed) {
    const Dataset ds = union_data(2, 2, 30, 20, seed);
    Eigen::MatrixXd g0(20, 0), g1(20, 0);
    for (std::size_t j = 0; j < ds.group.size(); ++j) {
      auto& g = ds.group[j] == 0 ? g0 : g1;
      g.conservativeResize(Eigen::NoChange, g.cols() + 1);
      g.col(g.cols() - 1) = ds.data.col(static_cast<Eigen::Index>(j));
    }
    if (min_angle_deg(g0.leftCols(2), g1.leftCols(2)) < 45.0) continue;
    ++used;
    RandomSource rng(derive_seed(seed, 1));
    const Clustering c = innovation_cluster(ds.data, 2, rng);
    CHECK(oracle::permutation_clustering_error(ds.group, c.labels) <= 0.05);
  }
  CHECK(used == 10);
}

TEST_CASE("clustering is invariant to column permutation") {
  const Dataset ds = union_data(3, 2, 20, 12, 7);
  RandomSource prng(70);
  const auto perm = prng.permutation(60);
  RandomSource a(1), b(1);
  const Clustering c1 = innovation_cluster(ds.data, 3, a);
  const Clustering c2 = innovation_cluster(select_columns(ds.data, perm), 3, b);
  std::vector<int> mapped(60);
  for (std::size_t k = 0; k < perm.size(); ++k) mapped[k] = c1.labels[perm[k]];
  CHECK(oracle::permutation_clustering_error(mapped, c2.labels) == 0.0);
}

TEST_CASE("correction: pure clusters are a fixed point, L=1 is trivial") {
  const Dataset ds = union_data(3, 2, 20, 12, 8);
  std::vector<DataMatrix> clusters(3, DataMatrix(12, 0));
  for (std::size_t j = 0; j < ds.group.size(); ++j) {
    auto& m = clusters[static_cast<std::size_t>(ds.group[j])];
    m.conservativeResize(Eigen::NoChange, m.cols() + 1);
    m.col(m.cols() - 1) = ds.data.col(static_cast<Eigen::Index>(j));
  }
  const CorrectionResult res = correct_clusters(clusters, {2, 2, 2});
  CHECK(res.bases.size() == 3);
  CHECK(res.relabeled.labels.size() == 60);
  std::size_t pos = 0;
  for (int k = 0; k < 3; ++k) {
    for (int j = 0; j < 20; ++j) CHECK(res.relabeled.labels[pos++] == k);
  }

  const CorrectionResult single = correct_clusters({clusters[0]}, {2});
  CHECK(single.bases.size() == 1);
  CHECK(single.bases[0].dim() == 2);
  CHECK(std::all_of(single.relabeled.labels.begin(), single.relabeled.labels.end(),
                    [](int l) { return l == 0; }));
}

TEST_CASE("correction repairs 25% label corruption") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Dataset ds = union_data(3, 2, 30, 20, seed);
    RandomSource rng(derive_seed(seed, 9));
    std::vector<int> noisy = ds.group;
    const auto order = rng.permutation(noisy.size());
    for (std::size_t k = 0; k < 22; ++k) {
      const std::size_t j = order[k];
      noisy[j] = (noisy[j] + 1 + static_cast<int>(rng.uniform_index(2))) % 3;
    }
    const double before = clustering_error(ds.group, noisy);
    CHECK(before >= 0.2);
    const CorrectionResult res = correct_labels(ds.data, Clustering{noisy, 3}, {2, 2, 2});
    CHECK(res.relabeled.labels.size() == noisy.size());
    CHECK(res.relabeled.num_clusters <= 3);
    CHECK(clustering_error(ds.group, res.relabeled.labels) <= 0.05);
  }
}
