#include "isearch/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

namespace isearch {

namespace {

void check_shapes(const PreprocessedData& pre, const DirectionSet& dirs) {
  if (dirs.directions.rows() != pre.reduced.rows() ||
      dirs.directions.cols() != pre.reduced.cols()) {
    throw InvalidInput("affinity: direction set does not match the data");
  }
}

void symmetrize(Eigen::MatrixXd& w) {
  const Eigen::Index n = w.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    w(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double s = w(i, j) + w(j, i);
      w(i, j) = s;
      w(j, i) = s;
    }
  }
}

double squared_distance(const Eigen::MatrixXd& x, Eigen::Index row, const Eigen::MatrixXd& centers,
                        Eigen::Index k) {
  return (x.row(row) - centers.row(k)).squaredNorm();
}

struct KMeansRun {
  std::vector<int> labels;
  double inertia = std::numeric_limits<double>::infinity();
};

KMeansRun kmeans_once(const Eigen::MatrixXd& x, int k, RandomSource& rng, int max_iters) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd centers(k, x.cols());
  // k-means++ seeding
  centers.row(0) = x.row(static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(n))));
  Vector best = Vector::Constant(n, std::numeric_limits<double>::infinity());
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      best(i) = std::min(best(i), squared_distance(x, i, centers, c - 1));
      total += best(i);
    }
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        target -= best(i);
        if (target < 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
    }
    centers.row(c) = x.row(pick);
  }

  KMeansRun run;
  run.labels.assign(static_cast<std::size_t>(n), -1);
  for (int it = 0; it < max_iters; ++it) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int arg = 0;
      double dist = squared_distance(x, i, centers, 0);
      for (int c = 1; c < k; ++c) {
        const double dc = squared_distance(x, i, centers, c);
        if (dc < dist) {
          dist = dc;
          arg = c;
        }
      }
      if (run.labels[static_cast<std::size_t>(i)] != arg) {
        run.labels[static_cast<std::size_t>(i)] = arg;
        changed = true;
      }
    }
    if (!changed) break;
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, x.cols());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = run.labels[static_cast<std::size_t>(i)];
      sums.row(c) += x.row(i);
      ++counts[static_cast<std::size_t>(c)];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centers.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
        continue;
      }
      // Empty cluster: move its center to the point farthest from its own.
      Eigen::Index far = 0;
      double far_d = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double di = squared_distance(x, i, centers, run.labels[static_cast<std::size_t>(i)]);
        if (di > far_d) {
          far_d = di;
          far = i;
        }
      }
      centers.row(c) = x.row(far);
      run.labels[static_cast<std::size_t>(far)] = c;
    }
  }
  run.inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    run.inertia += squared_distance(x, i, centers, run.labels[static_cast<std::size_t>(i)]);
  }
  return run;
}

std::vector<int> renumber(const std::vector<int>& labels, int k) {
  std::vector<int> map(static_cast<std::size_t>(k), -1);
  int next = 0;
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    int& m = map[static_cast<std::size_t>(labels[i])];
    if (m < 0) m = next++;
    out[i] = m;
  }
  return out;
}

}  // namespace

AffinityMatrix affinity_from_directions(const PreprocessedData& pre, const DirectionSet& dirs) {
  check_shapes(pre, dirs);
  const Eigen::Index m = pre.reduced.cols();
  AffinityMatrix out;
  out.w.resize(m, m);
  constexpr Eigen::Index kBlock = 128;
  const Eigen::Index blocks = (m + kBlock - 1) / kBlock;
#pragma omp parallel for schedule(static)
  for (Eigen::Index b = 0; b < blocks; ++b) {
    const Eigen::Index first = b * kBlock;
    const Eigen::Index n = std::min(kBlock, m - first);
    out.w.middleCols(first, n).noalias() =
        dirs.directions.transpose() * pre.reduced.middleCols(first, n);
  }
  out.w = out.w.cwiseAbs();
  symmetrize(out.w);
  return out;
}

namespace reference {

AffinityMatrix affinity_from_directions(const PreprocessedData& pre, const DirectionSet& dirs) {
  check_shapes(pre, dirs);
  const Eigen::Index m = pre.reduced.cols();
  AffinityMatrix out;
  out.w.resize(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      out.w(i, j) = std::abs(dirs.directions.col(i).dot(pre.reduced.col(j)));
    }
  }
  symmetrize(out.w);
  return out;
}

}  // namespace reference

Clustering spectral_cluster(const AffinityMatrix& aff, int num_clusters, RandomSource& rng,
                            const SpectralOptions& opts) {
  const Eigen::MatrixXd& w = aff.w;
  const Eigen::Index n = w.rows();
  if (w.cols() != n || n < 1) throw InvalidInput("spectral_cluster: affinity must be square");
  if (num_clusters < 1 || num_clusters > n) {
    throw InvalidInput("spectral_cluster: need 1 <= L <= M2");
  }
  if (opts.restarts < 1) throw InvalidInput("spectral_cluster: restarts must be >= 1");
  Clustering out;
  out.num_clusters = num_clusters;
  if (num_clusters == 1) {
    out.labels.assign(static_cast<std::size_t>(n), 0);
    return out;
  }
  const Vector degree = w.rowwise().sum();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(degree(i) > 0.0)) throw IsolatedNode(static_cast<std::size_t>(i));
  }
  const Vector inv_sqrt = degree.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd lap = Eigen::MatrixXd::Identity(n, n) -
                              inv_sqrt.asDiagonal() * w * inv_sqrt.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lap);
  if (eig.info() != Eigen::Success) throw InvalidInput("spectral_cluster: eigensolver failed");
  Eigen::MatrixXd embed = eig.eigenvectors().leftCols(num_clusters);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm = embed.row(i).norm();
    if (norm > 0.0) embed.row(i) /= norm;
  }
  KMeansRun best;
  for (int rep = 0; rep < opts.restarts; ++rep) {
    KMeansRun run = kmeans_once(embed, num_clusters, rng, opts.max_iters);
    if (run.inertia < best.inertia) best = std::move(run);
  }
  out.labels = renumber(best.labels, num_clusters);
  return out;
}

Clustering innovation_cluster(const DataMatrix& d, int num_clusters, RandomSource& rng,
                              const PreprocessOptions& pre_opts, const SolverOptions& solver) {
  const PreprocessedData pre = preprocess(d, pre_opts);
  const DirectionSet dirs = solve_all(pre.reduced, solver);
  return spectral_cluster(affinity_from_directions(pre, dirs), num_clusters, rng);
}

CorrectionResult correct_clusters(const std::vector<DataMatrix>& clusters,
                                  const std::vector<int>& r_per_cluster,
                                  const CorrectionOptions& opts) {
  const std::size_t k = clusters.size();
  if (k == 0) throw InvalidInput("correct_clusters: no clusters");
  if (r_per_cluster.size() != k) {
    throw InvalidInput("correct_clusters: need one rank per cluster");
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (clusters[i].cols() < 1) throw InvalidInput("correct_clusters: empty cluster");
    if (clusters[i].rows() != clusters[0].rows()) {
      throw InvalidInput("correct_clusters: clusters differ in ambient dimension");
    }
  }
  CorrectionResult out;
  out.bases.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    ISearchOptions o = opts.isearch;
    o.rank = r_per_cluster[i];
    out.bases[i] = run_isearch(clusters[i], o).recovery.basis;
  }
  out.relabeled.num_clusters = static_cast<int>(k);
  for (const DataMatrix& c : clusters) {
    Eigen::MatrixXd energy(static_cast<Eigen::Index>(k), c.cols());
    for (std::size_t i = 0; i < k; ++i) {
      energy.row(static_cast<Eigen::Index>(i)) =
          (out.bases[i].matrix().transpose() * c).colwise().norm();
    }
    for (Eigen::Index j = 0; j < c.cols(); ++j) {
      Eigen::Index arg = 0;
      for (Eigen::Index i = 1; i < static_cast<Eigen::Index>(k); ++i) {
        if (energy(i, j) > energy(arg, j)) arg = i;
      }
      out.relabeled.labels.push_back(static_cast<int>(arg));
    }
  }
  return out;
}

CorrectionResult correct_labels(const DataMatrix& d, const Clustering& initial,
                                const std::vector<int>& r_per_cluster,
                                const CorrectionOptions& opts) {
  if (initial.labels.size() != static_cast<std::size_t>(d.cols())) {
    throw InvalidInput("correct_labels: one label per column required");
  }
  const auto k = static_cast<std::size_t>(initial.num_clusters);
  std::vector<std::vector<std::size_t>> members(k);
  for (std::size_t j = 0; j < initial.labels.size(); ++j) {
    const int l = initial.labels[j];
    if (l < 0 || static_cast<std::size_t>(l) >= k) {
      throw InvalidInput("correct_labels: label out of range");
    }
    members[static_cast<std::size_t>(l)].push_back(j);
  }
  std::vector<DataMatrix> clusters;
  for (const auto& m : members) clusters.push_back(select_columns(d, m));
  CorrectionResult res = correct_clusters(clusters, r_per_cluster, opts);
  std::vector<int> labels(initial.labels.size());
  std::size_t pos = 0;
  for (const auto& m : members) {
    for (std::size_t j : m) labels[j] = res.relabeled.labels[pos++];
  }
  res.relabeled.labels = std::move(labels);
  return res;
}

}  // namespace isearch
