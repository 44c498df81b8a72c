#pragma once

#include <vector>

#include "isearch/isearch.hpp"
#include "isearch/random.hpp"

namespace isearch {

// Symmetric, nonnegative, zero diagonal.
struct AffinityMatrix {
  Eigen::MatrixXd w;
};

// W = |C^T D| + |C^T D|^T with the self-affinities removed.
AffinityMatrix affinity_from_directions(const PreprocessedData& pre, const DirectionSet& dirs);

namespace reference {
AffinityMatrix affinity_from_directions(const PreprocessedData& pre, const DirectionSet& dirs);
}  // namespace reference

struct Clustering {
  std::vector<int> labels;  // in [0, L)
  int num_clusters = 0;
};

struct SpectralOptions {
  int restarts = 10;
  int max_iters = 300;
};

// Normalized-Laplacian embedding (L smallest eigenvectors, rows scaled to
// unit norm) followed by k-means++ / Lloyd with the best of `restarts` runs.
// Labels are renumbered by first appearance.
Clustering spectral_cluster(const AffinityMatrix& w, int num_clusters, RandomSource& rng,
                            const SpectralOptions& opts = {});

// Full clustering branch: preprocess, direction search, affinity, spectral.
Clustering innovation_cluster(const DataMatrix& d, int num_clusters, RandomSource& rng,
                              const PreprocessOptions& pre_opts = {},
                              const SolverOptions& solver = {});

struct CorrectionOptions {
  ISearchOptions isearch;  // rank is taken from r_per_cluster
};

struct CorrectionResult {
  std::vector<SubspaceBasis> bases;
  // Labels of the concatenated columns [clusters[0] clusters[1] ...].
  Clustering relabeled;
};

// Recover a basis per cluster with iSearch, then move every point to
// argmax_k ||d^T U_k|| (ties go to the lowest k).
CorrectionResult correct_clusters(const std::vector<DataMatrix>& clusters,
                                  const std::vector<int>& r_per_cluster,
                                  const CorrectionOptions& opts = {});

// Same, starting from a labelled data matrix; labels are returned in the
// original column order.
CorrectionResult correct_labels(const DataMatrix& d, const Clustering& initial,
                                const std::vector<int>& r_per_cluster,
                                const CorrectionOptions& opts = {});

}  // namespace isearch
