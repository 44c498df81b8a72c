#pragma once

#include "isearch/isearch.hpp"

namespace isearch {

// Coherence Pursuit statistic, higher = more inlier-like.
struct CoherenceProfile {
  Vector values;
};

// value(i) = sum_{k != i} |d_i^T d_k|^p on unit columns, p in {1, 2}.
CoherenceProfile coherence_values(const DataMatrix& unit_columns, int p = 2);
CoherenceProfile coherence_values(const PreprocessedData& pre, int p = 2);

namespace reference {
CoherenceProfile coherence_values(const DataMatrix& unit_columns, int p = 2);
}  // namespace reference

// Column indices sorted by decreasing coherence (ties by index).
std::vector<std::size_t> coherence_order(const CoherenceProfile& profile);

// Basis from the most coherent columns, skipping redundant ones.
RecoveryResult cop_recover(const PreprocessedData& pre, const CoherenceProfile& profile, int r,
                           double add_tol = 1e-3);

// Top-r left singular vectors.
SubspaceBasis pca_recover(const DataMatrix& d, int r);

}  // namespace isearch
