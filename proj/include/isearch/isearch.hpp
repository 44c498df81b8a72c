#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "isearch/matstore.hpp"
#include "isearch/solver.hpp"

namespace isearch {

struct PreprocessOptions {
  bool skip_reduction = false;
  // Keep singular values sigma_i > rank_ratio * sigma_1.
  double rank_ratio = 1e-4;
  std::optional<int> rank_override;
};

struct PreprocessedData {
  DataMatrix reduced;         // r_d x M2, unit columns
  Eigen::MatrixXd projector;  // Q, M1 x r_d (identity when reduction is skipped)
  int rank = 0;               // r_d
  Vector original_norms;
};

// Number of sigma_i > ratio * sigma_1, at least 1.
int estimate_rank(const Vector& singular_values, double ratio = 1e-4);

PreprocessedData preprocess(const DataMatrix& d, const PreprocessOptions& opts = {});

// x(i) = 1 / ||D^T c*_i||_1, large for outliers.
struct InnovationProfile {
  Vector values;
};

InnovationProfile innovation_values(const PreprocessedData& pre, const DirectionSet& dirs);

struct RecoveryResult {
  SubspaceBasis basis;  // ambient coordinates
  std::vector<std::size_t> selected_columns;
  InnovationProfile profile;
};

// Walk the columns by increasing score and keep a column when its residual
// against the already kept ones exceeds add_tol, until r are kept. Shared by
// the innovation-based and coherence-based recoveries.
RecoveryResult build_basis_from_order(const PreprocessedData& pre,
                                      const std::vector<std::size_t>& order, int r,
                                      double add_tol);

RecoveryResult build_basis_adaptive(const PreprocessedData& pre, const InnovationProfile& profile,
                                    int r, double add_tol = 1e-3);

// Span of the floor(keep_fraction * M2) least innovative columns, at
// numerical rank 1e-8 * sigma_1. With truncate_rank > 0 the basis is the top
// truncate_rank left singular vectors of those columns instead (noisy data).
RecoveryResult build_basis_fraction(const PreprocessedData& pre, const InnovationProfile& profile,
                                    double keep_fraction, int truncate_rank = 0);

// Column indices sorted by increasing innovation (ties by index).
std::vector<std::size_t> innovation_order(const InnovationProfile& profile);

struct OutlierVerdicts {
  Vector scores;  // ||(I - U U^T) d_k|| / ||d_k||, in [0, 1]
  std::vector<bool> outlier;
};

Vector residual_scores(const DataMatrix& d, const SubspaceBasis& basis);
OutlierVerdicts detect_outliers(const DataMatrix& d, const SubspaceBasis& basis,
                                double residual_threshold);

// The k most innovative columns flagged as outliers.
OutlierVerdicts detect_outliers_top_k(const InnovationProfile& profile, std::size_t k);

enum class BasisRule { Adaptive, Fraction };

struct ISearchOptions {
  PreprocessOptions preprocess;
  SolverOptions solver;
  int rank = 1;
  BasisRule rule = BasisRule::Adaptive;
  double add_tol = 1e-3;
  double keep_fraction = 0.5;
  // Fraction rule only: keep the top `rank` singular directions of the kept
  // columns rather than their full numerical span.
  bool truncate_fraction = false;
  double residual_threshold = 0.2;
  // Use the last iterate of columns that hit max_iters instead of failing.
  bool accept_unconverged = false;
};

struct ISearchResult {
  PreprocessedData pre;
  DirectionSet directions;
  InnovationProfile profile;
  RecoveryResult recovery;
  OutlierVerdicts verdicts;
  std::vector<std::size_t> unconverged;
};

ISearchResult run_isearch(const DataMatrix& d, const ISearchOptions& opts);

}  // namespace isearch
