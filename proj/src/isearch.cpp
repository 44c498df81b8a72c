#include "isearch/isearch.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace isearch {

int estimate_rank(const Vector& singular_values, double ratio) {
  if (singular_values.size() == 0) throw InvalidInput("estimate_rank: empty spectrum");
  if (!(ratio > 0.0 && ratio < 1.0)) throw InvalidInput("estimate_rank: ratio must lie in (0, 1)");
  const double lead = singular_values(0);
  if (!(lead > 0.0)) throw InvalidInput("estimate_rank: all-zero spectrum");
  int count = 0;
  for (Eigen::Index i = 0; i < singular_values.size(); ++i) {
    if (singular_values(i) > ratio * lead) ++count;
  }
  return std::max(count, 1);
}

PreprocessedData preprocess(const DataMatrix& d, const PreprocessOptions& opts) {
  if (d.rows() < 1 || d.cols() < 1) throw InvalidInput("preprocess: empty data");
  if (!d.allFinite()) throw InvalidInput("preprocess: non-finite entries");
  PreprocessedData out;
  out.original_norms = column_norms(d);
  for (Eigen::Index j = 0; j < d.cols(); ++j) {
    if (out.original_norms(j) < 1e-14) throw ZeroColumn(static_cast<std::size_t>(j));
  }
  if (opts.skip_reduction) {
    out.projector = Eigen::MatrixXd::Identity(d.rows(), d.rows());
    out.rank = static_cast<int>(d.rows());
    out.reduced = normalize_columns_unit(d);
    return out;
  }
  const ThinSvd svd = svd_thin(d);
  int rank = 0;
  if (opts.rank_override) {
    rank = *opts.rank_override;
    if (rank < 1 || rank > svd.singular_values.size()) {
      throw InvalidInput("preprocess: rank_override out of range");
    }
  } else {
    rank = estimate_rank(svd.singular_values, opts.rank_ratio);
  }
  out.rank = rank;
  out.projector = svd.left.leftCols(rank);
  out.reduced = normalize_columns_unit(out.projector.transpose() * d);
  return out;
}

InnovationProfile innovation_values(const PreprocessedData& pre, const DirectionSet& dirs) {
  if (dirs.objectives.size() != pre.reduced.cols()) {
    throw InvalidInput("innovation_values: direction set does not match the data");
  }
  return InnovationProfile{dirs.objectives.cwiseInverse()};
}

std::vector<std::size_t> innovation_order(const InnovationProfile& profile) {
  std::vector<std::size_t> order(static_cast<std::size_t>(profile.values.size()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return profile.values(static_cast<Eigen::Index>(a)) <
           profile.values(static_cast<Eigen::Index>(b));
  });
  return order;
}

RecoveryResult build_basis_from_order(const PreprocessedData& pre,
                                      const std::vector<std::size_t>& order, int r,
                                      double add_tol) {
  const Eigen::Index rd = pre.reduced.rows();
  if (r < 1) throw InvalidInput("build_basis: r must be >= 1");
  if (r > rd) throw RankDeficient(r, static_cast<int>(rd));
  Eigen::MatrixXd y(rd, r);
  RecoveryResult out;
  int kept = 0;
  for (std::size_t idx : order) {
    if (kept == r) break;
    Vector v = pre.reduced.col(static_cast<Eigen::Index>(idx));
    const double norm = v.norm();
    for (int pass = 0; pass < 2; ++pass) {
      v -= y.leftCols(kept) * (y.leftCols(kept).transpose() * v);
    }
    if (v.norm() <= add_tol * norm) continue;
    y.col(kept++) = v.normalized();
    out.selected_columns.push_back(idx);
  }
  if (kept < r) throw RankDeficient(r, kept);
  out.basis = SubspaceBasis::from_span(pre.projector * y);
  if (out.basis.dim() != r) throw RankDeficient(r, out.basis.dim());
  return out;
}

RecoveryResult build_basis_adaptive(const PreprocessedData& pre, const InnovationProfile& profile,
                                    int r, double add_tol) {
  if (profile.values.size() != pre.reduced.cols()) {
    throw InvalidInput("build_basis_adaptive: profile does not match the data");
  }
  RecoveryResult out = build_basis_from_order(pre, innovation_order(profile), r, add_tol);
  out.profile = profile;
  return out;
}

RecoveryResult build_basis_fraction(const PreprocessedData& pre, const InnovationProfile& profile,
                                    double keep_fraction, int truncate_rank) {
  const auto m = static_cast<std::size_t>(pre.reduced.cols());
  if (profile.values.size() != pre.reduced.cols()) {
    throw InvalidInput("build_basis_fraction: profile does not match the data");
  }
  if (!(keep_fraction > 0.0 && keep_fraction < 1.0)) {
    throw InvalidInput("build_basis_fraction: keep_fraction must lie in (0, 1)");
  }
  const auto keep = static_cast<std::size_t>(std::floor(keep_fraction * static_cast<double>(m)));
  if (keep < 1) throw InvalidInput("build_basis_fraction: keep_fraction * M2 < 1");
  RecoveryResult out;
  std::vector<std::size_t> order = innovation_order(profile);
  out.selected_columns.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep));
  const DataMatrix y = pre.projector * select_columns(pre.reduced, out.selected_columns);
  if (truncate_rank > 0) {
    if (static_cast<std::size_t>(truncate_rank) > keep || truncate_rank > y.rows()) {
      throw RankDeficient(truncate_rank, static_cast<int>(std::min<std::size_t>(keep, y.rows())));
    }
    out.basis = SubspaceBasis(svd_thin(y).left.leftCols(truncate_rank));
  } else {
    out.basis = SubspaceBasis::from_span(y, 1e-8);
  }
  out.profile = profile;
  return out;
}

Vector residual_scores(const DataMatrix& d, const SubspaceBasis& basis) {
  if (basis.ambient_dim() != d.rows()) {
    throw InvalidInput("residual_scores: basis and data dimensions differ");
  }
  const Eigen::MatrixXd& u = basis.matrix();
  const Eigen::Index m = d.cols();
  Vector scores(m);
  constexpr Eigen::Index kBlock = 256;
  const Eigen::Index blocks = (m + kBlock - 1) / kBlock;
#pragma omp parallel for schedule(static)
  for (Eigen::Index b = 0; b < blocks; ++b) {
    const Eigen::Index first = b * kBlock;
    const Eigen::Index n = std::min(kBlock, m - first);
    const auto cols = d.middleCols(first, n);
    const Eigen::MatrixXd residual = cols - u * (u.transpose() * cols);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double norm = cols.col(j).norm();
      scores(first + j) = norm > 0.0 ? std::min(1.0, residual.col(j).norm() / norm) : 0.0;
    }
  }
  return scores;
}

OutlierVerdicts detect_outliers(const DataMatrix& d, const SubspaceBasis& basis,
                                double residual_threshold) {
  OutlierVerdicts out;
  out.scores = residual_scores(d, basis);
  out.outlier.resize(static_cast<std::size_t>(d.cols()));
  for (Eigen::Index j = 0; j < d.cols(); ++j) {
    out.outlier[static_cast<std::size_t>(j)] = out.scores(j) >= residual_threshold;
  }
  return out;
}

OutlierVerdicts detect_outliers_top_k(const InnovationProfile& profile, std::size_t k) {
  const auto m = static_cast<std::size_t>(profile.values.size());
  if (k > m) throw InvalidInput("detect_outliers_top_k: k exceeds the column count");
  OutlierVerdicts out;
  out.scores = profile.values;
  out.outlier.assign(m, false);
  const std::vector<std::size_t> order = innovation_order(profile);
  for (std::size_t i = m - k; i < m; ++i) out.outlier[order[i]] = true;
  return out;
}

ISearchResult run_isearch(const DataMatrix& d, const ISearchOptions& opts) {
  ISearchResult res;
  res.pre = preprocess(d, opts.preprocess);
  if (opts.accept_unconverged) {
    res.directions = solve_all_partial(res.pre.reduced, opts.solver);
  } else {
    res.directions = solve_all(res.pre.reduced, opts.solver);
  }
  res.unconverged = res.directions.unconverged_columns();
  res.profile = innovation_values(res.pre, res.directions);
  res.recovery = opts.rule == BasisRule::Adaptive
                     ? build_basis_adaptive(res.pre, res.profile, opts.rank, opts.add_tol)
                     : build_basis_fraction(res.pre, res.profile, opts.keep_fraction,
                                            opts.truncate_fraction ? opts.rank : 0);
  res.verdicts = detect_outliers(d, res.recovery.basis, opts.residual_threshold);
  return res;
}

}  // namespace isearch
