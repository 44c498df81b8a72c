#include "isearch/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace isearch {

namespace {

void check_exponent(int p) {
  if (p != 1 && p != 2) throw InvalidInput("coherence_values: p must be 1 or 2");
}

double power(double v, int p) { return p == 2 ? v * v : std::abs(v); }

}  // namespace

CoherenceProfile coherence_values(const DataMatrix& d, int p) {
  check_exponent(p);
  const Eigen::Index m = d.cols();
  CoherenceProfile out;
  out.values.resize(m);
  constexpr Eigen::Index kBlock = 128;
  const Eigen::Index blocks = (m + kBlock - 1) / kBlock;
#pragma omp parallel for schedule(static)
  for (Eigen::Index b = 0; b < blocks; ++b) {
    const Eigen::Index first = b * kBlock;
    const Eigen::Index n = std::min(kBlock, m - first);
    const Eigen::MatrixXd g = d.transpose() * d.middleCols(first, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      double s = 0.0;
      for (Eigen::Index k = 0; k < m; ++k) {
        if (k != first + j) s += power(g(k, j), p);
      }
      out.values(first + j) = s;
    }
  }
  return out;
}

CoherenceProfile coherence_values(const PreprocessedData& pre, int p) {
  return coherence_values(pre.reduced, p);
}

namespace reference {

CoherenceProfile coherence_values(const DataMatrix& d, int p) {
  check_exponent(p);
  CoherenceProfile out;
  out.values = Vector::Zero(d.cols());
  for (Eigen::Index i = 0; i < d.cols(); ++i) {
    for (Eigen::Index k = 0; k < d.cols(); ++k) {
      if (k != i) out.values(i) += power(d.col(i).dot(d.col(k)), p);
    }
  }
  return out;
}

}  // namespace reference

std::vector<std::size_t> coherence_order(const CoherenceProfile& profile) {
  std::vector<std::size_t> order(static_cast<std::size_t>(profile.values.size()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return profile.values(static_cast<Eigen::Index>(a)) >
           profile.values(static_cast<Eigen::Index>(b));
  });
  return order;
}

RecoveryResult cop_recover(const PreprocessedData& pre, const CoherenceProfile& profile, int r,
                           double add_tol) {
  if (profile.values.size() != pre.reduced.cols()) {
    throw InvalidInput("cop_recover: profile does not match the data");
  }
  return build_basis_from_order(pre, coherence_order(profile), r, add_tol);
}

SubspaceBasis pca_recover(const DataMatrix& d, int r) {
  if (r < 1 || r > std::min(d.rows(), d.cols())) {
    throw InvalidInput("pca_recover: need 1 <= r <= min(M1, M2)");
  }
  const ThinSvd svd = svd_thin(d);
  return SubspaceBasis(svd.left.leftCols(r));
}

}  // namespace isearch
