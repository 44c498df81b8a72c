#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "isearch/random.hpp"

namespace isearch {

// One data point per column.
using DataMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Orthonormal basis of a subspace, M1 x r. Construction checks the
// orthonormality invariant ||B^T B - I||_max <= 1e-10.
class SubspaceBasis {
 public:
  SubspaceBasis() = default;
  explicit SubspaceBasis(Eigen::MatrixXd basis);

  // Orthonormalize `spanning` (thin QR with column pivoting) and keep the
  // columns whose R diagonal exceeds rel_tol * |R(0,0)|.
  static SubspaceBasis from_span(const Eigen::MatrixXd& spanning,
                                 double rel_tol = 1e-10);

  const Eigen::MatrixXd& matrix() const noexcept { return basis_; }
  Eigen::Index ambient_dim() const noexcept { return basis_.rows(); }
  int dim() const noexcept { return static_cast<int>(basis_.cols()); }

  // U U^T
  Eigen::MatrixXd projector() const;

 private:
  Eigen::MatrixXd basis_;
};

struct ThinSvd {
  Eigen::MatrixXd left;     // m x k
  Vector singular_values;   // k, descending
  Eigen::MatrixXd right;    // n x k
};

// k = min(rows, cols). Throws InvalidInput on non-finite input.
ThinSvd svd_thin(const DataMatrix& m);

// Throws ZeroColumn for any column with norm < 1e-14.
DataMatrix normalize_columns_unit(const DataMatrix& m);

// `count` columns drawn uniformly from the unit sphere in R^dim
// (normalized i.i.d. Gaussian vectors).
DataMatrix sample_unit_sphere(RandomSource& rng, int dim, int count);

DataMatrix sample_gaussian(RandomSource& rng, int rows, int cols);

// Orthonormal basis of a uniformly random `dim`-dimensional subspace of R^ambient.
SubspaceBasis random_subspace(RandomSource& rng, int ambient, int dim);

Vector column_norms(const DataMatrix& m);

bool all_finite(const DataMatrix& m);

// Matrix CSV: row-major, comma separated, no header.
DataMatrix read_matrix_csv(const std::filesystem::path& path);
DataMatrix parse_matrix_csv(const std::string& text);
void write_matrix_csv(const std::filesystem::path& path, const DataMatrix& m);
std::string format_matrix_csv(const DataMatrix& m);

// Column reordering helper: out.col(i) = m.col(order[i]).
DataMatrix select_columns(const DataMatrix& m, std::span<const std::size_t> order);

}  // namespace isearch
