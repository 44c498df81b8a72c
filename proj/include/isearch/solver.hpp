#pragma once

#include <cstddef>
#include <vector>

#include <json.hpp>

#include "isearch/errors.hpp"
#include "isearch/matstore.hpp"

namespace isearch {

// Direction search:  min_c ||D^T c||_1  subject to  c^T d_j = 1.
//
// Solved by ADMM on the splitting z = D^T c (scaled dual u):
//   c <- argmin_{d_j^T c = 1} ||D^T c - (z - u)||^2   (closed form, shared
//        Cholesky factor of D D^T plus a rank-one constraint border)
//   z <- soft_threshold(D^T c + u, 1/rho)
//   u <- u + D^T c - z
// The c-update enforces the linear constraint exactly, so every iterate is
// feasible and ||D^T c||_1 is always a valid upper bound on the optimum.
//
// ADMM is followed by a vertex crossover: starting from the ADMM iterate, the
// solver moves to a vertex of the piecewise-linear objective and performs
// exact edge descent (long-step line search over breakpoints). At a
// non-degenerate vertex with no descending edge the point is the global
// optimum.
struct SolverOptions {
  double rho = 1.0;
  // Primal residual ||D^T c - z||_2 / sqrt(M2).
  double feas_tol = 1e-6;
  // Dual residual rho ||D (z - z_prev)||_2 / sqrt(M2).
  double dual_tol = 1e-6;
  int max_iters = 2000;
  bool crossover = true;
  // Attempt a crossover every this many ADMM iterations (and once at the end).
  int crossover_interval = 50;
  // Pivot cap per crossover attempt; 0 selects 4 * (r_d + M2).
  int max_pivots = 0;
  // Columns advanced together in the batched kernel.
  int block_size = 64;

  void validate() const;
};

nlohmann::json to_json(const SolverOptions& opts);
SolverOptions solver_options_from_json(const nlohmann::json& j);

struct ColumnStats {
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  bool admm_converged = false;
  int pivots = 0;
  // Crossover finished at a vertex with no descending edge.
  bool vertex_stationary = false;
  // That vertex had more zero entries of D^T c than the r_d - 1 basis ones.
  bool degenerate = false;
  bool converged = false;
};

nlohmann::json to_json(const ColumnStats& s);

struct DirectionResult {
  Vector direction;
  double objective = 0.0;
  ColumnStats stats;
};

struct DirectionSet {
  Eigen::MatrixXd directions;  // r_d x M2, column i = c*_i
  Vector objectives;           // ||D^T c*_i||_1
  std::vector<ColumnStats> stats;

  std::vector<std::size_t> unconverged_columns() const;
};

nlohmann::json stats_to_json(const DirectionSet& dirs);

class Unconverged : public Error {
 public:
  explicit Unconverged(DirectionResult last);
  const DirectionResult& last() const noexcept { return last_; }

 private:
  DirectionResult last_;
};

// Thrown by solve_all when some columns did not converge; partial() keeps
// every column's last iterate.
class UnconvergedColumns : public Error {
 public:
  UnconvergedColumns(DirectionSet partial, std::vector<std::size_t> columns);
  const DirectionSet& partial() const noexcept { return partial_; }
  const std::vector<std::size_t>& columns() const noexcept { return columns_; }

 private:
  DirectionSet partial_;
  std::vector<std::size_t> columns_;
};

struct DirectionProblem {
  DataMatrix data;  // r_d x M2, unit columns, full row rank
  Eigen::Index target = 0;
};

// Pre-factorized D D^T shared by all column solves on the same data.
class DirectionFactor {
 public:
  explicit DirectionFactor(const DataMatrix& data);

  const DataMatrix& data() const noexcept { return data_; }
  // (D D^T)^{-1} D
  const Eigen::MatrixXd& gram_inv_data() const noexcept { return gram_inv_data_; }

 private:
  DataMatrix data_;
  Eigen::MatrixXd gram_inv_data_;
};

DirectionResult solve_direction(const DirectionProblem& p, const SolverOptions& opts);

// Same as solve_direction, with the factorization supplied. Never throws
// Unconverged; inspect result.stats.converged.
DirectionResult solve_direction_factored(const DirectionFactor& factor, Eigen::Index target,
                                         const SolverOptions& opts);

// Batched, OpenMP-parallel solve of every column. Deterministic for identical
// inputs and options regardless of the thread count.
DirectionSet solve_all(const DataMatrix& data, const SolverOptions& opts);

// As solve_all, but returns unconverged columns instead of throwing.
DirectionSet solve_all_partial(const DataMatrix& data, const SolverOptions& opts);

namespace reference {
// Serial per-column loop over solve_direction_factored. Kept as the baseline
// the batched kernel is tested and benchmarked against.
DirectionSet solve_all(const DataMatrix& data, const SolverOptions& opts);
}  // namespace reference

struct CrossoverResult {
  Vector direction;
  double objective = 0.0;
  int pivots = 0;
  bool stationary = false;
  bool degenerate = false;
  bool ok = false;  // false if no vertex basis could be formed
};

// Vertex edge descent from `start` for target column `target`.
CrossoverResult vertex_crossover(const DataMatrix& data, Eigen::Index target,
                                 const Vector& start, int max_pivots);

// Exact reference solver: enumerates every basic solution (r_d - 1 zero
// entries of D^T c plus the constraint). Limited to r_d <= 8, M2 <= 30.
DirectionResult lp_oracle_direction(const DirectionProblem& p);

}  // namespace isearch
