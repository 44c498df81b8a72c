#pragma once

// Independent reference computations for the test suite. Nothing here calls
// the library's numerics; the point is to disagree with it if it is wrong.

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

// Cyclic Jacobi eigenvalues of a symmetric matrix, descending.
std::vector<double> jacobi_eigenvalues(Eigen::MatrixXd a, double tol = 1e-15);

// Singular values of m from the Jacobi eigenvalues of the smaller Gram matrix.
std::vector<double> singular_values(const Eigen::MatrixXd& m);

// Two-phase dense simplex (Bland's rule) for min cost^T x, A x = b, x >= 0.
// Returns the optimal value; the problem must be feasible and bounded.
double simplex_min(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                   const Eigen::VectorXd& cost);

// min ||D^T c||_1 subject to d_j^T c = 1, written as a standard-form LP.
double l1_direction_objective(const Eigen::MatrixXd& d, Eigen::Index j);

// sqrt(sum sin^2 theta_i) / sqrt(dim U), principal angles between span(U)
// and span(V) from the Jacobi eigenvalues of (U^T V)^T (U^T V).
double principal_angle_error(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v);

// Minimum fraction of mislabeled points over all label permutations.
double permutation_clustering_error(const std::vector<int>& truth,
                                    const std::vector<int>& predicted);

// Modified Gram-Schmidt, orthonormal columns of m (assumed full column rank).
Eigen::MatrixXd gram_schmidt(const Eigen::MatrixXd& m);

}  // namespace oracle
