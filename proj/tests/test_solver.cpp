#include <doctest.h>

#include <cmath>
#include <numeric>

#include <omp.h>

#include "isearch/errors.hpp"
#include "isearch/isearch.hpp"
#include "isearch/solver.hpp"
#include "isearch/synthgen.hpp"
#include "oracles.hpp"

using namespace isearch;

namespace {

DataMatrix triangle() {
  DataMatrix d(2, 3);
  const double h = 1.0 / std::sqrt(2.0);
  d << 1, 0, h, 0, 1, h;
  return d;
}

DataMatrix random_problem(RandomSource& rng, int r, int m) {
  return sample_unit_sphere(rng, r, m);
}

}  // namespace

TEST_CASE("simplex oracle reproduces the hand-derived optima") {
  CHECK(oracle::l1_direction_objective(Eigen::MatrixXd::Identity(2, 2), 0) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(oracle::l1_direction_objective(triangle(), 2) ==
        doctest::Approx(1.0 + std::sqrt(2.0)).epsilon(1e-12));
  CHECK(oracle::l1_direction_objective(triangle(), 0) ==
        doctest::Approx(1.0 + 1.0 / std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("identity data: c* = e_j, objective 1") {
  const DirectionResult r = solve_direction({Eigen::MatrixXd::Identity(2, 2), 0}, {});
  CHECK(r.objective == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(r.direction(0) - 1.0) < 1e-6);
  CHECK(std::abs(r.direction(1)) < 1e-6);

  const DirectionSet all = solve_all(Eigen::MatrixXd::Identity(2, 2), {});
  CHECK((all.directions - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(all.objectives(0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(all.objectives(1) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("hand instances: ADMM and the enumeration oracle") {
  const double v3 = 1.0 + std::sqrt(2.0);
  const double v1 = 1.0 + 1.0 / std::sqrt(2.0);
  const DirectionProblem p3{triangle(), 2};
  const DirectionProblem p1{triangle(), 0};
  CHECK(std::abs(lp_oracle_direction(p3).objective - v3) < 1e-9);
  CHECK(std::abs(lp_oracle_direction(p1).objective - v1) < 1e-9);
  CHECK(std::abs(solve_direction(p3, {}).objective - v3) < 1e-6);
  const DirectionResult r1 = solve_direction(p1, {});
  CHECK(std::abs(r1.objective - v1) < 1e-6);
  // This optimum is unique.
  CHECK(std::abs(r1.direction(0) - 1.0) < 1e-6);
  CHECK(std::abs(r1.direction(1)) < 1e-6);
}

TEST_CASE("ADMM agrees with the simplex oracle on 120 random instances") {
  RandomSource rng(2024);
  int checked = 0;
  for (int trial = 0; trial < 120; ++trial) {
    const int r = 3 + static_cast<int>(rng.uniform_index(4));
    const int m = 8 + static_cast<int>(rng.uniform_index(13));
    const DataMatrix d = random_problem(rng, r, m);
    const auto j = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(m)));
    const double ref = oracle::l1_direction_objective(d, j);
    const DirectionResult admm = solve_direction({d, j}, {});
    const DirectionResult lp = lp_oracle_direction({d, j});
    CHECK(std::abs(lp.objective - ref) <= 1e-9 * (1 + ref));
    CHECK(admm.objective >= ref - 1e-9 * (1 + ref));
    CHECK(admm.objective <= ref + 1e-4 * (1 + ref));
    CHECK(std::abs(admm.direction.dot(d.col(j)) - 1.0) <= 1e-6);
    CHECK(admm.objective >= 1.0 - 1e-6);
    ++checked;
  }
  CHECK(checked == 120);
}

TEST_CASE("batch objectives equal per-column objectives") {
  RandomSource rng(5);
  const DataMatrix d = random_problem(rng, 5, 12);
  const DirectionSet all = solve_all(d, {});
  for (Eigen::Index j = 0; j < d.cols(); ++j) {
    CHECK(std::abs(all.objectives(j) - solve_direction({d, j}, {}).objective) <= 1e-8);
    CHECK(std::abs(all.directions.col(j).dot(d.col(j)) - 1.0) <= 1e-6);
    CHECK(all.stats[static_cast<std::size_t>(j)].converged);
  }
}

TEST_CASE("batched kernel matches the serial reference") {
  RandomSource rng(6);
  const DataMatrix d = random_problem(rng, 8, 150);
  SolverOptions opts;
  opts.block_size = 16;
  const DirectionSet fast = solve_all(d, opts);
  const DirectionSet ref = reference::solve_all(d, opts);
  CHECK((fast.objectives - ref.objectives).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("solve_all is deterministic across thread counts") {
  RandomSource rng(7);
  const DataMatrix d = random_problem(rng, 6, 200);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const DirectionSet one = solve_all(d, {});
  omp_set_num_threads(4);
  const DirectionSet four = solve_all(d, {});
  omp_set_num_threads(saved);
  CHECK(one.objectives == four.objectives);
  CHECK(one.directions == four.directions);
}

TEST_CASE("permuting columns permutes the direction set") {
  RandomSource rng(8);
  const DataMatrix d = random_problem(rng, 4, 30);
  const auto perm = rng.permutation(30);
  const DataMatrix dp = select_columns(d, perm);
  const DirectionSet a = solve_all(d, {});
  const DirectionSet b = solve_all(dp, {});
  for (std::size_t k = 0; k < perm.size(); ++k) {
    const double x = a.objectives(static_cast<Eigen::Index>(perm[k]));
    CHECK(std::abs(b.objectives(static_cast<Eigen::Index>(k)) - x) <= 1e-6 * (1 + x));
  }
}

TEST_CASE("converged columns satisfy the tolerances") {
  RandomSource rng(9);
  const DataMatrix d = random_problem(rng, 5, 60);
  SolverOptions opts;
  opts.crossover = false;
  opts.max_iters = 20000;
  const DirectionSet s = solve_all(d, opts);
  for (const auto& st : s.stats) {
    CHECK(st.admm_converged);
    CHECK(st.primal_residual <= opts.feas_tol);
    CHECK(st.dual_residual <= opts.dual_tol);
  }
}

TEST_CASE("iteration cap yields Unconverged with the last iterate") {
  RandomSource rng(10);
  const DataMatrix d = random_problem(rng, 6, 40);
  SolverOptions opts;
  opts.crossover = false;
  opts.max_iters = 3;
  try {
    (void)solve_direction({d, 0}, opts);
    FAIL("expected Unconverged");
  } catch (const Unconverged& e) {
    CHECK(e.last().stats.iterations == 3);
    CHECK(std::abs(e.last().direction.dot(d.col(0)) - 1.0) <= 1e-9);
  }
  try {
    (void)solve_all(d, opts);
    FAIL("expected UnconvergedColumns");
  } catch (const UnconvergedColumns& e) {
    CHECK(!e.columns().empty());
    CHECK(e.partial().objectives.size() == 40);
  }
  const DirectionSet partial = solve_all_partial(d, opts);
  CHECK(!partial.unconverged_columns().empty());
}

TEST_CASE("vertex crossover lands on the LP optimum") {
  RandomSource rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const DataMatrix d = random_problem(rng, 4, 15);
    const Vector start = d.col(3);
    const CrossoverResult c = vertex_crossover(d, 3, start, 200);
    REQUIRE(c.ok);
    CHECK(c.stationary);
    CHECK(std::abs(c.direction.dot(d.col(3)) - 1.0) <= 1e-9);
    const double ref = oracle::l1_direction_objective(d, 3);
    CHECK(std::abs(c.objective - ref) <= 1e-8 * (1 + ref));
  }
}

TEST_CASE("LP oracle size limit") {
  RandomSource rng(12);
  CHECK_THROWS_AS(lp_oracle_direction({random_problem(rng, 9, 12), 0}), SizeLimit);
  CHECK_THROWS_AS(lp_oracle_direction({random_problem(rng, 3, 31), 0}), SizeLimit);
}

TEST_CASE("solver options validation and json") {
  SolverOptions o;
  o.rho = 2.5;
  o.max_iters = 77;
  o.crossover = false;
  const SolverOptions back = solver_options_from_json(to_json(o));
  CHECK(back.rho == 2.5);
  CHECK(back.max_iters == 77);
  CHECK(!back.crossover);
  o.rho = -1;
  try {
    o.validate();
    FAIL("expected InvalidSpec");
  } catch (const InvalidSpec& e) {
    CHECK(e.field() == "admm.rho");
  }
}

TEST_CASE("outlier directions are nearly orthogonal to the inlier subspace (M1=40, r=5)") {
  ModelSpec spec;
  spec.M1 = 40;
  spec.n_i = 200;
  spec.n_o = 50;
  spec.inliers = UniformOnSubspace{5};
  int good = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    RandomSource rng(seed);
    const Dataset ds = gen_dataset(spec, rng);
    const PreprocessedData pre = preprocess(ds.data);
    const DirectionSet dirs = solve_all(pre.reduced, {});
    for (std::size_t j : ds.outlier_indices()) {
      const Vector c = pre.projector * dirs.directions.col(static_cast<Eigen::Index>(j));
      const double in_u = (ds.truth_basis.matrix().transpose() * c).norm();
      good += in_u <= 0.05 * c.norm() ? 1 : 0;
      ++total;
    }
  }
  CHECK(good >= 0.95 * total);
}
