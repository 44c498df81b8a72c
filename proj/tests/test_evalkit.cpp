#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "fixtures.hpp"
#include "isearch/errors.hpp"
#include "isearch/evalkit.hpp"
#include "oracles.hpp"

using namespace isearch;

namespace {

std::vector<ColumnLabel> labels_of(std::initializer_list<int> v) {
  std::vector<ColumnLabel> out;
  for (int x : v) out.push_back(x ? ColumnLabel::Outlier : ColumnLabel::Inlier);
  return out;
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace

TEST_CASE("recovery error: identical, orthogonal, and against principal angles") {
  RandomSource rng(1);
  const SubspaceBasis u = random_subspace(rng, 12, 3);
  CHECK(recovery_error(u, u) < 1e-14);

  Eigen::MatrixXd e = Eigen::MatrixXd::Identity(6, 6);
  const SubspaceBasis a(e.leftCols(2));
  const SubspaceBasis b(e.middleCols(2, 2));
  CHECK(recovery_error(a, b) == doctest::Approx(1.0).epsilon(1e-15));

  for (int trial = 0; trial < 10; ++trial) {
    const SubspaceBasis x = random_subspace(rng, 10, 4);
    const SubspaceBasis y = random_subspace(rng, 10, 4);
    const double err = recovery_error(x, y);
    CHECK(std::abs(err - oracle::principal_angle_error(x.matrix(), y.matrix())) < 1e-8);
    CHECK(err >= 0.0);
    CHECK(err <= 1.0 + 1e-12);
  }
}

TEST_CASE("detection success and separation margin") {
  CHECK(detection_success(vec({0, 0, 1, 1}), labels_of({0, 0, 1, 1})));
  CHECK(!detection_success(vec({0, 0.6, 0.5, 1}), labels_of({0, 0, 1, 1})));
  CHECK(separation_margin(vec({0.1, 0.2, 0.5, 0.9}), labels_of({0, 0, 1, 1})) ==
        doctest::Approx(0.3));
  CHECK(separation_margin(vec({0.1, 0.6, 0.5}), labels_of({0, 0, 1})) < 0);
  CHECK(std::isnan(separation_margin(vec({0.1, 0.2}), labels_of({0, 0}))));
  CHECK(detection_success(vec({0.1, 0.2}), labels_of({0, 0})));
}

TEST_CASE("clustering error matches the permutation oracle") {
  RandomSource rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> truth(40), pred(40);
    for (int i = 0; i < 40; ++i) {
      truth[static_cast<std::size_t>(i)] = static_cast<int>(rng.uniform_index(4));
      pred[static_cast<std::size_t>(i)] = static_cast<int>(rng.uniform_index(4));
    }
    CHECK(clustering_error(truth, pred) ==
          doctest::Approx(oracle::permutation_clustering_error(truth, pred)).epsilon(1e-15));
  }
  CHECK(clustering_error({0, 0, 1, 1}, {1, 1, 0, 0}) == 0.0);
  std::vector<int> many(9);
  for (int i = 0; i < 9; ++i) many[static_cast<std::size_t>(i)] = i;
  CHECK_THROWS_AS(clustering_error(many, many), SizeLimit);
}

TEST_CASE("run_trial: success criterion, rank deficiency, determinism") {
  const TrialRecord ok = run_trial(fixtures::small_uniform(), Method::ISearch, 3);
  CHECK(ok.error_kind.empty());
  CHECK(ok.success == (ok.recovery_error < 1e-2));
  CHECK(ok.success);
  CHECK(ok.log_recovery_error == doctest::Approx(std::log10(std::max(ok.recovery_error, 1e-16))));
  CHECK(ok.detection_success);
  CHECK(ok.separation_margin > 0);

  ModelSpec few = fixtures::small_uniform();
  few.n_i = 3;
  const TrialRecord bad = run_trial(few, Method::ISearch, 3);
  CHECK(bad.error_kind == "RankDeficient");
  CHECK(!bad.success);

  for (Method m : {Method::ISearch, Method::CoP, Method::PCA}) {
    const TrialRecord a = run_trial(fixtures::small_uniform(), m, 11);
    const TrialRecord b = run_trial(fixtures::small_uniform(), m, 11);
    CHECK(a.recovery_error == b.recovery_error);
    CHECK(a.separation_margin == b.separation_margin);
    CHECK(a.detection_success == b.detection_success);
  }
}

TEST_CASE("method names round trip") {
  for (Method m : {Method::ISearch, Method::CoP, Method::PCA}) {
    CHECK(method_from_string(to_string(m)) == m);
  }
  CHECK_THROWS_AS(method_from_string("rpca"), InvalidSpec);
}

TEST_CASE("apply_axis") {
  ModelSpec s = fixtures::small_uniform();
  apply_axis(s, "n_i_over_r", 10);
  CHECK(s.n_i == 50);
  apply_axis(s, "n_o_over_M1", 2);
  CHECK(s.n_o == 80);
  apply_axis(s, "snr", 4);
  CHECK(*s.sigma_n == doctest::Approx(0.5));
  CHECK_THROWS_AS(apply_axis(s, "nope", 1), InvalidSpec);
}

TEST_CASE("sweep: trivial cell, shape, reproducibility, csv") {
  SweepSpec spec;
  spec.base = fixtures::small_uniform();
  spec.axes = {{"n_o", {0, 50}}, {"n_i", {100, 200}}};
  spec.methods = {Method::ISearch, Method::PCA};
  spec.trials_per_cell = 3;

  std::vector<std::pair<std::size_t, std::size_t>> order;
  const SweepGrid g = run_sweep(spec, 77, [&](const TrialRecord&, std::size_t c, std::size_t t) {
    order.emplace_back(c, t);
  });
  CHECK(g.cells.size() == 2 * 2 * 2);
  CHECK(order.size() == 8 * 3);
  for (std::size_t k = 1; k < order.size(); ++k) {
    const bool same_block = order[k].first == order[k - 1].first;
    CHECK(order[k].first >= order[k - 1].first);
    if (same_block && order[k].second != 0) CHECK(order[k].second == order[k - 1].second + 1);
  }
  for (const auto& cell : g.cells) {
    CHECK(cell.probability >= 0.0);
    CHECK(cell.probability <= 1.0);
    CHECK(cell.trials == 3);
    if (cell.coords[0] == 0) CHECK(cell.probability == 1.0);
  }

  const SweepGrid again = run_sweep(spec, 77);
  CHECK(format_sweep_csv(g, true) == format_sweep_csv(again, true));
  const SweepGrid other = run_sweep(spec, 78);
  CHECK(format_sweep_csv(g, true) != format_sweep_csv(other, true));

  std::istringstream csv(format_sweep_csv(g));
  std::string header;
  std::getline(csv, header);
  CHECK(header == "n_o,n_i,method,probability");
  int rows = 0;
  for (std::string line; std::getline(csv, line);) ++rows;
  CHECK(rows == 8);

  SweepSpec single = spec;
  single.methods = {Method::ISearch};
  std::istringstream csv1(format_sweep_csv(run_sweep(single, 1)));
  std::getline(csv1, header);
  CHECK(header == "n_o,n_i,probability");
}

TEST_CASE("sweep spec json round trip and validation") {
  SweepSpec spec;
  spec.base = fixtures::small_uniform();
  spec.axes = {{"eta", {0.1, 0.2}}};
  spec.base.outliers = ClusteredOutliers{0.1, ClusterCenter::RandomDirection};
  spec.metric = SweepMetric::Detection;
  spec.trial.isearch.rule = BasisRule::Fraction;
  const nlohmann::json j = to_json(spec);
  CHECK(to_json(sweep_from_json(j)) == j);

  SweepSpec bad = spec;
  bad.axes = {{"r", {50}}};
  CHECK_THROWS_AS(bad.validate(), InvalidSpec);
  bad.axes = {};
  CHECK_THROWS_AS(bad.validate(), InvalidSpec);
}
