#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "isearch/errors.hpp"
#include "isearch/matstore.hpp"
#include "oracles.hpp"

using namespace isearch;

TEST_CASE("random source is reproducible and splits deterministically") {
  RandomSource a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    (void)c.next_u64();
  }
  CHECK(RandomSource(42).next_u64() != RandomSource(43).next_u64());
  RandomSource s1 = RandomSource(7).split(3);
  RandomSource s2 = RandomSource(7).split(3);
  CHECK(s1.next_u64() == s2.next_u64());
  CHECK(RandomSource(7).split(3).next_u64() != RandomSource(7).split(4).next_u64());
  CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));
}

TEST_CASE("splitmix64 matches its published first output for state 0") {
  std::uint64_t state = 0;
  CHECK(splitmix64(state) == 0xe220a8397b1dcdafULL);
}

TEST_CASE("xoshiro256** stream matches the published algorithm") {
  // Hand-rolled splitmix64 + xoshiro256** as the oracle.
  std::uint64_t x = 12345;
  auto sm = [&x]() {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t s[4] = {sm(), sm(), sm(), sm()};
  auto rotl = [](std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); };
  RandomSource rng(12345);
  for (int i = 0; i < 16; ++i) {
    const std::uint64_t expected = rotl(s[1] * 5, 7) * 9;
    const std::uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    CHECK(rng.next_u64() == expected);
  }
}

TEST_CASE("uniform and permutation helpers") {
  RandomSource rng(5);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(rng.uniform_index(7) < 7);
  }
  auto p = rng.permutation(50);
  std::sort(p.begin(), p.end());
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(p[i] == i);
}

TEST_CASE("normal deviates have unit variance") {
  RandomSource rng(11);
  const int n = 20000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / n) < 4.0 / std::sqrt(n));
  CHECK(std::abs(sq / n - 1.0) < 0.05);
}

TEST_CASE("svd_thin on identity and rank-one input") {
  const ThinSvd id = svd_thin(Eigen::MatrixXd::Identity(3, 3));
  REQUIRE(id.singular_values.size() == 3);
  for (int i = 0; i < 3; ++i) CHECK(id.singular_values(i) == doctest::Approx(1.0).epsilon(1e-14));

  Eigen::VectorXd a(3), b(4);
  a << 2, 0, 0;
  b << 0, 3, 0, 0;
  const ThinSvd r1 = svd_thin(a * b.transpose());
  CHECK(r1.singular_values(0) == doctest::Approx(6.0).epsilon(1e-14));
  for (Eigen::Index i = 1; i < r1.singular_values.size(); ++i) {
    CHECK(std::abs(r1.singular_values(i)) < 1e-12);
  }
}

TEST_CASE("svd_thin singular values agree with the Jacobi Gram oracle") {
  RandomSource rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const DataMatrix m = sample_gaussian(rng, 6, 10);
    const ThinSvd s = svd_thin(m);
    const auto ref = oracle::singular_values(m);
    REQUIRE(static_cast<std::size_t>(s.singular_values.size()) == ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) {
      CHECK(std::abs(s.singular_values(static_cast<Eigen::Index>(i)) - ref[i]) < 1e-8);
    }
  }
}

TEST_CASE("svd_thin reconstructs and is orthonormal up to 200x500") {
  RandomSource rng(8);
  for (auto [m, n] : {std::pair{5, 3}, std::pair{40, 250}, std::pair{200, 500}}) {
    const DataMatrix a = sample_gaussian(rng, m, n);
    const ThinSvd s = svd_thin(a);
    const DataMatrix rec = s.left * s.singular_values.asDiagonal() * s.right.transpose();
    CHECK((a - rec).norm() <= 1e-8 * a.norm());
    const auto k = s.singular_values.size();
    CHECK((s.left.transpose() * s.left - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff() <
          1e-10);
    CHECK((s.right.transpose() * s.right - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff() <
          1e-10);
    for (Eigen::Index i = 1; i < k; ++i) {
      CHECK(s.singular_values(i) <= s.singular_values(i - 1));
    }
  }
}

TEST_CASE("svd_thin rejects non-finite input") {
  DataMatrix m = DataMatrix::Ones(2, 2);
  m(0, 1) = std::nan("");
  CHECK_THROWS_AS(svd_thin(m), InvalidInput);
}

TEST_CASE("normalize_columns_unit") {
  DataMatrix m(2, 1);
  m << 3, 4;
  const DataMatrix n = normalize_columns_unit(m);
  CHECK(n(0, 0) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(n(1, 0) == doctest::Approx(0.8).epsilon(1e-15));

  RandomSource rng(1);
  const DataMatrix u = sample_unit_sphere(rng, 7, 30);
  CHECK((normalize_columns_unit(u) - u).cwiseAbs().maxCoeff() <= 1e-15);
  const DataMatrix twice = normalize_columns_unit(normalize_columns_unit(sample_gaussian(rng, 4, 9)));
  for (Eigen::Index j = 0; j < twice.cols(); ++j) CHECK(std::abs(twice.col(j).norm() - 1.0) < 1e-12);

  DataMatrix z = DataMatrix::Ones(3, 4);
  z.col(2).setZero();
  try {
    (void)normalize_columns_unit(z);
    FAIL("expected ZeroColumn");
  } catch (const ZeroColumn& e) {
    CHECK(e.index() == 2);
  }
}

TEST_CASE("sample_unit_sphere") {
  RandomSource rng(17);
  const DataMatrix s = sample_unit_sphere(rng, 5, 100);
  for (Eigen::Index j = 0; j < s.cols(); ++j) CHECK(std::abs(s.col(j).norm() - 1.0) <= 1e-12);

  RandomSource big(99);
  const DataMatrix t = sample_unit_sphere(big, 3, 10000);
  const Eigen::VectorXd mean = t.rowwise().mean();
  for (int i = 0; i < 3; ++i) CHECK(std::abs(mean(i)) < 4.0 / std::sqrt(10000.0));

  RandomSource r1(4), r2(4);
  CHECK(sample_unit_sphere(r1, 6, 20) == sample_unit_sphere(r2, 6, 20));
}

TEST_CASE("subspace basis construction") {
  RandomSource rng(2);
  const SubspaceBasis b = random_subspace(rng, 10, 3);
  CHECK(b.dim() == 3);
  CHECK(b.ambient_dim() == 10);
  const Eigen::MatrixXd p = b.projector();
  CHECK((p * p - p).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(SubspaceBasis(Eigen::MatrixXd::Ones(3, 2)), InvalidInput);

  Eigen::MatrixXd span(4, 3);
  span << 1, 2, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0;
  CHECK(SubspaceBasis::from_span(span).dim() == 2);
}

TEST_CASE("matrix csv round trip") {
  RandomSource rng(6);
  const DataMatrix m = sample_gaussian(rng, 3, 5);
  const auto path = std::filesystem::temp_directory_path() / "isearch_matstore_rt.csv";
  write_matrix_csv(path, m);
  CHECK(read_matrix_csv(path) == m);
  std::filesystem::remove(path);

  const DataMatrix p = parse_matrix_csv("1e-3, 2\n-3.5E2,4\n");
  CHECK(p.rows() == 2);
  CHECK(p(0, 0) == 1e-3);
  CHECK(p(1, 0) == -350.0);
  CHECK_THROWS_AS(parse_matrix_csv("1,2\n3\n"), IoError);
  CHECK_THROWS_AS(parse_matrix_csv("1,x\n"), IoError);
  CHECK_THROWS_AS(read_matrix_csv("/nonexistent/file.csv"), IoError);
}

TEST_CASE("select_columns") {
  DataMatrix m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  const std::vector<std::size_t> order{2, 0};
  const DataMatrix s = select_columns(m, order);
  CHECK(s(0, 0) == 3);
  CHECK(s(1, 1) == 4);
}
