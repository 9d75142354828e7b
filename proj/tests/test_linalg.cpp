#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "steinglm/linalg.hpp"
#include "steinglm/matrix.hpp"
#include "steinglm/rng.hpp"

using namespace steinglm;

namespace {

// Independent triple-loop product, the oracle for matmul.
DenseMatrix naive_matmul(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix c(a.rows, b.cols, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < b.cols; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols; ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

DenseMatrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  DenseMatrix m(r, c);
  for (double& v : m.data) v = rng.gaussian();
  return m;
}

DenseMatrix random_symmetric(std::size_t d, Rng& rng) {
  DenseMatrix m(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) m(i, j) = m(j, i) = rng.gaussian();
  return m;
}

DenseMatrix reconstruct(const EigenResult& e) {
  DenseMatrix lam(e.values.size(), e.values.size(), 0.0);
  for (std::size_t i = 0; i < e.values.size(); ++i) lam(i, i) = e.values[i];
  return matmul(matmul(e.vectors, lam), transpose(e.vectors));
}

}  // namespace

TEST_CASE("matmul: identity and hand cases") {
  Rng rng(7);
  const DenseMatrix a = random_matrix(4, 4, rng);
  CHECK(max_abs_diff(matmul(a, DenseMatrix::identity(4)), a) == 0.0);

  const DenseMatrix b = DenseMatrix::from_rows({{1, 2}, {3, 4}});
  const DenseMatrix v = DenseMatrix::from_rows({{1}, {1}});
  const DenseMatrix p = matmul(b, v);
  CHECK(p(0, 0) == 3.0);
  CHECK(p(1, 0) == 7.0);
}

TEST_CASE("matmul: random case vs naive triple-loop oracle") {
  Rng rng(11);
  const DenseMatrix a = random_matrix(7, 5, rng);
  const DenseMatrix b = random_matrix(5, 3, rng);
  CHECK(max_abs_diff(matmul(a, b), naive_matmul(a, b)) < 1e-12);
}

TEST_CASE("matmul: dimension mismatch") {
  CHECK_THROWS_AS(matmul(DenseMatrix(2, 3), DenseMatrix(2, 3)), std::invalid_argument);
}

TEST_CASE("sym_eig: identity") {
  const EigenResult e = sym_eig(DenseMatrix::identity(3));
  for (double v : e.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(max_abs_diff(matmul(transpose(e.vectors), e.vectors), DenseMatrix::identity(3)) <
        1e-10);
}

TEST_CASE("sym_eig: diagonal matrix, |lambda| ordering, sign convention") {
  DenseMatrix a(3, 3, 0.0);
  a(0, 0) = 3.0;
  a(1, 1) = -5.0;
  a(2, 2) = 1.0;
  const EigenResult e = sym_eig(a);
  CHECK(e.values[0] == doctest::Approx(-5.0));
  CHECK(e.values[1] == doctest::Approx(3.0));
  CHECK(e.values[2] == doctest::Approx(1.0));
  // Eigenvectors are signed unit basis vectors with the big entry positive.
  CHECK(e.vectors(1, 0) == doctest::Approx(1.0));
  CHECK(e.vectors(0, 1) == doctest::Approx(1.0));
  CHECK(e.vectors(2, 2) == doctest::Approx(1.0));
}

TEST_CASE("sym_eig: random symmetric reconstruction and orthonormality") {
  Rng rng(23);
  for (std::size_t d : {2u, 5u, 8u, 20u, 60u}) {
    const DenseMatrix a = random_symmetric(d, rng);
    const EigenResult e = sym_eig(a);
    CHECK(frobenius_norm(a) > 0);
    const double rel =
        frobenius_norm([&] {
          DenseMatrix diff = reconstruct(e);
          for (std::size_t i = 0; i < diff.data.size(); ++i) diff.data[i] -= a.data[i];
          return diff;
        }()) /
        frobenius_norm(a);
    CHECK(rel < 1e-8);
    CHECK(max_abs_diff(matmul(transpose(e.vectors), e.vectors), DenseMatrix::identity(d)) <
          1e-10);
    // |lambda| ordering is total.
    for (std::size_t i = 0; i + 1 < d; ++i)
      CHECK(std::abs(e.values[i]) >= std::abs(e.values[i + 1]) - 1e-14);
    // Sign convention: largest-|entry| component non-negative.
    for (std::size_t j = 0; j < d; ++j) {
      double best = 0.0;
      std::size_t arg = 0;
      for (std::size_t i = 0; i < d; ++i)
        if (std::abs(e.vectors(i, j)) > best) {
          best = std::abs(e.vectors(i, j));
          arg = i;
        }
      CHECK(e.vectors(arg, j) >= 0.0);
    }
  }
}

TEST_CASE("sym_eig: determinism and input validation") {
  Rng rng(5);
  const DenseMatrix a = random_symmetric(6, rng);
  const EigenResult e1 = sym_eig(a);
  const EigenResult e2 = sym_eig(a);
  CHECK(max_abs_diff(e1.vectors, e2.vectors) == 0.0);

  CHECK_THROWS_AS(sym_eig(DenseMatrix(2, 3)), std::invalid_argument);
  DenseMatrix bad = DenseMatrix::identity(2);
  bad(0, 1) = std::nan("");
  CHECK_THROWS_AS(sym_eig(bad), std::invalid_argument);
}

TEST_CASE("qr_orthonormal: idempotence up to column signs") {
  Rng rng(31);
  const DenseMatrix q0 = qr_orthonormal(random_matrix(6, 3, rng));
  const DenseMatrix q1 = qr_orthonormal(q0);
  CHECK(max_abs_diff(q0, q1) < 1e-12);  // sign convention already applied
}

TEST_CASE("qr_orthonormal: axis-aligned input") {
  const DenseMatrix g = DenseMatrix::from_rows({{2, 0}, {0, 3}, {0, 0}});
  const DenseMatrix q = qr_orthonormal(g);
  CHECK(q(0, 0) == doctest::Approx(1.0));
  CHECK(q(1, 1) == doctest::Approx(1.0));
  CHECK(std::abs(q(2, 0)) < 1e-14);
  CHECK(std::abs(q(2, 1)) < 1e-14);
}

TEST_CASE("qr_orthonormal: orthogonality and span preservation") {
  Rng rng(41);
  const DenseMatrix g = random_matrix(20, 5, rng);
  const DenseMatrix q = qr_orthonormal(g);
  CHECK(max_abs_diff(matmul(transpose(q), q), DenseMatrix::identity(5)) < 1e-10);

  // ||(I - QQ^T) G||_F < 1e-8 means col span is preserved.
  const DenseMatrix proj = matmul(q, matmul(transpose(q), g));
  DenseMatrix resid = g;
  for (std::size_t i = 0; i < resid.data.size(); ++i) resid.data[i] -= proj.data[i];
  CHECK(frobenius_norm(resid) < 1e-8);
}

TEST_CASE("qr_orthonormal: errors") {
  CHECK_THROWS_AS(qr_orthonormal(DenseMatrix(3, 5)), std::invalid_argument);
  DenseMatrix def(4, 2, 0.0);  // second column zero -> rank deficient
  def(0, 0) = 1.0;
  CHECK_THROWS_AS(qr_orthonormal(def), std::runtime_error);
}

TEST_CASE("solve_spd: hand cases") {
  const std::vector<double> x = solve_spd(DenseMatrix::identity(3), {1, 2, 3});
  CHECK(x[0] == doctest::Approx(1.0));
  CHECK(x[1] == doctest::Approx(2.0));
  CHECK(x[2] == doctest::Approx(3.0));

  DenseMatrix d(2, 2, 0.0);
  d(0, 0) = 2.0;
  d(1, 1) = 4.0;
  const std::vector<double> x2 = solve_spd(d, {2, 4});
  CHECK(x2[0] == doctest::Approx(1.0));
  CHECK(x2[1] == doctest::Approx(1.0));
}

TEST_CASE("solve_spd: random SPD residual oracle") {
  Rng rng(53);
  const DenseMatrix g = random_matrix(10, 10, rng);
  DenseMatrix a = matmul(transpose(g), g);
  for (std::size_t i = 0; i < 10; ++i) a(i, i) += 0.5;
  std::vector<double> b(10);
  for (double& v : b) v = rng.gaussian();

  const std::vector<double> x = solve_spd(a, b);
  const std::vector<double> ax = matvec(a, x);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < 10; ++i) {
    num += (ax[i] - b[i]) * (ax[i] - b[i]);
    den += b[i] * b[i];
  }
  CHECK(std::sqrt(num / den) < 1e-8);
}

TEST_CASE("solve_spd: indefinite matrix reports smallest pivot") {
  DenseMatrix a = DenseMatrix::identity(2);
  a(1, 1) = -3.0;
  CHECK_THROWS_WITH_AS(solve_spd(a, {1, 1}),
                       doctest::Contains("smallest pivot"), std::runtime_error);
}
