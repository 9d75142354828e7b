#include "steinglm/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace steinglm {

namespace {

double offdiag_frobenius(const DenseMatrix& s) {
  double acc = 0.0;
  for (std::size_t i = 0; i < s.rows; ++i)
    for (std::size_t j = i + 1; j < s.cols; ++j) acc += 2.0 * s(i, j) * s(i, j);
  return std::sqrt(acc);
}

// Flip each column so its largest-|entry| component (first index on ties)
// is non-negative. Shared by sym_eig and qr_orthonormal.
void fix_column_signs(DenseMatrix& v) {
  for (std::size_t j = 0; j < v.cols; ++j) {
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < v.rows; ++i) {
      const double a = std::abs(v(i, j));
      if (a > best) {
        best = a;
        arg = i;
      }
    }
    if (v(arg, j) < 0.0)
      for (std::size_t i = 0; i < v.rows; ++i) v(i, j) = -v(i, j);
  }
}

}  // namespace

EigenResult sym_eig(const DenseMatrix& a) {
  if (a.rows != a.cols) throw std::invalid_argument("sym_eig: matrix not square");
  if (a.rows == 0) throw std::invalid_argument("sym_eig: empty matrix");
  require_finite(a, "sym_eig");

  const std::size_t d = a.rows;
  DenseMatrix s(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) s(i, j) = 0.5 * (a(i, j) + a(j, i));

  DenseMatrix v = DenseMatrix::identity(d);
  const double stop = 1e-12 * std::max(1.0, frobenius_norm(s));

  for (int sweep = 0; sweep < 100 && offdiag_frobenius(s) > stop; ++sweep) {
    for (std::size_t p = 0; p + 1 < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        const double spq = s(p, q);
        if (spq == 0.0) continue;
        const double theta = (s(q, q) - s(p, p)) / (2.0 * spq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;

        for (std::size_t i = 0; i < d; ++i) {
          const double sip = s(i, p), siq = s(i, q);
          s(i, p) = c * sip - sn * siq;
          s(i, q) = sn * sip + c * siq;
        }
        for (std::size_t i = 0; i < d; ++i) {
          const double spi = s(p, i), sqi = s(q, i);
          s(p, i) = c * spi - sn * sqi;
          s(q, i) = sn * spi + c * sqi;
        }
        for (std::size_t i = 0; i < d; ++i) {
          const double vip = v(i, p), viq = v(i, q);
          v(i, p) = c * vip - sn * viq;
          v(i, q) = sn * vip + c * viq;
        }
      }
    }
  }

  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return std::abs(s(x, x)) > std::abs(s(y, y));
  });

  EigenResult res;
  res.values.resize(d);
  res.vectors = DenseMatrix(d, d);
  for (std::size_t j = 0; j < d; ++j) {
    res.values[j] = s(order[j], order[j]);
    for (std::size_t i = 0; i < d; ++i) res.vectors(i, j) = v(i, order[j]);
  }
  fix_column_signs(res.vectors);
  require_finite(res.vectors, "sym_eig output");
  return res;
}

DenseMatrix qr_orthonormal(const DenseMatrix& g) {
  const std::size_t d = g.rows, k = g.cols;
  if (d < k)
    throw std::invalid_argument("qr_orthonormal: fewer rows than columns (" +
                                std::to_string(d) + " < " + std::to_string(k) + ")");
  if (k == 0) throw std::invalid_argument("qr_orthonormal: zero columns");
  require_finite(g, "qr_orthonormal");

  // Householder factorization of a working copy; reflectors stored in-place.
  DenseMatrix r = g;
  std::vector<double> beta(k, 0.0);
  const double scale = frobenius_norm(g);
  for (std::size_t j = 0; j < k; ++j) {
    double norm = 0.0;
    for (std::size_t i = j; i < d; ++i) norm += r(i, j) * r(i, j);
    norm = std::sqrt(norm);
    if (norm <= 1e-12 * std::max(1.0, scale))
      throw std::runtime_error("qr_orthonormal: rank-deficient input at column " +
                               std::to_string(j));
    const double alpha = (r(j, j) >= 0.0) ? -norm : norm;
    const double v0 = r(j, j) - alpha;
    beta[j] = -v0 / alpha;  // = v0^2 + tail == 2 part folded below
    // Normalize reflector so v[j] = 1.
    for (std::size_t i = j + 1; i < d; ++i) r(i, j) /= v0;
    r(j, j) = alpha;
    // Apply reflector to the remaining columns.
    for (std::size_t c = j + 1; c < k; ++c) {
      double dot = r(j, c);
      for (std::size_t i = j + 1; i < d; ++i) dot += r(i, j) * r(i, c);
      dot *= beta[j];
      r(j, c) -= dot;
      for (std::size_t i = j + 1; i < d; ++i) r(i, c) -= dot * r(i, j);
    }
  }

  // Accumulate Q's first k columns: Q = H_0 ... H_{k-1} [I_k; 0].
  DenseMatrix q(d, k, 0.0);
  for (std::size_t j = 0; j < k; ++j) q(j, j) = 1.0;
  for (std::size_t jr = k; jr-- > 0;) {
    for (std::size_t c = 0; c < k; ++c) {
      double dot = q(jr, c);
      for (std::size_t i = jr + 1; i < d; ++i) dot += r(i, jr) * q(i, c);
      dot *= beta[jr];
      q(jr, c) -= dot;
      for (std::size_t i = jr + 1; i < d; ++i) q(i, c) -= dot * r(i, jr);
    }
  }

  fix_column_signs(q);
  require_finite(q, "qr_orthonormal output");
  return q;
}

std::vector<double> solve_spd(const DenseMatrix& a, const std::vector<double>& b) {
  if (a.rows != a.cols) throw std::invalid_argument("solve_spd: matrix not square");
  if (b.size() != a.rows) throw std::invalid_argument("solve_spd: rhs length mismatch");
  require_finite(a, "solve_spd");
  const std::size_t d = a.rows;

  DenseMatrix l(d, d, 0.0);
  double min_pivot = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < d; ++j) {
    double diag = a(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    min_pivot = std::min(min_pivot, diag);
    if (diag <= 0.0 || !std::isfinite(diag))
      throw std::runtime_error("solve_spd: matrix not positive definite (smallest pivot " +
                               std::to_string(min_pivot) + ")");
    l(j, j) = std::sqrt(diag);
    for (std::size_t i = j + 1; i < d; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }

  std::vector<double> y(d), x(d);
  for (std::size_t i = 0; i < d; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
    y[i] = s / l(i, i);
  }
  for (std::size_t i = d; i-- > 0;) {
    double s = y[i];
    for (std::size_t k = i + 1; k < d; ++k) s -= l(k, i) * x[k];
    x[i] = s / l(i, i);
  }
  return x;
}

}  // namespace steinglm
