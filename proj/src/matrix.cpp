#include "steinglm/matrix.hpp"

#include <cmath>
#include <stdexcept>

namespace steinglm {

DenseMatrix DenseMatrix::identity(std::size_t d) {
  DenseMatrix m(d, d, 0.0);
  for (std::size_t i = 0; i < d; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rws) {
  DenseMatrix m(rws.size(), rws.size() ? rws.begin()->size() : 0);
  std::size_t i = 0;
  for (const auto& row : rws) {
    if (row.size() != m.cols) throw std::invalid_argument("from_rows: ragged rows");
    std::size_t j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

bool DenseMatrix::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols != b.rows)
    throw std::invalid_argument("matmul: inner dimensions disagree (" +
                                std::to_string(a.cols) + " vs " + std::to_string(b.rows) + ")");
  DenseMatrix c(a.rows, b.cols, 0.0);
  // ikj order keeps the inner loop contiguous in both b and c.
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = &a.data[i * a.cols];
    double* crow = &c.data[i * c.cols];
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = &b.data[k * b.cols];
      for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

DenseMatrix matmul_at(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows != b.rows)
    throw std::invalid_argument("matmul_at: row counts disagree");
  DenseMatrix c(a.cols, b.cols, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = &a.data[i * a.cols];
    const double* brow = &b.data[i * b.cols];
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = arow[k];
      double* crow = &c.data[k * c.cols];
      for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

DenseMatrix matmul_bt(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols != b.cols)
    throw std::invalid_argument("matmul_bt: column counts disagree");
  DenseMatrix c(a.rows, b.rows, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = &a.data[i * a.cols];
    double* crow = &c.data[i * c.cols];
    for (std::size_t k = 0; k < b.rows; ++k) {
      const double* brow = &b.data[k * b.cols];
      double s = 0.0;
      for (std::size_t j = 0; j < a.cols; ++j) s += arow[j] * brow[j];
      crow[k] = s;
    }
  }
  return c;
}

DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix t(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
  return t;
}

std::vector<double> matvec(const DenseMatrix& a, const std::vector<double>& x) {
  if (x.size() != a.cols) throw std::invalid_argument("matvec: dimension mismatch");
  std::vector<double> y(a.rows, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols; ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

std::vector<double> matvec_t(const DenseMatrix& a, const std::vector<double>& x) {
  if (x.size() != a.rows) throw std::invalid_argument("matvec_t: dimension mismatch");
  std::vector<double> y(a.cols, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    for (std::size_t j = 0; j < a.cols; ++j) y[j] += a(i, j) * xi;
  }
  return y;
}

std::vector<double> col_means(const DenseMatrix& a) {
  std::vector<double> mu(a.cols, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) mu[j] += a(i, j);
  if (a.rows > 0)
    for (double& m : mu) m /= static_cast<double>(a.rows);
  return mu;
}

double frobenius_norm(const DenseMatrix& a) {
  double s = 0.0;
  for (double v : a.data) s += v * v;
  return std::sqrt(s);
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw std::invalid_argument("max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i)
    m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

void require_finite(const DenseMatrix& a, const std::string& who) {
  if (!a.all_finite()) throw std::invalid_argument(who + ": non-finite entries");
}

void require_finite(const std::vector<double>& v, const std::string& who) {
  for (double x : v)
    if (!std::isfinite(x)) throw std::invalid_argument(who + ": non-finite entries");
}

}  // namespace steinglm
