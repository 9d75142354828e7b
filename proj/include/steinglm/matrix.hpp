#ifndef STEINGLM_MATRIX_HPP
#define STEINGLM_MATRIX_HPP

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace steinglm {

/// Dense row-major matrix of doubles. data.size() == rows * cols always.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  static DenseMatrix identity(std::size_t d);
  static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rws);

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  bool all_finite() const;
};

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix transpose(const DenseMatrix& a);

/// A^T B and A B^T without materializing the transpose.
DenseMatrix matmul_at(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix matmul_bt(const DenseMatrix& a, const DenseMatrix& b);

/// y = A x for a length-cols vector.
std::vector<double> matvec(const DenseMatrix& a, const std::vector<double>& x);
/// y = A^T x for a length-rows vector.
std::vector<double> matvec_t(const DenseMatrix& a, const std::vector<double>& x);

std::vector<double> col_means(const DenseMatrix& a);

double frobenius_norm(const DenseMatrix& a);
double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);

/// Throws std::invalid_argument naming `who` if any entry is NaN/Inf.
void require_finite(const DenseMatrix& a, const std::string& who);
void require_finite(const std::vector<double>& v, const std::string& who);

}  // namespace steinglm

#endif
