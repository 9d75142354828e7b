#ifndef STEINGLM_INIT_HPP
#define STEINGLM_INIT_HPP

#include <optional>
#include <string>
#include <vector>

#include "steinglm/dataset.hpp"
#include "steinglm/linalg.hpp"
#include "steinglm/matrix.hpp"
#include "steinglm/network.hpp"
#include "steinglm/rng.hpp"

namespace steinglm {

enum class HiddenInit { Stein, GlorotNormal, HeNormal, Orthogonal };
enum class OutputInit { Glm, SameAsHidden };

HiddenInit hidden_init_from_string(const std::string& s);
OutputInit output_init_from_string(const std::string& s);
std::string to_string(HiddenInit h);
std::string to_string(OutputInit o);

struct InitScheme {
  HiddenInit hidden = HiddenInit::Stein;
  OutputInit output = OutputInit::Glm;
  std::optional<double> alpha;  // empty = "auto" (1 for tanh, 4 for sigmoid)
  std::vector<double> lambda_grid = {1e-4, 1e-3, 1e-2, 1e-1, 1.0};
  // Experimental variant: re-standardize hidden activations before each
  // layer's cross-moment estimate. Off by default (the propagated values
  // feed the score function directly).
  bool restandardize_hidden = false;

  std::string id() const;
};

/// Eigenpairs of the empirical cross-moment matrix: eigenvalues estimate the
/// link's second-derivative diagonal, eigenvectors the projection indices.
struct SteinDecomposition {
  DenseMatrix sigma_hat;
  std::vector<double> eigenvalues;
  DenseMatrix eigenvectors;
};

/// Empirical second-order cross-moment (1/n) sum_i y_i (h_i h_i^T - I).
/// Output is exactly symmetric.
DenseMatrix score2_cross_moment(const DenseMatrix& h, const std::vector<double>& y);

SteinDecomposition stein_decompose(const DenseMatrix& h, const std::vector<double>& y);

/// One hidden layer's weights and bias: W = alpha * top-k eigenvectors of the
/// cross-moment matrix (by |eigenvalue|), b = -mean over rows of W^T h so the
/// mean pre-activation is zero. k > h.cols is an error unless allow_fill, in
/// which case the remaining columns are random orthonormal directions from
/// the orthogonal complement (seeded).
struct LayerInit {
  DenseMatrix weights;  // m x k
  std::vector<double> bias;
};
LayerInit stein_layer_init(const DenseMatrix& h, const std::vector<double>& y,
                           std::size_t width, double alpha, bool allow_fill = false,
                           std::uint64_t fill_seed = 0);

/// Normalized first-order Stein estimate (1/n) sum y_i x_i for single-index
/// data; errors when the estimate has no direction (norm < 1e-12).
std::vector<double> first_order_index(const DenseMatrix& x, const std::vector<double>& y);

DenseMatrix glorot_normal(std::size_t m, std::size_t k, Rng& rng);
DenseMatrix he_normal(std::size_t m, std::size_t k, Rng& rng);
DenseMatrix orthogonal_init(std::size_t m, std::size_t k, Rng& rng);

/// Data blocks an initializer may consume: the GLM output fit trains on
/// (x, y) and selects lambda on (x_val, y_val).
struct InitData {
  const DenseMatrix& x;
  const std::vector<double>& y;
  const DenseMatrix& x_val;
  const std::vector<double>& y_val;
  Task task = Task::Regression;
};

/// Full SteinGLM pipeline (hidden layers by the second-order Stein estimator,
/// output layer by GLM grid search).
NetworkParams stein_glm_init(const InitData& data, const Architecture& arch,
                             const InitScheme& scheme);

/// Dispatch across all hidden/output scheme combinations, including the
/// ablation arms (random hidden + GLM output, stein hidden + stein output).
NetworkParams init_network(const Architecture& arch, const InitScheme& scheme,
                           const InitData& data, Rng& rng);

/// Planted multi-index data for oracles: x ~ N(0, I_d),
/// y = sum_j c_j (beta_j^T x)^2 with B = [beta_1..beta_k] random orthonormal.
struct MultiIndexData {
  DenseMatrix x;
  std::vector<double> y;
  DenseMatrix planted_b;  // d x k
  std::vector<double> coefficients;
};
MultiIndexData make_multi_index_data(std::size_t dim, std::size_t k, std::size_t n,
                                     std::uint64_t seed, std::vector<double> coefficients = {});

/// Largest principal angle (degrees) between the column spans of two
/// orthonormal-column matrices of equal width.
double largest_principal_angle_deg(const DenseMatrix& u, const DenseMatrix& v);

}  // namespace steinglm

#endif
