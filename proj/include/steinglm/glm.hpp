#ifndef STEINGLM_GLM_HPP
#define STEINGLM_GLM_HPP

#include <vector>

#include "steinglm/dataset.hpp"
#include "steinglm/matrix.hpp"

namespace steinglm {

struct GlmFit {
  std::vector<double> weights;
  double intercept = 0.0;
  double lambda = 0.0;
  Task task = Task::Regression;
  bool converged = true;
  std::size_t iterations = 0;
};

/// Ridge regression minimizing (1/n) sum (y_i - yhat_i)^2 + lambda ||w||^2
/// with yhat = H w + b. The intercept is never penalized (fit on centered
/// data). lambda = 0 requires a nonsingular centered Gram matrix.
GlmFit fit_ridge(const DenseMatrix& h, const std::vector<double>& y, double lambda);

/// L2-regularized logistic regression, cross-entropy objective
/// -(1/n) sum [y log p + (1-y) log(1-p)] + lambda ||w||^2, p = sigmoid(Hw+b),
/// intercept unpenalized. IRLS with step halving; falls back to gradient
/// descent when the weighted system is ill-conditioned. Converged means the
/// gradient norm dropped below 1e-8 within 100 IRLS iterations.
GlmFit fit_logistic(const DenseMatrix& h, const std::vector<double>& y, double lambda);

/// Linear scores H w + b (the regression prediction; apply sigmoid for
/// probabilities — AUC is rank-based so raw scores suffice).
std::vector<double> glm_scores(const GlmFit& fit, const DenseMatrix& h);

double logistic_objective(const DenseMatrix& h, const std::vector<double>& y,
                          const std::vector<double>& w, double b, double lambda);

/// Gradient of the logistic objective with respect to (w, b); the intercept
/// component is last.
std::vector<double> logistic_gradient(const DenseMatrix& h, const std::vector<double>& y,
                                      const std::vector<double>& w, double b, double lambda);

/// Fit one GlmFit per distinct lambda on the training block, keep the one
/// with the best validation metric (RMSE down for regression, AUC up for
/// classification); exact ties go to the larger lambda.
GlmFit grid_search(const DenseMatrix& h_tr, const std::vector<double>& y_tr,
                   const DenseMatrix& h_val, const std::vector<double>& y_val,
                   const std::vector<double>& grid, Task task);

}  // namespace steinglm

#endif
