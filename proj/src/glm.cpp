#include "steinglm/glm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "steinglm/linalg.hpp"
#include "steinglm/metrics.hpp"

namespace steinglm {

namespace {

constexpr double kProbClip = 1e-12;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Gram matrix (1/n) H_c^T H_c + lambda I on centered columns.
DenseMatrix centered_gram(const DenseMatrix& h, const std::vector<double>& mu, double lambda) {
  const std::size_t n = h.rows, m = h.cols;
  DenseMatrix g(m, m, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < m; ++a) {
      const double va = h(i, a) - mu[a];
      for (std::size_t b = a; b < m; ++b) g(a, b) += va * (h(i, b) - mu[b]);
    }
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a; b < m; ++b) {
      g(a, b) /= static_cast<double>(n);
      g(b, a) = g(a, b);
    }
  for (std::size_t a = 0; a < m; ++a) g(a, a) += lambda;
  return g;
}

}  // namespace

GlmFit fit_ridge(const DenseMatrix& h, const std::vector<double>& y, double lambda) {
  if (h.rows == 0 || h.rows != y.size())
    throw std::invalid_argument("fit_ridge: empty input or length mismatch");
  if (lambda < 0.0) throw std::invalid_argument("fit_ridge: lambda must be >= 0");
  require_finite(h, "fit_ridge");
  require_finite(y, "fit_ridge");

  const std::size_t n = h.rows, m = h.cols;
  const std::vector<double> mu = col_means(h);
  double ybar = 0.0;
  for (double v : y) ybar += v;
  ybar /= static_cast<double>(n);

  std::vector<double> rhs(m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double yc = y[i] - ybar;
    for (std::size_t j = 0; j < m; ++j) rhs[j] += (h(i, j) - mu[j]) * yc;
  }
  for (double& v : rhs) v /= static_cast<double>(n);

  GlmFit fit;
  fit.task = Task::Regression;
  fit.lambda = lambda;
  fit.iterations = 0;
  try {
    fit.weights = solve_spd(centered_gram(h, mu, lambda), rhs);
  } catch (const std::runtime_error&) {
    if (lambda > 0.0) throw;
    // Singular at lambda = 0: probe for the smallest decade that works.
    double suggestion = 0.0;
    for (double probe = 1e-12; probe <= 1.0; probe *= 10.0) {
      try {
        solve_spd(centered_gram(h, mu, probe), rhs);
        suggestion = probe;
        break;
      } catch (const std::runtime_error&) {
      }
    }
    throw std::runtime_error(
        "fit_ridge: singular system at lambda = 0; smallest working lambda is about " +
        std::to_string(suggestion));
  }

  fit.intercept = ybar;
  for (std::size_t j = 0; j < m; ++j) fit.intercept -= mu[j] * fit.weights[j];
  return fit;
}

double logistic_objective(const DenseMatrix& h, const std::vector<double>& y,
                          const std::vector<double>& w, double b, double lambda) {
  const std::size_t n = h.rows;
  double ce = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = b;
    for (std::size_t j = 0; j < h.cols; ++j) s += h(i, j) * w[j];
    const double p = std::clamp(sigmoid(s), kProbClip, 1.0 - kProbClip);
    ce -= y[i] * std::log(p) + (1.0 - y[i]) * std::log(1.0 - p);
  }
  ce /= static_cast<double>(n);
  double reg = 0.0;
  for (double v : w) reg += v * v;
  return ce + lambda * reg;
}

std::vector<double> logistic_gradient(const DenseMatrix& h, const std::vector<double>& y,
                                      const std::vector<double>& w, double b, double lambda) {
  const std::size_t n = h.rows, m = h.cols;
  std::vector<double> g(m + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b;
    for (std::size_t j = 0; j < m; ++j) s += h(i, j) * w[j];
    const double resid = sigmoid(s) - y[i];
    for (std::size_t j = 0; j < m; ++j) g[j] += h(i, j) * resid;
    g[m] += resid;
  }
  for (double& v : g) v /= static_cast<double>(n);
  for (std::size_t j = 0; j < m; ++j) g[j] += 2.0 * lambda * w[j];
  return g;
}

namespace {

// Weighted Newton system for one IRLS step; returns false (leaving delta
// untouched) when the system looks ill-conditioned.
bool irls_step(const DenseMatrix& h, const std::vector<double>& w, double b,
               double lambda, const std::vector<double>& grad,
               std::vector<double>& delta) {
  const std::size_t n = h.rows, m = h.cols;
  DenseMatrix hess(m + 1, m + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b;
    for (std::size_t j = 0; j < m; ++j) s += h(i, j) * w[j];
    const double p = sigmoid(s);
    const double r = std::max(p * (1.0 - p), 1e-10);
    for (std::size_t a = 0; a < m; ++a) {
      const double ha = h(i, a) * r;
      for (std::size_t c = a; c < m; ++c) hess(a, c) += ha * h(i, c);
      hess(a, m) += ha;
    }
    hess(m, m) += r;
  }
  for (std::size_t a = 0; a <= m; ++a)
    for (std::size_t c = a; c <= m; ++c) {
      hess(a, c) /= static_cast<double>(n);
      hess(c, a) = hess(a, c);
    }
  for (std::size_t a = 0; a < m; ++a) hess(a, a) += 2.0 * lambda;

  double dmax = 0.0, dmin = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a <= m; ++a) {
    dmax = std::max(dmax, hess(a, a));
    dmin = std::min(dmin, hess(a, a));
  }
  if (!(dmin > 0.0) || dmax / dmin > 1e12) return false;

  std::vector<double> rhs(m + 1);
  for (std::size_t j = 0; j <= m; ++j) rhs[j] = -grad[j];
  try {
    delta = solve_spd(hess, rhs);
  } catch (const std::runtime_error&) {
    return false;
  }
  return true;
}

}  // namespace

GlmFit fit_logistic(const DenseMatrix& h, const std::vector<double>& y, double lambda) {
  if (h.rows == 0 || h.rows != y.size())
    throw std::invalid_argument("fit_logistic: empty input or length mismatch");
  if (lambda <= 0.0) throw std::invalid_argument("fit_logistic: lambda must be > 0");
  for (double v : y)
    if (v != 0.0 && v != 1.0) throw std::invalid_argument("fit_logistic: y must be binary 0/1");
  require_finite(h, "fit_logistic");

  const std::size_t m = h.cols;
  GlmFit fit;
  fit.task = Task::BinaryClassification;
  fit.lambda = lambda;
  fit.weights.assign(m, 0.0);
  fit.intercept = 0.0;

  double obj = logistic_objective(h, y, fit.weights, fit.intercept, lambda);
  bool fallback_gd = false;

  for (std::size_t it = 0; it < 100; ++it) {
    const std::vector<double> grad =
        logistic_gradient(h, y, fit.weights, fit.intercept, lambda);
    if (norm2(grad) < 1e-8) {
      fit.converged = true;
      fit.iterations = it;
      return fit;
    }

    std::vector<double> delta;
    if (!irls_step(h, fit.weights, fit.intercept, lambda, grad, delta)) {
      fallback_gd = true;
      break;
    }

    // Step halving keeps the objective monotone.
    double step = 1.0;
    bool accepted = false;
    for (int halvings = 0; halvings < 40; ++halvings) {
      std::vector<double> w_try = fit.weights;
      for (std::size_t j = 0; j < m; ++j) w_try[j] += step * delta[j];
      const double b_try = fit.intercept + step * delta[m];
      const double obj_try = logistic_objective(h, y, w_try, b_try, lambda);
      if (obj_try <= obj) {
        fit.weights = std::move(w_try);
        fit.intercept = b_try;
        obj = obj_try;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      fallback_gd = true;
      break;
    }
  }

  if (fallback_gd) {
    // Plain gradient descent with backtracking; slow but dependable.
    double lr = 1.0;
    for (std::size_t it = 0; it < 50000; ++it) {
      const std::vector<double> grad =
          logistic_gradient(h, y, fit.weights, fit.intercept, lambda);
      const double gn = norm2(grad);
      if (gn < 1e-8) {
        fit.converged = true;
        fit.iterations = it;
        return fit;
      }
      double step = lr;
      for (int bt = 0; bt < 60; ++bt) {
        std::vector<double> w_try = fit.weights;
        for (std::size_t j = 0; j < m; ++j) w_try[j] -= step * grad[j];
        const double b_try = fit.intercept - step * grad[m];
        const double obj_try = logistic_objective(h, y, w_try, b_try, lambda);
        if (obj_try < obj) {
          fit.weights = std::move(w_try);
          fit.intercept = b_try;
          obj = obj_try;
          lr = step * 2.0;
          break;
        }
        step *= 0.5;
      }
    }
  }

  fit.converged =
      norm2(logistic_gradient(h, y, fit.weights, fit.intercept, lambda)) < 1e-8;
  fit.iterations = 100;
  return fit;
}

std::vector<double> glm_scores(const GlmFit& fit, const DenseMatrix& h) {
  if (h.cols != fit.weights.size())
    throw std::invalid_argument("glm_scores: feature width mismatch");
  std::vector<double> s(h.rows, fit.intercept);
  for (std::size_t i = 0; i < h.rows; ++i)
    for (std::size_t j = 0; j < h.cols; ++j) s[i] += h(i, j) * fit.weights[j];
  return s;
}

GlmFit grid_search(const DenseMatrix& h_tr, const std::vector<double>& y_tr,
                   const DenseMatrix& h_val, const std::vector<double>& y_val,
                   const std::vector<double>& grid, Task task) {
  if (grid.empty()) throw std::invalid_argument("grid_search: empty lambda grid");
  std::vector<double> lambdas = grid;
  std::sort(lambdas.begin(), lambdas.end());
  lambdas.erase(std::unique(lambdas.begin(), lambdas.end()), lambdas.end());

  GlmFit best;
  double best_metric = 0.0;
  bool have = false;
  for (double lam : lambdas) {
    GlmFit fit = task == Task::Regression ? fit_ridge(h_tr, y_tr, lam)
                                          : fit_logistic(h_tr, y_tr, lam);
    const std::vector<double> scores = glm_scores(fit, h_val);
    const double metric =
        task == Task::Regression ? rmse(scores, y_val) : auc(scores, y_val);
    const bool better = !have || (task == Task::Regression ? metric <= best_metric
                                                           : metric >= best_metric);
    if (better) {  // non-strict, ascending lambda: ties land on the larger one
      best = std::move(fit);
      best_metric = metric;
      have = true;
    }
  }
  return best;
}

}  // namespace steinglm
