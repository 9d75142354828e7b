#include "steinglm/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "steinglm/rng.hpp"

namespace steinglm {

void TrainConfig::validate() const {
  if (batch_size == 0) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (learning_rate <= 0.0) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
  if (adam_beta1 <= 0.0 || adam_beta1 >= 1.0 || adam_beta2 <= 0.0 || adam_beta2 >= 1.0)
    throw std::invalid_argument("TrainConfig: betas must lie in (0, 1)");
}

std::size_t capped_batch_size(std::size_t train_n) {
  const std::size_t cap = static_cast<std::size_t>(0.2 * static_cast<double>(train_n));
  return std::max<std::size_t>(1, std::min<std::size_t>(500, cap));
}

double loss(const std::vector<double>& predictions, const std::vector<double>& targets,
            Task task) {
  if (predictions.size() != targets.size() || predictions.empty())
    throw std::invalid_argument("loss: length mismatch or empty input");
  const double n = static_cast<double>(predictions.size());
  double acc = 0.0;
  if (task == Task::Regression) {
    for (std::size_t i = 0; i < predictions.size(); ++i) {
      const double d = targets[i] - predictions[i];
      acc += d * d;
    }
  } else {
    constexpr double eps = 1e-12;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
      const double p = std::clamp(predictions[i], eps, 1.0 - eps);
      acc -= targets[i] * std::log(p) + (1.0 - targets[i]) * std::log(1.0 - p);
    }
  }
  return acc / n;
}

Gradients backward(const NetworkParams& params, const DenseMatrix& x,
                   const std::vector<double>& y, const Architecture& arch, Task task,
                   double* batch_loss) {
  if (y.size() != x.rows) throw std::invalid_argument("backward: x/y length mismatch");
  const ForwardPass fp = forward(params, x, arch);
  if (batch_loss) *batch_loss = loss(fp.predictions, y, task);
  const std::size_t n = x.rows;
  const std::size_t depth = arch.depth();
  const double inv_n = 1.0 / static_cast<double>(n);

  // Output-layer delta dL/da_o. For (sigmoid, cross-entropy) the canonical
  // simplification (yhat - y)/n is exact; MSE composes through f_out'.
  std::vector<double> delta_out(n);
  if (task == Task::BinaryClassification && arch.output_activation == Activation::Sigmoid) {
    for (std::size_t i = 0; i < n; ++i) delta_out[i] = (fp.predictions[i] - y[i]) * inv_n;
  } else if (task == Task::Regression) {
    for (std::size_t i = 0; i < n; ++i) {
      const double dyhat = 2.0 * (fp.predictions[i] - y[i]) * inv_n;
      delta_out[i] =
          dyhat * activate_derivative_from_value(arch.output_activation, fp.predictions[i]);
    }
  } else {
    // Cross-entropy through an arbitrary output activation.
    constexpr double eps = 1e-12;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = std::clamp(fp.predictions[i], eps, 1.0 - eps);
      const double dyhat = (p - y[i]) / (p * (1.0 - p)) * inv_n;
      delta_out[i] =
          dyhat * activate_derivative_from_value(arch.output_activation, fp.predictions[i]);
    }
  }

  Gradients g;
  g.weights.resize(depth);
  g.biases.resize(depth);

  const DenseMatrix& h_last = fp.post.back();
  g.output_weights = DenseMatrix(h_last.cols, 1, 0.0);
  g.output_bias = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    g.output_bias += delta_out[i];
    for (std::size_t j = 0; j < h_last.cols; ++j)
      g.output_weights(j, 0) += h_last(i, j) * delta_out[i];
  }

  // delta for the last hidden layer: (delta_out * w_o^T) . f'(a_L)
  DenseMatrix delta(n, h_last.cols);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < h_last.cols; ++j)
      delta(i, j) = delta_out[i] * params.output_weights(j, 0) *
                    activate_derivative_from_value(arch.hidden_activation, h_last(i, j));

  for (std::size_t l = depth; l-- > 0;) {
    const DenseMatrix& h_prev = (l == 0) ? x : fp.post[l - 1];
    g.weights[l] = matmul_at(h_prev, delta);
    g.biases[l].assign(delta.cols, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < delta.cols; ++j) g.biases[l][j] += delta(i, j);

    if (l == 0) break;
    DenseMatrix next = matmul_bt(delta, params.weights[l]);
    const DenseMatrix& h = fp.post[l - 1];
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < next.cols; ++j)
        next(i, j) *= activate_derivative_from_value(arch.hidden_activation, h(i, j));
    delta = std::move(next);
  }
  return g;
}

AdamState AdamState::zeros_like(const NetworkParams& params) {
  AdamState s;
  auto zero_grads = [&params]() {
    Gradients g;
    for (const auto& w : params.weights) g.weights.emplace_back(w.rows, w.cols, 0.0);
    for (const auto& b : params.biases) g.biases.emplace_back(b.size(), 0.0);
    g.output_weights = DenseMatrix(params.output_weights.rows, 1, 0.0);
    g.output_bias = 0.0;
    return g;
  };
  s.m = zero_grads();
  s.v = zero_grads();
  return s;
}

namespace {

void adam_update_block(std::vector<double>& p, const std::vector<double>& g,
                       std::vector<double>& m, std::vector<double>& v,
                       const TrainConfig& c, double bc1, double bc2,
                       const std::string& where) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!std::isfinite(g[i]))
      throw std::runtime_error("adam_step: non-finite gradient in " + where);
    m[i] = c.adam_beta1 * m[i] + (1.0 - c.adam_beta1) * g[i];
    v[i] = c.adam_beta2 * v[i] + (1.0 - c.adam_beta2) * g[i] * g[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    p[i] -= c.learning_rate * mhat / (std::sqrt(vhat) + c.adam_epsilon);
  }
}

}  // namespace

void adam_step(NetworkParams& params, const Gradients& grads, AdamState& state,
               const TrainConfig& config, std::size_t t) {
  if (t == 0) throw std::invalid_argument("adam_step: step count is 1-based");
  const double bc1 = 1.0 - std::pow(config.adam_beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(config.adam_beta2, static_cast<double>(t));

  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    adam_update_block(params.weights[l].data, grads.weights[l].data,
                      state.m.weights[l].data, state.v.weights[l].data, config, bc1, bc2,
                      "hidden layer " + std::to_string(l + 1) + " weights");
    adam_update_block(params.biases[l], grads.biases[l], state.m.biases[l],
                      state.v.biases[l], config, bc1, bc2,
                      "hidden layer " + std::to_string(l + 1) + " biases");
  }
  adam_update_block(params.output_weights.data, grads.output_weights.data,
                    state.m.output_weights.data, state.v.output_weights.data, config, bc1,
                    bc2, "output weights");
  std::vector<double> pb{params.output_bias}, gb{grads.output_bias},
      mb{state.m.output_bias}, vb{state.v.output_bias};
  adam_update_block(pb, gb, mb, vb, config, bc1, bc2, "output bias");
  params.output_bias = pb[0];
  state.m.output_bias = mb[0];
  state.v.output_bias = vb[0];
}

double evaluate_loss(const NetworkParams& params, const DenseMatrix& x,
                     const std::vector<double>& y, const Architecture& arch, Task task) {
  return loss(predict(params, x, arch), y, task);
}

double evaluate_metric(const NetworkParams& params, const DenseMatrix& x,
                       const std::vector<double>& y, const Architecture& arch, Task task) {
  const std::vector<double> yhat = predict(params, x, arch);
  return task == Task::Regression ? rmse(yhat, y) : auc(yhat, y);
}

TrainedModel train(const NetworkParams& init_params, const TrainData& data,
                   const Architecture& arch, const TrainConfig& config) {
  config.validate();
  init_params.require_shapes(arch);
  const std::size_t n = data.x_train.rows;
  if (config.batch_size > n)
    throw std::invalid_argument("train: batch_size exceeds training sample size");

  TrainedModel model;
  model.best_params = init_params;
  model.final_params = init_params;
  model.best_epoch = 0;

  NetworkParams params = init_params;
  AdamState state = AdamState::zeros_like(params);
  std::size_t t = 0;

  double best_score = std::numeric_limits<double>::infinity();
  const bool metric_snapshot = config.snapshot_on == SnapshotOn::ValidationMetric;
  // Snapshot score is minimized; AUC flips sign so larger is better.
  const double metric_sign =
      (metric_snapshot && data.task == Task::BinaryClassification) ? -1.0 : 1.0;

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    Rng shuffle_rng(mix64(config.seed ^ mix64(epoch)));
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    bool bad = false;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t stop = std::min(n, start + config.batch_size);
      std::vector<std::size_t> idx(order.begin() + start, order.begin() + stop);
      const DenseMatrix xb = take_rows(data.x_train, idx);
      const std::vector<double> yb = take(data.y_train, idx);

      double batch_loss = 0.0;
      const Gradients grads = backward(params, xb, yb, arch, data.task, &batch_loss);
      if (!std::isfinite(batch_loss)) {
        bad = true;
        break;
      }
      loss_sum += batch_loss * static_cast<double>(idx.size());
      adam_step(params, grads, state, config, ++t);
    }
    if (bad) {
      model.divergent = true;
      break;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(n);
    const std::vector<double> val_pred = predict(params, data.x_val, arch);
    rec.val_loss = loss(val_pred, data.y_val, data.task);
    if (!std::isfinite(rec.val_loss)) {
      model.divergent = true;
      break;
    }
    rec.val_metric = data.task == Task::Regression ? rmse(val_pred, data.y_val)
                                                   : auc(val_pred, data.y_val);
    model.trajectory.push_back(rec);

    const double score = metric_snapshot ? metric_sign * rec.val_metric : rec.val_loss;
    if (score < best_score) {
      best_score = score;
      model.best_params = params;
      model.best_epoch = epoch;
    }
  }

  model.final_params = params;
  return model;
}

}  // namespace steinglm
