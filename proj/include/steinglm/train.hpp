#ifndef STEINGLM_TRAIN_HPP
#define STEINGLM_TRAIN_HPP

#include <cstdint>
#include <vector>

#include "steinglm/dataset.hpp"
#include "steinglm/matrix.hpp"
#include "steinglm/metrics.hpp"
#include "steinglm/network.hpp"

namespace steinglm {

enum class SnapshotOn { ValidationLoss, ValidationMetric };

struct TrainConfig {
  std::size_t max_epochs = 200;
  std::size_t batch_size = 500;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;
  SnapshotOn snapshot_on = SnapshotOn::ValidationLoss;

  void validate() const;
};

/// Mini-batch size 500 capped at 20% of the training sample size.
std::size_t capped_batch_size(std::size_t train_n);

struct EpochRecord {
  std::size_t epoch = 0;        // 1-based
  double train_loss = 0.0;      // sample-weighted mean over the epoch's batches
  double val_loss = 0.0;
  double val_metric = 0.0;      // RMSE (regression) or AUC (classification)
};

using Trajectory = std::vector<EpochRecord>;

struct TrainedModel {
  NetworkParams best_params;
  NetworkParams final_params;
  Trajectory trajectory;
  std::size_t best_epoch = 0;  // 0 = never improved past the initial params
  bool divergent = false;
};

/// Mean squared error (regression) or clipped cross-entropy (classification).
double loss(const std::vector<double>& predictions, const std::vector<double>& targets,
            Task task);

/// Gradients shaped exactly like NetworkParams.
struct Gradients {
  std::vector<DenseMatrix> weights;
  std::vector<std::vector<double>> biases;
  DenseMatrix output_weights;
  double output_bias = 0.0;
};

/// Reverse-mode gradients of the batch loss. When batch_loss is given, it
/// receives the loss of the same forward pass the gradients came from.
Gradients backward(const NetworkParams& params, const DenseMatrix& x,
                   const std::vector<double>& y, const Architecture& arch, Task task,
                   double* batch_loss = nullptr);

struct AdamState {
  Gradients m;
  Gradients v;
  static AdamState zeros_like(const NetworkParams& params);
};

/// One bias-corrected Adam update; t is the 1-based step count.
void adam_step(NetworkParams& params, const Gradients& grads, AdamState& state,
               const TrainConfig& config, std::size_t t);

struct TrainData {
  const DenseMatrix& x_train;
  const std::vector<double>& y_train;
  const DenseMatrix& x_val;
  const std::vector<double>& y_val;
  Task task = Task::Regression;
};

TrainedModel train(const NetworkParams& init_params, const TrainData& data,
                   const Architecture& arch, const TrainConfig& config);

double evaluate_loss(const NetworkParams& params, const DenseMatrix& x,
                     const std::vector<double>& y, const Architecture& arch, Task task);

/// Test metric on held-out data: RMSE for regression, AUC for classification.
double evaluate_metric(const NetworkParams& params, const DenseMatrix& x,
                       const std::vector<double>& y, const Architecture& arch, Task task);

}  // namespace steinglm

#endif
