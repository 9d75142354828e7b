#ifndef STEINGLM_NETWORK_HPP
#define STEINGLM_NETWORK_HPP

#include <cstddef>
#include <vector>

#include "steinglm/activations.hpp"
#include "steinglm/matrix.hpp"

namespace steinglm {

/// Feedforward network shape: input width, L hidden layers, scalar output.
struct Architecture {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_widths;
  Activation hidden_activation = Activation::Tanh;
  Activation output_activation = Activation::Identity;

  std::size_t depth() const { return hidden_widths.size(); }
  /// Width of layer l's input (l = 0 means the data itself).
  std::size_t width_in(std::size_t l) const {
    return l == 0 ? input_dim : hidden_widths[l - 1];
  }
  void validate() const;
};

/// All weights and biases. weights[l] has shape width_in(l) x hidden_widths[l]
/// and acts on row-major batches as H_prev * W; output_weights is N_L x 1.
struct NetworkParams {
  std::vector<DenseMatrix> weights;
  std::vector<std::vector<double>> biases;
  DenseMatrix output_weights;
  double output_bias = 0.0;

  void require_shapes(const Architecture& arch) const;
  bool all_finite() const;
};

/// Per-layer values from one forward pass: pre[l] = H_{l-1} W_l + b_l,
/// post[l] = f(pre[l]), predictions = f_out(post[L] w_o + b_o).
struct ForwardPass {
  std::vector<DenseMatrix> pre;
  std::vector<DenseMatrix> post;
  std::vector<double> output_pre;
  std::vector<double> predictions;
};

ForwardPass forward(const NetworkParams& params, const DenseMatrix& x,
                    const Architecture& arch);

/// Hidden-layer propagation only; returns h_L (h_0 = x when depth 0).
DenseMatrix propagate_hidden(const std::vector<DenseMatrix>& weights,
                             const std::vector<std::vector<double>>& biases,
                             const DenseMatrix& x, Activation hidden);

std::vector<double> predict(const NetworkParams& params, const DenseMatrix& x,
                            const Architecture& arch);

}  // namespace steinglm

#endif
