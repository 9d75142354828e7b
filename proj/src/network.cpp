#include "steinglm/network.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace steinglm {

void Architecture::validate() const {
  if (input_dim == 0) throw std::invalid_argument("Architecture: input_dim must be >= 1");
  if (hidden_widths.empty())
    throw std::invalid_argument("Architecture: at least one hidden layer required");
  for (std::size_t w : hidden_widths)
    if (w == 0) throw std::invalid_argument("Architecture: zero-width hidden layer");
}

void NetworkParams::require_shapes(const Architecture& arch) const {
  if (weights.size() != arch.depth() || biases.size() != arch.depth())
    throw std::invalid_argument("NetworkParams: layer count mismatch");
  for (std::size_t l = 0; l < arch.depth(); ++l) {
    if (weights[l].rows != arch.width_in(l) || weights[l].cols != arch.hidden_widths[l])
      throw std::invalid_argument("NetworkParams: weight shape mismatch at layer " +
                                  std::to_string(l + 1));
    if (biases[l].size() != arch.hidden_widths[l])
      throw std::invalid_argument("NetworkParams: bias shape mismatch at layer " +
                                  std::to_string(l + 1));
  }
  if (output_weights.rows != arch.hidden_widths.back() || output_weights.cols != 1)
    throw std::invalid_argument("NetworkParams: output weight shape mismatch");
}

bool NetworkParams::all_finite() const {
  for (const auto& w : weights)
    if (!w.all_finite()) return false;
  for (const auto& b : biases)
    for (double v : b)
      if (!std::isfinite(v)) return false;
  return output_weights.all_finite() && std::isfinite(output_bias);
}

namespace {

DenseMatrix affine(const DenseMatrix& h, const DenseMatrix& w, const std::vector<double>& b) {
  if (h.cols != w.rows) throw std::invalid_argument("forward: weight shape mismatch");
  DenseMatrix a(h.rows, w.cols);
  for (std::size_t i = 0; i < h.rows; ++i) {
    double* arow = &a.data[i * a.cols];
    for (std::size_t j = 0; j < a.cols; ++j) arow[j] = b[j];
    const double* hrow = &h.data[i * h.cols];
    for (std::size_t k = 0; k < h.cols; ++k) {
      const double hik = hrow[k];
      const double* wrow = &w.data[k * w.cols];
      for (std::size_t j = 0; j < a.cols; ++j) arow[j] += hik * wrow[j];
    }
  }
  return a;
}

DenseMatrix apply_activation(const DenseMatrix& a, Activation f) {
  DenseMatrix h = a;
  for (double& v : h.data) v = activate(f, v);
  return h;
}

}  // namespace

ForwardPass forward(const NetworkParams& params, const DenseMatrix& x,
                    const Architecture& arch) {
  if (x.cols != arch.input_dim)
    throw std::invalid_argument("forward: input has " + std::to_string(x.cols) +
                                " columns, expected " + std::to_string(arch.input_dim));
  params.require_shapes(arch);

  ForwardPass fp;
  fp.pre.reserve(arch.depth());
  fp.post.reserve(arch.depth());
  const DenseMatrix* h = &x;
  for (std::size_t l = 0; l < arch.depth(); ++l) {
    fp.pre.push_back(affine(*h, params.weights[l], params.biases[l]));
    fp.post.push_back(apply_activation(fp.pre.back(), arch.hidden_activation));
    h = &fp.post.back();
  }

  fp.output_pre.resize(x.rows);
  fp.predictions.resize(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) {
    double s = params.output_bias;
    for (std::size_t j = 0; j < h->cols; ++j) s += (*h)(i, j) * params.output_weights(j, 0);
    fp.output_pre[i] = s;
    fp.predictions[i] = activate(arch.output_activation, s);
  }
  return fp;
}

DenseMatrix propagate_hidden(const std::vector<DenseMatrix>& weights,
                             const std::vector<std::vector<double>>& biases,
                             const DenseMatrix& x, Activation hidden) {
  DenseMatrix h = x;
  for (std::size_t l = 0; l < weights.size(); ++l)
    h = apply_activation(affine(h, weights[l], biases[l]), hidden);
  return h;
}

std::vector<double> predict(const NetworkParams& params, const DenseMatrix& x,
                            const Architecture& arch) {
  if (x.cols != arch.input_dim)
    throw std::invalid_argument("predict: input width mismatch");
  params.require_shapes(arch);
  const DenseMatrix h =
      propagate_hidden(params.weights, params.biases, x, arch.hidden_activation);
  std::vector<double> yhat(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) {
    double s = params.output_bias;
    for (std::size_t j = 0; j < h.cols; ++j) s += h(i, j) * params.output_weights(j, 0);
    yhat[i] = activate(arch.output_activation, s);
  }
  return yhat;
}

}  // namespace steinglm
