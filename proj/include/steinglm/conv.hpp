#ifndef STEINGLM_CONV_HPP
#define STEINGLM_CONV_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "steinglm/activations.hpp"
#include "steinglm/matrix.hpp"

namespace steinglm {

struct ImageBatch {
  std::size_t n = 0;
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> data;  // ((i * channels + c) * height + r) * width + col

  ImageBatch() = default;
  ImageBatch(std::size_t n_, std::size_t c_, std::size_t h_, std::size_t w_)
      : n(n_), channels(c_), height(h_), width(w_), data(n_ * c_ * h_ * w_, 0.0) {}

  double& at(std::size_t i, std::size_t c, std::size_t r, std::size_t col) {
    return data[((i * channels + c) * height + r) * width + col];
  }
  double at(std::size_t i, std::size_t c, std::size_t r, std::size_t col) const {
    return data[((i * channels + c) * height + r) * width + col];
  }
};

enum class Padding { Same, Valid };

struct ConvLayerSpec {
  std::size_t filter_h = 3;
  std::size_t filter_w = 3;
  std::size_t filters = 1;
  std::size_t stride = 1;
  Padding padding = Padding::Same;
};

/// Spatial output size for one axis. Same padding: ceil(extent / stride),
/// zero fill split with the extra pixel on the bottom/right. Valid:
/// floor((extent - filter) / stride) + 1.
std::size_t conv_output_extent(std::size_t extent, std::size_t filter, std::size_t stride,
                               Padding padding);

struct PatchMatrix {
  DenseMatrix rows;  // (n * patches_per_image) x (channels * filter_h * filter_w)
  std::size_t patches_per_image = 0;
  std::size_t out_h = 0;
  std::size_t out_w = 0;
};

/// Flatten every filter position into one row (channel-major, then row-major
/// within each channel); patch rows are ordered (image, position-row-major).
PatchMatrix extract_patches(const ImageBatch& images, const ConvLayerSpec& spec);

/// Stein filter-bank initialization: patch matrix with the image's label
/// replicated across its patches, patch columns standardized, then the
/// top-Q cross-moment eigenvectors scaled by the activation's factor.
/// When n * P exceeds row_budget, a seeded uniform subsample of patches
/// estimates the cross-moment instead. Returns (channels*l_h*l_w) x Q.
DenseMatrix stein_conv_init(const ImageBatch& images, const std::vector<double>& y,
                            const ConvLayerSpec& spec, Activation activation,
                            std::size_t row_budget = 2'000'000,
                            std::uint64_t subsample_seed = 0);

ImageBatch conv_forward(const ImageBatch& images, const DenseMatrix& filters,
                        const ConvLayerSpec& spec, Activation activation);

/// 2x2 max pooling with stride 2; odd trailing rows/columns are dropped.
ImageBatch maxpool_forward(const ImageBatch& images);

struct ConvStackItem {
  enum class Kind { Conv, Pool } kind = Kind::Conv;
  ConvLayerSpec spec;  // unused for Pool

  static ConvStackItem conv(const ConvLayerSpec& s) { return {Kind::Conv, s}; }
  static ConvStackItem pool() { return {Kind::Pool, {}}; }
};

/// Initialize a conv/pool stack layer by layer: Stein-init each filter bank
/// on the current feature maps, forward propagate, repeat. Conv layers carry
/// no bias terms.
std::vector<DenseMatrix> init_conv_stack(const ImageBatch& images,
                                         const std::vector<double>& y,
                                         const std::vector<ConvStackItem>& stack,
                                         Activation activation,
                                         std::size_t row_budget = 2'000'000,
                                         std::uint64_t subsample_seed = 0);

// Raw tensor file: header of four little-endian uint32 (n, channels, height,
// width) followed by n*c*h*w little-endian float32 values. Labels file:
// one little-endian uint32 count then that many float32 values.
void write_image_batch(const std::string& path, const ImageBatch& images);
ImageBatch read_image_batch(const std::string& path);
void write_labels(const std::string& path, const std::vector<double>& y);
std::vector<double> read_labels(const std::string& path);

/// IDX (big-endian digit format) converters; pixels scale to [0, 1].
ImageBatch read_idx_images(const std::string& path);
std::vector<double> read_idx_labels(const std::string& path);

}  // namespace steinglm

#endif
