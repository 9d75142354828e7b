#include "steinglm/conv.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "steinglm/init.hpp"
#include "steinglm/rng.hpp"

namespace steinglm {

std::size_t conv_output_extent(std::size_t extent, std::size_t filter, std::size_t stride,
                               Padding padding) {
  if (stride == 0) throw std::invalid_argument("conv: stride must be >= 1");
  if (padding == Padding::Same) return (extent + stride - 1) / stride;
  if (filter > extent)
    throw std::invalid_argument("conv: valid padding with filter larger than image");
  return (extent - filter) / stride + 1;
}

namespace {

// Leading zero-padding for one axis under same padding; the remainder of the
// total padding lands on the bottom/right.
std::size_t pad_before(std::size_t extent, std::size_t filter, std::size_t stride,
                       Padding padding) {
  if (padding == Padding::Valid) return 0;
  const std::size_t out = (extent + stride - 1) / stride;
  const std::size_t span = (out - 1) * stride + filter;
  const std::size_t total = span > extent ? span - extent : 0;
  return total / 2;
}

}  // namespace

PatchMatrix extract_patches(const ImageBatch& images, const ConvLayerSpec& spec) {
  if (images.n == 0 || images.channels == 0)
    throw std::invalid_argument("extract_patches: empty image batch");
  if (spec.filter_h == 0 || spec.filter_w == 0 || spec.filters == 0)
    throw std::invalid_argument("extract_patches: filter dimensions must be >= 1");
  require_finite(images.data, "extract_patches");

  PatchMatrix pm;
  pm.out_h = conv_output_extent(images.height, spec.filter_h, spec.stride, spec.padding);
  pm.out_w = conv_output_extent(images.width, spec.filter_w, spec.stride, spec.padding);
  pm.patches_per_image = pm.out_h * pm.out_w;

  const std::size_t pt = pad_before(images.height, spec.filter_h, spec.stride, spec.padding);
  const std::size_t pl = pad_before(images.width, spec.filter_w, spec.stride, spec.padding);
  const std::size_t feat = images.channels * spec.filter_h * spec.filter_w;

  pm.rows = DenseMatrix(images.n * pm.patches_per_image, feat);
  for (std::size_t i = 0; i < images.n; ++i) {
    for (std::size_t orow = 0; orow < pm.out_h; ++orow) {
      for (std::size_t ocol = 0; ocol < pm.out_w; ++ocol) {
        const std::size_t prow = i * pm.patches_per_image + orow * pm.out_w + ocol;
        std::size_t f = 0;
        for (std::size_t c = 0; c < images.channels; ++c) {
          for (std::size_t fr = 0; fr < spec.filter_h; ++fr) {
            const long r = static_cast<long>(orow * spec.stride + fr) - static_cast<long>(pt);
            for (std::size_t fc = 0; fc < spec.filter_w; ++fc, ++f) {
              const long col =
                  static_cast<long>(ocol * spec.stride + fc) - static_cast<long>(pl);
              const bool inside = r >= 0 && col >= 0 &&
                                  r < static_cast<long>(images.height) &&
                                  col < static_cast<long>(images.width);
              pm.rows(prow, f) = inside ? images.at(i, c, static_cast<std::size_t>(r),
                                                    static_cast<std::size_t>(col))
                                        : 0.0;
            }
          }
        }
      }
    }
  }
  return pm;
}

DenseMatrix stein_conv_init(const ImageBatch& images, const std::vector<double>& y,
                            const ConvLayerSpec& spec, Activation activation,
                            std::size_t row_budget, std::uint64_t subsample_seed) {
  if (y.size() != images.n)
    throw std::invalid_argument("stein_conv_init: label count does not match images");
  const std::size_t feat = images.channels * spec.filter_h * spec.filter_w;
  if (spec.filters > feat)
    throw std::invalid_argument("stein_conv_init: " + std::to_string(spec.filters) +
                                " filters exceed the patch dimension " + std::to_string(feat));

  PatchMatrix pm = extract_patches(images, spec);
  const std::size_t p = pm.patches_per_image;

  // Each patch inherits its image's label.
  std::vector<double> yrep(pm.rows.rows);
  for (std::size_t i = 0; i < images.n; ++i)
    for (std::size_t j = 0; j < p; ++j) yrep[i * p + j] = y[i];

  DenseMatrix rows = std::move(pm.rows);
  if (rows.rows > row_budget && row_budget > 0) {
    // Seeded uniform subsample without replacement (partial Fisher-Yates).
    std::vector<std::size_t> idx(rows.rows);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Rng rng(mix64(subsample_seed) ^ 0x70617463ull);
    for (std::size_t i = 0; i < row_budget; ++i)
      std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
    idx.resize(row_budget);
    std::sort(idx.begin(), idx.end());
    rows = take_rows(rows, idx);
    yrep = take(yrep, idx);
  }

  // Standardize patch columns; raw pixels sit far from zero mean.
  const std::vector<double> mu = col_means(rows);
  std::vector<double> sd(rows.cols, 0.0);
  for (std::size_t i = 0; i < rows.rows; ++i)
    for (std::size_t j = 0; j < rows.cols; ++j) {
      const double d = rows(i, j) - mu[j];
      sd[j] += d * d;
    }
  for (std::size_t j = 0; j < rows.cols; ++j) {
    sd[j] = std::sqrt(sd[j] / static_cast<double>(rows.rows));
    if (sd[j] < 1e-12) sd[j] = 1.0;
  }
  for (std::size_t i = 0; i < rows.rows; ++i)
    for (std::size_t j = 0; j < rows.cols; ++j) rows(i, j) = (rows(i, j) - mu[j]) / sd[j];

  const LayerInit li =
      stein_layer_init(rows, yrep, spec.filters, scaling_factor(activation));
  return li.weights;  // bias terms are ignored for convolutional layers
}

ImageBatch conv_forward(const ImageBatch& images, const DenseMatrix& filters,
                        const ConvLayerSpec& spec, Activation activation) {
  const std::size_t feat = images.channels * spec.filter_h * spec.filter_w;
  if (filters.rows != feat || filters.cols != spec.filters)
    throw std::invalid_argument("conv_forward: filter bank shape mismatch");

  PatchMatrix pm = extract_patches(images, spec);
  const DenseMatrix maps = matmul(pm.rows, filters);

  ImageBatch out(images.n, spec.filters, pm.out_h, pm.out_w);
  for (std::size_t i = 0; i < images.n; ++i)
    for (std::size_t q = 0; q < spec.filters; ++q)
      for (std::size_t r = 0; r < pm.out_h; ++r)
        for (std::size_t c = 0; c < pm.out_w; ++c)
          out.at(i, q, r, c) = activate(
              activation, maps(i * pm.patches_per_image + r * pm.out_w + c, q));
  return out;
}

ImageBatch maxpool_forward(const ImageBatch& images) {
  const std::size_t oh = images.height / 2, ow = images.width / 2;
  if (oh == 0 || ow == 0)
    throw std::invalid_argument("maxpool_forward: image smaller than the 2x2 window");
  ImageBatch out(images.n, images.channels, oh, ow);
  for (std::size_t i = 0; i < images.n; ++i)
    for (std::size_t c = 0; c < images.channels; ++c)
      for (std::size_t r = 0; r < oh; ++r)
        for (std::size_t col = 0; col < ow; ++col)
          out.at(i, c, r, col) =
              std::max(std::max(images.at(i, c, 2 * r, 2 * col),
                                images.at(i, c, 2 * r, 2 * col + 1)),
                       std::max(images.at(i, c, 2 * r + 1, 2 * col),
                                images.at(i, c, 2 * r + 1, 2 * col + 1)));
  return out;
}

std::vector<DenseMatrix> init_conv_stack(const ImageBatch& images,
                                         const std::vector<double>& y,
                                         const std::vector<ConvStackItem>& stack,
                                         Activation activation, std::size_t row_budget,
                                         std::uint64_t subsample_seed) {
  std::vector<DenseMatrix> banks;
  ImageBatch current = images;
  std::size_t layer = 0;
  for (const auto& item : stack) {
    if (item.kind == ConvStackItem::Kind::Pool) {
      current = maxpool_forward(current);
      continue;
    }
    DenseMatrix bank = stein_conv_init(current, y, item.spec, activation, row_budget,
                                       mix64(subsample_seed) + layer);
    current = conv_forward(current, bank, item.spec, activation);
    banks.push_back(std::move(bank));
    ++layer;
  }
  return banks;
}

namespace {

void write_u32(std::ofstream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::ifstream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::runtime_error("tensor file: truncated header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_f32(std::ofstream& out, const std::vector<double>& v) {
  for (double x : v) {
    const float f = static_cast<float>(x);
    std::uint32_t bits;
    static_assert(sizeof(bits) == sizeof(f));
    std::memcpy(&bits, &f, 4);
    write_u32(out, bits);
  }
}

std::vector<double> read_f32(std::ifstream& in, std::size_t count) {
  std::vector<double> v(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint32_t bits = read_u32(in);
    float f;
    std::memcpy(&f, &bits, 4);
    v[i] = static_cast<double>(f);
  }
  return v;
}

std::uint32_t read_u32_be(std::ifstream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::runtime_error("idx file: truncated");
  return (static_cast<std::uint32_t>(b[0]) << 24) | (static_cast<std::uint32_t>(b[1]) << 16) |
         (static_cast<std::uint32_t>(b[2]) << 8) | static_cast<std::uint32_t>(b[3]);
}

}  // namespace

void write_image_batch(const std::string& path, const ImageBatch& images) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  write_u32(out, static_cast<std::uint32_t>(images.n));
  write_u32(out, static_cast<std::uint32_t>(images.channels));
  write_u32(out, static_cast<std::uint32_t>(images.height));
  write_u32(out, static_cast<std::uint32_t>(images.width));
  write_f32(out, images.data);
}

ImageBatch read_image_batch(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  const std::uint32_t n = read_u32(in), c = read_u32(in), h = read_u32(in), w = read_u32(in);
  ImageBatch img(n, c, h, w);
  img.data = read_f32(in, static_cast<std::size_t>(n) * c * h * w);
  return img;
}

void write_labels(const std::string& path, const std::vector<double>& y) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  write_u32(out, static_cast<std::uint32_t>(y.size()));
  write_f32(out, y);
}

std::vector<double> read_labels(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  return read_f32(in, read_u32(in));
}

ImageBatch read_idx_images(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  if (read_u32_be(in) != 0x00000803u)
    throw std::runtime_error("idx images: bad magic in " + path);
  const std::uint32_t n = read_u32_be(in), h = read_u32_be(in), w = read_u32_be(in);
  ImageBatch img(n, 1, h, w);
  std::vector<unsigned char> buf(static_cast<std::size_t>(n) * h * w);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!in) throw std::runtime_error("idx images: truncated pixel data");
  for (std::size_t i = 0; i < buf.size(); ++i)
    img.data[i] = static_cast<double>(buf[i]) / 255.0;
  return img;
}

std::vector<double> read_idx_labels(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  if (read_u32_be(in) != 0x00000801u)
    throw std::runtime_error("idx labels: bad magic in " + path);
  const std::uint32_t n = read_u32_be(in);
  std::vector<unsigned char> buf(n);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!in) throw std::runtime_error("idx labels: truncated");
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<double>(buf[i]);
  return y;
}

}  // namespace steinglm
