// Copyright (C) 2026 obbkit contributors
// SPDX-License-Identifier: Apache-2.0
//
// Minimal dense NCHW float tensor plus the forward ops the attention math
// needs. Naive loops with a fixed accumulation order; inputs are small.

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "obbkit/error.hpp"

namespace obbkit {

struct Shape4 {
  std::size_t n = 0;
  std::size_t c = 0;
  std::size_t h = 0;
  std::size_t w = 0;

  std::size_t numel() const noexcept { return n * c * h * w; }
  std::string str() const {
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
           std::to_string(w) + ")";
  }
  friend bool operator==(const Shape4&, const Shape4&) = default;
};

class DenseTensor {
 public:
  DenseTensor() = default;

  explicit DenseTensor(Shape4 shape, float fill = 0.0f) : shape_(shape), data_(shape.numel(), fill) {
    require(std::isfinite(fill), ErrorKind::invalid_argument, "tensor entries must be finite");
  }

  DenseTensor(Shape4 shape, std::vector<float> data) : shape_(shape), data_(std::move(data)) {
    require(data_.size() == shape_.numel(), ErrorKind::shape_mismatch,
            "tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                shape_.str());
    for (float v : data_) {
      require(std::isfinite(v), ErrorKind::invalid_argument, "tensor entries must be finite");
    }
  }

  const Shape4& shape() const noexcept { return shape_; }
  std::span<const float> data() const noexcept { return data_; }
  std::span<float> data() noexcept { return data_; }

  float& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
    return data_[offset(n, c, h, w)];
  }
  float at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    return data_[offset(n, c, h, w)];
  }

  friend bool operator==(const DenseTensor&, const DenseTensor&) = default;

 private:
  std::size_t offset(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const noexcept {
    return ((n * shape_.c + c) * shape_.h + h) * shape_.w + w;
  }

  Shape4 shape_{};
  std::vector<float> data_;
};

/// Row-major dense matrix used for fully connected weights.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> data;

  static Matrix zeros(std::size_t rows, std::size_t cols) { return {rows, cols, std::vector<float>(rows * cols)}; }
  static Matrix identity(std::size_t n) {
    Matrix m = zeros(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      m.data[i * n + i] = 1.0f;
    }
    return m;
  }
  float operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

struct Dilation {
  std::size_t y = 1;
  std::size_t x = 1;
};

/// Cross-correlation with zero padding sized so the output keeps the input's
/// spatial extent. Kernel layout is (out_channels, in_channels, kh, kw).
inline DenseTensor conv2d(const DenseTensor& input, const DenseTensor& kernel,
                          Dilation dilation = {}) {
  const Shape4 in = input.shape();
  const Shape4 k = kernel.shape();
  require(k.c == in.c, ErrorKind::shape_mismatch,
          "conv2d kernel expects " + std::to_string(k.c) + " input channels, got " +
              std::to_string(in.c));
  require(k.h > 0 && k.w > 0 && dilation.y > 0 && dilation.x > 0, ErrorKind::invalid_argument,
          "conv2d kernel size and dilation must be positive");
  const auto pad_y = static_cast<std::ptrdiff_t>(dilation.y * (k.h - 1) / 2);
  const auto pad_x = static_cast<std::ptrdiff_t>(dilation.x * (k.w - 1) / 2);

  DenseTensor out(Shape4{in.n, k.n, in.h, in.w});
  for (std::size_t b = 0; b < in.n; ++b) {
    for (std::size_t oc = 0; oc < k.n; ++oc) {
      for (std::size_t y = 0; y < in.h; ++y) {
        for (std::size_t x = 0; x < in.w; ++x) {
          double acc = 0.0;
          for (std::size_t ic = 0; ic < in.c; ++ic) {
            for (std::size_t ky = 0; ky < k.h; ++ky) {
              const auto sy = static_cast<std::ptrdiff_t>(y) - pad_y +
                              static_cast<std::ptrdiff_t>(ky * dilation.y);
              if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(in.h)) {
                continue;
              }
              for (std::size_t kx = 0; kx < k.w; ++kx) {
                const auto sx = static_cast<std::ptrdiff_t>(x) - pad_x +
                                static_cast<std::ptrdiff_t>(kx * dilation.x);
                if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(in.w)) {
                  continue;
                }
                acc += static_cast<double>(kernel.at(oc, ic, ky, kx)) *
                       input.at(b, ic, static_cast<std::size_t>(sy), static_cast<std::size_t>(sx));
              }
            }
          }
          out.at(b, oc, y, x) = static_cast<float>(acc);
        }
      }
    }
  }
  return out;
}

inline DenseTensor global_avg_pool(const DenseTensor& input) {
  const Shape4 s = input.shape();
  DenseTensor out(Shape4{s.n, s.c, 1, 1});
  const double count = static_cast<double>(s.h * s.w);
  for (std::size_t b = 0; b < s.n; ++b) {
    for (std::size_t c = 0; c < s.c; ++c) {
      double sum = 0.0;
      for (std::size_t y = 0; y < s.h; ++y) {
        for (std::size_t x = 0; x < s.w; ++x) {
          sum += input.at(b, c, y, x);
        }
      }
      out.at(b, c, 0, 0) = count > 0 ? static_cast<float>(sum / count) : 0.0f;
    }
  }
  return out;
}

/// y = W v without bias.
inline std::vector<float> fully_connected(std::span<const float> v, const Matrix& weights) {
  require(weights.cols == v.size() && weights.data.size() == weights.rows * weights.cols,
          ErrorKind::shape_mismatch,
          "fully_connected: weights are " + std::to_string(weights.rows) + "x" +
              std::to_string(weights.cols) + " but input has length " + std::to_string(v.size()));
  std::vector<float> out(weights.rows);
  for (std::size_t r = 0; r < weights.rows; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < weights.cols; ++c) {
      acc += static_cast<double>(weights(r, c)) * v[c];
    }
    out[r] = static_cast<float>(acc);
  }
  return out;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline DenseTensor map_elements(const DenseTensor& x, const std::function<double(double)>& fn) {
  DenseTensor out(x.shape());
  auto src = x.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = static_cast<float>(fn(src[i]));
  }
  return out;
}

inline DenseTensor sigmoid_map(const DenseTensor& x) { return map_elements(x, sigmoid); }

/// Concatenates along the channel axis; batch and spatial dims must agree.
inline DenseTensor concat_channels(std::span<const DenseTensor> xs) {
  require(!xs.empty(), ErrorKind::shape_mismatch, "concat_channels needs at least one tensor");
  const Shape4 first = xs.front().shape();
  std::size_t channels = 0;
  for (const auto& t : xs) {
    const Shape4 s = t.shape();
    require(s.n == first.n && s.h == first.h && s.w == first.w, ErrorKind::shape_mismatch,
            "concat_channels: shape " + s.str() + " incompatible with " + first.str());
    channels += s.c;
  }
  DenseTensor out(Shape4{first.n, channels, first.h, first.w});
  const std::size_t plane = first.h * first.w;
  for (std::size_t b = 0; b < first.n; ++b) {
    std::size_t c0 = 0;
    for (const auto& t : xs) {
      const std::size_t block = t.shape().c * plane;
      auto src = t.data().subspan(b * block, block);
      std::copy(src.begin(), src.end(), out.data().begin() + static_cast<std::ptrdiff_t>((b * channels + c0) * plane));
      c0 += t.shape().c;
    }
  }
  return out;
}

}  // namespace obbkit
