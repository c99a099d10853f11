// Copyright (C) 2026 obbkit contributors
// SPDX-License-Identifier: Apache-2.0
//
// Forward math of the polarization attention module:
//   M  = Mc(F) (x) Ms(F)
//   F' = M + psi(sigmoid(M)) * F + F
// with a task-specific polarization function psi.

#pragma once

#include <array>
#include <cmath>
#include <concepts>
#include <string>
#include <vector>

#include "obbkit/error.hpp"
#include "obbkit/tensor.hpp"

namespace obbkit {

enum class TaskKind { classification, regression };

inline constexpr double kDefaultEta = 15.0;

/// Excitation: a steep sigmoid centred on 0.5.
template <std::floating_point T>
T psi_cls(T x, T eta = T(kDefaultEta)) {
  return T(1) / (T(1) + std::exp(-eta * (x - T(0.5))));
}

/// Depression: a tent map peaking at 0.5.
template <std::floating_point T>
constexpr T psi_reg(T x) {
  return x < T(0.5) ? x : T(1) - x;
}

template <std::floating_point T>
T polarize(T x, TaskKind task, T eta = T(kDefaultEta)) {
  return task == TaskKind::classification ? psi_cls(x, eta) : psi_reg(x);
}

inline DenseTensor polarize(const DenseTensor& x, TaskKind task, double eta = kDefaultEta) {
  return map_elements(x, [task, eta](double v) { return polarize(v, task, eta); });
}

/// Weights for one PAM instance over C input channels. Each spatial branch
/// maps C channels to one; the fuse kernel maps the four branch outputs to
/// the single spatial map.
struct PamWeights {
  Matrix w0;                    // (C/r) x C
  Matrix w1;                    // C x (C/r)
  DenseTensor branch_3x3;       // (1, C, 3, 3)
  DenseTensor branch_1x3;       // (1, C, 1, 3), dilated
  DenseTensor branch_3x1;       // (1, C, 3, 1), dilated
  DenseTensor branch_3x3_dil;   // (1, C, 3, 3), dilated
  DenseTensor fuse_3x3;         // (1, 4, 3, 3)
  std::size_t reduction = 16;
  std::size_t dilation = 2;
  double eta = kDefaultEta;

  /// All-zero weights of the right shapes; handy for tests and as a template.
  static PamWeights zeros(std::size_t channels, std::size_t reduction = 16) {
    require(reduction > 0 && channels % reduction == 0, ErrorKind::invalid_argument,
            "reduction ratio must divide the channel count");
    const std::size_t hidden = channels / reduction;
    return {Matrix::zeros(hidden, channels),
            Matrix::zeros(channels, hidden),
            DenseTensor(Shape4{1, channels, 3, 3}),
            DenseTensor(Shape4{1, channels, 1, 3}),
            DenseTensor(Shape4{1, channels, 3, 1}),
            DenseTensor(Shape4{1, channels, 3, 3}),
            DenseTensor(Shape4{1, 4, 3, 3}),
            reduction,
            2,
            kDefaultEta};
  }

  void validate(std::size_t channels) const {
    require(reduction > 0 && channels % reduction == 0, ErrorKind::invalid_argument,
            "reduction ratio " + std::to_string(reduction) + " must divide " +
                std::to_string(channels) + " channels");
    require(eta > 0 && std::isfinite(eta), ErrorKind::invalid_argument, "eta must be positive");
    require(dilation > 0, ErrorKind::invalid_argument, "dilation must be positive");
    const std::size_t hidden = channels / reduction;
    require(w0.rows == hidden && w0.cols == channels && w1.rows == channels && w1.cols == hidden,
            ErrorKind::shape_mismatch, "PAM fully connected weights do not match channel count");
    auto check = [channels](const DenseTensor& k, std::size_t kh, std::size_t kw, const char* name) {
      require(k.shape() == Shape4{1, channels, kh, kw}, ErrorKind::shape_mismatch,
              std::string("PAM kernel ") + name + " has shape " + k.shape().str());
    };
    check(branch_3x3, 3, 3, "branch_3x3");
    check(branch_1x3, 1, 3, "branch_1x3");
    check(branch_3x1, 3, 1, "branch_3x1");
    check(branch_3x3_dil, 3, 3, "branch_3x3_dil");
    require(fuse_3x3.shape() == Shape4{1, 4, 3, 3}, ErrorKind::shape_mismatch,
            "PAM fuse kernel must be (1,4,3,3)");
  }
};

/// sigmoid(W1 W0 GAP(F)), shape (N, C, 1, 1).
inline DenseTensor channel_attention(const DenseTensor& f, const PamWeights& w) {
  const Shape4 s = f.shape();
  w.validate(s.c);
  const DenseTensor pooled = global_avg_pool(f);
  DenseTensor out(Shape4{s.n, s.c, 1, 1});
  for (std::size_t b = 0; b < s.n; ++b) {
    const auto squeezed = fully_connected(pooled.data().subspan(b * s.c, s.c), w.w0);
    const auto excited = fully_connected(squeezed, w.w1);
    for (std::size_t c = 0; c < s.c; ++c) {
      out.at(b, c, 0, 0) = static_cast<float>(sigmoid(excited[c]));
    }
  }
  return out;
}

/// sigmoid(conv3x3(cat(branches(F)))), shape (N, 1, H, W).
inline DenseTensor spatial_attention(const DenseTensor& f, const PamWeights& w) {
  w.validate(f.shape().c);
  const Dilation d{w.dilation, w.dilation};
  const std::array<DenseTensor, 4> branches{conv2d(f, w.branch_3x3), conv2d(f, w.branch_1x3, d),
                                            conv2d(f, w.branch_3x1, d),
                                            conv2d(f, w.branch_3x3_dil, d)};
  return sigmoid_map(conv2d(concat_channels(branches), w.fuse_3x3));
}

inline DenseTensor pam_fuse(const DenseTensor& f, const DenseTensor& channel_map,
                            const DenseTensor& spatial_map, TaskKind task,
                            double eta = kDefaultEta) {
  const Shape4 s = f.shape();
  require(channel_map.shape() == Shape4{s.n, s.c, 1, 1}, ErrorKind::shape_mismatch,
          "channel map must be " + Shape4{s.n, s.c, 1, 1}.str() + ", got " +
              channel_map.shape().str());
  require(spatial_map.shape() == Shape4{s.n, 1, s.h, s.w}, ErrorKind::shape_mismatch,
          "spatial map must be " + Shape4{s.n, 1, s.h, s.w}.str() + ", got " +
              spatial_map.shape().str());
  DenseTensor out(s);
  for (std::size_t b = 0; b < s.n; ++b) {
    for (std::size_t c = 0; c < s.c; ++c) {
      const float mc = channel_map.at(b, c, 0, 0);
      for (std::size_t y = 0; y < s.h; ++y) {
        for (std::size_t x = 0; x < s.w; ++x) {
          const float m = mc * spatial_map.at(b, 0, y, x);
          const float feat = f.at(b, c, y, x);
          const auto gate = static_cast<float>(polarize(sigmoid(m), task, eta));
          out.at(b, c, y, x) = m + gate * feat + feat;
        }
      }
    }
  }
  return out;
}

inline DenseTensor pam_forward(const DenseTensor& f, const PamWeights& w, TaskKind task) {
  return pam_fuse(f, channel_attention(f, w), spatial_attention(f, w), task, w.eta);
}

}  // namespace obbkit
