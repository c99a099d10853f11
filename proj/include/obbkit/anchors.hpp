// Copyright (C) 2026 obbkit contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "obbkit/error.hpp"
#include "obbkit/geometry.hpp"

namespace obbkit {

struct PyramidLevel {
  int level = 0;
  double stride = 0;
  double base_side = 0;
};

/// One square anchor per feature-map cell on every pyramid level.
struct PyramidSpec {
  std::vector<PyramidLevel> levels;
  std::size_t image_width = 0;
  std::size_t image_height = 0;

  /// P3..P7 (strides 8..128) with the anchor side set to four strides.
  static PyramidSpec standard(std::size_t width, std::size_t height) {
    PyramidSpec spec{{}, width, height};
    for (int level = 3; level <= 7; ++level) {
      const double stride = std::ldexp(1.0, level);
      spec.levels.push_back({level, stride, 4 * stride});
    }
    return spec;
  }

  void validate() const {
    for (std::size_t i = 0; i < levels.size(); ++i) {
      require(levels[i].stride > 0 && std::isfinite(levels[i].stride), ErrorKind::invalid_argument,
              "pyramid stride must be positive");
      require(levels[i].base_side > 0 && std::isfinite(levels[i].base_side),
              ErrorKind::invalid_argument, "anchor base side must be positive");
      require(i == 0 || levels[i].stride > levels[i - 1].stride, ErrorKind::invalid_argument,
              "pyramid strides must be strictly increasing");
    }
  }
};

inline std::size_t cells_along(std::size_t pixels, double stride) {
  return static_cast<std::size_t>(std::ceil(static_cast<double>(pixels) / stride));
}

/// Level-major, then row-major (x varies fastest). Cell counts use ceiling
/// division so the right and bottom borders are always covered.
inline std::vector<RotatedBox> generate_grid(const PyramidSpec& spec) {
  spec.validate();
  std::vector<RotatedBox> anchors;
  std::size_t total = 0;
  for (const auto& lvl : spec.levels) {
    total += cells_along(spec.image_width, lvl.stride) * cells_along(spec.image_height, lvl.stride);
  }
  anchors.reserve(total);
  for (const auto& lvl : spec.levels) {
    const std::size_t nx = cells_along(spec.image_width, lvl.stride);
    const std::size_t ny = cells_along(spec.image_height, lvl.stride);
    for (std::size_t j = 0; j < ny; ++j) {
      for (std::size_t i = 0; i < nx; ++i) {
        anchors.emplace_back((static_cast<double>(i) + 0.5) * lvl.stride,
                             (static_cast<double>(j) + 0.5) * lvl.stride, lvl.base_side,
                             lvl.base_side, 0.0);
      }
    }
  }
  return anchors;
}

/// Regression offsets of a box relative to its anchor. `tw`/`th` are log
/// size ratios and `ttheta` is the tangent of the wrapped angle delta.
struct BoxOffsets {
  double tx = 0;
  double ty = 0;
  double tw = 0;
  double th = 0;
  double ttheta = 0;

  friend bool operator==(const BoxOffsets&, const BoxOffsets&) = default;
};

/// Decoded log-ratios are clamped to this magnitude so sizes stay positive
/// and finite (exp(18.42) ~ 1e8).
inline constexpr double kMaxLogRatio = 18.420680743952367;

inline BoxOffsets encode_offsets(const RotatedBox& anchor, const RotatedBox& target) {
  const double dtheta = normalize_angle(target.theta() - anchor.theta());
  return {(target.cx() - anchor.cx()) / anchor.w(), (target.cy() - anchor.cy()) / anchor.h(),
          std::log(target.w() / anchor.w()), std::log(target.h() / anchor.h()), std::tan(dtheta)};
}

inline RotatedBox decode_offsets(const RotatedBox& anchor, const BoxOffsets& off) {
  require(std::isfinite(off.tx) && std::isfinite(off.ty) && std::isfinite(off.tw) &&
              std::isfinite(off.th) && std::isfinite(off.ttheta),
          ErrorKind::invalid_argument, "box offsets must be finite");
  const double tw = std::clamp(off.tw, -kMaxLogRatio, kMaxLogRatio);
  const double th = std::clamp(off.th, -kMaxLogRatio, kMaxLogRatio);
  return {anchor.cx() + off.tx * anchor.w(), anchor.cy() + off.ty * anchor.h(),
          anchor.w() * std::exp(tw), anchor.h() * std::exp(th),
          anchor.theta() + std::atan(off.ttheta)};
}

}  // namespace obbkit
