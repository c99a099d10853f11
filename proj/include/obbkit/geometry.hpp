// Copyright (C) 2026 obbkit contributors
// SPDX-License-Identifier: Apache-2.0
//
// Exact rotated-rectangle geometry: polygon conversion, convex clipping,
// rotated IoU and minimum-area rectangle fitting.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "obbkit/error.hpp"

namespace obbkit {

template <std::floating_point T>
struct Point2 {
  T x{};
  T y{};

  friend constexpr Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Point2 operator*(Point2 a, T s) { return {a.x * s, a.y * s}; }
  friend constexpr bool operator==(Point2, Point2) = default;
};

template <std::floating_point T>
constexpr T cross(Point2<T> a, Point2<T> b) {
  return a.x * b.y - a.y * b.x;
}

template <std::floating_point T>
constexpr T dot(Point2<T> a, Point2<T> b) {
  return a.x * b.x + a.y * b.y;
}

template <std::floating_point T>
T norm(Point2<T> a) {
  return std::hypot(a.x, a.y);
}

/// Wraps an angle into [-pi/2, pi/2). Values already inside the range are
/// returned bit-for-bit unchanged, which keeps serialization round trips exact.
template <std::floating_point T>
T normalize_angle(T theta) {
  require(std::isfinite(theta), ErrorKind::invalid_argument, "angle must be finite");
  constexpr T pi = std::numbers::pi_v<T>;
  constexpr T half = pi / 2;
  if (theta >= -half && theta < half) {
    return theta;
  }
  T r = std::remainder(theta, pi);
  if (r >= half) {
    r -= pi;
  }
  if (r < -half) {
    r += pi;
  }
  return r;
}

/// Oriented rectangle. `theta` rotates the box's w-axis away from the image
/// x-axis and is kept normalized to [-pi/2, pi/2).
template <std::floating_point T>
class BasicRotatedBox {
 public:
  using value_type = T;

  BasicRotatedBox(T cx, T cy, T w, T h, T theta)
      : cx_(cx), cy_(cy), w_(w), h_(h), theta_(normalize_angle(theta)) {
    require(std::isfinite(cx) && std::isfinite(cy), ErrorKind::invalid_argument,
            "box center must be finite");
    require(std::isfinite(w) && std::isfinite(h) && w > 0 && h > 0, ErrorKind::invalid_argument,
            "box sides must be finite and positive (got w=" + std::to_string(w) +
                ", h=" + std::to_string(h) + ")");
  }

  T cx() const noexcept { return cx_; }
  T cy() const noexcept { return cy_; }
  T w() const noexcept { return w_; }
  T h() const noexcept { return h_; }
  T theta() const noexcept { return theta_; }
  T area() const noexcept { return w_ * h_; }
  Point2<T> center() const noexcept { return {cx_, cy_}; }

  /// Same point set, encoded with the sides swapped.
  BasicRotatedBox swapped() const { return {cx_, cy_, h_, w_, theta_ + std::numbers::pi_v<T> / 2}; }

  BasicRotatedBox translated(T dx, T dy) const { return {cx_ + dx, cy_ + dy, w_, h_, theta_}; }

  std::array<T, 5> to_array() const noexcept { return {cx_, cy_, w_, h_, theta_}; }

  friend bool operator==(const BasicRotatedBox&, const BasicRotatedBox&) = default;

 private:
  T cx_;
  T cy_;
  T w_;
  T h_;
  T theta_;
};

using RotatedBox = BasicRotatedBox<double>;
using Point = Point2<double>;

template <std::floating_point T>
class BasicConvexPolygon {
 public:
  struct trusted_t {};
  static constexpr trusted_t trusted{};

  /// Accepts either winding; clockwise input is reversed. Throws if the
  /// vertices do not describe a convex polygon (collinear runs are allowed).
  explicit BasicConvexPolygon(std::vector<Point2<T>> vertices) : vertices_(std::move(vertices)) {
    require(vertices_.size() >= 3, ErrorKind::invalid_argument,
            "convex polygon needs at least 3 vertices");
    if (signed_area() < 0) {
      std::reverse(vertices_.begin(), vertices_.end());
    }
    const std::size_t n = vertices_.size();
    for (std::size_t i = 0; i < n; ++i) {
      const auto e1 = vertices_[(i + 1) % n] - vertices_[i];
      const auto e2 = vertices_[(i + 2) % n] - vertices_[(i + 1) % n];
      require(cross(e1, e2) >= -T(1e-9) * norm(e1) * norm(e2), ErrorKind::invalid_argument,
              "polygon is not convex");
    }
  }

  /// Skips validation; the caller guarantees counterclockwise convex input.
  BasicConvexPolygon(std::vector<Point2<T>> vertices, trusted_t) : vertices_(std::move(vertices)) {}

  std::span<const Point2<T>> vertices() const noexcept { return vertices_; }
  std::size_t size() const noexcept { return vertices_.size(); }

  T signed_area() const noexcept {
    T twice = 0;
    const std::size_t n = vertices_.size();
    for (std::size_t i = 0; i < n; ++i) {
      twice += cross(vertices_[i], vertices_[(i + 1) % n]);
    }
    return twice / 2;
  }

  /// Largest coordinate extent; sets the scale for geometric tolerances.
  T extent() const noexcept {
    auto [xmin, xmax] = std::minmax_element(vertices_.begin(), vertices_.end(),
                                            [](auto a, auto b) { return a.x < b.x; });
    auto [ymin, ymax] = std::minmax_element(vertices_.begin(), vertices_.end(),
                                            [](auto a, auto b) { return a.y < b.y; });
    return std::max(xmax->x - xmin->x, ymax->y - ymin->y);
  }

 private:
  std::vector<Point2<T>> vertices_;
};

using ConvexPolygon = BasicConvexPolygon<double>;

/// Relative tolerance for collinearity and containment decisions.
inline constexpr double kGeometryTolerance = 1e-9;

/// Corners in counterclockwise order, starting from the (+w/2, +h/2) corner.
template <std::floating_point T>
BasicConvexPolygon<T> to_polygon(const BasicRotatedBox<T>& box) {
  const T c = std::cos(box.theta());
  const T s = std::sin(box.theta());
  const T hw = box.w() / 2;
  const T hh = box.h() / 2;
  const std::array<std::pair<T, T>, 4> local{{{hw, hh}, {-hw, hh}, {-hw, -hh}, {hw, -hh}}};
  std::vector<Point2<T>> pts;
  pts.reserve(4);
  for (auto [lx, ly] : local) {
    pts.push_back({box.cx() + lx * c - ly * s, box.cy() + lx * s + ly * c});
  }
  return {std::move(pts), BasicConvexPolygon<T>::trusted};
}

template <std::floating_point T>
T polygon_area(const BasicConvexPolygon<T>& poly) {
  return std::max(T(0), poly.signed_area());
}

/// Sutherland-Hodgman clipping of `subject` by every edge of `clip`.
/// Returns nullopt for disjoint inputs and for contacts with zero area.
template <std::floating_point T>
std::optional<BasicConvexPolygon<T>> convex_intersection(const BasicConvexPolygon<T>& subject,
                                                         const BasicConvexPolygon<T>& clip) {
  const T scale = std::max(subject.extent(), clip.extent());
  const T tol = T(kGeometryTolerance) * scale;

  std::vector<Point2<T>> output(subject.vertices().begin(), subject.vertices().end());
  std::vector<Point2<T>> input;
  const auto edges = clip.vertices();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const Point2<T> p = edges[e];
    const Point2<T> dir = edges[(e + 1) % edges.size()] - p;
    const T len = norm(dir);
    if (len <= tol) {
      continue;
    }
    input.swap(output);
    output.clear();
    auto side = [&](Point2<T> q) { return cross(dir, q - p) / len; };
    for (std::size_t i = 0; i < input.size(); ++i) {
      const Point2<T> cur = input[i];
      const Point2<T> prev = input[(i + input.size() - 1) % input.size()];
      const T dcur = side(cur);
      const T dprev = side(prev);
      const bool cur_in = dcur >= -tol;
      const bool prev_in = dprev >= -tol;
      if (cur_in != prev_in) {
        const T t = dprev / (dprev - dcur);
        output.push_back(prev + (cur - prev) * t);
      }
      if (cur_in) {
        output.push_back(cur);
      }
    }
    if (output.empty()) {
      return std::nullopt;
    }
  }

  std::vector<Point2<T>> cleaned;
  cleaned.reserve(output.size());
  for (const auto& q : output) {
    if (cleaned.empty() || norm(q - cleaned.back()) > tol) {
      cleaned.push_back(q);
    }
  }
  while (cleaned.size() > 1 && norm(cleaned.front() - cleaned.back()) <= tol) {
    cleaned.pop_back();
  }
  if (cleaned.size() < 3) {
    return std::nullopt;
  }
  BasicConvexPolygon<T> result(std::move(cleaned), BasicConvexPolygon<T>::trusted);
  if (result.signed_area() <= tol * scale) {
    return std::nullopt;
  }
  return result;
}

template <std::floating_point T>
T intersection_area(const BasicRotatedBox<T>& a, const BasicRotatedBox<T>& b) {
  if (a == b || a == b.swapped()) {
    return a.area();  // exact, so identical boxes give IoU 1
  }
  const T ra = std::hypot(a.w(), a.h()) / 2;
  const T rb = std::hypot(b.w(), b.h()) / 2;
  if (norm(a.center() - b.center()) >= ra + rb) {
    return 0;
  }
  // Fixed operand order makes the result exactly symmetric in (a, b).
  const bool swap = std::make_tuple(a.cx(), a.cy(), a.w(), a.h(), a.theta()) >
                    std::make_tuple(b.cx(), b.cy(), b.w(), b.h(), b.theta());
  const auto& first = swap ? b : a;
  const auto& second = swap ? a : b;
  const auto inter = convex_intersection(to_polygon(first), to_polygon(second));
  if (!inter) {
    return 0;
  }
  return std::min({polygon_area(*inter), a.area(), b.area()});
}

template <std::floating_point T>
T rotated_iou(const BasicRotatedBox<T>& a, const BasicRotatedBox<T>& b) {
  const T inter = intersection_area(a, b);
  if (inter <= 0) {
    return 0;
  }
  const T uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, T(0), T(1));
}

/// Convex hull (Andrew's monotone chain), counterclockwise, starting at the
/// lowest-x (then lowest-y) point, collinear points removed.
template <std::floating_point T>
std::vector<Point2<T>> convex_hull(std::span<const Point2<T>> points) {
  std::vector<Point2<T>> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end(),
            [](auto a, auto b) { return std::tie(a.x, a.y) < std::tie(b.x, b.y); });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) {
    return pts;
  }
  std::vector<Point2<T>> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0) {
      --k;
    }
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0) {
      --k;
    }
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

/// Minimum-area enclosing rotated rectangle. One side of the optimum is
/// collinear with a hull edge, so every hull edge is tried as the w-axis.
template <std::floating_point T>
BasicRotatedBox<T> min_area_rect(std::span<const Point2<T>> points) {
  const auto hull = convex_hull(points);
  T scale = 0;
  for (std::size_t i = 0; i + 1 < hull.size(); ++i) {
    scale = std::max(scale, norm(hull[i + 1] - hull[0]));
  }
  const bool degenerate =
      hull.size() < 3 ||
      BasicConvexPolygon<T>(hull, BasicConvexPolygon<T>::trusted).signed_area() <=
          T(kGeometryTolerance) * scale * scale;
  require(!degenerate, ErrorKind::invalid_argument,
          "degenerate polygon: points are collinear, no enclosing rectangle");

  struct Candidate {
    T area;
    Point2<T> u;
    T umin, umax, vmin, vmax;
  };
  std::optional<Candidate> best;
  for (std::size_t e = 0; e < hull.size(); ++e) {
    const Point2<T> edge = hull[(e + 1) % hull.size()] - hull[e];
    const Point2<T> u = edge * (T(1) / norm(edge));
    const Point2<T> v{-u.y, u.x};
    T umin = std::numeric_limits<T>::max(), umax = std::numeric_limits<T>::lowest();
    T vmin = umin, vmax = umax;
    for (const auto& q : hull) {
      const Point2<T> d = q - hull[0];
      umin = std::min(umin, dot(d, u));
      umax = std::max(umax, dot(d, u));
      vmin = std::min(vmin, dot(d, v));
      vmax = std::max(vmax, dot(d, v));
    }
    const T area = (umax - umin) * (vmax - vmin);
    if (!best || area < best->area * (1 - T(1e-12))) {
      best = Candidate{area, u, umin, umax, vmin, vmax};
    }
  }
  const Point2<T> v{-best->u.y, best->u.x};
  const Point2<T> c =
      hull[0] + best->u * ((best->umin + best->umax) / 2) + v * ((best->vmin + best->vmax) / 2);
  return {c.x, c.y, best->umax - best->umin, best->vmax - best->vmin,
          std::atan2(best->u.y, best->u.x)};
}

/// Quadrilateral annotation (four corners, any order or winding) to its
/// minimum-area enclosing rotated box.
template <std::floating_point T>
BasicRotatedBox<T> poly_to_rbox(const std::array<Point2<T>, 4>& quad) {
  return min_area_rect(std::span<const Point2<T>>(quad));
}

}  // namespace obbkit
