// Copyright (C) 2026 obbkit contributors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "obbkit/geometry.hpp"
#include "support/oracles.hpp"
#include "support/random.hpp"

namespace obbkit {
namespace {

using testing::Rng;
constexpr double kPi = std::numbers::pi;

bool has_vertex(const ConvexPolygon& p, double x, double y, double tol = 1e-12) {
  return std::any_of(p.vertices().begin(), p.vertices().end(), [&](const Point& v) {
    return std::abs(v.x - x) <= tol && std::abs(v.y - y) <= tol;
  });
}

TEST(NormalizeAngle, RangeAndIdentity) {
  EXPECT_EQ(normalize_angle(0.3), 0.3);
  EXPECT_EQ(normalize_angle(-kPi / 2), -kPi / 2);
  EXPECT_NEAR(normalize_angle(kPi / 2), -kPi / 2, 1e-15);
  EXPECT_NEAR(normalize_angle(kPi), 0.0, 1e-15);
  EXPECT_NEAR(normalize_angle(3.0), 3.0 - kPi, 1e-15);
  Rng rng(11);
  for (int i = 0; i < 2000; ++i) {
    const double t = rng.uniform(-50, 50);
    const double n = normalize_angle(t);
    ASSERT_GE(n, -kPi / 2);
    ASSERT_LT(n, kPi / 2);
    // Same line direction modulo pi.
    ASSERT_NEAR(std::sin(2 * (t - n)), 0.0, 1e-9);
  }
}

TEST(RotatedBox, RejectsInvalidInput) {
  EXPECT_THROW(RotatedBox(0, 0, 0, 1, 0), Error);
  EXPECT_THROW(RotatedBox(0, 0, 1, -1, 0), Error);
  EXPECT_THROW(RotatedBox(std::nan(""), 0, 1, 1, 0), Error);
  EXPECT_THROW(RotatedBox(0, 0, 1, 1, INFINITY), Error);
}

TEST(RotatedBox, StoresNormalizedAngle) {
  const RotatedBox b(1, 2, 3, 4, kPi);
  EXPECT_NEAR(b.theta(), 0.0, 1e-15);
  EXPECT_EQ(b.w(), 3);
}

TEST(ToPolygon, AxisAlignedCorners) {
  const auto p = to_polygon(RotatedBox(0, 0, 2, 2, 0));
  ASSERT_EQ(p.size(), 4u);
  EXPECT_TRUE(has_vertex(p, 1, 1));
  EXPECT_TRUE(has_vertex(p, -1, 1));
  EXPECT_TRUE(has_vertex(p, -1, -1));
  EXPECT_TRUE(has_vertex(p, 1, -1));
  EXPECT_GT(p.signed_area(), 0);
}

TEST(ToPolygon, QuarterTurnSquareHasSameVertexSet) {
  const auto p = to_polygon(RotatedBox(0, 0, 2, 2, kPi / 2));
  for (auto [x, y] : {std::pair{1.0, 1.0}, {-1.0, 1.0}, {-1.0, -1.0}, {1.0, -1.0}}) {
    EXPECT_TRUE(has_vertex(p, x, y, 1e-12)) << x << "," << y;
  }
}

TEST(ToPolygon, RotationMatrixReadback) {
  const double t = kPi / 6;
  const RotatedBox b(1, 2, 4, 2, t);
  const auto p = to_polygon(b);
  const double c = std::cos(t), s = std::sin(t);
  for (auto [u, v] : {std::pair{2.0, 1.0}, {-2.0, 1.0}, {-2.0, -1.0}, {2.0, -1.0}}) {
    EXPECT_TRUE(has_vertex(p, 1 + u * c - v * s, 2 + u * s + v * c, 1e-12));
  }
  Point centroid{0, 0};
  for (const auto& v : p.vertices()) centroid = centroid + v * 0.25;
  EXPECT_NEAR(centroid.x, 1, 1e-12);
  EXPECT_NEAR(centroid.y, 2, 1e-12);
}

TEST(PolygonArea, Fixtures) {
  EXPECT_DOUBLE_EQ(polygon_area(ConvexPolygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}})), 1.0);
  EXPECT_DOUBLE_EQ(polygon_area(ConvexPolygon({{0, 0}, {1, 1}, {2, 2}})), 0.0);
  std::vector<Point> hex;
  for (int k = 0; k < 6; ++k) hex.push_back({std::cos(k * kPi / 3), std::sin(k * kPi / 3)});
  EXPECT_NEAR(polygon_area(ConvexPolygon(hex)), 3 * std::sqrt(3.0) / 2, 1e-12);
  EXPECT_NEAR(polygon_area(ConvexPolygon(hex)), 2.5981, 1e-4);
}

TEST(ConvexPolygon, ClockwiseInputIsReoriented) {
  const ConvexPolygon p({{0, 0}, {0, 1}, {1, 1}, {1, 0}});
  EXPECT_GT(p.signed_area(), 0);
}

TEST(ConvexPolygon, RejectsNonConvex) {
  EXPECT_THROW(ConvexPolygon({{0, 0}, {2, 0}, {1, 0.5}, {2, 2}, {0, 2}}), Error);
  EXPECT_THROW(ConvexPolygon({{0, 0}, {1, 0}}), Error);
}

TEST(ConvexIntersection, IdenticalSquares) {
  const auto sq = to_polygon(RotatedBox(0, 0, 1, 1, 0));
  const auto r = convex_intersection(sq, sq);
  ASSERT_TRUE(r.has_value());
  EXPECT_NEAR(polygon_area(*r), 1.0, 1e-12);
}

TEST(ConvexIntersection, DisjointAndTouching) {
  const auto a = to_polygon(RotatedBox(0, 0, 1, 1, 0));
  EXPECT_FALSE(convex_intersection(a, to_polygon(RotatedBox(5, 0, 1, 1, 0))).has_value());
  // Shared edge: zero-area contact reports empty.
  EXPECT_FALSE(convex_intersection(a, to_polygon(RotatedBox(1, 0, 1, 1, 0))).has_value());
  EXPECT_EQ(rotated_iou(RotatedBox(0, 0, 1, 1, 0), RotatedBox(1, 0, 1, 1, 0)), 0.0);
  // Corner contact.
  EXPECT_EQ(rotated_iou(RotatedBox(0, 0, 1, 1, 0), RotatedBox(1, 1, 1, 1, 0)), 0.0);
}

TEST(ConvexIntersection, SquareAndDiamondOctagon) {
  const auto r = convex_intersection(to_polygon(RotatedBox(0, 0, 1, 1, 0)),
                                     to_polygon(RotatedBox(0, 0, 1, 1, kPi / 4)));
  ASSERT_TRUE(r.has_value());
  EXPECT_EQ(r->size(), 8u);
  EXPECT_NEAR(polygon_area(*r), 2 * (std::sqrt(2.0) - 1), 1e-12);
  EXPECT_NEAR(polygon_area(*r), 0.82843, 1e-5);
}

TEST(RotatedIou, Fixtures) {
  EXPECT_DOUBLE_EQ(rotated_iou(RotatedBox(3, 4, 5, 2, 0.3), RotatedBox(3, 4, 5, 2, 0.3)), 1.0);
  EXPECT_NEAR(rotated_iou(RotatedBox(0, 0, 2, 2, 0), RotatedBox(1, 0, 2, 2, 0)), 1.0 / 3, 1e-12);
  const double oct = 2 * (std::sqrt(2.0) - 1);
  EXPECT_NEAR(rotated_iou(RotatedBox(0, 0, 1, 1, 0), RotatedBox(0, 0, 1, 1, kPi / 4)),
              oct / (2 - oct), 1e-12);
  EXPECT_NEAR(rotated_iou(RotatedBox(0, 0, 1, 1, 0), RotatedBox(0, 0, 1, 1, kPi / 4)), 0.70711,
              1e-4);
}

TEST(RotatedIou, FortyFiveDegreeCaseAgreesWithSampling) {
  std::mt19937_64 gen(2024);
  const RotatedBox a(0, 0, 1, 1, 0), b(0, 0, 1, 1, kPi / 4);
  EXPECT_NEAR(testing::monte_carlo_iou(a, b, 1'000'000, gen), rotated_iou(a, b), 2e-3);
}

TEST(RotatedIou, ContainedBox) {
  const RotatedBox big(0, 0, 10, 10, 0.2), small(0.5, -0.5, 2, 1, 1.1);
  EXPECT_NEAR(rotated_iou(big, small), 2.0 / 100.0, 1e-12);
}

TEST(RotatedIouProperty, SymmetryBoundsAndAreaLaws) {
  Rng rng(101);
  for (int i = 0; i < 3000; ++i) {
    const RotatedBox a = rng.box(20, 0.5, 30);
    const RotatedBox b = rng.box_near(a, 20, 0.5, 30);
    const double ab = rotated_iou(a, b);
    ASSERT_EQ(ab, rotated_iou(b, a));
    ASSERT_GE(ab, 0.0);
    ASSERT_LE(ab, 1.0);
    const double inter = intersection_area(a, b);
    ASSERT_LE(inter, std::min(a.area(), b.area()) * (1 + 1e-12));
    const double uni = a.area() + b.area() - inter;
    ASSERT_GE(uni, std::max(a.area(), b.area()) * (1 - 1e-12));
  }
}

TEST(RotatedIouProperty, RigidMotionInvariance) {
  Rng rng(102);
  for (int i = 0; i < 2000; ++i) {
    const RotatedBox a = rng.box(20, 0.5, 30);
    const RotatedBox b = rng.box_near(a, 20, 0.5, 30);
    const double phi = rng.angle();
    const double tx = rng.uniform(-500, 500), ty = rng.uniform(-500, 500);
    auto move = [&](const RotatedBox& r) {
      const double c = std::cos(phi), s = std::sin(phi);
      return RotatedBox(r.cx() * c - r.cy() * s + tx, r.cx() * s + r.cy() * c + ty, r.w(), r.h(),
                        r.theta() + phi);
    };
    ASSERT_NEAR(rotated_iou(a, b), rotated_iou(move(a), move(b)), 1e-6);
  }
}

TEST(RotatedIouProperty, RepresentationEquivalence) {
  Rng rng(103);
  for (int i = 0; i < 2000; ++i) {
    const RotatedBox a = rng.box(20, 0.5, 30);
    const RotatedBox b = rng.box_near(a, 20, 0.5, 30);
    ASSERT_NEAR(rotated_iou(a, b), rotated_iou(a.swapped(), b), 1e-9);
    ASSERT_NEAR(rotated_iou(a, b), rotated_iou(a.swapped(), b.swapped()), 1e-9);
    ASSERT_NEAR(intersection_area(a, b), intersection_area(a, b.swapped()),
                1e-9 * std::max(a.area(), b.area()));
    ASSERT_NEAR(polygon_area(to_polygon(a)), polygon_area(to_polygon(a.swapped())), 1e-9 * a.area());
  }
}

TEST(RotatedIouProperty, MatchesMonteCarloOnSample) {
  Rng rng(104);
  std::mt19937_64 gen(105);
  int within = 0;
  const int pairs = 200;
  for (int i = 0; i < pairs; ++i) {
    const RotatedBox a = rng.box(50, 1, 100);
    const RotatedBox b = rng.box_near(a, 50, 1, 100);
    within += std::abs(rotated_iou(a, b) - testing::monte_carlo_iou(a, b, 100'000, gen)) <= 0.01;
  }
  EXPECT_GE(within, pairs * 99 / 100);
}

TEST(RotatedIou, NearlyParallelThinBoxesStayFinite) {
  const RotatedBox a(0, 0, 100, 0.01, 0), b(0, 0, 100, 0.01, 1e-7);
  const double iou = rotated_iou(a, b);
  EXPECT_TRUE(std::isfinite(iou));
  EXPECT_GT(iou, 0.9);
}

TEST(ConvexHull, DropsInteriorAndCollinearPoints) {
  const std::vector<Point> pts{{0, 0}, {1, 0}, {2, 0}, {2, 2}, {1, 1}, {0, 2}, {0, 1}};
  const auto hull = convex_hull(std::span<const Point>(pts));
  EXPECT_EQ(hull.size(), 4u);
}

TEST(PolyToRbox, AxisAlignedRectangle) {
  const auto b = poly_to_rbox<double>({Point{100, 100}, {200, 100}, {200, 150}, {100, 150}});
  EXPECT_NEAR(b.cx(), 150, 1e-9);
  EXPECT_NEAR(b.cy(), 125, 1e-9);
  EXPECT_NEAR(b.w(), 100, 1e-9);
  EXPECT_NEAR(b.h(), 50, 1e-9);
  EXPECT_NEAR(b.theta(), 0, 1e-12);
}

TEST(PolyToRbox, RotatedRectangleReadback) {
  const RotatedBox truth(10, -3, 6, 2, kPi / 6);
  const auto poly = to_polygon(truth);
  const auto v = poly.vertices();
  const auto b = poly_to_rbox<double>({v[0], v[1], v[2], v[3]});
  EXPECT_NEAR(rotated_iou(b, truth), 1.0, 1e-9);
  EXPECT_NEAR(b.area(), truth.area(), 1e-9);
  const bool same = std::abs(b.w() - 6) < 1e-9 && std::abs(b.theta() - truth.theta()) < 1e-9;
  const bool swapped = std::abs(b.w() - 2) < 1e-9 &&
                       std::abs(b.theta() - truth.swapped().theta()) < 1e-9;
  EXPECT_TRUE(same || swapped);
}

TEST(PolyToRbox, IrregularQuadMatchesAngleSweep) {
  const std::array<Point, 4> quad{Point{0, 0}, {2, 0}, {2.2, 1}, {0, 1}};
  const auto b = poly_to_rbox(quad);
  const auto sweep = testing::sweep_min_rect(quad);
  EXPECT_LE(b.area(), sweep.area + 1e-9);
  EXPECT_NEAR(b.area(), sweep.area, 2e-3 * sweep.area);
  // Every corner lies inside the returned rectangle.
  for (const auto& p : quad) {
    const RotatedBox grown(b.cx(), b.cy(), b.w() + 1e-9, b.h() + 1e-9, b.theta());
    EXPECT_TRUE(testing::inside_box(grown, p.x, p.y));
  }
}

TEST(PolyToRboxProperty, RandomQuadsMatchAngleSweep) {
  Rng rng(106);
  for (int i = 0; i < 200; ++i) {
    std::array<Point, 4> quad{};
    for (auto& p : quad) p = {rng.uniform(-10, 10), rng.uniform(-10, 10)};
    const auto hull = convex_hull(std::span<const Point>(quad));
    if (hull.size() < 3 || std::abs(polygon_area(ConvexPolygon(hull))) < 1e-3) continue;
    const auto b = poly_to_rbox(quad);
    const auto sweep = testing::sweep_min_rect(quad);
    ASSERT_LE(b.area(), sweep.area * (1 + 1e-9));
    ASSERT_NEAR(b.area(), sweep.area, 5e-3 * sweep.area + 1e-9);
  }
}

TEST(PolyToRbox, CollinearPointsAreRejected) {
  EXPECT_THROW(poly_to_rbox<double>({Point{0, 0}, {1, 1}, {2, 2}, {3, 3}}), Error);
  try {
    poly_to_rbox<double>({Point{0, 0}, {0, 0}, {0, 0}, {0, 0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_argument);
  }
}

TEST(Geometry, FloatInstantiation) {
  const BasicRotatedBox<float> a(0, 0, 2, 2, 0), b(1, 0, 2, 2, 0);
  EXPECT_NEAR(rotated_iou(a, b), 1.0f / 3, 1e-6f);
}

}  // namespace
}  // namespace obbkit
