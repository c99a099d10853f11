// Copyright (C) 2026 obbkit contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <numbers>
#include <random>

#include "obbkit/geometry.hpp"

namespace obbkit::testing {

/// Seeded generator for property tests. Every suite builds its own so test
/// order never changes the draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(gen_); }
  double angle() { return uniform(-std::numbers::pi, std::numbers::pi); }

  RotatedBox box(double center_range, double min_side, double max_side) {
    return {uniform(-center_range, center_range), uniform(-center_range, center_range),
            uniform(min_side, max_side), uniform(min_side, max_side), angle()};
  }

  /// A box whose center sits within `reach` of `near`.
  RotatedBox box_near(const RotatedBox& near, double reach, double min_side, double max_side) {
    return {near.cx() + uniform(-reach, reach), near.cy() + uniform(-reach, reach),
            uniform(min_side, max_side), uniform(min_side, max_side), angle()};
  }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace obbkit::testing
