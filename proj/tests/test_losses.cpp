// Copyright (C) 2026 obbkit contributors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "obbkit/losses.hpp"
#include "support/random.hpp"

namespace obbkit {
namespace {

AnchorAssignment positive(std::size_t target, double w) {
  AnchorAssignment a;
  a.label = Label::positive;
  a.target = target;
  a.weight = w;
  return a;
}

AssignmentResult result_of(std::vector<AnchorAssignment> anchors, std::size_t targets = 1) {
  return {std::move(anchors), targets};
}

TEST(FocalLoss, Values) {
  const LossConfig cfg;
  EXPECT_NEAR(focal_loss(0.9, true, cfg), 0.25 * 0.01 * -std::log(0.9), 1e-15);
  EXPECT_NEAR(focal_loss(0.9, true, cfg), 2.634e-4, 1e-6);
  EXPECT_NEAR(focal_loss(0.9, false, cfg), 1.39882, 1e-5);
  EXPECT_LT(focal_loss(1.0, true, cfg), 1e-12);
  EXPECT_TRUE(std::isfinite(focal_loss(0.0, true, cfg)));
  EXPECT_TRUE(std::isfinite(focal_loss(1.0, false, cfg)));
}

TEST(SmoothL1, Values) {
  const double beta = 1.0 / 9;
  EXPECT_EQ(smooth_l1(0, beta), 0);
  EXPECT_NEAR(smooth_l1(1, beta), 0.94444, 1e-5);
  EXPECT_NEAR(smooth_l1(-1, beta), 0.94444, 1e-5);
  EXPECT_NEAR(smooth_l1(0.05, beta), 0.01125, 1e-9);
  // Continuous at the knee.
  EXPECT_NEAR(smooth_l1(beta * (1 - 1e-12), beta), smooth_l1(beta, beta), 1e-12);
}

TEST(ClsLoss, WorkedExample) {
  const auto r = result_of({positive(0, 1.0), AnchorAssignment{}});
  const double loss = cls_loss_ms({1, {0.9, 0.1}}, r, {}, LossConfig{});
  EXPECT_NEAR(loss, 1.317e-3, 1e-6);
  const LossConfig cfg;
  EXPECT_NEAR(loss, 2 * focal_loss(0.9, true, cfg) + focal_loss(0.1, false, cfg), 1e-15);
}

TEST(ClsLoss, PerfectProbabilitiesVanish) {
  const auto r = result_of({positive(0, 0.7), positive(0, 1.0), AnchorAssignment{}});
  EXPECT_LT(cls_loss_ms({1, {1.0, 1.0, 0.0}}, r, {}, LossConfig{}), 1e-12);
}

TEST(ClsLoss, PositiveTermScalesWithWeightPlusOne) {
  const LossConfig cfg;
  const ClassProbabilities probs{1, {0.7, 0.2}};
  const double neg = focal_loss(0.2, false, cfg);
  const double pos = focal_loss(0.7, true, cfg);
  const double base = cls_loss_ms(probs, result_of({positive(0, 0.5), AnchorAssignment{}}), {}, cfg);
  const double doubled = cls_loss_ms(probs, result_of({positive(0, 1.0), AnchorAssignment{}}), {}, cfg);
  EXPECT_NEAR(base - neg, 1.5 * pos, 1e-15);
  EXPECT_NEAR(doubled - neg, 2.0 * pos, 1e-15);
}

TEST(ClsLoss, MultiClassOneVsAll) {
  const LossConfig cfg;
  // Anchor 0 positive for target 0 of class 2; anchor 1 negative.
  const ClassProbabilities probs{3, {0.1, 0.2, 0.8, 0.3, 0.1, 0.05}};
  const std::vector<int> classes{2};
  const double want = 2 * (focal_loss(0.1, false, cfg) + focal_loss(0.2, false, cfg) +
                           focal_loss(0.8, true, cfg)) +
                      focal_loss(0.3, false, cfg) + focal_loss(0.1, false, cfg) +
                      focal_loss(0.05, false, cfg);
  EXPECT_NEAR(cls_loss_ms(probs, result_of({positive(0, 1.0), AnchorAssignment{}}), classes, cfg),
              want, 1e-15);
}

TEST(ClsLoss, NoPositivesNoTargets) {
  const auto r = result_of({AnchorAssignment{}, AnchorAssignment{}}, 0);
  const LossConfig cfg;
  EXPECT_NEAR(cls_loss_ms({1, {0.3, 0.1}}, r, {}, cfg),
              (focal_loss(0.3, false, cfg) + focal_loss(0.1, false, cfg)) / 2, 1e-15);
}

TEST(ClsLoss, ShapeErrors) {
  const auto r = result_of({positive(0, 1.0)});
  EXPECT_THROW(cls_loss_ms({1, {0.5, 0.5}}, r, {}, LossConfig{}), Error);
  const std::vector<int> bad_class{4};
  EXPECT_THROW(cls_loss_ms({2, {0.5, 0.5}}, r, bad_class, LossConfig{}), Error);
}

TEST(RegLoss, Values) {
  const LossConfig cfg;
  const std::vector<BoxOffsets> zero(2), unit{{1, 0, 0, 0, 0}, {1, 0, 0, 0, 0}};
  EXPECT_EQ(reg_loss_ms(unit, unit, result_of({positive(0, 1.0), positive(0, 0.5)}), cfg), 0.0);
  EXPECT_NEAR(reg_loss_ms(std::span(unit).first(1), std::span(zero).first(1),
                          result_of({positive(0, 1.0)}), cfg),
              0.94444, 1e-5);
  const double one = smooth_l1(1, cfg.beta);
  EXPECT_NEAR(reg_loss_ms(unit, zero, result_of({positive(0, 0.8), positive(0, 1.0)}), cfg),
              0.9 * one, 1e-15);
  // Negatives contribute nothing.
  EXPECT_NEAR(reg_loss_ms(unit, zero, result_of({positive(0, 1.0), AnchorAssignment{}}), cfg), one,
              1e-15);
}

TEST(TotalLoss, Composition) {
  const LossConfig cfg;
  EXPECT_EQ(total_loss(1, 1, 1, cfg), 2.0);
  EXPECT_EQ(total_loss(0, 0, 0, cfg), 0.0);
  EXPECT_EQ(total_loss(2, 0, 4, cfg), 4.0);
  LossConfig other;
  other.lambda1 = 2;
  other.lambda2 = 0.25;
  EXPECT_EQ(total_loss(1, 3, 8, other), 1 + 6 + 2);
}

TEST(LossConfig, Validation) {
  LossConfig cfg;
  cfg.beta = 0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.focal_alpha = 1.5;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.lambda2 = -1;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(LossProperty, NonNegativeFiniteAndMonotone) {
  testing::Rng rng(41);
  const LossConfig cfg;
  for (int i = 0; i < 500; ++i) {
    const std::size_t n = static_cast<std::size_t>(rng.integer(2, 12));
    std::vector<AnchorAssignment> slots(n);
    std::vector<double> probs(n);
    std::vector<BoxOffsets> pred(n), tgt(n);
    for (std::size_t a = 0; a < n; ++a) {
      if (a == 0 || rng.coin(0.4)) slots[a] = positive(0, rng.uniform(0.05, 1.0));
      probs[a] = rng.uniform(0, 1);
      pred[a] = {rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2),
                 rng.uniform(-2, 2)};
    }
    slots[0].weight = 1.0;
    const auto r = result_of(slots);
    const double cls = cls_loss_ms({1, probs}, r, {}, cfg);
    const double reg = reg_loss_ms(pred, tgt, r, cfg);
    ASSERT_GE(cls, 0);
    ASSERT_GE(reg, 0);
    ASSERT_TRUE(std::isfinite(cls));
    ASSERT_TRUE(std::isfinite(reg));

    // Raising a positive's probability lowers the loss.
    std::size_t p = 0;
    for (std::size_t a = 0; a < n; ++a) {
      if (slots[a].positive()) p = a;
    }
    auto higher = probs;
    higher[p] = std::min(1 - 1e-6, probs[p] + rng.uniform(0.01, 0.5));
    if (higher[p] > probs[p] && probs[p] < 1 - 1e-6) {
      ASSERT_LT(cls_loss_ms({1, higher}, r, {}, cfg), cls) << i;
    }

    // Regression loss is linear in the positive weights.
    auto scaled = slots;
    const double k = rng.uniform(0.1, 3);
    for (auto& s : scaled) s.weight *= k;
    ASSERT_NEAR(reg_loss_ms(pred, tgt, result_of(scaled), cfg), k * reg, 1e-12 * (1 + reg));
  }
}

TEST(OffsetsFor, EncodesPositivesOnly) {
  const std::vector<RotatedBox> anchors{{0, 0, 10, 10, 0}, {50, 50, 10, 10, 0}};
  const std::vector<RotatedBox> regressed{{1, 0, 10, 10, 0}, {50, 50, 10, 10, 0}};
  const std::vector<RotatedBox> targets{{1, 2, 20, 5, 0.1}};
  const auto r = result_of({positive(0, 1.0), AnchorAssignment{}});
  const auto o = offsets_for(anchors, regressed, targets, r);
  EXPECT_NEAR(o.predicted[0].tx, 0.1, 1e-15);
  EXPECT_NEAR(o.target[0].ty, 0.2, 1e-15);
  EXPECT_EQ(o.predicted[1], BoxOffsets{});
  EXPECT_EQ(o.target[1], BoxOffsets{});
}

}  // namespace
}  // namespace obbkit
