// Copyright (C) 2026 obbkit contributors
// SPDX-License-Identifier: Apache-2.0
//
// Forward values of the matching-sensitive losses:
//
//   L_cls = 1/N_n sum_neg FL + 1/N_p sum_pos (w_j + 1) FL
//   L_reg = 1/N_p sum_pos w_j SmoothL1(t_j - t*_j)
//   L     = L_cls + lambda1 L_ref + lambda2 L_reg
//
// where L_ref is L_reg evaluated with the refinement-stage assignment.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "obbkit/anchors.hpp"
#include "obbkit/assignment.hpp"
#include "obbkit/error.hpp"

namespace obbkit {

struct LossConfig {
  double focal_alpha = 0.25;
  double focal_gamma = 2.0;
  double beta = 1.0 / 9.0;
  double lambda1 = 0.5;
  double lambda2 = 0.5;

  void validate() const {
    require(focal_alpha >= 0 && focal_alpha <= 1, ErrorKind::invalid_argument,
            "focal alpha must lie in [0,1]");
    require(focal_gamma >= 0 && std::isfinite(focal_gamma), ErrorKind::invalid_argument,
            "focal gamma must be non-negative");
    require(beta > 0 && std::isfinite(beta), ErrorKind::invalid_argument,
            "smooth-L1 beta must be positive");
    require(lambda1 >= 0 && lambda2 >= 0, ErrorKind::invalid_argument,
            "loss weights must be non-negative");
  }
};

inline constexpr double kProbabilityClamp = 1e-6;

inline double focal_loss(double p, bool is_positive, const LossConfig& cfg) {
  p = std::clamp(p, kProbabilityClamp, 1 - kProbabilityClamp);
  if (is_positive) {
    return -cfg.focal_alpha * std::pow(1 - p, cfg.focal_gamma) * std::log(p);
  }
  return -(1 - cfg.focal_alpha) * std::pow(p, cfg.focal_gamma) * std::log(1 - p);
}

inline double smooth_l1(double x, double beta) {
  const double ax = std::abs(x);
  return ax < beta ? 0.5 * ax * ax / beta : ax - 0.5 * beta;
}

/// Per-anchor one-vs-all class probabilities, row-major (anchor, class).
struct ClassProbabilities {
  std::size_t num_classes = 1;
  std::vector<double> values;

  std::size_t num_anchors() const { return num_classes == 0 ? 0 : values.size() / num_classes; }
  double at(std::size_t anchor, std::size_t cls) const { return values[anchor * num_classes + cls]; }
};

/// `target_classes[t]` is the class of target t. An empty span means every
/// target belongs to class 0.
inline double cls_loss_ms(const ClassProbabilities& probs, const AssignmentResult& assignment,
                          std::span<const int> target_classes, const LossConfig& cfg) {
  cfg.validate();
  require(probs.num_classes > 0 && probs.values.size() % probs.num_classes == 0 &&
              probs.num_anchors() == assignment.anchors.size(),
          ErrorKind::shape_mismatch,
          "classification probabilities do not cover " +
              std::to_string(assignment.anchors.size()) + " anchors");
  require(target_classes.empty() || target_classes.size() == assignment.num_targets,
          ErrorKind::shape_mismatch, "one class id per target expected");

  double neg_sum = 0;
  double pos_sum = 0;
  std::size_t n_neg = 0;
  std::size_t n_pos = 0;
  for (std::size_t a = 0; a < assignment.anchors.size(); ++a) {
    const auto& slot = assignment.anchors[a];
    if (!slot.positive()) {
      double fl = 0;
      for (std::size_t k = 0; k < probs.num_classes; ++k) fl += focal_loss(probs.at(a, k), false, cfg);
      neg_sum += fl;
      ++n_neg;
      continue;
    }
    const int cls = target_classes.empty() ? 0 : target_classes[*slot.target];
    require(cls >= 0 && static_cast<std::size_t>(cls) < probs.num_classes,
            ErrorKind::invalid_argument, "target class id " + std::to_string(cls) + " out of range");
    double fl = 0;
    for (std::size_t k = 0; k < probs.num_classes; ++k) {
      fl += focal_loss(probs.at(a, k), k == static_cast<std::size_t>(cls), cfg);
    }
    pos_sum += (slot.weight + 1) * fl;
    ++n_pos;
  }
  const double neg_term = n_neg > 0 ? neg_sum / static_cast<double>(n_neg) : 0.0;
  const double pos_term = n_pos > 0 ? pos_sum / static_cast<double>(n_pos) : 0.0;
  return neg_term + pos_term;
}

inline double offsets_smooth_l1(const BoxOffsets& pred, const BoxOffsets& target, double beta) {
  return smooth_l1(pred.tx - target.tx, beta) + smooth_l1(pred.ty - target.ty, beta) +
         smooth_l1(pred.tw - target.tw, beta) + smooth_l1(pred.th - target.th, beta) +
         smooth_l1(pred.ttheta - target.ttheta, beta);
}

/// Offsets are indexed by anchor; entries of negatives are ignored.
inline double reg_loss_ms(std::span<const BoxOffsets> pred, std::span<const BoxOffsets> target,
                          const AssignmentResult& assignment, const LossConfig& cfg) {
  cfg.validate();
  require(pred.size() == assignment.anchors.size() && target.size() == assignment.anchors.size(),
          ErrorKind::shape_mismatch, "regression offsets must be given for every anchor");
  double sum = 0;
  std::size_t n_pos = 0;
  for (std::size_t a = 0; a < assignment.anchors.size(); ++a) {
    const auto& slot = assignment.anchors[a];
    if (slot.positive()) {
      sum += slot.weight * offsets_smooth_l1(pred[a], target[a], cfg.beta);
      ++n_pos;
    }
  }
  return n_pos > 0 ? sum / static_cast<double>(n_pos) : 0.0;
}

inline double total_loss(double cls, double ref, double reg, const LossConfig& cfg) {
  return cls + cfg.lambda1 * ref + cfg.lambda2 * reg;
}

struct LossReport {
  double cls_loss = 0;
  double ref_loss = 0;
  double reg_loss = 0;
  double total = 0;
  std::size_t refinement_positives = 0;
  std::size_t refinement_negatives = 0;
  std::size_t detection_positives = 0;
  std::size_t detection_negatives = 0;
};

/// Offsets of each anchor's regressed box and of its assigned target, both
/// encoded against the anchor. Negatives get zero offsets.
struct OffsetPairs {
  std::vector<BoxOffsets> predicted;
  std::vector<BoxOffsets> target;
};

inline OffsetPairs offsets_for(std::span<const RotatedBox> anchors,
                               std::span<const RotatedBox> regressed,
                               std::span<const RotatedBox> targets,
                               const AssignmentResult& assignment) {
  require(anchors.size() == assignment.anchors.size() && regressed.size() == anchors.size(),
          ErrorKind::shape_mismatch, "offsets_for: anchors, boxes and assignment disagree in size");
  OffsetPairs out{std::vector<BoxOffsets>(anchors.size()), std::vector<BoxOffsets>(anchors.size())};
  for (std::size_t a = 0; a < anchors.size(); ++a) {
    const auto& slot = assignment.anchors[a];
    if (slot.positive()) {
      out.predicted[a] = encode_offsets(anchors[a], regressed[a]);
      out.target[a] = encode_offsets(anchors[a], targets[*slot.target]);
    }
  }
  return out;
}

}  // namespace obbkit
