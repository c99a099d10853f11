// Copyright (C) 2026 obbkit contributors
// SPDX-License-Identifier: Apache-2.0
//
// Matching-degree label assignment.
//
//   md = alpha * IoU_in + (1 - alpha) * IoU_out - |IoU_in - IoU_out|^gamma
//
// IoU_in compares a target with the anchor before regression, IoU_out with
// the regressed box. Positives are anchors whose md clears a stage threshold;
// targets left without any positive get their best anchor promoted. Each
// positive carries a weight w = md + (1 - md_max) computed per target.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "obbkit/error.hpp"
#include "obbkit/geometry.hpp"

namespace obbkit {

enum class Stage { refinement, detection };

struct MatchingConfig {
  double alpha = 0.5;
  double gamma = 4.0;
  double positive_threshold = 0.6;
  Stage stage = Stage::detection;

  /// alpha = 0.5, gamma = 4 with the stage's positive threshold
  /// (0.4 for refinement, 0.6 for detection).
  static MatchingConfig for_stage(Stage stage) {
    return {0.5, 4.0, stage == Stage::refinement ? 0.4 : 0.6, stage};
  }

  void validate() const {
    require(alpha >= 0 && alpha <= 1, ErrorKind::invalid_argument,
            "alpha must lie in [0,1], got " + std::to_string(alpha));
    require(gamma > 0 && std::isfinite(gamma), ErrorKind::invalid_argument,
            "gamma must be positive, got " + std::to_string(gamma));
    require(std::isfinite(positive_threshold), ErrorKind::invalid_argument,
            "positive threshold must be finite");
  }
};

inline double matching_degree(double iou_in, double iou_out, const MatchingConfig& cfg) {
  const double u = std::abs(iou_in - iou_out);
  return cfg.alpha * iou_in + (1 - cfg.alpha) * iou_out - std::pow(u, cfg.gamma);
}

enum class Label { negative = 0, positive = 1 };

struct AnchorAssignment {
  Label label = Label::negative;
  /// Set for positives only.
  std::optional<std::size_t> target;
  /// md against the associated target (argmax target, or the promoting
  /// target for fallback positives); 0 when there are no targets.
  double md = 0;
  double iou_in = 0;
  double iou_out = 0;
  /// Positive weight w; 0 for negatives.
  double weight = 0;
  /// True when the anchor became positive through the per-target fallback.
  bool promoted = false;

  bool positive() const noexcept { return label == Label::positive; }
  friend bool operator==(const AnchorAssignment&, const AnchorAssignment&) = default;
};

struct AssignmentResult {
  std::vector<AnchorAssignment> anchors;
  std::size_t num_targets = 0;

  std::size_t num_positive() const {
    return static_cast<std::size_t>(
        std::count_if(anchors.begin(), anchors.end(), [](const auto& a) { return a.positive(); }));
  }
  std::size_t num_negative() const { return anchors.size() - num_positive(); }
  friend bool operator==(const AssignmentResult&, const AssignmentResult&) = default;
};

/// Per-target weights from the positives' matching degrees. The entries
/// holding the maximum are set to exactly 1; all others are capped at 1.
inline std::vector<double> positive_weights(std::span<const double> md_pos) {
  require(!md_pos.empty(), ErrorKind::internal,
          "positive_weights: target has no positives after fallback");
  const double md_max = *std::max_element(md_pos.begin(), md_pos.end());
  const double delta = 1 - md_max;
  std::vector<double> w(md_pos.size());
  for (std::size_t i = 0; i < md_pos.size(); ++i) {
    w[i] = md_pos[i] == md_max ? 1.0 : std::min(1.0, md_pos[i] + delta);
  }
  return w;
}

/// Matching-degree matrix plus the two IoU matrices it came from, row-major
/// (anchor, target).
struct MatchingTable {
  std::size_t num_anchors = 0;
  std::size_t num_targets = 0;
  std::vector<double> iou_in;
  std::vector<double> iou_out;
  std::vector<double> md;

  double md_at(std::size_t a, std::size_t t) const { return md[a * num_targets + t]; }
};

inline MatchingTable matching_table(std::span<const RotatedBox> anchors,
                                    std::span<const RotatedBox> regressed,
                                    std::span<const RotatedBox> targets,
                                    const MatchingConfig& cfg) {
  require(anchors.size() == regressed.size(), ErrorKind::shape_mismatch,
          "assign: " + std::to_string(anchors.size()) + " anchors but " +
              std::to_string(regressed.size()) + " regressed boxes");
  cfg.validate();
  MatchingTable table{anchors.size(), targets.size(), {}, {}, {}};
  const std::size_t cells = anchors.size() * targets.size();
  table.iou_in.resize(cells);
  table.iou_out.resize(cells);
  table.md.resize(cells);
  for (std::size_t a = 0; a < anchors.size(); ++a) {
    for (std::size_t t = 0; t < targets.size(); ++t) {
      const std::size_t k = a * targets.size() + t;
      table.iou_in[k] = rotated_iou(anchors[a], targets[t]);
      table.iou_out[k] = rotated_iou(regressed[a], targets[t]);
      table.md[k] = matching_degree(table.iou_in[k], table.iou_out[k], cfg);
    }
  }
  return table;
}

/// Label assignment over a precomputed table.
///
/// 1. every anchor associates with its argmax-md target (lowest index wins ties);
/// 2. anchors whose md reaches the threshold become positive;
/// 3. each target still lacking a positive, in index order, promotes its
///    argmax-md anchor among the eligible ones: anchors that are negative or
///    that are one of several positives of another target, and that were not
///    promoted already. A promoted anchor moves to the promoting target, so no
///    anchor is ever positive for two targets and no covered target is
///    emptied. With at least as many anchors as targets every target ends up
///    with a positive;
/// 4. weights are computed per target with positive_weights.
inline AssignmentResult assign_from_table(const MatchingTable& table, const MatchingConfig& cfg) {
  cfg.validate();
  AssignmentResult result;
  result.num_targets = table.num_targets;
  result.anchors.resize(table.num_anchors);
  if (table.num_targets == 0) {
    return result;
  }

  std::vector<std::size_t> positives_per_target(table.num_targets, 0);
  for (std::size_t a = 0; a < table.num_anchors; ++a) {
    std::size_t best = 0;
    for (std::size_t t = 1; t < table.num_targets; ++t) {
      if (table.md_at(a, t) > table.md_at(a, best)) {
        best = t;
      }
    }
    auto& slot = result.anchors[a];
    const std::size_t k = a * table.num_targets + best;
    slot.md = table.md[k];
    slot.iou_in = table.iou_in[k];
    slot.iou_out = table.iou_out[k];
    if (slot.md >= cfg.positive_threshold) {
      slot.label = Label::positive;
      slot.target = best;
      ++positives_per_target[best];
    }
  }

  for (std::size_t t = 0; t < table.num_targets; ++t) {
    if (positives_per_target[t] > 0) {
      continue;
    }
    std::optional<std::size_t> pick;
    for (std::size_t a = 0; a < table.num_anchors; ++a) {
      const auto& slot = result.anchors[a];
      const bool eligible =
          !slot.promoted && (!slot.positive() || positives_per_target[*slot.target] > 1);
      if (eligible && (!pick || table.md_at(a, t) > table.md_at(*pick, t))) {
        pick = a;
      }
    }
    if (!pick) {
      continue;  // fewer anchors than targets
    }
    auto& slot = result.anchors[*pick];
    if (slot.positive()) {
      --positives_per_target[*slot.target];
    }
    const std::size_t k = *pick * table.num_targets + t;
    slot.label = Label::positive;
    slot.target = t;
    slot.md = table.md[k];
    slot.iou_in = table.iou_in[k];
    slot.iou_out = table.iou_out[k];
    slot.promoted = true;
    ++positives_per_target[t];
  }

  std::vector<std::vector<std::size_t>> members(table.num_targets);
  for (std::size_t a = 0; a < table.num_anchors; ++a) {
    if (result.anchors[a].positive()) {
      members[*result.anchors[a].target].push_back(a);
    }
  }
  for (const auto& group : members) {
    if (group.empty()) {
      continue;
    }
    std::vector<double> md_pos;
    md_pos.reserve(group.size());
    for (auto a : group) md_pos.push_back(result.anchors[a].md);
    const auto w = positive_weights(md_pos);
    for (std::size_t i = 0; i < group.size(); ++i) {
      result.anchors[group[i]].weight = w[i];
    }
  }
  return result;
}

inline AssignmentResult assign_labels(std::span<const RotatedBox> anchors,
                                      std::span<const RotatedBox> regressed,
                                      std::span<const RotatedBox> targets,
                                      const MatchingConfig& cfg) {
  return assign_from_table(matching_table(anchors, regressed, targets, cfg), cfg);
}

}  // namespace obbkit
