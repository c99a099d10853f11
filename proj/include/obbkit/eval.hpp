// Copyright (C) 2026 obbkit contributors
// SPDX-License-Identifier: Apache-2.0
//
// Post-processing and evaluation: greedy rotated NMS, VOC-style detection
// matching, 11-point (VOC07) and area (VOC12) average precision, and
// anchor-quality statistics over an anchor dump.

#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "obbkit/assignment.hpp"
#include "obbkit/error.hpp"
#include "obbkit/geometry.hpp"
#include "obbkit/parallel.hpp"
#include "obbkit/records.hpp"

namespace obbkit {

enum class ApVariant { voc07_11point, voc12_continuous };

inline constexpr double kDefaultNmsThreshold = 0.5;
inline constexpr double kDefaultMatchThreshold = 0.5;

/// Indices sorted by descending score, input order breaking ties.
inline std::vector<std::size_t> score_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

/// Greedy suppression for one image and class. Returns the indices of kept
/// detections in processing order (score descending, index ascending).
inline std::vector<std::size_t> rotated_nms(std::span<const DetectionRecord> dets,
                                            double iou_threshold = kDefaultNmsThreshold) {
  require(iou_threshold > 0 && iou_threshold <= 1, ErrorKind::invalid_argument,
          "NMS IoU threshold must lie in (0,1]");
  std::vector<double> scores;
  scores.reserve(dets.size());
  for (const auto& d : dets) scores.push_back(d.score);
  std::vector<std::size_t> kept;
  for (std::size_t i : score_order(scores)) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](std::size_t k) {
      return rotated_iou(dets[i].box, dets[k].box) >= iou_threshold;
    });
    if (!suppressed) {
      kept.push_back(i);
    }
  }
  return kept;
}

/// NMS applied independently per (image, class); kept records keep their
/// relative input order.
inline std::vector<DetectionRecord> nms_per_image_class(std::span<const DetectionRecord> dets,
                                                        double iou_threshold) {
  std::map<std::pair<std::string, int>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < dets.size(); ++i) groups[{dets[i].image_id, dets[i].class_id}].push_back(i);
  std::vector<bool> keep(dets.size(), false);
  for (const auto& [key, idx] : groups) {
    std::vector<DetectionRecord> group;
    group.reserve(idx.size());
    for (auto i : idx) group.push_back(dets[i]);
    for (auto k : rotated_nms(group, iou_threshold)) keep[idx[k]] = true;
  }
  std::vector<DetectionRecord> out;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (keep[i]) out.push_back(dets[i]);
  }
  return out;
}

enum class MatchOutcome { true_positive, false_positive, ignored };

/// Matches detections of one class against ground truth of the same class.
/// Detections are visited by descending score; each claims the unclaimed
/// ground truth (difficult ones are never claimed) of highest rotated IoU at
/// or above the threshold in its image. Landing on a difficult box ignores
/// the detection. Result is indexed like `dets`.
inline std::vector<MatchOutcome> match_detections(std::span<const DetectionRecord> dets,
                                                  std::span<const GroundTruthRecord> gts,
                                                  double iou_threshold = kDefaultMatchThreshold) {
  std::unordered_map<std::string, std::vector<std::size_t>> by_image;
  for (std::size_t g = 0; g < gts.size(); ++g) by_image[gts[g].image_id].push_back(g);

  std::vector<double> scores;
  scores.reserve(dets.size());
  for (const auto& d : dets) scores.push_back(d.score);

  std::vector<bool> claimed(gts.size(), false);
  std::vector<MatchOutcome> outcome(dets.size(), MatchOutcome::false_positive);
  for (std::size_t i : score_order(scores)) {
    auto it = by_image.find(dets[i].image_id);
    if (it == by_image.end()) {
      continue;
    }
    double best_iou = -1;
    std::size_t best = 0;
    for (std::size_t g : it->second) {
      if (claimed[g]) {
        continue;
      }
      const double iou = rotated_iou(dets[i].box, gts[g].box);
      if (iou >= iou_threshold && iou > best_iou) {
        best_iou = iou;
        best = g;
      }
    }
    if (best_iou < 0) {
      continue;
    }
    if (gts[best].difficult) {
      outcome[i] = MatchOutcome::ignored;
    } else {
      outcome[i] = MatchOutcome::true_positive;
      claimed[best] = true;
    }
  }
  return outcome;
}

struct PrecisionRecall {
  std::vector<double> precision;
  std::vector<double> recall;
};

/// Cumulative precision/recall over detections in descending-score order;
/// ignored detections are skipped.
inline PrecisionRecall precision_recall(std::span<const MatchOutcome> flags,
                                        std::span<const double> scores, std::size_t n_positive) {
  require(flags.size() == scores.size(), ErrorKind::shape_mismatch,
          "one score per match flag expected");
  PrecisionRecall pr;
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i : score_order(scores)) {
    if (flags[i] == MatchOutcome::ignored) {
      continue;
    }
    (flags[i] == MatchOutcome::true_positive ? tp : fp) += 1;
    pr.precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
    pr.recall.push_back(n_positive > 0 ? static_cast<double>(tp) / static_cast<double>(n_positive)
                                       : 0.0);
  }
  return pr;
}

/// VOC07: mean of the interpolated precision at recall 0, 0.1, ..., 1.
/// VOC12: area under the monotone precision envelope.
/// Returns 0 when there are no positives to find.
inline double average_precision(std::span<const MatchOutcome> flags, std::span<const double> scores,
                                std::size_t n_positive, ApVariant variant) {
  const auto pr = precision_recall(flags, scores, n_positive);
  if (n_positive == 0) {
    return 0.0;
  }
  if (variant == ApVariant::voc07_11point) {
    double sum = 0;
    for (int step = 0; step <= 10; ++step) {
      const double t = step / 10.0;
      double p = 0;
      for (std::size_t i = 0; i < pr.recall.size(); ++i) {
        if (pr.recall[i] >= t) p = std::max(p, pr.precision[i]);
      }
      sum += p;
    }
    return sum / 11.0;
  }
  std::vector<double> mrec{0.0};
  std::vector<double> mpre{0.0};
  mrec.insert(mrec.end(), pr.recall.begin(), pr.recall.end());
  mpre.insert(mpre.end(), pr.precision.begin(), pr.precision.end());
  mrec.push_back(1.0);
  mpre.push_back(0.0);
  for (std::size_t i = mpre.size() - 1; i > 0; --i) {
    mpre[i - 1] = std::max(mpre[i - 1], mpre[i]);
  }
  double ap = 0;
  for (std::size_t i = 1; i < mrec.size(); ++i) {
    ap += (mrec[i] - mrec[i - 1]) * mpre[i];
  }
  return ap;
}

struct ClassAp {
  int class_id = 0;
  double ap = 0;
  std::size_t num_gt = 0;  // non-difficult
  std::size_t num_difficult = 0;
  std::size_t num_det = 0;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
};

struct MeanApResult {
  std::vector<ClassAp> per_class;  // ascending class id
  double map = 0;
};

/// Per-class AP over every class with at least one non-difficult ground
/// truth box; mAP is their unweighted mean. Classes are evaluated in
/// parallel, results are identical for any thread count.
inline MeanApResult mean_ap(std::span<const DetectionRecord> dets,
                            std::span<const GroundTruthRecord> gts, ApVariant variant,
                            double iou_threshold = kDefaultMatchThreshold,
                            std::size_t threads = 1) {
  std::map<int, std::vector<GroundTruthRecord>> gt_by_class;
  for (const auto& g : gts) gt_by_class[g.class_id].push_back(g);
  std::map<int, std::vector<DetectionRecord>> det_by_class;
  for (const auto& d : dets) det_by_class[d.class_id].push_back(d);

  std::vector<int> classes;
  for (const auto& [cls, list] : gt_by_class) {
    if (std::any_of(list.begin(), list.end(), [](const auto& g) { return !g.difficult; })) {
      classes.push_back(cls);
    }
  }

  MeanApResult result;
  result.per_class.resize(classes.size());
  parallel_for(classes.size(), threads, [&](std::size_t k) {
    const int cls = classes[k];
    const auto& class_gts = gt_by_class.at(cls);
    static const std::vector<DetectionRecord> none;
    const auto it = det_by_class.find(cls);
    const auto& class_dets = it == det_by_class.end() ? none : it->second;

    ClassAp entry;
    entry.class_id = cls;
    for (const auto& g : class_gts) (g.difficult ? entry.num_difficult : entry.num_gt) += 1;
    entry.num_det = class_dets.size();
    const auto flags = match_detections(class_dets, class_gts, iou_threshold);
    std::vector<double> scores;
    scores.reserve(class_dets.size());
    for (const auto& d : class_dets) scores.push_back(d.score);
    for (auto f : flags) {
      if (f == MatchOutcome::true_positive) ++entry.true_positives;
      if (f == MatchOutcome::false_positive) ++entry.false_positives;
    }
    entry.ap = average_precision(flags, scores, entry.num_gt, variant);
    result.per_class[k] = entry;
  });
  if (!classes.empty()) {
    double sum = 0;
    for (const auto& c : result.per_class) sum += c.ap;
    result.map = sum / static_cast<double>(classes.size());
  }
  return result;
}

struct AnchorQualityStats {
  std::size_t num_anchors = 0;
  std::size_t num_positives = 0;
  std::size_t num_high_quality = 0;
  std::size_t positives_high_quality = 0;
  std::size_t negatives_high_quality = 0;
  /// Fraction of positives whose regressed box reaches the IoU threshold.
  double positive_high_quality_ratio = 0;
  /// Among anchors whose regressed box reaches it, fraction labeled negative.
  double high_quality_from_negative_ratio = 0;
};

/// An anchor's output IoU is the best rotated IoU between its regressed box
/// and any target of its image; "high quality" means strictly above the
/// threshold.
inline AnchorQualityStats anchor_quality_stats(const AnchorDump& dump, const MatchingConfig& cfg,
                                               double iou_out_threshold = 0.5,
                                               std::size_t threads = 1) {
  std::vector<AnchorQualityStats> partial(dump.size());
  parallel_for(dump.size(), threads, [&](std::size_t i) {
    const auto& image = dump[i];
    const auto targets = image.target_boxes();
    const auto assignment = assign_labels(image.anchors, image.regressed, targets, cfg);
    auto& s = partial[i];
    s.num_anchors = image.anchors.size();
    for (std::size_t a = 0; a < image.anchors.size(); ++a) {
      double best = 0;
      for (const auto& t : targets) best = std::max(best, rotated_iou(image.regressed[a], t));
      const bool high = best > iou_out_threshold;
      const bool pos = assignment.anchors[a].positive();
      s.num_positives += pos;
      s.num_high_quality += high;
      s.positives_high_quality += pos && high;
      s.negatives_high_quality += !pos && high;
    }
  });
  AnchorQualityStats total;
  for (const auto& s : partial) {
    total.num_anchors += s.num_anchors;
    total.num_positives += s.num_positives;
    total.num_high_quality += s.num_high_quality;
    total.positives_high_quality += s.positives_high_quality;
    total.negatives_high_quality += s.negatives_high_quality;
  }
  if (total.num_positives > 0) {
    total.positive_high_quality_ratio = static_cast<double>(total.positives_high_quality) /
                                        static_cast<double>(total.num_positives);
  }
  if (total.num_high_quality > 0) {
    total.high_quality_from_negative_ratio = static_cast<double>(total.negatives_high_quality) /
                                             static_cast<double>(total.num_high_quality);
  }
  return total;
}

}  // namespace obbkit
