// Copyright (C) 2026 obbkit contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "obbkit/geometry.hpp"

namespace obbkit {

struct DetectionRecord {
  std::string image_id;
  RotatedBox box;
  int class_id = 0;
  double score = 0;
};

struct GroundTruthRecord {
  std::string image_id;
  RotatedBox box;
  int class_id = 0;
  bool difficult = false;
};

struct ImageAnnotation {
  std::string image_id;
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<GroundTruthRecord> objects;
};

using AnnotationSet = std::vector<ImageAnnotation>;

/// One image worth of model output feeding label assignment and analysis.
struct AnchorDumpImage {
  std::string image_id;
  std::vector<RotatedBox> anchors;
  std::vector<RotatedBox> regressed;
  std::vector<GroundTruthRecord> targets;
  /// Optional per-anchor class probabilities, row-major (anchor, class).
  std::vector<double> scores;
  std::size_t num_classes = 0;
  /// Optional audit copies of the IoUs against the argmax target.
  std::vector<double> iou_in;
  std::vector<double> iou_out;

  std::vector<RotatedBox> target_boxes() const {
    std::vector<RotatedBox> boxes;
    boxes.reserve(targets.size());
    for (const auto& t : targets) boxes.push_back(t.box);
    return boxes;
  }
};

using AnchorDump = std::vector<AnchorDumpImage>;

}  // namespace obbkit
