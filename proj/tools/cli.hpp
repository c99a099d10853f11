// Copyright (C) 2026 obbkit contributors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. `run` owns argument parsing and dispatch so tests
// can drive it in-process; main.cpp only forwards argv.

#pragma once

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "obbkit/obbkit.hpp"

namespace obbkit::cli {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kRange = 3,
  kSchema = 4,
  kIo = 5,
};

inline constexpr const char* kExitCodeHelp =
    "Exit codes:\n"
    "  0  success\n"
    "  1  internal error\n"
    "  2  usage error (unknown flag, missing argument)\n"
    "  3  range violation (numeric flag outside its documented range)\n"
    "  4  schema or parse error in an input file\n"
    "  5  file could not be read or written\n";

inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument:
      return kRange;
    case ErrorKind::parse:
    case ErrorKind::schema:
    case ErrorKind::shape_mismatch:
      return kSchema;
    case ErrorKind::io:
      return kIo;
    case ErrorKind::internal:
      break;
  }
  return kInternal;
}

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::io, "cannot open " + path);
  return in;
}

/// Writes to `path`, or to `fallback` when the path is empty or "-".
inline void emit(const std::string& path, const std::string& content, std::ostream& fallback) {
  if (path.empty() || path == "-") {
    fallback << content;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::io, "cannot write " + path);
  out << content;
  require(static_cast<bool>(out), ErrorKind::io, "failed writing " + path);
}

/// Box text file: one "cx cy w h theta" per line; blank and '#' lines skipped.
inline std::vector<RotatedBox> read_box_file(const std::string& path) {
  const std::string text = read_file(path);
  std::vector<RotatedBox> boxes;
  std::istringstream lines(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto tokens = obbkit::detail::split_ws(line);
    const std::string where = path + ":" + std::to_string(line_no) + ": ";
    require(tokens.size() == 5, ErrorKind::parse, where + "expected 5 numbers (cx cy w h theta)");
    double v[5];
    for (int k = 0; k < 5; ++k) {
      require(parse_double(tokens[static_cast<std::size_t>(k)], v[k]), ErrorKind::parse,
              where + "bad number '" + std::string(tokens[static_cast<std::size_t>(k)]) + "'");
    }
    try {
      boxes.emplace_back(v[0], v[1], v[2], v[3], v[4]);
    } catch (const Error& e) {
      fail(ErrorKind::parse, where + e.what());
    }
  }
  return boxes;
}

class KeyValueCsv {
 public:
  KeyValueCsv() { os_ << "key,value\n"; }
  void add(const std::string& key, double v) { os_ << key << ',' << format_double(v) << '\n'; }
  void add(const std::string& key, std::size_t v) { os_ << key << ',' << v << '\n'; }
  void add(const std::string& key, const std::string& v) { os_ << key << ',' << v << '\n'; }
  std::string str() const { return os_.str(); }

 private:
  std::ostringstream os_;
};

struct MatchingFlags {
  std::string stage = "detection";
  double alpha = 0.5;
  double gamma = 4.0;
  std::optional<double> threshold;

  void attach(CLI::App* cmd) {
    cmd->add_option("--stage", stage, "Assignment stage: sets the default positive threshold")
        ->check(CLI::IsMember({"refinement", "detection"}))
        ->capture_default_str();
    cmd->add_option("--alpha", alpha, "Matching-degree weight of the input IoU, [0,1]")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    cmd->add_option("--gamma", gamma, "Uncertainty penalty exponent, (0,100]")
        ->check(CLI::Range(1e-9, 100.0))
        ->capture_default_str();
    cmd->add_option("--threshold", threshold,
                    "Positive matching-degree threshold in [-1,1] (default: 0.4 refinement, "
                    "0.6 detection)")
        ->check(CLI::Range(-1.0, 1.0));
  }

  MatchingConfig config() const {
    auto cfg = MatchingConfig::for_stage(stage == "refinement" ? Stage::refinement : Stage::detection);
    cfg.alpha = alpha;
    cfg.gamma = gamma;
    if (threshold) cfg.positive_threshold = *threshold;
    return cfg;
  }
};

}  // namespace detail

struct Options {
  std::size_t threads = 1;
  unsigned long long seed = 0;

  // iou
  std::string iou_a, iou_b, iou_out;

  // assign
  std::string dump, assign_out, report;
  detail::MatchingFlags matching;
  double ref_threshold = 0.4;
  LossConfig loss;

  // eval
  std::string detections, annotations, eval_out;
  std::string variant = "voc07";
  double match_iou = kDefaultMatchThreshold;
  double nms = 0;  // 0: no NMS
  std::string difficult = "ignore";
  bool text = false;

  // tile
  std::string tile_annotations, dota, image_id, tile_out;
  std::size_t width = 0, height = 0;
  std::size_t side = kDefaultTileSide, stride = kDefaultTileStride;
  double keep_fraction = 0.5;
  bool skip_empty = false;

  // analyze
  std::string analyze_dump, analyze_out, anchors_csv;
  detail::MatchingFlags analyze_matching;
  double iou_out_threshold = 0.5;
};

inline int run_iou(const Options& o, std::ostream& out) {
  const auto a = detail::read_box_file(o.iou_a);
  const auto b = detail::read_box_file(o.iou_b);
  std::vector<double> iou(a.size() * b.size());
  parallel_for(a.size(), o.threads, [&](std::size_t i) {
    for (std::size_t j = 0; j < b.size(); ++j) iou[i * b.size() + j] = rotated_iou(a[i], b[j]);
  });
  std::ostringstream os;
  os << "i,j,iou\n";
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      os << i << ',' << j << ',' << format_double(iou[i * b.size() + j]) << '\n';
    }
  }
  detail::emit(o.iou_out, os.str(), out);
  return kOk;
}

struct ImageLosses {
  LossReport report;
  bool has_scores = false;
};

inline ImageLosses image_losses(const AnchorDumpImage& image, const AssignmentResult& detection,
                                const MatchingConfig& ref_cfg, const LossConfig& loss) {
  const auto targets = image.target_boxes();
  const auto refinement = assign_labels(image.anchors, image.regressed, targets, ref_cfg);
  ImageLosses r;
  const auto det_off = offsets_for(image.anchors, image.regressed, targets, detection);
  const auto ref_off = offsets_for(image.anchors, image.regressed, targets, refinement);
  r.report.reg_loss = reg_loss_ms(det_off.predicted, det_off.target, detection, loss);
  r.report.ref_loss = reg_loss_ms(ref_off.predicted, ref_off.target, refinement, loss);
  if (!image.scores.empty()) {
    r.has_scores = true;
    std::vector<int> classes;
    for (const auto& t : image.targets) classes.push_back(image.num_classes == 1 ? 0 : t.class_id);
    r.report.cls_loss = cls_loss_ms({image.num_classes, image.scores}, detection, classes, loss);
  }
  r.report.total = total_loss(r.report.cls_loss, r.report.ref_loss, r.report.reg_loss, loss);
  r.report.detection_positives = detection.num_positive();
  r.report.detection_negatives = detection.num_negative();
  r.report.refinement_positives = refinement.num_positive();
  r.report.refinement_negatives = refinement.num_negative();
  return r;
}

inline int run_assign(const Options& o, std::ostream& out) {
  auto in = detail::open_input(o.dump);
  const AnchorDump dump = read_dump(in);
  const MatchingConfig cfg = o.matching.config();
  MatchingConfig ref_cfg = MatchingConfig::for_stage(Stage::refinement);
  ref_cfg.alpha = cfg.alpha;
  ref_cfg.gamma = cfg.gamma;
  ref_cfg.positive_threshold = o.ref_threshold;
  o.loss.validate();

  std::vector<std::string> lines(dump.size());
  std::vector<ImageLosses> losses(dump.size());
  parallel_for(dump.size(), o.threads, [&](std::size_t i) {
    const auto& image = dump[i];
    const auto result = assign_labels(image.anchors, image.regressed, image.target_boxes(), cfg);
    std::ostringstream os;
    write_assignment(os, image.image_id, result);
    lines[i] = os.str();
    losses[i] = image_losses(image, result, ref_cfg, o.loss);
  });
  std::string assignments;
  for (const auto& l : lines) assignments += l;
  detail::emit(o.assign_out, assignments, out);

  // Batch report: losses averaged over images, counts summed.
  LossReport total;
  bool all_scores = !dump.empty();
  for (const auto& l : losses) {
    total.cls_loss += l.report.cls_loss;
    total.ref_loss += l.report.ref_loss;
    total.reg_loss += l.report.reg_loss;
    total.detection_positives += l.report.detection_positives;
    total.detection_negatives += l.report.detection_negatives;
    total.refinement_positives += l.report.refinement_positives;
    total.refinement_negatives += l.report.refinement_negatives;
    all_scores = all_scores && l.has_scores;
  }
  if (!dump.empty()) {
    const auto n = static_cast<double>(dump.size());
    total.cls_loss /= n;
    total.ref_loss /= n;
    total.reg_loss /= n;
  }
  total.total = total_loss(total.cls_loss, total.ref_loss, total.reg_loss, o.loss);

  detail::KeyValueCsv csv;
  csv.add("stage", o.matching.stage);
  csv.add("alpha", cfg.alpha);
  csv.add("gamma", cfg.gamma);
  csv.add("positive_threshold", cfg.positive_threshold);
  csv.add("refinement_threshold", ref_cfg.positive_threshold);
  csv.add("images", dump.size());
  csv.add("detection_positives", total.detection_positives);
  csv.add("detection_negatives", total.detection_negatives);
  csv.add("refinement_positives", total.refinement_positives);
  csv.add("refinement_negatives", total.refinement_negatives);
  csv.add("cls_loss_available", std::string(all_scores ? "true" : "false"));
  csv.add("cls_loss", total.cls_loss);
  csv.add("ref_loss", total.ref_loss);
  csv.add("reg_loss", total.reg_loss);
  csv.add("lambda1", o.loss.lambda1);
  csv.add("lambda2", o.loss.lambda2);
  csv.add("total_loss", total.total);
  if (!o.report.empty()) {
    detail::emit(o.report, csv.str(), out);
  }
  return kOk;
}

inline int run_eval(const Options& o, std::ostream& out) {
  auto det_in = detail::open_input(o.detections);
  auto dets = read_detections(det_in);
  auto ann_in = detail::open_input(o.annotations);
  std::vector<GroundTruthRecord> gts;
  for (const auto& entry : read_annotations(ann_in)) {
    for (auto g : entry.annotation.objects) {
      if (o.difficult == "count") g.difficult = false;
      gts.push_back(std::move(g));
    }
  }
  if (o.nms > 0) {
    dets = nms_per_image_class(dets, o.nms);
  }
  const ApVariant variant = o.variant == "voc12" ? ApVariant::voc12_continuous : ApVariant::voc07_11point;
  const auto result = mean_ap(dets, gts, variant, o.match_iou, o.threads);

  detail::KeyValueCsv csv;
  csv.add("variant", o.variant);
  csv.add("iou_threshold", o.match_iou);
  csv.add("nms_threshold", o.nms);
  csv.add("difficult", o.difficult);
  csv.add("classes", result.per_class.size());
  for (const auto& c : result.per_class) {
    const std::string key = "class:" + std::to_string(c.class_id);
    csv.add(key + ":num_gt", c.num_gt);
    csv.add(key + ":num_difficult", c.num_difficult);
    csv.add(key + ":num_det", c.num_det);
    csv.add(key + ":tp", c.true_positives);
    csv.add(key + ":fp", c.false_positives);
    csv.add(key + ":AP", c.ap);
  }
  csv.add("mAP", result.map);
  detail::emit(o.eval_out, csv.str(), out);

  if (o.text) {
    std::ostringstream t;
    t << std::left << std::setw(8) << "class" << std::right << std::setw(8) << "gt" << std::setw(8)
      << "det" << std::setw(8) << "tp" << std::setw(8) << "fp" << std::setw(12) << "AP" << '\n';
    for (const auto& c : result.per_class) {
      t << std::left << std::setw(8) << c.class_id << std::right << std::setw(8) << c.num_gt
        << std::setw(8) << c.num_det << std::setw(8) << c.true_positives << std::setw(8)
        << c.false_positives << std::setw(12) << std::fixed << std::setprecision(4) << c.ap << '\n';
    }
    t << std::left << std::setw(40) << "mAP" << std::right << std::setw(12) << std::fixed
      << std::setprecision(4) << result.map << '\n';
    out << t.str();
  }
  return kOk;
}

inline int run_tile(const Options& o, std::ostream& out, std::ostream& err) {
  std::vector<ImageAnnotation> images;
  if (!o.dota.empty()) {
    require(o.width > 0 && o.height > 0, ErrorKind::invalid_argument,
            "--dota needs --width and --height");
    const std::string id = o.image_id.empty() ? o.dota : o.image_id;
    images.push_back({id, o.width, o.height, parse_dota(detail::read_file(o.dota), id)});
  } else {
    auto in = detail::open_input(o.tile_annotations);
    for (auto& entry : read_annotations(in)) images.push_back(std::move(entry.annotation));
  }
  std::ostringstream os;
  for (const auto& image : images) {
    for (const auto& w : annotation_warnings(image)) err << "warning: " << w << '\n';
    for (const auto& win : tile_windows(image.width, image.height, o.side, o.stride)) {
      ImageAnnotation tile;
      tile.image_id = image.image_id + "__" + std::to_string(static_cast<long long>(win.x)) + "__" +
                      std::to_string(static_cast<long long>(win.y));
      tile.width = o.side;
      tile.height = o.side;
      tile.objects = clip_boxes_to_window(image.objects, win, o.keep_fraction);
      for (auto& obj : tile.objects) obj.image_id = tile.image_id;
      if (o.skip_empty && tile.objects.empty()) continue;
      write_annotation(os, tile, TileInfo{image.image_id, win});
    }
  }
  detail::emit(o.tile_out, os.str(), out);
  return kOk;
}

inline int run_analyze(const Options& o, std::ostream& out) {
  auto in = detail::open_input(o.analyze_dump);
  const AnchorDump dump = read_dump(in);
  const MatchingConfig cfg = o.analyze_matching.config();
  const auto stats = anchor_quality_stats(dump, cfg, o.iou_out_threshold, o.threads);

  detail::KeyValueCsv csv;
  csv.add("alpha", cfg.alpha);
  csv.add("gamma", cfg.gamma);
  csv.add("positive_threshold", cfg.positive_threshold);
  csv.add("iou_out_threshold", o.iou_out_threshold);
  csv.add("images", dump.size());
  csv.add("anchors", stats.num_anchors);
  csv.add("positives", stats.num_positives);
  csv.add("high_quality", stats.num_high_quality);
  csv.add("positives_high_quality", stats.positives_high_quality);
  csv.add("negatives_high_quality", stats.negatives_high_quality);
  csv.add("positive_high_quality_ratio", stats.positive_high_quality_ratio);
  csv.add("high_quality_from_negative_ratio", stats.high_quality_from_negative_ratio);
  detail::emit(o.analyze_out, csv.str(), out);

  if (!o.anchors_csv.empty()) {
    // Per-anchor rows for score/IoU scatter analyses.
    std::vector<std::string> rows(dump.size());
    parallel_for(dump.size(), o.threads, [&](std::size_t i) {
      const auto& image = dump[i];
      const auto result = assign_labels(image.anchors, image.regressed, image.target_boxes(), cfg);
      std::ostringstream os;
      for (std::size_t a = 0; a < result.anchors.size(); ++a) {
        const auto& s = result.anchors[a];
        os << image.image_id << ',' << a << ',' << (s.positive() ? 1 : 0) << ','
           << (s.target ? std::to_string(*s.target) : std::string("-1")) << ','
           << format_double(s.iou_in) << ',' << format_double(s.iou_out) << ','
           << format_double(s.md) << ',' << format_double(s.weight) << ',';
        if (!image.scores.empty()) {
          const std::size_t k = image.num_classes;
          double best = 0;
          for (std::size_t c = 0; c < k; ++c) best = std::max(best, image.scores[a * k + c]);
          os << format_double(best);
        }
        os << '\n';
      }
      rows[i] = os.str();
    });
    std::string content = "image_id,anchor,label,target,iou_in,iou_out,md,weight,score\n";
    for (const auto& r : rows) content += r;
    detail::emit(o.anchors_csv, content, out);
  }
  return kOk;
}

/// Parses argv and runs the selected subcommand. Diagnostics go to `err` as
/// a single line prefixed with "error:".
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"obbkit: rotated-box geometry, dynamic label assignment and evaluation"};
  app.footer(kExitCodeHelp);
  app.require_subcommand(1);
  Options o;
  app.add_option("--threads", o.threads, "Worker threads (output is identical for any count)")
      ->check(CLI::Range(std::size_t{1}, std::size_t{256}))
      ->capture_default_str();
  app.add_option("--seed", o.seed, "Seed for any sampling (core paths are deterministic)")
      ->capture_default_str();

  auto* iou = app.add_subcommand("iou", "Pairwise rotated IoU between two box files");
  iou->add_option("--a", o.iou_a, "Box file (cx cy w h theta per line)")->required();
  iou->add_option("--b", o.iou_b, "Box file (cx cy w h theta per line)")->required();
  iou->add_option("--out", o.iou_out, "CSV output (default: stdout)");

  auto* assign = app.add_subcommand("assign", "Anchor dump -> label assignment + loss report");
  assign->add_option("--dump", o.dump, "Anchor dump (JSON lines)")->required();
  assign->add_option("--out", o.assign_out, "Assignment output (JSON lines, default: stdout)");
  assign->add_option("--report", o.report, "Loss report CSV");
  o.matching.attach(assign);
  assign->add_option("--ref-threshold", o.ref_threshold,
                     "Refinement-stage threshold used for the refinement loss term, [-1,1]")
      ->check(CLI::Range(-1.0, 1.0))
      ->capture_default_str();
  assign->add_option("--focal-alpha", o.loss.focal_alpha, "Focal loss alpha, [0,1]")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  assign->add_option("--focal-gamma", o.loss.focal_gamma, "Focal loss gamma, [0,10]")
      ->check(CLI::Range(0.0, 10.0))
      ->capture_default_str();
  assign->add_option("--beta", o.loss.beta, "Smooth-L1 beta, (0,10]")
      ->check(CLI::Range(1e-12, 10.0))
      ->capture_default_str();
  assign->add_option("--lambda1", o.loss.lambda1, "Refinement loss weight, [0,100]")
      ->check(CLI::Range(0.0, 100.0))
      ->capture_default_str();
  assign->add_option("--lambda2", o.loss.lambda2, "Regression loss weight, [0,100]")
      ->check(CLI::Range(0.0, 100.0))
      ->capture_default_str();

  auto* eval = app.add_subcommand("eval", "Detections + annotations -> AP/mAP CSV");
  eval->add_option("--detections", o.detections, "Detections (JSON lines)")->required();
  eval->add_option("--annotations", o.annotations, "Annotations (JSON lines)")->required();
  eval->add_option("--out", o.eval_out, "CSV output (default: stdout)");
  eval->add_option("--variant", o.variant, "AP definition")
      ->check(CLI::IsMember({"voc07", "voc12"}))
      ->capture_default_str();
  eval->add_option("--iou", o.match_iou, "Rotated IoU needed for a true positive, (0,1]")
      ->check(CLI::Range(1e-9, 1.0))
      ->capture_default_str();
  eval->add_option("--nms", o.nms,
                   "Apply per-image, per-class rotated NMS at this IoU first; 0 disables, "
                   "0.5 is the usual choice, [0,1]")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  eval->add_option("--difficult", o.difficult,
                   "ignore: difficult boxes neither count nor penalize; count: treat as normal")
      ->check(CLI::IsMember({"ignore", "count"}))
      ->capture_default_str();
  eval->add_flag("--text", o.text, "Also print a plain-text table to stdout");

  auto* tile = app.add_subcommand("tile", "Annotations -> per-window annotations");
  auto* tile_ann =
      tile->add_option("--annotations", o.tile_annotations, "Annotations (JSON lines)");
  auto* tile_dota = tile->add_option("--dota", o.dota, "DOTA text annotation file");
  tile_ann->excludes(tile_dota);
  tile->add_option("--image-id", o.image_id, "Image id for --dota input");
  tile->add_option("--width", o.width, "Image width for --dota input")
      ->check(CLI::Range(std::size_t{1}, std::size_t{1} << 20));
  tile->add_option("--height", o.height, "Image height for --dota input")
      ->check(CLI::Range(std::size_t{1}, std::size_t{1} << 20));
  tile->add_option("--side", o.side, "Window side in pixels")
      ->check(CLI::Range(std::size_t{1}, std::size_t{1} << 20))
      ->capture_default_str();
  tile->add_option("--stride", o.stride, "Window stride in pixels (<= side)")
      ->check(CLI::Range(std::size_t{1}, std::size_t{1} << 20))
      ->capture_default_str();
  tile->add_option("--keep-fraction", o.keep_fraction,
                   "Minimum fraction of a box's area inside a window to keep it, [0,1]")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  tile->add_flag("--skip-empty", o.skip_empty, "Omit windows without objects");
  tile->add_option("--out", o.tile_out, "Output (JSON lines, default: stdout)");

  auto* analyze = app.add_subcommand("analyze", "Anchor dump -> anchor-quality statistics CSV");
  analyze->add_option("--dump", o.analyze_dump, "Anchor dump (JSON lines)")->required();
  analyze->add_option("--out", o.analyze_out, "Statistics CSV (default: stdout)");
  analyze->add_option("--anchors-csv", o.anchors_csv, "Optional per-anchor CSV");
  o.analyze_matching.attach(analyze);
  analyze->add_option("--iou-out-threshold", o.iou_out_threshold,
                      "Output IoU above which a regressed box counts as high quality, [0,1]")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kRange;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) {
      return app.exit(e, out, err);
    }
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (tile->parsed() && o.dota.empty() && o.tile_annotations.empty()) {
      err << "error: tile needs --annotations or --dota\n";
      return kUsage;
    }
    if (tile->parsed()) {
      require(o.stride <= o.side, ErrorKind::invalid_argument, "--stride must not exceed --side");
    }
    if (iou->parsed()) return run_iou(o, out);
    if (assign->parsed()) return run_assign(o, out);
    if (eval->parsed()) return run_eval(o, out);
    if (tile->parsed()) return run_tile(o, out, err);
    if (analyze->parsed()) return run_analyze(o, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInternal;
  }
  return kUsage;
}

}  // namespace obbkit::cli
