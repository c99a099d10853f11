// Copyright (C) 2026 obbkit contributors
// SPDX-License-Identifier: Apache-2.0
//
// Annotation parsing, tiling of large images and the line-delimited JSON
// formats shared by the command-line tools. Every JSON line carries
// "schema_version": 1.
//
//   annotations  {"image_id", "width", "height",
//                 "objects": [{"box": [cx,cy,w,h,theta], "class": int,
//                              "difficult": bool}],
//                 "tile": {"source", "x", "y", "side"}  (optional)}
//   anchor dump  {"image_id", "anchors": [[5]...], "regressed": [[5]...],
//                 "targets": [{"box", "class", "difficult"}],
//                 "scores": [p...] | [[p_class...]...]  (optional),
//                 "iou_in": [...], "iou_out": [...]      (optional)}
//   detections   {"image_id", "detections": [{"box", "class", "score"}]}

#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "obbkit/assignment.hpp"
#include "obbkit/error.hpp"
#include "obbkit/format.hpp"
#include "obbkit/geometry.hpp"
#include "obbkit/records.hpp"

namespace obbkit {

inline constexpr int kSchemaVersion = 1;

/// The fifteen DOTA categories in their conventional order (PL ... HC).
inline const std::vector<std::string>& dota_classes() {
  static const std::vector<std::string> names{
      "plane",        "baseball-diamond", "bridge",          "ground-track-field",
      "small-vehicle", "large-vehicle",   "ship",            "tennis-court",
      "basketball-court", "storage-tank", "soccer-ball-field", "roundabout",
      "harbor",       "swimming-pool",    "helicopter"};
  return names;
}

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) tokens.push_back(line.substr(start, i - start));
  }
  return tokens;
}

inline std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ", ") + s;
  return out;
}

}  // namespace detail

/// Parses DOTA "x1 y1 x2 y2 x3 y3 x4 y4 category difficult" lines. Blank
/// lines and metadata lines ("imagesource:...", "gsd:...") are skipped.
inline std::vector<GroundTruthRecord> parse_dota(std::string_view text, const std::string& image_id,
                                                 const std::vector<std::string>& classes = dota_classes()) {
  std::vector<GroundTruthRecord> records;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    const auto tokens = detail::split_ws(line);
    if (tokens.empty() || tokens.front().find(':') != std::string_view::npos) {
      if (end == text.size()) break;
      continue;
    }
    const std::string where = "line " + std::to_string(line_no) + ": ";
    require(tokens.size() == 10, ErrorKind::parse,
            where + "expected 10 fields (8 coordinates, category, difficult), got " +
                std::to_string(tokens.size()));
    std::array<Point, 4> quad;
    for (std::size_t k = 0; k < 8; ++k) {
      double v = 0;
      require(parse_double(tokens[k], v) && std::isfinite(v), ErrorKind::parse,
              where + "bad coordinate '" + std::string(tokens[k]) + "'");
      (k % 2 == 0 ? quad[k / 2].x : quad[k / 2].y) = v;
    }
    const std::string category(tokens[8]);
    const auto it = std::find(classes.begin(), classes.end(), category);
    require(it != classes.end(), ErrorKind::parse,
            where + "unknown category '" + category + "'; known: " + detail::join(classes));
    require(tokens[9] == "0" || tokens[9] == "1", ErrorKind::parse,
            where + "difficult flag must be 0 or 1, got '" + std::string(tokens[9]) + "'");
    try {
      records.push_back({image_id, poly_to_rbox(quad), static_cast<int>(it - classes.begin()),
                         tokens[9] == "1"});
    } catch (const Error& e) {
      fail(ErrorKind::parse, where + e.what());
    }
    if (end == text.size()) break;
  }
  return records;
}

/// Inverse of parse_dota: one line per record with the box's corners.
inline std::string write_dota(std::span<const GroundTruthRecord> records,
                              const std::vector<std::string>& classes = dota_classes()) {
  std::ostringstream os;
  for (const auto& r : records) {
    require(r.class_id >= 0 && static_cast<std::size_t>(r.class_id) < classes.size(),
            ErrorKind::invalid_argument, "class id " + std::to_string(r.class_id) + " has no name");
    const auto poly = to_polygon(r.box);
    for (const auto& p : poly.vertices()) {
      os << format_double(p.x) << ' ' << format_double(p.y) << ' ';
    }
    os << classes[static_cast<std::size_t>(r.class_id)] << ' ' << (r.difficult ? 1 : 0) << '\n';
  }
  return os.str();
}

/// Human-readable warnings for boxes whose center lies more than `margin`
/// (a fraction of the image size) outside the image. Such boxes are kept.
inline std::vector<std::string> annotation_warnings(const ImageAnnotation& image, double margin = 0.1) {
  std::vector<std::string> warnings;
  if (image.width == 0 || image.height == 0) return warnings;
  const double w = static_cast<double>(image.width);
  const double h = static_cast<double>(image.height);
  for (std::size_t i = 0; i < image.objects.size(); ++i) {
    const auto& b = image.objects[i].box;
    if (b.cx() < -margin * w || b.cx() > (1 + margin) * w || b.cy() < -margin * h ||
        b.cy() > (1 + margin) * h) {
      warnings.push_back(image.image_id + ": object " + std::to_string(i) +
                         " lies outside the image extent");
    }
  }
  return warnings;
}

// --- tiling ---------------------------------------------------------------

struct TileWindow {
  double x = 0;
  double y = 0;
  double side = 0;

  friend bool operator==(const TileWindow&, const TileWindow&) = default;
};

inline constexpr std::size_t kDefaultTileSide = 800;
inline constexpr std::size_t kDefaultTileStride = 200;

namespace detail {

inline std::vector<std::size_t> tile_origins(std::size_t extent, std::size_t side, std::size_t stride) {
  std::vector<std::size_t> origins;
  for (std::size_t x = 0;; x += stride) {
    if (x + side >= extent) {
      origins.push_back(extent > side ? extent - side : 0);
      break;
    }
    origins.push_back(x);
  }
  origins.erase(std::unique(origins.begin(), origins.end()), origins.end());
  return origins;
}

}  // namespace detail

/// Windows of `side` pixels at multiples of `stride`; the last window on each
/// axis is pulled back so it ends exactly at the image edge. Row-major order.
inline std::vector<TileWindow> tile_windows(std::size_t width, std::size_t height,
                                            std::size_t side = kDefaultTileSide,
                                            std::size_t stride = kDefaultTileStride) {
  require(side > 0 && stride > 0 && stride <= side, ErrorKind::invalid_argument,
          "tile side and stride must be positive with stride <= side");
  require(width > 0 && height > 0, ErrorKind::invalid_argument, "image size must be positive");
  std::vector<TileWindow> windows;
  for (auto y : detail::tile_origins(height, side, stride)) {
    for (auto x : detail::tile_origins(width, side, stride)) {
      windows.push_back({static_cast<double>(x), static_cast<double>(y), static_cast<double>(side)});
    }
  }
  return windows;
}

inline double inside_fraction(const RotatedBox& box, const TileWindow& win) {
  const RotatedBox window_box(win.x + win.side / 2, win.y + win.side / 2, win.side, win.side, 0.0);
  return intersection_area(box, window_box) / box.area();
}

/// Keeps records with at least `keep_fraction` of their area inside the
/// window and moves them into window coordinates. Sizes and angles are
/// untouched; boxes are not cropped.
inline std::vector<GroundTruthRecord> clip_boxes_to_window(std::span<const GroundTruthRecord> boxes,
                                                           const TileWindow& win,
                                                           double keep_fraction = 0.5) {
  require(keep_fraction >= 0 && keep_fraction <= 1, ErrorKind::invalid_argument,
          "keep fraction must lie in [0,1]");
  std::vector<GroundTruthRecord> kept;
  for (const auto& r : boxes) {
    if (inside_fraction(r.box, win) >= keep_fraction) {
      kept.push_back({r.image_id, r.box.translated(-win.x, -win.y), r.class_id, r.difficult});
    }
  }
  return kept;
}

/// Moves detections made on a tile back into source-image coordinates.
inline std::vector<DetectionRecord> untile_detections(std::span<const DetectionRecord> dets,
                                                      const TileWindow& win,
                                                      const std::string& source_image_id) {
  std::vector<DetectionRecord> out;
  out.reserve(dets.size());
  for (const auto& d : dets) {
    out.push_back({source_image_id, d.box.translated(win.x, win.y), d.class_id, d.score});
  }
  return out;
}

// --- JSON lines -------------------------------------------------------------

namespace detail {

using nlohmann::json;

class LineContext {
 public:
  explicit LineContext(std::size_t line) : prefix_("line " + std::to_string(line) + ": ") {}

  const json& field(const json& obj, const char* name) const {
    require(obj.is_object(), ErrorKind::schema, prefix_ + "expected a JSON object");
    const auto it = obj.find(name);
    require(it != obj.end(), ErrorKind::schema, prefix_ + "missing required field '" + name + "'");
    return *it;
  }

  RotatedBox box(const json& j) const {
    require(j.is_array() && j.size() == 5, ErrorKind::schema,
            prefix_ + "a box must be an array [cx, cy, w, h, theta]");
    std::array<double, 5> v{};
    for (std::size_t k = 0; k < 5; ++k) {
      require(j[k].is_number(), ErrorKind::schema, prefix_ + "box entries must be numbers");
      v[k] = j[k].get<double>();
    }
    try {
      return {v[0], v[1], v[2], v[3], v[4]};
    } catch (const Error& e) {
      fail(ErrorKind::schema, prefix_ + e.what());
    }
  }

  std::vector<RotatedBox> boxes(const json& j, const char* name) const {
    require(j.is_array(), ErrorKind::schema, prefix_ + "'" + name + "' must be an array");
    std::vector<RotatedBox> out;
    out.reserve(j.size());
    for (const auto& b : j) out.push_back(box(b));
    return out;
  }

  std::vector<double> numbers(const json& j, const char* name) const {
    require(j.is_array(), ErrorKind::schema, prefix_ + "'" + name + "' must be an array");
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& v : j) {
      require(v.is_number(), ErrorKind::schema, prefix_ + "'" + name + "' must hold numbers");
      out.push_back(v.get<double>());
    }
    return out;
  }

  std::string string(const json& obj, const char* name) const {
    const auto& v = field(obj, name);
    require(v.is_string(), ErrorKind::schema, prefix_ + "'" + name + "' must be a string");
    return v.get<std::string>();
  }

  long long integer(const json& obj, const char* name) const {
    const auto& v = field(obj, name);
    require(v.is_number_integer(), ErrorKind::schema, prefix_ + "'" + name + "' must be an integer");
    return v.get<long long>();
  }

  GroundTruthRecord object(const json& j, const std::string& image_id) const {
    GroundTruthRecord r{image_id, box(field(j, "box")), static_cast<int>(integer(j, "class")), false};
    const auto it = j.find("difficult");
    if (it != j.end()) {
      require(it->is_boolean(), ErrorKind::schema, prefix_ + "'difficult' must be a boolean");
      r.difficult = it->get<bool>();
    }
    return r;
  }

  void version(const json& obj) const {
    const auto it = obj.find("schema_version");
    if (it != obj.end()) {
      require(it->is_number_integer() && it->get<int>() == kSchemaVersion, ErrorKind::schema,
              prefix_ + "unsupported schema_version");
    }
  }

  const std::string& prefix() const { return prefix_; }

 private:
  std::string prefix_;
};

inline json box_json(const RotatedBox& b) {
  return json::array({b.cx(), b.cy(), b.w(), b.h(), b.theta()});
}

inline json object_json(const GroundTruthRecord& r) {
  return {{"box", box_json(r.box)}, {"class", r.class_id}, {"difficult", r.difficult}};
}

/// Calls fn(parsed_object, line_context) for every non-blank line.
template <typename Fn>
void for_each_json_line(std::istream& is, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(ErrorKind::parse, "line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
    }
    LineContext ctx(line_no);
    ctx.version(obj);
    fn(obj, ctx);
  }
}

}  // namespace detail

inline AnchorDump read_dump(std::istream& is) {
  AnchorDump dump;
  detail::for_each_json_line(is, [&](const nlohmann::json& obj, const detail::LineContext& ctx) {
    AnchorDumpImage image;
    image.image_id = ctx.string(obj, "image_id");
    image.anchors = ctx.boxes(ctx.field(obj, "anchors"), "anchors");
    image.regressed = ctx.boxes(ctx.field(obj, "regressed"), "regressed");
    require(image.anchors.size() == image.regressed.size(), ErrorKind::schema,
            ctx.prefix() + "'anchors' and 'regressed' differ in length");
    const auto& targets = ctx.field(obj, "targets");
    require(targets.is_array(), ErrorKind::schema, ctx.prefix() + "'targets' must be an array");
    for (const auto& t : targets) image.targets.push_back(ctx.object(t, image.image_id));

    if (const auto it = obj.find("scores"); it != obj.end()) {
      require(it->is_array() && it->size() == image.anchors.size(), ErrorKind::schema,
              ctx.prefix() + "'scores' needs one entry per anchor");
      if (!it->empty() && it->front().is_array()) {
        image.num_classes = it->front().size();
        for (const auto& row : *it) {
          const auto values = ctx.numbers(row, "scores");
          require(values.size() == image.num_classes && image.num_classes > 0, ErrorKind::schema,
                  ctx.prefix() + "score rows must all have the same positive length");
          image.scores.insert(image.scores.end(), values.begin(), values.end());
        }
      } else {
        image.num_classes = 1;
        image.scores = ctx.numbers(*it, "scores");
      }
    }
    for (const char* name : {"iou_in", "iou_out"}) {
      if (const auto it = obj.find(name); it != obj.end()) {
        auto values = ctx.numbers(*it, name);
        require(values.size() == image.anchors.size(), ErrorKind::schema,
                ctx.prefix() + "'" + name + "' needs one entry per anchor");
        (std::string_view(name) == "iou_in" ? image.iou_in : image.iou_out) = std::move(values);
      }
    }
    dump.push_back(std::move(image));
  });
  return dump;
}

inline void write_dump(std::ostream& os, const AnchorDump& dump) {
  using nlohmann::json;
  for (const auto& image : dump) {
    json obj{{"schema_version", kSchemaVersion}, {"image_id", image.image_id}};
    json anchors = json::array();
    for (const auto& b : image.anchors) anchors.push_back(detail::box_json(b));
    json regressed = json::array();
    for (const auto& b : image.regressed) regressed.push_back(detail::box_json(b));
    json targets = json::array();
    for (const auto& t : image.targets) targets.push_back(detail::object_json(t));
    obj["anchors"] = std::move(anchors);
    obj["regressed"] = std::move(regressed);
    obj["targets"] = std::move(targets);
    if (!image.scores.empty()) {
      if (image.num_classes <= 1) {
        obj["scores"] = image.scores;
      } else {
        json rows = json::array();
        for (std::size_t a = 0; a < image.anchors.size(); ++a) {
          rows.push_back(std::vector<double>(
              image.scores.begin() + static_cast<std::ptrdiff_t>(a * image.num_classes),
              image.scores.begin() + static_cast<std::ptrdiff_t>((a + 1) * image.num_classes)));
        }
        obj["scores"] = std::move(rows);
      }
    }
    if (!image.iou_in.empty()) obj["iou_in"] = image.iou_in;
    if (!image.iou_out.empty()) obj["iou_out"] = image.iou_out;
    os << obj.dump() << '\n';
  }
}

struct TileInfo {
  std::string source;
  TileWindow window;
};

struct AnnotatedImage {
  ImageAnnotation annotation;
  std::optional<TileInfo> tile;
};

inline std::vector<AnnotatedImage> read_annotations(std::istream& is) {
  std::vector<AnnotatedImage> images;
  detail::for_each_json_line(is, [&](const nlohmann::json& obj, const detail::LineContext& ctx) {
    AnnotatedImage entry;
    auto& a = entry.annotation;
    a.image_id = ctx.string(obj, "image_id");
    const auto width = ctx.integer(obj, "width");
    const auto height = ctx.integer(obj, "height");
    require(width >= 0 && height >= 0, ErrorKind::schema, ctx.prefix() + "negative image size");
    a.width = static_cast<std::size_t>(width);
    a.height = static_cast<std::size_t>(height);
    const auto& objects = ctx.field(obj, "objects");
    require(objects.is_array(), ErrorKind::schema, ctx.prefix() + "'objects' must be an array");
    for (const auto& o : objects) a.objects.push_back(ctx.object(o, a.image_id));
    if (const auto it = obj.find("tile"); it != obj.end()) {
      const auto number = [&](const char* name) {
        const auto& v = ctx.field(*it, name);
        require(v.is_number(), ErrorKind::schema, ctx.prefix() + "tile field must be numeric");
        return v.get<double>();
      };
      entry.tile = TileInfo{ctx.string(*it, "source"), {number("x"), number("y"), number("side")}};
    }
    images.push_back(std::move(entry));
  });
  return images;
}

inline void write_annotation(std::ostream& os, const ImageAnnotation& a,
                             const std::optional<TileInfo>& tile = std::nullopt) {
  using nlohmann::json;
  json objects = json::array();
  for (const auto& o : a.objects) objects.push_back(detail::object_json(o));
  json obj{{"schema_version", kSchemaVersion},
           {"image_id", a.image_id},
           {"width", a.width},
           {"height", a.height},
           {"objects", std::move(objects)}};
  if (tile) {
    obj["tile"] = {{"source", tile->source},
                   {"x", tile->window.x},
                   {"y", tile->window.y},
                   {"side", tile->window.side}};
  }
  os << obj.dump() << '\n';
}

inline std::vector<DetectionRecord> read_detections(std::istream& is) {
  std::vector<DetectionRecord> dets;
  detail::for_each_json_line(is, [&](const nlohmann::json& obj, const detail::LineContext& ctx) {
    const std::string image_id = ctx.string(obj, "image_id");
    const auto& list = ctx.field(obj, "detections");
    require(list.is_array(), ErrorKind::schema, ctx.prefix() + "'detections' must be an array");
    for (const auto& d : list) {
      const auto& score = ctx.field(d, "score");
      require(score.is_number(), ErrorKind::schema, ctx.prefix() + "'score' must be a number");
      const double s = score.get<double>();
      require(s >= 0 && s <= 1, ErrorKind::schema, ctx.prefix() + "'score' must lie in [0,1]");
      dets.push_back({image_id, ctx.box(ctx.field(d, "box")), static_cast<int>(ctx.integer(d, "class")), s});
    }
  });
  return dets;
}

/// Groups by image id in first-appearance order.
inline void write_detections(std::ostream& os, std::span<const DetectionRecord> dets) {
  using nlohmann::json;
  std::vector<std::string> order;
  std::map<std::string, json> by_image;
  for (const auto& d : dets) {
    auto [it, inserted] = by_image.try_emplace(d.image_id, json::array());
    if (inserted) order.push_back(d.image_id);
    it->second.push_back({{"box", detail::box_json(d.box)}, {"class", d.class_id}, {"score", d.score}});
  }
  for (const auto& id : order) {
    os << json{{"schema_version", kSchemaVersion}, {"image_id", id}, {"detections", by_image[id]}}.dump()
       << '\n';
  }
}

/// One line per image: per-anchor label (1/0), matched target (-1 for
/// negatives), md, weight, both IoUs and the fallback flag.
inline void write_assignment(std::ostream& os, const std::string& image_id,
                             const AssignmentResult& result) {
  using nlohmann::json;
  json labels = json::array(), matched = json::array(), md = json::array(),
       weights = json::array(), iou_in = json::array(), iou_out = json::array(),
       promoted = json::array();
  for (const auto& a : result.anchors) {
    labels.push_back(a.positive() ? 1 : 0);
    matched.push_back(a.target ? static_cast<long long>(*a.target) : -1LL);
    md.push_back(a.md);
    weights.push_back(a.weight);
    iou_in.push_back(a.iou_in);
    iou_out.push_back(a.iou_out);
    promoted.push_back(a.promoted);
  }
  json obj{{"schema_version", kSchemaVersion},
           {"image_id", image_id},
           {"num_targets", result.num_targets},
           {"num_positive", result.num_positive()},
           {"labels", std::move(labels)},
           {"matched", std::move(matched)},
           {"md", std::move(md)},
           {"weights", std::move(weights)},
           {"iou_in", std::move(iou_in)},
           {"iou_out", std::move(iou_out)},
           {"promoted", std::move(promoted)}};
  os << obj.dump() << '\n';
}

}  // namespace obbkit
