// Copyright (C) 2026 bodylink contributors
// SPDX-License-Identifier: Apache-2.0

#include "bodylink/svg.hpp"

#include <array>
#include <cstdio>
#include <string_view>

namespace bodylink {
namespace {

constexpr std::array<std::string_view, 6> kPartColors = {"#1f77b4", "#2ca02c", "#9467bd",
                                                         "#8c564b", "#e377c2", "#17becf"};

// Fixed two-decimal formatting keeps output byte-stable.
std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

class SvgDoc {
 public:
  SvgDoc(int width, int height) {
    out_ += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out_ += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" +
            std::to_string(width) + "\" height=\"" + std::to_string(height) + "\" viewBox=\"0 0 " +
            std::to_string(width) + " " + std::to_string(height) + "\">\n";
    out_ += "<rect class=\"frame\" x=\"0\" y=\"0\" width=\"" + std::to_string(width) +
            "\" height=\"" + std::to_string(height) + "\" fill=\"white\" stroke=\"black\"/>\n";
  }

  void box(const BBox& b, std::string_view cls, std::string_view color, std::string_view label,
           bool dashed = false) {
    out_ += "<rect class=\"" + std::string(cls) + "\" x=\"" + num(b.x_l) + "\" y=\"" + num(b.y_t) +
            "\" width=\"" + num(b.width()) + "\" height=\"" + num(b.height()) +
            "\" fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"" +
            (cls == "body" ? "2" : "1.5") + "\"";
    if (dashed) out_ += " stroke-dasharray=\"4 3\"";
    out_ += "><title>" + escape(label) + "</title></rect>\n";
  }

  void link(Point from, Point to, std::string_view color) {
    out_ += "<line class=\"association\" x1=\"" + num(from.x) + "\" y1=\"" + num(from.y) +
            "\" x2=\"" + num(to.x) + "\" y2=\"" + num(to.y) + "\" stroke=\"" + std::string(color) +
            "\" stroke-width=\"1\"/>\n";
  }

  void dot(Point p, std::string_view color) {
    out_ += "<circle class=\"body-center\" cx=\"" + num(p.x) + "\" cy=\"" + num(p.y) +
            "\" r=\"3\" fill=\"" + std::string(color) + "\"/>\n";
  }

  std::string finish() { return out_ + "</svg>\n"; }

 private:
  std::string out_;
};

std::string_view part_color(const ClassSchema& schema, ClassId id) {
  const auto parts = schema.part_classes();
  for (std::size_t i = 0; i < parts.size(); ++i)
    if (parts[i] == id) return kPartColors[i % kPartColors.size()];
  return kPartColors[0];
}

constexpr std::string_view kBodyColor = "#ff7f0e";
constexpr std::string_view kUnmatchedColor = "#d62728";

}  // namespace

std::string render_svg(const SceneAnnotation& scene, const ClassSchema& schema) {
  SvgDoc doc(scene.width, scene.height);
  for (const auto& o : scene.objects)
    if (!schema.is_part(o.cls)) {
      doc.box(o.box, "body", kBodyColor, schema.info(o.cls).name);
      doc.dot(center(o.box), kBodyColor);
    }
  for (const auto& o : scene.objects) {
    if (!schema.is_part(o.cls)) continue;
    const auto color = part_color(schema, o.cls);
    doc.box(o.box, "part", color, schema.info(o.cls).name);
    if (o.parent) doc.link(center(o.box), center(scene.objects[*o.parent].box), color);
  }
  return doc.finish();
}

std::string render_svg(int width, int height, const PipelineResult& result,
                       const ClassSchema& schema) {
  SvgDoc doc(width, height);
  for (const auto& b : result.bodies) {
    doc.box(b.box, "body", kBodyColor, schema.info(b.cls).name + " " + num(b.score));
    doc.dot(center(b.box), kBodyColor);
  }
  const auto links = result.association.body_of_part(result.parts.size());
  for (std::size_t i = 0; i < result.parts.size(); ++i) {
    const auto& p = result.parts[i];
    const std::string label = schema.info(p.cls).name + " " + num(p.score);
    if (links[i]) {
      const auto color = part_color(schema, p.cls);
      doc.box(p.box, "part", color, label);
      doc.link(center(p.box), center(result.bodies[*links[i]].box), color);
    } else {
      doc.box(p.box, "part unmatched", kUnmatchedColor, label + " (unmatched)", true);
    }
  }
  return doc.finish();
}

}  // namespace bodylink
