#pragma once

// Static SVG 1.1 portraits: the tetrahedron Δ³ drawn under a fixed oblique
// projection, with trajectories as polylines and K overlaid.

#include <array>
#include <cstdio>
#include <string>
#include <vector>

#include "replicator4/dynamics.hpp"

namespace replicator4 {

struct PortraitLayer {
  std::vector<Vec<4>> points;
  std::string stroke = "#1f77b4";
  double width = 1.0;
};

struct Portrait {
  int width = 600;
  int height = 560;
  /// Canvas positions of e1..e4.
  std::array<std::array<double, 2>, 4> vertices{{{60, 500}, {540, 500}, {300, 60}, {330, 360}}};
  std::vector<PortraitLayer> trajectories;
  std::vector<std::array<Vec<4>, 2>> segments;
  std::string title;
};

inline std::array<double, 2> project(const Portrait& p, const Vec<4>& x) {
  std::array<double, 2> out{};
  for (int i = 0; i < 4; ++i) {
    out[0] += x[i] * p.vertices[i][0];
    out[1] += x[i] * p.vertices[i][1];
  }
  return out;
}

namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string escape_xml(const std::string& s) {
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

}  // namespace detail

inline std::string render_svg(const Portrait& p) {
  using detail::fmt;
  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + std::to_string(p.width) +
       "\" height=\"" + std::to_string(p.height) + "\" viewBox=\"0 0 " + std::to_string(p.width) + " " +
       std::to_string(p.height) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!p.title.empty())
    s += "<text x=\"" + fmt(p.width / 2.0) + "\" y=\"30\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"16\">" + detail::escape_xml(p.title) + "</text>\n";
  s += "<g stroke=\"#888\" stroke-width=\"1\" fill=\"none\">\n";
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      const bool hidden = (i == 3 || j == 3);
      s += "<line x1=\"" + fmt(p.vertices[i][0]) + "\" y1=\"" + fmt(p.vertices[i][1]) + "\" x2=\"" +
           fmt(p.vertices[j][0]) + "\" y2=\"" + fmt(p.vertices[j][1]) + "\"" +
           (hidden ? " stroke-dasharray=\"4,3\"" : "") + "/>\n";
    }
  s += "</g>\n";
  for (int i = 0; i < 4; ++i) {
    const double dx = p.vertices[i][0] < p.width / 2.0 ? -22 : 8;
    s += "<text x=\"" + fmt(p.vertices[i][0] + dx) + "\" y=\"" + fmt(p.vertices[i][1] + 5) +
         "\" font-family=\"sans-serif\" font-size=\"14\">e" + std::to_string(i + 1) + "</text>\n";
  }
  for (const auto& layer : p.trajectories) {
    if (layer.points.empty()) continue;
    s += "<polyline fill=\"none\" stroke=\"" + layer.stroke + "\" stroke-width=\"" + fmt(layer.width) +
         "\" points=\"";
    bool first = true;
    for (const auto& x : layer.points) {
      const auto q = project(p, x);
      if (!first) s += ' ';
      first = false;
      s += fmt(q[0]) + "," + fmt(q[1]);
    }
    s += "\"/>\n";
  }
  for (const auto& seg : p.segments) {
    const auto a = project(p, seg[0]);
    const auto b = project(p, seg[1]);
    s += "<line x1=\"" + fmt(a[0]) + "\" y1=\"" + fmt(a[1]) + "\" x2=\"" + fmt(b[0]) + "\" y2=\"" + fmt(b[1]) +
         "\" stroke=\"#d62728\" stroke-width=\"2.5\"/>\n";
  }
  s += "</svg>\n";
  return s;
}

}  // namespace replicator4
