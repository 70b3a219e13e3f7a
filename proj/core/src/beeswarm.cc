/*
 * Copyright 2026 The ecgdx Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "ecgdx/shap.h"

namespace ecgdx {

namespace {

constexpr double kColorClipLow = 0.01;
constexpr double kColorClipHigh = 0.99;

// Midrank percentile of each present value, clipped to [1%, 99%] and
// stretched back to [0, 1].
void assign_colors(const FeatureMatrix& x, std::size_t feature, std::vector<BeeswarmPoint>& points) {
  std::vector<std::size_t> present;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (is_missing(x(i, feature))) {
      points[i].missing = true;
      points[i].color = 0.5;
    } else {
      present.push_back(i);
    }
  }
  if (present.empty()) return;
  std::stable_sort(present.begin(), present.end(),
                   [&](std::size_t a, std::size_t b) { return x(a, feature) < x(b, feature); });
  const double n = static_cast<double>(present.size());
  for (std::size_t k = 0; k < present.size();) {
    std::size_t end = k + 1;
    while (end < present.size() && x(present[end], feature) == x(present[k], feature)) ++end;
    // Zero-based midrank of the tie group.
    const double midrank = (static_cast<double>(k) + static_cast<double>(end - 1)) / 2.0;
    const double q = n > 1.0 ? midrank / (n - 1.0) : 0.5;
    const double clipped = std::clamp(q, kColorClipLow, kColorClipHigh);
    const double color = (clipped - kColorClipLow) / (kColorClipHigh - kColorClipLow);
    for (std::size_t j = k; j < end; ++j) points[present[j]].color = color;
    k = end;
  }
}

// Points are binned along x; within a bin they fan out alternately above
// and below the row centre in sample order.
void assign_jitter(std::vector<BeeswarmPoint>& points, double lo, double hi) {
  if (points.empty()) return;
  const double width = hi > lo ? (hi - lo) / kJitterBins : 1.0;
  std::vector<std::vector<std::size_t>> bins(kJitterBins);
  for (std::size_t i = 0; i < points.size(); ++i) {
    int b = hi > lo ? static_cast<int>((points[i].x - lo) / width) : 0;
    b = std::clamp(b, 0, kJitterBins - 1);
    bins[static_cast<std::size_t>(b)].push_back(i);
  }
  std::size_t widest = 1;
  for (const auto& bin : bins) widest = std::max(widest, bin.size());
  const double half = static_cast<double>(widest / 2);
  const double step = half > 0.0 ? kMaxJitter / half : 0.0;
  for (const auto& bin : bins) {
    for (std::size_t k = 0; k < bin.size(); ++k) {
      const double level = static_cast<double>((k + 1) / 2);
      const double sign = k % 2 == 1 ? 1.0 : -1.0;
      points[bin[k]].jitter = std::min(kMaxJitter, level * step) * sign;
    }
  }
}

std::string fmt(double v) { return format_fixed(v, 2); }

// Linear blend from blue (low) to red (high).
std::string color_hex(double t) {
  static constexpr int kLow[3] = {0x1E, 0x88, 0xE5};
  static constexpr int kHigh[3] = {0xFF, 0x0D, 0x57};
  char out[8];
  int rgb[3];
  for (int c = 0; c < 3; ++c) {
    rgb[c] = static_cast<int>(std::lround(kLow[c] + (kHigh[c] - kLow[c]) * std::clamp(t, 0.0, 1.0)));
  }
  std::snprintf(out, sizeof(out), "#%02X%02X%02X", rgb[0], rgb[1], rgb[2]);
  return out;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace

std::size_t BeeswarmLayout::point_count() const {
  std::size_t n = 0;
  for (const auto& row : rows) n += row.points.size();
  return n;
}

BeeswarmLayout beeswarm(std::span<const Explanation> explanations, const FeatureMatrix& x,
                        std::span<const std::string> labels) {
  if (explanations.empty()) throw Error("beeswarm: no explanations");
  if (explanations.size() != x.rows()) {
    throw Error("beeswarm: " + std::to_string(explanations.size()) + " explanations for " +
                std::to_string(x.rows()) + " samples");
  }
  if (!labels.empty() && labels.size() != x.cols()) {
    throw Error("beeswarm: label count does not match feature count");
  }
  for (const auto& e : explanations) {
    if (e.phi.size() != x.cols()) throw Error("beeswarm: phi length does not match feature count");
  }

  double lo = 0.0;
  double hi = 0.0;
  bool first = true;
  for (const auto& e : explanations) {
    for (double v : e.phi) {
      lo = first ? v : std::min(lo, v);
      hi = first ? v : std::max(hi, v);
      first = false;
    }
  }

  BeeswarmLayout layout;
  for (std::size_t f = 0; f < x.cols(); ++f) {
    BeeswarmRow row;
    row.feature = f;
    row.label = labels.empty() ? x.feature_names()[f] : labels[f];
    row.points.resize(explanations.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < explanations.size(); ++i) {
      row.points[i].sample = i;
      row.points[i].x = explanations[i].phi[f];
      sum += std::abs(explanations[i].phi[f]);
    }
    row.mean_abs_phi = sum / static_cast<double>(explanations.size());
    assign_colors(x, f, row.points);
    assign_jitter(row.points, lo, hi);
    layout.rows.push_back(std::move(row));
  }
  std::stable_sort(layout.rows.begin(), layout.rows.end(),
                   [](const BeeswarmRow& a, const BeeswarmRow& b) {
                     return a.mean_abs_phi > b.mean_abs_phi;
                   });
  return layout;
}

BeeswarmLayout beeswarm(std::span<const Explanation> explanations, const Cohort& cohort) {
  const FeatureSchema& schema = cohort.schema();
  std::vector<std::string> labels;
  for (std::size_t f = 0; f < schema.size(); ++f) labels.emplace_back(schema.info(f).display);
  return beeswarm(explanations, cohort.feature_matrix(), labels);
}

std::string render_svg(const BeeswarmLayout& layout) {
  constexpr double kWidth = 800.0;
  constexpr double kLeft = 170.0;
  constexpr double kRight = 30.0;
  constexpr double kTop = 20.0;
  constexpr double kRowHeight = 36.0;
  constexpr double kAxisBand = 70.0;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kRowHeight * static_cast<double>(std::max<std::size_t>(layout.rows.size(), 1));
  const double height = kTop + plot_h + kAxisBand;

  double lo = 0.0;
  double hi = 0.0;
  for (const auto& row : layout.rows) {
    for (const auto& p : row.points) {
      lo = std::min(lo, p.x);
      hi = std::max(hi, p.x);
    }
  }
  if (hi - lo <= 0.0) {
    lo = -1.0;
    hi = 1.0;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  auto sx = [&](double v) { return kLeft + (v - lo) / (hi - lo) * plot_w; };
  const double axis_y = kTop + plot_h;

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << fmt(kWidth)
     << "\" height=\"" << fmt(height) << "\" viewBox=\"0 0 " << fmt(kWidth) << ' ' << fmt(height)
     << "\">\n"
     << "<rect x=\"0\" y=\"0\" width=\"" << fmt(kWidth) << "\" height=\"" << fmt(height)
     << "\" fill=\"#FFFFFF\"/>\n";

  // Axes.
  os << "<g stroke=\"#333333\" stroke-width=\"1\">\n"
     << "<line x1=\"" << fmt(kLeft) << "\" y1=\"" << fmt(axis_y) << "\" x2=\""
     << fmt(kLeft + plot_w) << "\" y2=\"" << fmt(axis_y) << "\"/>\n";
  if (lo < 0.0 && hi > 0.0) {
    os << "<line x1=\"" << fmt(sx(0.0)) << "\" y1=\"" << fmt(kTop) << "\" x2=\"" << fmt(sx(0.0))
       << "\" y2=\"" << fmt(axis_y) << "\" stroke=\"#999999\"/>\n";
  }
  constexpr int kTicks = 5;
  for (int t = 0; t <= kTicks; ++t) {
    const double v = lo + (hi - lo) * t / kTicks;
    os << "<line x1=\"" << fmt(sx(v)) << "\" y1=\"" << fmt(axis_y) << "\" x2=\"" << fmt(sx(v))
       << "\" y2=\"" << fmt(axis_y + 5.0) << "\"/>\n";
  }
  os << "</g>\n<g font-family=\"sans-serif\" font-size=\"12\" fill=\"#333333\">\n";
  for (int t = 0; t <= kTicks; ++t) {
    const double v = lo + (hi - lo) * t / kTicks;
    os << "<text x=\"" << fmt(sx(v)) << "\" y=\"" << fmt(axis_y + 20.0)
       << "\" text-anchor=\"middle\">" << fmt(v) << "</text>\n";
  }
  os << "<text x=\"" << fmt(kLeft + plot_w / 2.0) << "\" y=\"" << fmt(axis_y + 45.0)
     << "\" text-anchor=\"middle\">SHAP value</text>\n";
  for (std::size_t r = 0; r < layout.rows.size(); ++r) {
    const double cy = kTop + kRowHeight * (static_cast<double>(r) + 0.5);
    os << "<text x=\"" << fmt(kLeft - 10.0) << "\" y=\"" << fmt(cy + 4.0)
       << "\" text-anchor=\"end\">" << xml_escape(layout.rows[r].label) << "</text>\n";
  }
  os << "</g>\n";

  // Points.
  os << "<g stroke=\"none\">\n";
  for (std::size_t r = 0; r < layout.rows.size(); ++r) {
    const double cy = kTop + kRowHeight * (static_cast<double>(r) + 0.5);
    for (const auto& p : layout.rows[r].points) {
      os << "<circle cx=\"" << fmt(sx(p.x)) << "\" cy=\"" << fmt(cy + p.jitter * kRowHeight)
         << "\" r=\"2\" fill=\"" << (p.missing ? std::string("#999999") : color_hex(p.color))
         << "\"/>\n";
    }
  }
  os << "</g>\n</svg>\n";
  return os.str();
}

void render_svg(const BeeswarmLayout& layout, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << render_svg(layout);
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace ecgdx
