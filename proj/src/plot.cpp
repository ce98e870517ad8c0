// Copyright 2026 The mst Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mst/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mst/error.hpp"

namespace mst {

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// White -> dark blue ramp.
std::string color(double v) {
  const double t = std::clamp(v / 100.0, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(247 - t * (247 - 8)));
  const int g = static_cast<int>(std::lround(251 - t * (251 - 48)));
  const int b = static_cast<int>(std::lround(255 - t * (255 - 107)));
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace

std::string heatmap_svg(const DirectionMatrix& m, const std::vector<std::string>& languages, const std::string& title) {
  const int n = static_cast<int>(languages.size());
  const int cell = 28, left = 60, top = 60;
  const int w = left + n * cell + 20, h = top + n * cell + 40;
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" font-family=\"sans-serif\">\n";
  s << "<text x=\"" << left << "\" y=\"20\" font-size=\"14\">" << escape(title) << "</text>\n";
  for (int j = 0; j < n; ++j) {
    s << "<text x=\"" << left + j * cell + cell / 2 << "\" y=\"" << top - 6
      << "\" font-size=\"9\" text-anchor=\"middle\">" << escape(languages[j]) << "</text>\n";
  }
  char num[32];
  for (int i = 0; i < n; ++i) {
    s << "<text x=\"" << left - 6 << "\" y=\"" << top + i * cell + cell / 2 + 3
      << "\" font-size=\"9\" text-anchor=\"end\">" << escape(languages[i]) << "</text>\n";
    for (int j = 0; j < n; ++j) {
      const int x = left + j * cell, y = top + i * cell;
      auto it = m.scores.find({languages[i], languages[j]});
      const bool has = i != j && it != m.scores.end();
      s << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\""
        << (has ? color(it->second) : std::string("#cccccc")) << "\" stroke=\"#ffffff\"/>\n";
      if (has) {
        std::snprintf(num, sizeof(num), "%.0f", it->second);
        s << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 3 << "\" font-size=\"8\" text-anchor=\"middle\" fill=\""
          << (it->second > 55 ? "#ffffff" : "#000000") << "\">" << num << "</text>\n";
      }
    }
  }
  s << "<text x=\"" << left << "\" y=\"" << h - 12 << "\" font-size=\"10\">rows: source, columns: target ("
    << escape(m.metric) << ")</text>\n";
  s << "</svg>\n";
  return s.str();
}

std::string bar_chart_svg(const std::map<std::string, double>& values, const std::string& title, double max_value) {
  const int n = static_cast<int>(values.size());
  const int bar = 24, gap = 8, left = 50, top = 40, height = 200;
  const int w = left + n * (bar + gap) + 20, h = top + height + 40;
  if (max_value <= 0) max_value = 1.0;
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" font-family=\"sans-serif\">\n";
  s << "<text x=\"" << left << "\" y=\"20\" font-size=\"14\">" << escape(title) << "</text>\n";
  s << "<line x1=\"" << left << "\" y1=\"" << top + height << "\" x2=\"" << w - 10 << "\" y2=\"" << top + height
    << "\" stroke=\"#000000\"/>\n";
  int i = 0;
  char num[32];
  for (const auto& [label, v] : values) {
    const double frac = std::clamp(v / max_value, 0.0, 1.0);
    const int bh = static_cast<int>(std::lround(frac * height));
    const int x = left + i * (bar + gap);
    s << "<rect x=\"" << x << "\" y=\"" << top + height - bh << "\" width=\"" << bar << "\" height=\"" << bh
      << "\" fill=\"#3b6ea5\"/>\n";
    std::snprintf(num, sizeof(num), "%.1f", v);
    s << "<text x=\"" << x + bar / 2 << "\" y=\"" << top + height - bh - 4 << "\" font-size=\"8\" text-anchor=\"middle\">"
      << num << "</text>\n";
    s << "<text x=\"" << x + bar / 2 << "\" y=\"" << top + height + 14 << "\" font-size=\"9\" text-anchor=\"middle\">"
      << escape(label) << "</text>\n";
    ++i;
  }
  s << "</svg>\n";
  return s.str();
}

std::map<std::string, double> per_source_mean(const DirectionMatrix& m) {
  std::map<std::string, std::pair<double, int>> acc;
  for (const auto& [d, v] : m.scores) {
    acc[d.first].first += v;
    acc[d.first].second += 1;
  }
  std::map<std::string, double> out;
  for (const auto& [lang, sv] : acc) out[lang] = sv.first / sv.second;
  return out;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path);
  f << text;
}

}  // namespace mst
