#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "carl/errors.hpp"

// Minimal line-plot SVG writer for quick-looks. Convenience plumbing only;
// the CSV datasets are the contract.

namespace carl::svg {

struct Series {
  std::string label;
  std::string color = "#1f6fb5";
  std::vector<double> x, y;
};

inline void write_line_plot(const std::string& path, const std::string& title,
                            const std::vector<Series>& series) {
  const int w = 860, h = 420, ml = 70, mr = 20, mt = 40, mb = 40;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  if (xmin >= xmax) { xmin -= 1.0; xmax += 1.0; }
  if (ymin >= ymax) { ymin -= 1.0; ymax += 1.0; }
  const double xr = xmax - xmin, yr = ymax - ymin;

  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (f == nullptr) throw ConfigError("cannot open for writing: " + path);
  std::fprintf(f,
               "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
               "viewBox=\"0 0 %d %d\">\n<rect width=\"%d\" height=\"%d\" fill=\"white\"/>\n",
               w, h, w, h, w, h);
  std::fprintf(f, "<text x=\"%d\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">%s</text>\n",
               ml, title.c_str());
  std::fprintf(f,
               "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"none\" "
               "stroke=\"#444\"/>\n",
               ml, mt, w - ml - mr, h - mt - mb);
  auto px = [&](double x) { return ml + (x - xmin) / xr * (w - ml - mr); };
  auto py = [&](double y) { return h - mb - (y - ymin) / yr * (h - mt - mb); };
  std::fprintf(f,
               "<text x=\"%d\" y=\"%d\" font-family=\"sans-serif\" font-size=\"11\">%.4g</text>\n"
               "<text x=\"%d\" y=\"%d\" font-family=\"sans-serif\" font-size=\"11\">%.4g</text>\n",
               ml, h - mb + 14, xmin, w - mr - 40, h - mb + 14, xmax);
  std::fprintf(f,
               "<text x=\"4\" y=\"%d\" font-family=\"sans-serif\" font-size=\"11\">%.4g</text>\n"
               "<text x=\"4\" y=\"%d\" font-family=\"sans-serif\" font-size=\"11\">%.4g</text>\n",
               h - mb, ymin, mt + 10, ymax);
  int legend_y = mt + 16;
  for (const auto& s : series) {
    std::string pts;
    bool pen_up = true;
    char buf[64];
    pts += "<path d=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
        pen_up = true;
        continue;
      }
      std::snprintf(buf, sizeof(buf), "%c%.2f %.2f ", pen_up ? 'M' : 'L', px(s.x[i]), py(s.y[i]));
      pts += buf;
      pen_up = false;
    }
    pts += "\" fill=\"none\" stroke=\"" + s.color + "\" stroke-width=\"1.5\"/>\n";
    std::fputs(pts.c_str(), f);
    std::fprintf(f,
                 "<text x=\"%d\" y=\"%d\" font-family=\"sans-serif\" font-size=\"12\" "
                 "fill=\"%s\">%s</text>\n",
                 w - mr - 180, legend_y, s.color.c_str(), s.label.c_str());
    legend_y += 16;
  }
  std::fputs("</svg>\n", f);
  std::fclose(f);
}

}  // namespace carl::svg
