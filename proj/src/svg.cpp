#include "xconsist/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace xconsist::svg {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 60;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd"};

std::string escape(const std::string& s) {
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

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

struct Frame {
  double x0, x1, y0, y1;
  double px(double x) const {
    return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight);
  }
  double py(double y) const {
    return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom);
  }
};

void widen(double& lo, double& hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    lo = 0.0;
    hi = 1.0;
  } else if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
}

void header(std::ostringstream& os, const std::string& title) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
     << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"15\">"
     << escape(title) << "</text>\n";
}

void axes(std::ostringstream& os, const Frame& f, const std::string& xl, const std::string& yl) {
  os << "<g stroke=\"#333\" stroke-width=\"1\">\n";
  os << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kHeight - kBottom) << "\" x2=\""
     << num(kWidth - kRight) << "\" y2=\"" << num(kHeight - kBottom) << "\"/>\n";
  os << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(kLeft)
     << "\" y2=\"" << num(kHeight - kBottom) << "\"/>\n</g>\n";
  os << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = f.x0 + (f.x1 - f.x0) * i / 4.0;
    const double yv = f.y0 + (f.y1 - f.y0) * i / 4.0;
    os << "<text x=\"" << num(f.px(xv)) << "\" y=\"" << num(kHeight - kBottom + 16)
       << "\" text-anchor=\"middle\">" << tick(xv) << "</text>\n";
    os << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(f.py(yv) + 4)
       << "\" text-anchor=\"end\">" << tick(yv) << "</text>\n";
  }
  os << "<text x=\"" << num((kLeft + kWidth - kRight) / 2) << "\" y=\"" << num(kHeight - 18)
     << "\" text-anchor=\"middle\" font-size=\"13\">" << escape(xl) << "</text>\n";
  os << "<text transform=\"translate(18," << num((kTop + kHeight - kBottom) / 2)
     << ") rotate(-90)\" text-anchor=\"middle\" font-size=\"13\">" << escape(yl) << "</text>\n";
  os << "</g>\n";
}

}  // namespace

std::string line_chart(const std::string& title, const std::string& x_label,
                       const std::string& y_label, const std::vector<Series>& series,
                       std::optional<std::pair<double, double>> y_range) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (y_range) std::tie(y0, y1) = *y_range;
  widen(x0, x1);
  widen(y0, y1);
  const Frame f{x0, x1, y0, y1};
  std::ostringstream os;
  header(os, title);
  axes(os, f, x_label, y_label);
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kPalette[si % 5];
    std::string points;
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      points += num(f.px(s.x[i])) + "," + num(f.py(s.y[i])) + " ";
      os << "<circle cx=\"" << num(f.px(s.x[i])) << "\" cy=\"" << num(f.py(s.y[i]))
         << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\""
       << points << "\"/>\n";
    os << "<text x=\"" << num(kWidth - kRight - 150) << "\" y=\"" << num(kTop + 14 + 16 * si)
       << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" << color << "\">"
       << escape(s.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string heatmap(const std::string& title, const std::string& x_label,
                    const std::string& y_label, const std::vector<double>& col_values,
                    const std::vector<double>& row_values,
                    const std::vector<std::vector<double>>& values) {
  const std::size_t cols = col_values.size(), rows = row_values.size();
  const double cw = (kWidth - kLeft - kRight) / std::max<std::size_t>(cols, 1);
  const double ch = (kHeight - kTop - kBottom) / std::max<std::size_t>(rows, 1);
  std::ostringstream os;
  header(os, title);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = std::clamp(values[r][c], 0.0, 1.0);
      // White (0) to dark blue (1).
      const int red = static_cast<int>(std::lround(255 * (1 - v) + 8 * v));
      const int green = static_cast<int>(std::lround(255 * (1 - v) + 48 * v));
      const int blue = static_cast<int>(std::lround(255 * (1 - v) + 107 * v));
      const double x = kLeft + c * cw, y = kHeight - kBottom - (r + 1) * ch;
      os << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(cw)
         << "\" height=\"" << num(ch) << "\" fill=\"rgb(" << red << ',' << green << ',' << blue
         << ")\"><title>" << tick(row_values[r]) << ", " << tick(col_values[c]) << ": "
         << tick(values[r][c]) << "</title></rect>\n";
    }
  }
  os << "<g font-family=\"sans-serif\" font-size=\"10\" fill=\"#333\">\n";
  for (std::size_t c = 0; c < cols; ++c) {
    os << "<text x=\"" << num(kLeft + (c + 0.5) * cw) << "\" y=\"" << num(kHeight - kBottom + 14)
       << "\" text-anchor=\"middle\">" << tick(col_values[c]) << "</text>\n";
  }
  for (std::size_t r = 0; r < rows; ++r) {
    os << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(kHeight - kBottom - (r + 0.5) * ch + 3)
       << "\" text-anchor=\"end\">" << tick(row_values[r]) << "</text>\n";
  }
  os << "<text x=\"" << num((kLeft + kWidth - kRight) / 2) << "\" y=\"" << num(kHeight - 18)
     << "\" text-anchor=\"middle\" font-size=\"13\">" << escape(x_label) << "</text>\n";
  os << "<text transform=\"translate(18," << num((kTop + kHeight - kBottom) / 2)
     << ") rotate(-90)\" text-anchor=\"middle\" font-size=\"13\">" << escape(y_label)
     << "</text>\n</g>\n</svg>\n";
  return os.str();
}

std::string scatter_with_fit(const std::string& title, const std::string& x_label,
                             const std::string& y_label, const std::vector<double>& x,
                             const std::vector<double>& y,
                             std::optional<std::pair<double, double>> line) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) continue;
    x0 = std::min(x0, x[i]);
    x1 = std::max(x1, x[i]);
    y0 = std::min(y0, y[i]);
    y1 = std::max(y1, y[i]);
  }
  widen(x0, x1);
  widen(y0, y1);
  const Frame f{x0, x1, y0, y1};
  std::ostringstream os;
  header(os, title);
  axes(os, f, x_label, y_label);
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) continue;
    os << "<circle cx=\"" << num(f.px(x[i])) << "\" cy=\"" << num(f.py(y[i]))
       << "\" r=\"3\" fill=\"#1f77b4\" fill-opacity=\"0.6\"/>\n";
  }
  if (line) {
    const auto [m, b] = *line;
    const double ya = std::clamp(m * x0 + b, y0, y1), yb = std::clamp(m * x1 + b, y0, y1);
    os << "<line x1=\"" << num(f.px(x0)) << "\" y1=\"" << num(f.py(ya)) << "\" x2=\""
       << num(f.px(x1)) << "\" y2=\"" << num(f.py(yb))
       << "\" stroke=\"#d62728\" stroke-width=\"2\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace xconsist::svg
