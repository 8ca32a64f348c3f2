#include "plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dicode::tools {

namespace {

using Rgb = std::array<unsigned char, 3>;

const std::vector<Rgb>& palette() {
  static const std::vector<Rgb> p{{31, 119, 180}, {255, 127, 14}, {44, 160, 44}, {214, 39, 40},
                                  {148, 103, 189}, {140, 86, 75}, {227, 119, 194}, {127, 127, 127}};
  return p;
}

std::string hex(const Rgb& c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c[0], c[1], c[2]);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    if (ch == '<') out += "&lt;";
    else if (ch == '>') out += "&gt;";
    else if (ch == '&') out += "&amp;";
    else out += ch;
  }
  return out;
}

// Minimal raster canvas with alpha blending.
struct Canvas {
  int w, h;
  std::vector<Rgb> px;
  Canvas(int w_, int h_) : w(w_), h(h_), px(static_cast<std::size_t>(w_ * h_), Rgb{255, 255, 255}) {}

  void blend(int x, int y, const Rgb& c, double a = 1.0) {
    if (x < 0 || y < 0 || x >= w || y >= h) return;
    auto& p = px[static_cast<std::size_t>(y * w + x)];
    for (int k = 0; k < 3; ++k) p[k] = static_cast<unsigned char>(std::lround(p[k] * (1 - a) + c[k] * a));
  }
  void rect(int x0, int y0, int x1, int y1, const Rgb& c, double a = 1.0) {
    for (int y = std::max(0, y0); y < std::min(h, y1); ++y)
      for (int x = std::max(0, x0); x < std::min(w, x1); ++x) blend(x, y, c, a);
  }
  void line(double x0, double y0, double x1, double y1, const Rgb& c) {
    const int n = static_cast<int>(std::max(std::abs(x1 - x0), std::abs(y1 - y0))) + 1;
    for (int i = 0; i <= n; ++i) {
      const double t = static_cast<double>(i) / n;
      const int x = static_cast<int>(std::lround(x0 + t * (x1 - x0)));
      const int y = static_cast<int>(std::lround(y0 + t * (y1 - y0)));
      rect(x - 1, y - 1, x + 1, y + 1, c);
    }
  }
  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "P6\n" << w << ' ' << h << "\n255\n";
    for (const auto& p : px) out.write(reinterpret_cast<const char*>(p.data()), 3);
  }
};

void write_text(const std::string& path, const std::string& s) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << s;
}

struct Frame {
  double x0 = 70, y0 = 40, w = 560, h = 320;
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  double px(double x) const { return x0 + (x - xmin) / (xmax - xmin) * w; }
  double py(double y) const { return y0 + h - (y - ymin) / (ymax - ymin) * h; }
};

void pad_range(double& lo, double& hi) {
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double m = 0.05 * (hi - lo);
  lo -= m;
  hi += m;
}

std::string axes_svg(const Frame& f, const std::string& title, const std::string& xlabel, const std::string& ylabel) {
  std::ostringstream s;
  s << "<rect x='" << f.x0 << "' y='" << f.y0 << "' width='" << f.w << "' height='" << f.h
    << "' fill='none' stroke='black'/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double yv = f.ymin + (f.ymax - f.ymin) * i / 4.0;
    const double xv = f.xmin + (f.xmax - f.xmin) * i / 4.0;
    s << "<text x='" << f.x0 - 6 << "' y='" << f.py(yv) + 4 << "' font-size='11' text-anchor='end'>" << yv
      << "</text>\n";
    s << "<text x='" << f.px(xv) << "' y='" << f.y0 + f.h + 16 << "' font-size='11' text-anchor='middle'>" << xv
      << "</text>\n";
  }
  s << "<text x='" << f.x0 + f.w / 2 << "' y='22' font-size='15' text-anchor='middle'>" << escape(title)
    << "</text>\n";
  s << "<text x='" << f.x0 + f.w / 2 << "' y='" << f.y0 + f.h + 36 << "' font-size='12' text-anchor='middle'>"
    << escape(xlabel) << "</text>\n";
  s << "<text x='16' y='" << f.y0 + f.h / 2 << "' font-size='12' transform='rotate(-90 16 " << f.y0 + f.h / 2
    << ")' text-anchor='middle'>" << escape(ylabel) << "</text>\n";
  return s.str();
}

}  // namespace

void plot_curves(const std::string& stem, const std::string& title, const std::string& xlabel,
                 const std::string& ylabel, const std::vector<Series>& series) {
  if (series.empty()) throw std::invalid_argument("plot_curves: nothing to plot");
  Frame f;
  f.xmin = f.ymin = 1e300;
  f.xmax = f.ymax = -1e300;
  for (const auto& s : series) {
    for (double x : s.x) f.xmin = std::min(f.xmin, x), f.xmax = std::max(f.xmax, x);
    for (double y : s.y) f.ymin = std::min(f.ymin, y), f.ymax = std::max(f.ymax, y);
    for (double y : s.lo) f.ymin = std::min(f.ymin, y);
    for (double y : s.hi) f.ymax = std::max(f.ymax, y);
  }
  pad_range(f.ymin, f.ymax);
  if (!(f.xmax > f.xmin)) f.xmax = f.xmin + 1;

  std::ostringstream svg;
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='800' height='420'>\n<rect width='100%' height='100%' "
         "fill='white'/>\n";
  Canvas cv(800, 420);
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const Rgb c = palette()[i % palette().size()];
    if (!s.lo.empty() && s.lo.size() == s.x.size()) {
      svg << "<polygon fill='" << hex(c) << "' fill-opacity='0.2' stroke='none' points='";
      for (std::size_t k = 0; k < s.x.size(); ++k) svg << f.px(s.x[k]) << ',' << f.py(s.hi[k]) << ' ';
      for (std::size_t k = s.x.size(); k-- > 0;) svg << f.px(s.x[k]) << ',' << f.py(s.lo[k]) << ' ';
      svg << "'/>\n";
      for (std::size_t k = 0; k + 1 < s.x.size(); ++k) {
        const int xa = static_cast<int>(f.px(s.x[k])), xb = static_cast<int>(f.px(s.x[k + 1]));
        for (int x = xa; x <= xb; ++x) {
          const double t = xb > xa ? static_cast<double>(x - xa) / (xb - xa) : 0.0;
          const double lo = s.lo[k] + t * (s.lo[k + 1] - s.lo[k]);
          const double hi = s.hi[k] + t * (s.hi[k + 1] - s.hi[k]);
          cv.rect(x, static_cast<int>(f.py(hi)), x + 1, static_cast<int>(f.py(lo)) + 1, c, 0.2);
        }
      }
    }
    svg << "<polyline fill='none' stroke-width='2' stroke='" << hex(c) << "' points='";
    for (std::size_t k = 0; k < s.x.size(); ++k) svg << f.px(s.x[k]) << ',' << f.py(s.y[k]) << ' ';
    svg << "'/>\n";
    for (std::size_t k = 0; k + 1 < s.x.size(); ++k)
      cv.line(f.px(s.x[k]), f.py(s.y[k]), f.px(s.x[k + 1]), f.py(s.y[k + 1]), c);
    svg << "<rect x='650' y='" << 50 + 20 * i << "' width='14' height='10' fill='" << hex(c) << "'/>"
        << "<text x='670' y='" << 59 + 20 * i << "' font-size='12'>" << escape(s.label) << "</text>\n";
    cv.rect(650, static_cast<int>(50 + 20 * i), 664, static_cast<int>(60 + 20 * i), c);
  }
  svg << axes_svg(f, title, xlabel, ylabel) << "</svg>\n";
  const Rgb black{0, 0, 0};
  cv.line(f.x0, f.y0, f.x0 + f.w, f.y0, black);
  cv.line(f.x0, f.y0 + f.h, f.x0 + f.w, f.y0 + f.h, black);
  cv.line(f.x0, f.y0, f.x0, f.y0 + f.h, black);
  cv.line(f.x0 + f.w, f.y0, f.x0 + f.w, f.y0 + f.h, black);
  write_text(stem + ".svg", svg.str());
  cv.save(stem + ".ppm");
}

void plot_heatmaps(const std::string& stem, const std::vector<std::string>& titles,
                   const std::vector<std::vector<double>>& grids, int rows, int cols) {
  if (grids.empty()) throw std::invalid_argument("plot_heatmaps: nothing to plot");
  const int cell = std::max(8, 320 / std::max(rows, cols));
  const int panel_w = cols * cell + 40, panel_h = rows * cell + 60;
  const int W = panel_w * static_cast<int>(grids.size()), H = panel_h;
  std::ostringstream svg;
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H
      << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
  Canvas cv(W, H);
  for (std::size_t g = 0; g < grids.size(); ++g) {
    const int ox = static_cast<int>(g) * panel_w + 20, oy = 40;
    svg << "<text x='" << ox + cols * cell / 2 << "' y='24' font-size='14' text-anchor='middle'>"
        << escape(g < titles.size() ? titles[g] : "") << "</text>\n";
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        const double v = std::clamp(grids[g][static_cast<std::size_t>(r * cols + c)], 0.0, 1.0);
        const Rgb col{static_cast<unsigned char>(255 - 200 * v), static_cast<unsigned char>(255 - 160 * v),
                      static_cast<unsigned char>(255 - 60 * v)};
        svg << "<rect x='" << ox + c * cell << "' y='" << oy + r * cell << "' width='" << cell << "' height='" << cell
            << "' fill='" << hex(col) << "' stroke='#cccccc'><title>" << v << "</title></rect>\n";
        cv.rect(ox + c * cell, oy + r * cell, ox + (c + 1) * cell - 1, oy + (r + 1) * cell - 1, col);
      }
  }
  svg << "</svg>\n";
  write_text(stem + ".svg", svg.str());
  cv.save(stem + ".ppm");
}

void plot_bars(const std::string& stem, const std::string& title, const std::string& ylabel,
               const std::vector<Bar>& bars) {
  if (bars.empty()) throw std::invalid_argument("plot_bars: nothing to plot");
  Frame f;
  f.ymin = 1e300;
  f.ymax = -1e300;
  for (const auto& b : bars) {
    f.ymin = std::min({f.ymin, b.mean - b.err, 0.0});
    f.ymax = std::max({f.ymax, b.mean + b.err, 0.0});
    for (double p : b.points) f.ymin = std::min(f.ymin, p), f.ymax = std::max(f.ymax, p);
  }
  pad_range(f.ymin, f.ymax);
  f.xmin = 0;
  f.xmax = static_cast<double>(bars.size());
  std::ostringstream svg;
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='800' height='420'>\n<rect width='100%' height='100%' "
         "fill='white'/>\n";
  Canvas cv(800, 420);
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const auto& b = bars[i];
    const Rgb c = palette()[i % palette().size()];
    const double xa = f.px(i + 0.2), xb = f.px(i + 0.8), y0 = f.py(0.0), ym = f.py(b.mean);
    svg << "<rect x='" << xa << "' y='" << std::min(y0, ym) << "' width='" << xb - xa << "' height='"
        << std::abs(y0 - ym) << "' fill='" << hex(c) << "' fill-opacity='0.7'/>\n";
    cv.rect(static_cast<int>(xa), static_cast<int>(std::min(y0, ym)), static_cast<int>(xb),
            static_cast<int>(std::max(y0, ym)), c, 0.7);
    const double xm = f.px(i + 0.5);
    svg << "<line x1='" << xm << "' x2='" << xm << "' y1='" << f.py(b.mean - b.err) << "' y2='"
        << f.py(b.mean + b.err) << "' stroke='black' stroke-width='2'/>\n";
    cv.line(xm, f.py(b.mean - b.err), xm, f.py(b.mean + b.err), Rgb{0, 0, 0});
    for (std::size_t k = 0; k < b.points.size(); ++k) {
      const double jitter = (static_cast<double>(k % 7) - 3.0) * 3.0;
      svg << "<circle cx='" << xm + jitter << "' cy='" << f.py(b.points[k]) << "' r='2' fill='black' "
          << "fill-opacity='0.4'/>\n";
      cv.rect(static_cast<int>(xm + jitter) - 1, static_cast<int>(f.py(b.points[k])) - 1,
              static_cast<int>(xm + jitter) + 1, static_cast<int>(f.py(b.points[k])) + 1, Rgb{0, 0, 0}, 0.4);
    }
    svg << "<text x='" << xm << "' y='" << f.y0 + f.h + 30 << "' font-size='12' text-anchor='middle'>"
        << escape(b.label) << "</text>\n";
  }
  svg << axes_svg(f, title, "", ylabel) << "</svg>\n";
  write_text(stem + ".svg", svg.str());
  cv.save(stem + ".ppm");
}

}  // namespace dicode::tools
