#include "kklflow/svg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace kklflow::svg {

namespace {

struct AxisScale {
  double lo = 0.0, hi = 1.0;
  bool log = false;
  double px0 = 0.0, px1 = 1.0;

  double to_px(double v) const {
    double a = log ? std::log10(v) : v;
    double l = log ? std::log10(lo) : lo;
    double h = log ? std::log10(hi) : hi;
    if (h <= l) h = l + 1.0;
    return px0 + (a - l) / (h - l) * (px1 - px0);
  }
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

std::vector<double> linear_ticks(double lo, double hi) {
  double range = hi - lo;
  if (range <= 0.0) return {lo};
  double raw = range / 5.0;
  double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double mult : {1.0, 2.0, 5.0, 10.0})
    if (mag * mult >= raw) {
      step = mag * mult;
      break;
    }
  std::vector<double> ticks;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-12 * range; t += step)
    ticks.push_back(t);
  return ticks;
}

std::vector<double> log_ticks(double lo, double hi) {
  std::vector<double> ticks;
  int e0 = static_cast<int>(std::floor(std::log10(lo)));
  int e1 = static_cast<int>(std::ceil(std::log10(hi)));
  for (int e = e0; e <= e1; ++e) {
    double t = std::pow(10.0, e);
    if (t >= lo * (1 - 1e-12) && t <= hi * (1 + 1e-12)) ticks.push_back(t);
  }
  if (ticks.empty()) ticks = {lo, hi};
  return ticks;
}

void open_svg(std::ostringstream& os, int w, int h, const std::string& title) {
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
     << "\" viewBox=\"0 0 " << w << " " << h << "\">\n"
     << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n"
     << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\" "
        "font-family=\"sans-serif\">"
     << escape(title) << "</text>\n";
}

}  // namespace

std::string line_chart(const std::vector<Series>& series, const ChartOptions& opt) {
  if (series.empty()) throw std::invalid_argument("line_chart: no series");

  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size() || (!s.yerr.empty() && s.yerr.size() != s.y.size()))
      throw std::invalid_argument("line_chart: inconsistent series lengths");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      double lo = s.y[i] - (s.yerr.empty() ? 0.0 : s.yerr[i]);
      double hi = s.y[i] + (s.yerr.empty() ? 0.0 : s.yerr[i]);
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, opt.log_y ? s.y[i] : lo);
      ymax = std::max(ymax, opt.log_y ? s.y[i] : hi);
    }
  }
  if (opt.log_x && xmin <= 0.0) throw std::invalid_argument("line_chart: log x needs positive x");
  if (opt.log_y && ymin <= 0.0) throw std::invalid_argument("line_chart: log y needs positive y");
  if (xmax <= xmin) xmax = xmin + 1.0;
  if (ymax <= ymin) ymax = ymin + 1.0;
  if (!opt.log_y) {
    double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;
  }

  const double ml = 70, mr = 20, mt = 36, mb = 50;
  AxisScale xs{xmin, xmax, opt.log_x, ml, opt.width - mr};
  AxisScale ys{ymin, ymax, opt.log_y, opt.height - mb, mt};

  std::ostringstream os;
  open_svg(os, opt.width, opt.height, opt.title);

  // axes
  os << "<line x1=\"" << ml << "\" y1=\"" << opt.height - mb << "\" x2=\"" << opt.width - mr
     << "\" y2=\"" << opt.height - mb << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
     << opt.height - mb << "\" stroke=\"black\"/>\n";

  for (double t : opt.log_x ? log_ticks(xmin, xmax) : linear_ticks(xmin, xmax)) {
    double px = xs.to_px(t);
    os << "<line x1=\"" << fmt(px) << "\" y1=\"" << opt.height - mb << "\" x2=\"" << fmt(px)
       << "\" y2=\"" << opt.height - mb + 4 << "\" stroke=\"black\"/>\n"
       << "<text x=\"" << fmt(px) << "\" y=\"" << opt.height - mb + 18
       << "\" text-anchor=\"middle\" font-size=\"10\" font-family=\"sans-serif\">" << fmt(t)
       << "</text>\n";
  }
  for (double t : opt.log_y ? log_ticks(ymin, ymax) : linear_ticks(ymin, ymax)) {
    double py = ys.to_px(t);
    os << "<line x1=\"" << ml - 4 << "\" y1=\"" << fmt(py) << "\" x2=\"" << ml << "\" y2=\""
       << fmt(py) << "\" stroke=\"black\"/>\n"
       << "<text x=\"" << ml - 8 << "\" y=\"" << fmt(py + 3)
       << "\" text-anchor=\"end\" font-size=\"10\" font-family=\"sans-serif\">" << fmt(t)
       << "</text>\n";
  }
  os << "<text x=\"" << (ml + opt.width - mr) / 2 << "\" y=\"" << opt.height - 12
     << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\">"
     << escape(opt.xlabel) << "</text>\n";
  os << "<text x=\"16\" y=\"" << (mt + opt.height - mb) / 2
     << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\" "
        "transform=\"rotate(-90 16 "
     << (mt + opt.height - mb) / 2 << ")\">" << escape(opt.ylabel) << "</text>\n";

  int legend_y = mt + 8;
  for (const auto& s : series) {
    std::ostringstream pts;
    for (std::size_t i = 0; i < s.x.size(); ++i)
      pts << fmt(xs.to_px(s.x[i])) << "," << fmt(ys.to_px(s.y[i])) << " ";
    os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\""
       << pts.str() << "\"/>\n";
    if (!s.yerr.empty()) {
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        double px = xs.to_px(s.x[i]);
        double lo = s.y[i] - s.yerr[i], hi = s.y[i] + s.yerr[i];
        if (opt.log_y) lo = std::max(lo, ymin);
        os << "<line x1=\"" << fmt(px) << "\" y1=\"" << fmt(ys.to_px(lo)) << "\" x2=\"" << fmt(px)
           << "\" y2=\"" << fmt(ys.to_px(hi)) << "\" stroke=\"" << s.color
           << "\" stroke-width=\"1\" opacity=\"0.6\"/>\n";
      }
    }
    if (!s.label.empty()) {
      os << "<line x1=\"" << opt.width - mr - 110 << "\" y1=\"" << legend_y << "\" x2=\""
         << opt.width - mr - 90 << "\" y2=\"" << legend_y << "\" stroke=\"" << s.color
         << "\" stroke-width=\"2\"/>\n"
         << "<text x=\"" << opt.width - mr - 84 << "\" y=\"" << legend_y + 4
         << "\" font-size=\"11\" font-family=\"sans-serif\">" << escape(s.label) << "</text>\n";
      legend_y += 16;
    }
  }
  os << "</svg>\n";
  return os.str();
}

std::string scatter_plot(const std::vector<ScatterSet>& sets, const std::string& title, int width,
                         int height) {
  if (sets.empty()) throw std::invalid_argument("scatter_plot: no point sets");
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : sets) {
    if (s.points.cols() != 2) throw std::invalid_argument("scatter_plot: points must be 2-D");
    for (Eigen::Index i = 0; i < s.points.rows(); ++i) {
      xmin = std::min(xmin, s.points(i, 0));
      xmax = std::max(xmax, s.points(i, 0));
      ymin = std::min(ymin, s.points(i, 1));
      ymax = std::max(ymax, s.points(i, 1));
    }
  }
  double span = std::max(xmax - xmin, ymax - ymin);
  if (span <= 0.0) span = 1.0;
  double cx = 0.5 * (xmin + xmax), cy = 0.5 * (ymin + ymax);
  span *= 1.1;

  const double ml = 30, mt = 36, mr = 20, mb = 24;
  double side = std::min(width - ml - mr, height - mt - mb);
  auto px = [&](double x) { return ml + (x - (cx - span / 2)) / span * side; };
  auto py = [&](double y) { return mt + side - (y - (cy - span / 2)) / span * side; };

  std::ostringstream os;
  open_svg(os, width, height, title);
  os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << fmt(side) << "\" height=\""
     << fmt(side) << "\" fill=\"none\" stroke=\"#888\"/>\n";
  int legend_y = mt + 12;
  for (const auto& s : sets) {
    for (Eigen::Index i = 0; i < s.points.rows(); ++i)
      os << "<circle cx=\"" << fmt(px(s.points(i, 0))) << "\" cy=\"" << fmt(py(s.points(i, 1)))
         << "\" r=\"" << s.radius << "\" fill=\"" << s.color << "\" fill-opacity=\"0.75\"/>\n";
    if (!s.label.empty()) {
      os << "<circle cx=\"" << ml + side - 100 << "\" cy=\"" << legend_y << "\" r=\"4\" fill=\""
         << s.color << "\"/>\n"
         << "<text x=\"" << ml + side - 90 << "\" y=\"" << legend_y + 4
         << "\" font-size=\"11\" font-family=\"sans-serif\">" << escape(s.label) << "</text>\n";
      legend_y += 16;
    }
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace kklflow::svg
