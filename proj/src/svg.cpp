#include "fpreg/svg.hpp"

#include "fpreg/error.hpp"

#include <array>
#include <cstdio>
#include <fstream>

namespace fpreg {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

PlotBox bounding_box(const std::vector<Vec2>& points, double pad) {
  PlotBox b{0.0, 1.0, 0.0, 1.0};
  if (points.empty()) return b;
  b.x0 = b.x1 = points[0].x();
  b.y0 = b.y1 = points[0].y();
  for (const auto& p : points) {
    b.x0 = std::min(b.x0, p.x());
    b.x1 = std::max(b.x1, p.x());
    b.y0 = std::min(b.y0, p.y());
    b.y1 = std::max(b.y1, p.y());
  }
  if (b.x1 - b.x0 <= 0.0) { b.x0 -= 0.5; b.x1 += 0.5; }
  if (b.y1 - b.y0 <= 0.0) { b.y0 -= 0.5; b.y1 += 0.5; }
  const double dx = pad * (b.x1 - b.x0), dy = pad * (b.y1 - b.y0);
  return {b.x0 - dx, b.x1 + dx, b.y0 - dy, b.y1 + dy};
}

SvgPlot::SvgPlot(double width, double height, PlotBox box, std::string title)
    : width_(width), height_(height), box_(box), title_(std::move(title)) {}

Vec2 SvgPlot::map(const Vec2& p) const {
  const double sx = (p.x() - box_.x0) / (box_.x1 - box_.x0);
  const double sy = (p.y() - box_.y0) / (box_.y1 - box_.y0);
  return {margin_ + sx * (width_ - 2 * margin_), height_ - margin_ - sy * (height_ - 2 * margin_)};
}

void SvgPlot::polyline(const std::vector<Vec2>& pts, const std::string& stroke, double stroke_width) {
  if (pts.empty()) return;
  body_ += "<polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" + fmt(stroke_width) + "\" points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec2 q = map(pts[i]);
    if (i) body_ += ' ';
    body_ += fmt(q.x()) + ',' + fmt(q.y());
  }
  body_ += "\"/>\n";
}

void SvgPlot::points(const std::vector<Vec2>& pts, const std::string& fill, double radius) {
  for (const auto& p : pts) {
    const Vec2 q = map(p);
    body_ += "<circle cx=\"" + fmt(q.x()) + "\" cy=\"" + fmt(q.y()) + "\" r=\"" + fmt(radius) + "\" fill=\"" + fill +
             "\"/>\n";
  }
}

void SvgPlot::triangle(const Vec2& a, const Vec2& b, const Vec2& c, const std::string& fill) {
  const Vec2 p = map(a), q = map(b), r = map(c);
  body_ += "<polygon fill=\"" + fill + "\" stroke=\"" + fill + "\" stroke-width=\"0.2\" points=\"" + fmt(p.x()) + ',' +
           fmt(p.y()) + ' ' + fmt(q.x()) + ',' + fmt(q.y()) + ' ' + fmt(r.x()) + ',' + fmt(r.y()) + "\"/>\n";
}

void SvgPlot::circle_outline(const Vec2& center, double radius, const std::string& stroke) {
  const Vec2 c = map(center);
  const double r = radius * (width_ - 2 * margin_) / (box_.x1 - box_.x0);
  body_ += "<circle cx=\"" + fmt(c.x()) + "\" cy=\"" + fmt(c.y()) + "\" r=\"" + fmt(r) + "\" fill=\"none\" stroke=\"" +
           stroke + "\"/>\n";
}

void SvgPlot::axes(const std::string& xlabel, const std::string& ylabel) {
  const double l = margin_, r = width_ - margin_, t = margin_, b = height_ - margin_;
  body_ += "<rect x=\"" + fmt(l) + "\" y=\"" + fmt(t) + "\" width=\"" + fmt(r - l) + "\" height=\"" + fmt(b - t) +
           "\" fill=\"none\" stroke=\"black\"/>\n";
  auto text = [&](double x, double y, const std::string& s, const char* anchor) {
    body_ += "<text x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" font-size=\"11\" text-anchor=\"" + anchor + "\">" +
             escape(s) + "</text>\n";
  };
  text(l, b + 15, label(box_.x0), "start");
  text(r, b + 15, label(box_.x1), "end");
  text(l - 4, b, label(box_.y0), "end");
  text(l - 4, t + 10, label(box_.y1), "end");
  text(0.5 * (l + r), b + 32, xlabel, "middle");
  text(12, 0.5 * (t + b), ylabel, "start");
}

void SvgPlot::legend(const std::vector<std::pair<std::string, std::string>>& entries) {
  double y = margin_ + 14;
  for (const auto& [name, color] : entries) {
    body_ += "<rect x=\"" + fmt(width_ - margin_ - 110) + "\" y=\"" + fmt(y - 9) +
             "\" width=\"10\" height=\"10\" fill=\"" + color + "\"/>\n";
    body_ += "<text x=\"" + fmt(width_ - margin_ - 95) + "\" y=\"" + fmt(y) + "\" font-size=\"11\">" + escape(name) +
             "</text>\n";
    y += 14;
  }
}

std::string SvgPlot::str() const {
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width_) + "\" height=\"" + fmt(height_) +
                  "\" viewBox=\"0 0 " + fmt(width_) + ' ' + fmt(height_) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title_.empty())
    s += "<text x=\"" + fmt(width_ / 2) + "\" y=\"20\" font-size=\"14\" text-anchor=\"middle\">" + escape(title_) +
         "</text>\n";
  s += body_;
  s += "</svg>\n";
  return s;
}

void SvgPlot::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write '" + path.string() + "'");
  out << str();
}

std::string ramp_color(double t) {
  static constexpr std::array<std::array<double, 3>, 5> stops{{
      {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};
  t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0) * (stops.size() - 1);
  const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(t), stops.size() - 2);
  const double f = t - i;
  char buf[8];
  int c[3];
  for (int k = 0; k < 3; ++k) c[k] = static_cast<int>(std::lround(stops[i][k] + f * (stops[i + 1][k] - stops[i][k])));
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c[0], c[1], c[2]);
  return buf;
}

}  // namespace fpreg
