#include "brtlab/svg.hpp"

#include <charconv>
#include <fstream>
#include <stdexcept>

namespace brt {

namespace {
std::string fmt(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, 3);
    return std::string(buf, res.ptr);
}
}  // namespace

void SvgCanvas::grow(double x, double y) {
    min_x_ = std::min(min_x_, x);
    max_x_ = std::max(max_x_, x);
    min_y_ = std::min(min_y_, y);
    max_y_ = std::max(max_y_, y);
}

void SvgCanvas::polyline(const std::vector<std::pair<double, double>>& pts,
                         const std::string& stroke, double width) {
    for (const auto& [x, y] : pts) grow(x, y);
    polys_.push_back({pts, stroke, width});
}

void SvgCanvas::circle(double cx, double cy, double r, const std::string& stroke, double width) {
    grow(cx - r, cy - r);
    grow(cx + r, cy + r);
    circles_.push_back({cx, cy, r, stroke, width});
}

std::string SvgCanvas::render(int viewport_width) const {
    double dx = max_x_ - min_x_, dy = max_y_ - min_y_;
    if (dx <= 0) dx = 1;
    if (dy <= 0) dy = 1;
    double pad = 0.03 * std::max(dx, dy);
    double scale = viewport_width / (dx + 2 * pad);
    int viewport_height = static_cast<int>(scale * (dy + 2 * pad)) + 1;
    auto px = [&](double x) { return (x - min_x_ + pad) * scale; };
    auto py = [&](double y) { return (max_y_ - y + pad) * scale; };

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
           std::to_string(viewport_width) + "\" height=\"" + std::to_string(viewport_height) +
           "\">\n";
    for (const auto& c : circles_) {
        out += "  <circle cx=\"" + fmt(px(c.cx)) + "\" cy=\"" + fmt(py(c.cy)) + "\" r=\"" +
               fmt(c.r * scale) + "\" fill=\"none\" stroke=\"" + c.stroke + "\" stroke-width=\"" +
               fmt(c.width) + "\"/>\n";
    }
    for (const auto& p : polys_) {
        out += "  <polyline fill=\"none\" stroke=\"" + p.stroke + "\" stroke-width=\"" +
               fmt(p.width) + "\" points=\"";
        for (std::size_t i = 0; i < p.pts.size(); ++i) {
            if (i) out += ' ';
            out += fmt(px(p.pts[i].first)) + "," + fmt(py(p.pts[i].second));
        }
        out += "\"/>\n";
    }
    out += "</svg>\n";
    return out;
}

void SvgCanvas::write_file(const std::string& path, int viewport_width) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << render(viewport_width);
}

}  // namespace brt
