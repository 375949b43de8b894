#pragma once

#include <string>
#include <utility>
#include <vector>

namespace brt {

// Minimal SVG writer: polylines and circles in data coordinates, mapped to a
// fixed-width viewport with the y axis flipped.  Enough for trajectory
// figures; no plotting dependency.
class SvgCanvas {
public:
    void polyline(const std::vector<std::pair<double, double>>& pts,
                  const std::string& stroke, double width);
    void circle(double cx, double cy, double r, const std::string& stroke, double width);

    std::string render(int viewport_width = 800) const;
    void write_file(const std::string& path, int viewport_width = 800) const;

private:
    struct Poly {
        std::vector<std::pair<double, double>> pts;
        std::string stroke;
        double width;
    };
    struct Circle {
        double cx, cy, r;
        std::string stroke;
        double width;
    };
    std::vector<Poly> polys_;
    std::vector<Circle> circles_;
    double min_x_ = 1e300, min_y_ = 1e300, max_x_ = -1e300, max_y_ = -1e300;
    void grow(double x, double y);
};

}  // namespace brt
