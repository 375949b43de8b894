#pragma once

#include <cstddef>
#include <vector>

namespace brt {

// Integral over [a, b] of the quadratic through (t0,y0), (t1,y1), (t2,y2).
// Evaluated in coordinates shifted to t0; with raw abscissas the Lagrange
// weights cancel catastrophically when two nodes nearly coincide.
double quad3(double t0, double t1, double t2, double y0, double y1, double y2,
             double a, double b);

// Composite quadratic panels over samples [i0, i1] of a time grid.  The grid
// may end in an event-aligned interval that is orders of magnitude shorter
// than the rest; intervals below `degenerate_frac` of the span are integrated
// by trapezoid instead of entering a quadratic panel (a panel across such an
// interval amplifies roundoff into the result — observed in practice as a
// per-bounce deviation blowup).
double quad_panels(const std::vector<double>& t, const std::vector<double>& y,
                   std::size_t i0, std::size_t i1, double degenerate_frac = 1e-9);

// Cumulative version: out[j] = integral from t[i0] to t[i0 + j] with the same
// panel rule (odd offsets integrate the leading half of the panel).
std::vector<double> cum_panels(const std::vector<double>& t, const std::vector<double>& y,
                               std::size_t i0, std::size_t i1);

}  // namespace brt
