#pragma once

#include <utility>
#include <vector>

namespace brt {

struct OrderFit {
    double order = 0;     // least-squares slope in log-log coordinates
    double residual = 0;  // rms residual of the fit
};

// Fit error ~ C * eps^order from (eps, error) pairs.  Errors must be
// positive; needs >= 3 pairs with distinct eps.
OrderFit fit_order(const std::vector<std::pair<double, double>>& pairs);

struct Extrapolation {
    double limit = 0;
    double band = 0;        // error band: the last successive gap
    double order = 0;       // fitted order of the successive gaps
    double residual = 0;
    bool richardson = false;  // true when the order-1 model was trusted
};

// Limit of a sequence of estimates at a halving eps grid.  The gaps are
// empirically O(eps); Richardson with order 1 is applied only when the
// fitted gap order is within 0.3 of 1, otherwise the smallest-eps value is
// returned with the last gap as the error band.
Extrapolation extrapolate_limit(const std::vector<std::pair<double, double>>& eps_value);

// Polynomial extrapolation to 0 (Neville) of (h, value) pairs; used for the
// short-geodesic average limits.
double neville_extrapolate(const std::vector<std::pair<double, double>>& h_value);

}  // namespace brt
