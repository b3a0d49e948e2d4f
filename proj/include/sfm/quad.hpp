#pragma once

#include <cmath>
#include <cstdlib>

#include "sfm/errors.hpp"

namespace sfm::quad {

namespace detail {

// Gauss-Kronrod 7-15 nodes and weights on [-1, 1], positive half.
inline constexpr double kNodes[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.0};
inline constexpr double kWeights[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728};
// Gauss-7 weights aligned with the odd Kronrod nodes (indices 1,3,5,7).
inline constexpr double kGaussWeights[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469};

template <class F>
double gk15(F&& f, double a, double b, double& err) {
    const double h = (b - a) / 2, mid = (a + b) / 2;
    double kronrod = 0.0, gauss = 0.0;
    for (int i = 0; i < 8; ++i) {
        const double fv = (i == 7)
                              ? f(mid)
                              : f(mid - h * kNodes[i]) + f(mid + h * kNodes[i]);
        kronrod += kWeights[i] * fv;
        if (i % 2 == 1)
            gauss += kGaussWeights[i / 2] * fv;
    }
    kronrod *= h;
    gauss *= h;
    const double diff = std::abs(kronrod - gauss);
    err = std::pow(200.0 * diff, 1.5);
    if (err > diff)
        err = diff;
    return kronrod;
}

template <class F>
double adapt(F&& f, double a, double b, double tol, int depth) {
    double err = 0.0;
    const double v = gk15(f, a, b, err);
    if (err <= tol || depth >= 40)
        return v;
    const double mid = (a + b) / 2;
    return adapt(f, a, mid, tol / 2, depth + 1) +
           adapt(f, mid, b, tol / 2, depth + 1);
}

} // namespace detail

/// Adaptive Gauss-Kronrod integration of a scalar function on [a, b].
template <class F>
double integrate(F&& f, double a, double b, double abs_tol = 1e-10) {
    return detail::adapt(f, a, b, abs_tol, 0);
}

} // namespace sfm::quad
