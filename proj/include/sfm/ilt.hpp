#pragma once

#include <functional>

#include "sfm/matcalc.hpp"

namespace sfm {

enum class IltMethod { euler, cme };

/// A Laplace transform value at a complex point; matrix/vector transforms are
/// inverted componentwise with shared evaluation nodes.
using LaplaceVectorFn = std::function<Mat(Cplx)>;

struct InversionSpec {
    IltMethod method = IltMethod::cme;
    /// Number of transform evaluations per point; 0 selects the method
    /// default (Euler 30, CME 50). Valid ranges: Euler 10-40, CME 10-100;
    /// CME orders snap to the nearest precomputed node table.
    int order = 0;
    /// If the internal error estimate exceeds this, invert() throws
    /// InversionAccuracyLoss.
    double tolerance = 1e100;
};

struct InversionResult {
    Mat value;
    double error_estimate = 0.0;
    int order_used = 0;
};

/// Numerically invert F at time t > 0.
InversionResult invert(const LaplaceVectorFn& F, double t,
                       const InversionSpec& spec = {});

/// Scalar convenience wrapper.
double invert_scalar(const std::function<Cplx(Cplx)>& F, double t,
                     const InversionSpec& spec = {});

} // namespace sfm
