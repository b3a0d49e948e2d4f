#pragma once

#include "sfm/ilt.hpp"
#include "sfm/model.hpp"

namespace sfm {

/// A deterioration model on the level interval [0, 1] with boundary
/// behaviour: on hitting 0 the down phase returns to an up phase via
/// return_mp; on hitting 1 the process may linger in a sticky state
/// (hold00, leave0p) before re-entering an up phase via upper_pp. The
/// lifetime is the first time level 1 is reached plus the time spent
/// at the upper boundary, starting from level 0 with phase law alpha.
struct LifetimeSpec {
    ParamModel pm;
    RMat return_mp; // |S-| x |S+|, substochastic
    RMat upper_pp;  // |S+| x |S+|, substochastic
    RMat upper_p0;  // |S+| x n0h, mass routed through the sticky state
    RMat hold00;    // n0h x n0h subgenerator of the sticky state
    RMat leave0p;   // n0h x |S+|
    RVec alpha;     // initial phase distribution over S+
};

/// The six-phase power-station model with rates
/// c = [0.004, 0.017, 0.020, 0.020, 0.001, -0.01] and theta_i = |c_i|.
LifetimeSpec power_station_spec();

void validate(const LifetimeSpec& spec);

/// Laplace transform alpha L(s) of the lifetime density, with its
/// theta-jacobian. L(s) = W(s) Pbar(s) 1 where W is the transform of the
/// first passage from level 0 to level 1 (allowing returns through the
/// lower boundary) and Pbar the transform of the upper-boundary stay.
Diff lifetime_transform(const LifetimeSpec& spec, Cplx s);

/// Density h(t) of the lifetime with its theta-jacobian, by inversion.
Diff lifetime_density(const LifetimeSpec& spec, double t,
                      const InversionSpec& ispec = {});

/// P(lifetime <= t), by inverting L(s)/s.
double lifetime_cdf(const LifetimeSpec& spec, double t,
                    const InversionSpec& ispec = {});

/// Median of the lifetime by bisection on the CDF.
double lifetime_median(const LifetimeSpec& spec, double lo = 1.0,
                       double hi = 2000.0);

} // namespace sfm
