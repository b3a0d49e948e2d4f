#pragma once

#include "sfm/firstreturn.hpp"

namespace sfm {

/// Stationary distribution of a positive-recurrent model (drift < 0) together
/// with all parameter derivatives. Orderings: `p` lives on S- then S0;
/// `density`/`transform` results are scattered back to the original phase
/// order, so they are full 1 x m row vectors with zeros where structure
/// forces them (e.g. the boundary mass on S+).
struct StationaryBundle {
    SfmModel model;
    FirstReturnBundle fr; // at s = 0

    Diff xi;    // 1 x |S-|, xi >= 0, xi 1 = 1
    Diff alpha; // 1 x 1 normalizing constant
    Diff p;     // 1 x (|S-| + |S0|) boundary mass, S- then S0

    /// Boundary mass scattered to a full 1 x m row (zeros on S+).
    Diff boundary_full() const;

    /// Stationary density pi(x) over all phases, with jacobian.
    Diff density(double x) const;

    /// Laplace transform in the level, L(v) = integral_0^inf e^{-vx} pi(x) dx,
    /// over all phases; requires Re v > max Re eigenvalue of K (v = 0 works).
    Diff transform(Cplx v) const;

    /// Decay rate of the density: |max Re eigenvalue of K|.
    double decay_rate() const;

    // internals reused by density/transform
    Diff w;       // p * T(minus-zero, S+), 1 x |S+|
    Diff wings;   // [C+^{-1}  Psi |C-|^{-1}], |S+| x (|S+| + |S-|)
    Diff to_zero; // T(plus-minus, S0) (-T00)^{-1}, or 0 x 0 when S0 is empty
};

/// xi as the normalized left fixed vector of M = [I 0](-Tmzmz)^{-1} Tmz+ Psi.
RVec solve_xi_vector(const SfmModel& model, const FirstReturnBundle& fr0);

/// alpha = 1/Z with Z the total-mass expression built from xi, K and Psi.
double normalizing_alpha(const SfmModel& model, const RVec& xi,
                         const FirstReturnBundle& fr0);

/// p = alpha [xi 0] (-Tmzmz)^{-1} over S- then S0.
RVec boundary_mass(const SfmModel& model, const RVec& xi, double alpha);

/// Full bundle with derivatives for a parameterized model.
StationaryBundle stationary(const ParamModel& pm);

} // namespace sfm
