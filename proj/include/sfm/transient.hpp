#pragma once

#include "sfm/firstreturn.hpp"
#include "sfm/ilt.hpp"

namespace sfm {

/// Two-boundary first-passage transforms for a start at level x with
/// boundaries 0 and y >= x: G blocks absorb at 0 (ending phase in S-),
/// H blocks absorb at y (ending phase in S+). y = x is allowed and gives
/// the "return to the starting level avoiding 0" kernels.
struct PassageMatrices {
    double x, y;
    Cplx s;
    Diff Gpm, Gmm; // start S+ / S-, hit 0 first
    Diff Hpp, Hmp; // start S+ / S-, hit y first
};

PassageMatrices passage_matrices(const FirstReturnBundle& fr, double x,
                                 double y);

/// Alternative jacobian route for cross-validation: instead of
/// differentiating the matrix inverse, uses d[G H] = (dF - [G H] dM) M^{-1}.
/// Returns the jacobian of the full [G H] block row (rows S+ then S-).
BlockJacobian dpassage_alt(const FirstReturnBundle& fr, double x, double y);

/// Which side of the partition the initial phase distribution lives on.
enum class StartSide { minus, plus };

/// Laplace-domain transient distribution for a start at level z > 0 with
/// phase distribution g (over S- or S+ per `side`), at transform point s
/// with Re s > 0.
struct TransientTransforms {
    SfmModel model;
    Cplx s;
    double z;
    StartSide side;
    FirstReturnBundle fr; // at s

    /// Transform of P(X(t) = 0, phase), over S- then S0.
    Diff ptilde;

    /// Transform of the density f(x, t) at level x > 0, over all phases in
    /// the original order.
    Diff f(double x) const;

private:
    friend TransientTransforms transient_transforms(const ParamModel& pm,
                                                    double z, const RVec& g,
                                                    StartSide side, Cplx s);
    ParamModel pm_; // kept by value so the bundle outlives its inputs
    Diff start_;   // g (minus start) or g Psi (plus start), 1 x |S-|
    Diff gplus_;   // g for plus starts, 1 x |S+| (empty otherwise)
    Diff wings_;   // [C+^{-1}  Psi |C-|^{-1}]
    Diff to_zero_; // T(pm, S0) (-T00 + sI)^{-1}, when S0 nonempty
    Diff head_;    // ptilde T(mz, S+), 1 x |S+|
};

TransientTransforms transient_transforms(const ParamModel& pm, double z,
                                         const RVec& g, StartSide side,
                                         Cplx s);

/// Time-domain boundary probability vector p(t) (over S- then S0) with its
/// jacobian, by numerical inversion of ptilde componentwise.
Diff time_domain_p(const ParamModel& pm, double z, const RVec& g,
                   StartSide side, double t, const InversionSpec& spec = {});

/// Time-domain density f(x, t) over all phases with its jacobian.
Diff time_domain_f(const ParamModel& pm, double z, const RVec& g,
                   StartSide side, double x, double t,
                   const InversionSpec& spec = {});

} // namespace sfm
