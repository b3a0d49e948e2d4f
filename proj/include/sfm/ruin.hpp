#pragma once

#include "sfm/firstreturn.hpp"

namespace sfm {

/// Cramer-Lundberg risk process R_t = x + ct - sum of claims, with Poisson
/// claim arrivals of intensity lambda and phase-type claim sizes (alpha, M).
/// dM gives the derivative of the subgenerator per parameter; the exit
/// vector t = -M 1 and its derivatives follow.
struct RuinSpec {
    double premium = 4.0;
    double lambda = 1.0;
    RVec alpha;
    RMat M;
    std::vector<RMat> dM;
    std::vector<std::string> param_names;
};

/// The symmetric Erlang(2, theta1) / Erlang(2, theta2) claim mixture with
/// lambda = 1 and premium 4, parameterized by (theta1, theta2).
RuinSpec erlang_mixture_spec(double theta1 = 1.0, double theta2 = 2.0);

/// Mean claim size alpha (-M)^{-1} 1.
double mean_claim(const RuinSpec& spec);

/// Build the fluid embedding: phase 1 climbs at the premium rate, the claim
/// phases descend at unit rate, so the risk process is ruined iff the fluid
/// level ever touches zero. Throws InvalidPhaseType for a bad (alpha, M)
/// and NegativeLoading when lambda E[claim] >= premium (psi = 1 regime).
ParamModel ruin_embedding(const RuinSpec& spec);

/// Ruin probability psi(x) = sum_j [Psi e^{Dx}]_{1j} with its jacobian,
/// from the first-return bundle of the embedding at s = 0.
Diff ruin_probability(const FirstReturnBundle& fr0, double x);

} // namespace sfm
