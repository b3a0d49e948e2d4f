#pragma once

#include <cstdint>

#include "sfm/model.hpp"

namespace sfm {

/// Monte-Carlo configuration. Estimates are a deterministic function of the
/// configuration: paths use counter-based per-path seeds and are reduced in
/// path order, so parallel and serial runs agree bitwise.
struct SimConfig {
    std::uint64_t seed = 1;
    long paths = 100000;
    double horizon = 50.0;
    double z = 0.0;       // initial level
    RVec g;               // initial phase distribution over all m phases
    bool parallel = true; // OpenMP over paths; results identical either way
};

struct Estimate {
    double value = 0.0;
    double se = 0.0;
};

/// P(X(t) = 0, phase = i) for each phase.
std::vector<Estimate> sim_boundary_probability(const SfmModel& model,
                                               const SimConfig& cfg, double t);

/// Gaussian-kernel density estimate of the level at time t, per phase,
/// evaluated at level x (Silverman bandwidth over the positive-level sample).
std::vector<Estimate> sim_density(const SfmModel& model, const SimConfig& cfg,
                                  double t, double x);

/// First-passage transform estimates from (cfg.z, cfg.g) with boundaries at
/// 0 and y: hit_zero[j] = E[e^{-s tau}; absorb at level 0 in phase j],
/// hit_upper[j] = E[e^{-s tau}; absorb at level y in phase j].
struct PassageEstimate {
    std::vector<Estimate> hit_zero, hit_upper;
};
PassageEstimate sim_passage(const SfmModel& model, const SimConfig& cfg,
                            double y, double s);

/// Exact per-path time integral of e^{-st} 1{X(t)=0, phase=i}; estimates the
/// Laplace transform of the boundary probabilities at real s > 0.
std::vector<Estimate> sim_transform_boundary(const SfmModel& model,
                                             const SimConfig& cfg, double s);

/// Box-kernel (width h) time-integrated estimator of the transform of the
/// level density at (x, s); exact on each linear path segment.
std::vector<Estimate> sim_transform_density(const SfmModel& model,
                                            const SimConfig& cfg, double x,
                                            double s, double h = 0.01);

/// P(level hits 0 before exceeding stop_level or the horizon).
Estimate sim_ruin(const SfmModel& model, const SimConfig& cfg,
                  double stop_level);

} // namespace sfm
