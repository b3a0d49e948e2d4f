#include "sfm/simulate.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sfm {

namespace {

// SplitMix64: counter-based, one independent stream per path.
struct SplitMix64 {
    std::uint64_t state;

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    double uniform() { // in (0, 1]
        return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;
    }
    double exponential(double rate) { return -std::log(uniform()) / rate; }
};

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

SplitMix64 path_rng(std::uint64_t seed, long path) {
    // The start state must go through the finalizer: adding a plain stride
    // would put consecutive paths on the same counter stream shifted by one
    // draw, correlating the whole ensemble.
    return SplitMix64{mix64(mix64(seed) + static_cast<std::uint64_t>(path))};
}

int sample_initial_phase(const RVec& g, SplitMix64& rng) {
    double u = rng.uniform();
    for (int i = 0; i < g.size(); ++i) {
        u -= g(i);
        if (u <= 0)
            return i;
    }
    return static_cast<int>(g.size()) - 1;
}

int sample_jump(const SfmModel& model, int phase, SplitMix64& rng) {
    const double total = -model.T(phase, phase);
    double u = rng.uniform() * total;
    for (int j = 0; j < model.m(); ++j) {
        if (j == phase)
            continue;
        u -= model.T(phase, j);
        if (u <= 0)
            return j;
    }
    // numerically exhausted; return the last reachable phase
    for (int j = model.m() - 1; j >= 0; --j)
        if (j != phase && model.T(phase, j) > 0)
            return j;
    return phase;
}

/// Drives one path; the visitor sees maximal linear segments
/// (t0, t1, level-at-t0, level-at-t1, slope, phase) and returns false to
/// stop. The endpoint level is passed explicitly so boundary hits are exact
/// (recomputing x0 + rate*(t1-t0) can round a hit to +1e-16 and lose it).
template <class Visitor>
void walk_path(const SfmModel& model, const SimConfig& cfg, long path,
               Visitor&& visit) {
    SplitMix64 rng = path_rng(cfg.seed, path);
    int phase = sample_initial_phase(cfg.g, rng);
    double t = 0.0, x = cfg.z;
    while (t < cfg.horizon) {
        const double hold = rng.exponential(-model.T(phase, phase));
        const double tend = std::min(t + hold, cfg.horizon);
        const double c = model.c(phase);
        if (x > 0 && c < 0 && x + c * (tend - t) < 0) {
            const double th = t + x / (-c);
            if (!visit(t, th, x, 0.0, c, phase))
                return;
            if (!visit(th, tend, 0.0, 0.0, 0.0, phase))
                return;
            x = 0.0;
        } else if (x == 0.0 && c < 0) {
            if (!visit(t, tend, 0.0, 0.0, 0.0, phase))
                return;
        } else {
            const double x1 = x + c * (tend - t);
            if (!visit(t, tend, x, x1, c, phase))
                return;
            x = x1;
        }
        if (tend >= cfg.horizon)
            return;
        t = tend;
        phase = sample_jump(model, phase, rng);
    }
}

void check_config(const SfmModel& model, const SimConfig& cfg) {
    if (cfg.paths < 1 || cfg.horizon <= 0 || cfg.z < 0)
        throw DimensionMismatch("bad simulation configuration");
    if (cfg.g.size() != model.m() || cfg.g.minCoeff() < 0 ||
        std::abs(cfg.g.sum() - 1.0) > 1e-12)
        throw DimensionMismatch(
            "initial phase distribution must be a probability vector over all phases");
}

/// Fill a paths x k matrix of per-path contributions (parallel or serial),
/// then reduce sequentially in path order for bitwise reproducibility.
template <class Body>
std::vector<Estimate> accumulate_paths(const SimConfig& cfg, int k, Body&& body) {
    RMat contrib = RMat::Zero(cfg.paths, k);
    if (cfg.parallel) {
#pragma omp parallel for schedule(static)
        for (long i = 0; i < cfg.paths; ++i)
            body(i, contrib.row(i));
    } else {
        for (long i = 0; i < cfg.paths; ++i)
            body(i, contrib.row(i));
    }
    std::vector<Estimate> out(k);
    const double n = static_cast<double>(cfg.paths);
    for (int j = 0; j < k; ++j) {
        double sum = 0.0, sq = 0.0;
        for (long i = 0; i < cfg.paths; ++i) {
            sum += contrib(i, j);
            sq += contrib(i, j) * contrib(i, j);
        }
        const double mean = sum / n;
        const double var = std::max(0.0, sq / n - mean * mean);
        out[j] = {mean, std::sqrt(var / n)};
    }
    return out;
}

// level and phase at a fixed time t
struct StateAtT {
    double level = 0.0;
    int phase = -1;
};

StateAtT state_at(const SfmModel& model, const SimConfig& cfg, long path,
                  double t) {
    StateAtT st;
    walk_path(model, cfg, path,
              [&](double t0, double t1, double x0, double x1, double rate,
                  int phase) {
                  (void)x1;
                  if (t0 <= t && t <= t1) {
                      st.level = x0 + rate * (t - t0);
                      st.phase = phase;
                      return false;
                  }
                  return true;
              });
    return st;
}

} // namespace

std::vector<Estimate> sim_boundary_probability(const SfmModel& model,
                                               const SimConfig& cfg,
                                               double t) {
    check_config(model, cfg);
    return accumulate_paths(cfg, model.m(), [&](long i, auto row) {
        const StateAtT st = state_at(model, cfg, i, t);
        if (st.phase >= 0 && st.level == 0.0)
            row(st.phase) = 1.0;
    });
}

std::vector<Estimate> sim_density(const SfmModel& model, const SimConfig& cfg,
                                  double t, double x) {
    check_config(model, cfg);
    std::vector<double> level(cfg.paths);
    std::vector<int> phase(cfg.paths);
    if (cfg.parallel) {
#pragma omp parallel for schedule(static)
        for (long i = 0; i < cfg.paths; ++i) {
            const StateAtT st = state_at(model, cfg, i, t);
            level[i] = st.level;
            phase[i] = st.phase;
        }
    } else {
        for (long i = 0; i < cfg.paths; ++i) {
            const StateAtT st = state_at(model, cfg, i, t);
            level[i] = st.level;
            phase[i] = st.phase;
        }
    }

    // Silverman bandwidth on the positive-level sample
    double sum = 0.0, sq = 0.0;
    long npos = 0;
    for (long i = 0; i < cfg.paths; ++i)
        if (level[i] > 0) {
            sum += level[i];
            sq += level[i] * level[i];
            ++npos;
        }
    if (npos < 2)
        return std::vector<Estimate>(model.m());
    const double mean = sum / npos;
    const double sd = std::sqrt(std::max(1e-300, sq / npos - mean * mean));
    const double h = 1.06 * sd * std::pow(static_cast<double>(npos), -0.2);

    return accumulate_paths(cfg, model.m(), [&](long i, auto row) {
        if (phase[i] >= 0 && level[i] > 0) {
            const double u = (level[i] - x) / h;
            row(phase[i]) =
                std::exp(-0.5 * u * u) / (h * std::sqrt(2.0 * M_PI));
        }
    });
}

PassageEstimate sim_passage(const SfmModel& model, const SimConfig& cfg,
                            double y, double s) {
    check_config(model, cfg);
    const int m = model.m();
    const auto both = accumulate_paths(cfg, 2 * m, [&](long i, auto row) {
        walk_path(model, cfg, i,
                  [&](double t0, double t1, double x0, double x1, double rate,
                      int phase) {
                      (void)t1;
                      if (rate < 0 && x1 <= 0) {
                          const double tau = t0 + x0 / (-rate);
                          row(phase) = std::exp(-s * tau);
                          return false;
                      }
                      if (rate > 0 && x1 >= y) {
                          const double tau = t0 + (y - x0) / rate;
                          row(m + phase) = std::exp(-s * tau);
                          return false;
                      }
                      return true;
                  });
    });
    PassageEstimate out;
    out.hit_zero.assign(both.begin(), both.begin() + m);
    out.hit_upper.assign(both.begin() + m, both.end());
    return out;
}

std::vector<Estimate> sim_transform_boundary(const SfmModel& model,
                                             const SimConfig& cfg, double s) {
    check_config(model, cfg);
    return accumulate_paths(cfg, model.m(), [&](long i, auto row) {
        walk_path(model, cfg, i,
                  [&](double t0, double t1, double x0, double x1, double rate,
                      int phase) {
                      (void)x1;
                      if (x0 == 0.0 && rate == 0.0)
                          row(phase) +=
                              (std::exp(-s * t0) - std::exp(-s * t1)) / s;
                      return true;
                  });
    });
}

std::vector<Estimate> sim_transform_density(const SfmModel& model,
                                            const SimConfig& cfg, double x,
                                            double s, double h) {
    check_config(model, cfg);
    const double lo = x - h / 2, hi = x + h / 2;
    return accumulate_paths(cfg, model.m(), [&](long i, auto row) {
        walk_path(model, cfg, i,
                  [&](double t0, double t1, double x0, double x1, double rate,
                      int phase) {
                      double ua, ub;
                      if (rate == 0.0) {
                          if (x0 <= 0.0 || x0 < lo || x0 > hi)
                              return true;
                          ua = t0;
                          ub = t1;
                      } else {
                          const double xin = std::max(lo, std::min(x0, x1));
                          const double xout = std::min(hi, std::max(x0, x1));
                          if (xin > xout)
                              return true;
                          const double ta = t0 + (xin - x0) / rate;
                          const double tb = t0 + (xout - x0) / rate;
                          ua = std::min(ta, tb);
                          ub = std::max(ta, tb);
                      }
                      row(phase) +=
                          (std::exp(-s * ua) - std::exp(-s * ub)) / (s * h);
                      return true;
                  });
    });
}

Estimate sim_ruin(const SfmModel& model, const SimConfig& cfg,
                  double stop_level) {
    check_config(model, cfg);
    const auto est = accumulate_paths(cfg, 1, [&](long i, auto row) {
        walk_path(model, cfg, i,
                  [&](double t0, double t1, double x0, double x1, double rate,
                      int phase) {
                      (void)t0;
                      (void)t1;
                      (void)x0;
                      (void)phase;
                      if (x1 <= 0 && rate < 0) {
                          row(0) = 1.0;
                          return false;
                      }
                      return x1 < stop_level;
                  });
    });
    return est[0];
}

} // namespace sfm
