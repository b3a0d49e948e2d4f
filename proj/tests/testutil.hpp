#pragma once

#include <random>

#include "sfm/model.hpp"

namespace sfmtest {

using namespace sfm;

/// Central finite difference of a matrix-valued function of theta.
template <class F>
Mat fd(F f, const RVec& theta, int k, double h = 1e-6) {
    RVec up = theta, dn = theta;
    up(k) += h;
    dn(k) -= h;
    return (f(up) - f(dn)) / (2 * h);
}

inline double rel_err(const Mat& got, const Mat& want, double abs_floor = 1e-9) {
    const double scale = std::max(want.norm(), abs_floor / 1e-6);
    return (got - want).norm() / std::max(scale, 1e-300);
}

/// A smooth family of valid SFMs around theta = 0: T(th) = T0 + sum th_k E_k,
/// c(th) = c0 + sum th_k g_k, with E_k zero-row-sum and g_k supported on
/// phases with nonzero rate.
struct ModelFamily {
    RMat T0;
    RVec c0;
    std::vector<RMat> E;
    std::vector<RVec> g;

    int params() const { return static_cast<int>(E.size()); }

    SfmModel at(const RVec& th) const {
        RMat T = T0;
        RVec c = c0;
        for (int k = 0; k < params(); ++k) {
            T += th(k) * E[k];
            c += th(k) * g[k];
        }
        return make_model(T, c);
    }

    ParamModel pm() const {
        const RVec th0 = RVec::Zero(params());
        std::vector<RVec> dC = g;
        return make_param_model(at(th0), th0, E, dC);
    }
};

/// The two-phase model T = [[-a, a], [b, -b]], c = (1, -1) with
/// parameters theta = (a, b).
inline ParamModel simple_family(double a, double b) {
    RMat T(2, 2);
    T << -a, a, b, -b;
    RVec c(2);
    c << 1.0, -1.0;
    RMat Ea(2, 2), Eb(2, 2);
    Ea << -1, 1, 0, 0;
    Eb << 0, 0, 1, -1;
    RVec th(2);
    th << a, b;
    return make_param_model(make_model(T, c), th, {Ea, Eb},
                            {RVec::Zero(2), RVec::Zero(2)}, {"a", "b"});
}

/// Randomized family; drift at theta=0 pushed below -0.05 when
/// want_negative_drift is set. with_zero_rates adds one c=0 phase when m >= 3.
inline ModelFamily random_family(unsigned seed, int m, int p,
                                 bool with_zero_rates = false,
                                 bool want_negative_drift = true) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> rate(0.2, 1.2);
    std::uniform_real_distribution<double> cval(0.3, 1.5);
    std::uniform_real_distribution<double> pert(-0.1, 0.1);
    std::bernoulli_distribution coin(0.5);

    ModelFamily fam;
    fam.T0 = RMat::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j)
            if (i != j)
                fam.T0(i, j) = rate(rng);
        fam.T0(i, i) = -fam.T0.row(i).sum();
    }

    fam.c0 = RVec(m);
    for (int i = 0; i < m; ++i)
        fam.c0(i) = (coin(rng) ? 1.0 : -1.0) * cval(rng);
    fam.c0(0) = std::abs(fam.c0(0));  // keep both signs present
    fam.c0(m - 1) = -std::abs(fam.c0(m - 1));
    if (with_zero_rates && m >= 3)
        fam.c0(1) = 0.0;

    if (want_negative_drift) {
        for (int guard = 0; guard < 200; ++guard) {
            const double mu = drift(fam.at(RVec::Zero(p)));
            if (mu <= -0.05)
                break;
            for (int i = 0; i < m; ++i)
                if (fam.c0(i) < 0)
                    fam.c0(i) *= 1.25;
        }
    }

    for (int k = 0; k < p; ++k) {
        RMat Ek = RMat::Zero(m, m);
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < m; ++j)
                if (i != j)
                    Ek(i, j) = pert(rng);
            Ek(i, i) = -Ek.row(i).sum();
        }
        fam.E.push_back(Ek);
        RVec gk = RVec::Zero(m);
        for (int i = 0; i < m; ++i)
            if (fam.c0(i) != 0)
                gk(i) = pert(rng);
        fam.g.push_back(gk);
    }
    return fam;
}

} // namespace sfmtest
