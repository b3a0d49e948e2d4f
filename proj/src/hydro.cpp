#include "sfm/hydro.hpp"

#include "sfm/transient.hpp"

namespace sfm {

LifetimeSpec power_station_spec() {
    RMat T(6, 6);
    T << -83.9, 40.7, 0, 43.2, 0, 0,
         180.2, -262.9, 0, 82.7, 0, 0,
         1085.5, 314.9, -1440.0, 39.6, 0, 0,
         0, 0, 17.6, -1440.0, 1422.4, 0,
         0, 0, 62.3, 0, -64.8, 2.5,
         0, 0, 0, 0, 39.4, -39.4;
    RVec c(6);
    c << 0.004, 0.017, 0.020, 0.020, 0.001, -0.01;

    // theta_i = |c_i|: the generator does not depend on theta, and the
    // derivative of c_i flips sign on the maintenance rate
    RVec theta = c.cwiseAbs();
    std::vector<RMat> dT(6, RMat::Zero(6, 6));
    std::vector<RVec> dC;
    std::vector<std::string> names;
    for (int i = 0; i < 6; ++i) {
        RVec g = RVec::Zero(6);
        g(i) = c(i) >= 0 ? 1.0 : -1.0;
        dC.push_back(g);
        names.push_back("theta" + std::to_string(i + 1));
    }

    LifetimeSpec spec;
    spec.pm = make_param_model(
        make_model(T, c,
                   {"on-design", "off-design", "start", "stop", "idle",
                    "maintenance"}),
        theta, dT, dC, names);

    spec.return_mp = RMat::Zero(1, 5);
    spec.return_mp(0, 4) = 1.0; // maintenance -> idle on hitting level 0
    spec.upper_pp = RMat::Zero(5, 5);
    spec.upper_pp.block(0, 4, 4, 1).setOnes(); // phases 1-4 restart as idle
    spec.upper_p0 = RMat::Zero(5, 1);
    spec.upper_p0(4, 0) = 1.0; // idle lingers in the sticky state
    spec.hold00 = RMat::Constant(1, 1, -64.8);
    spec.leave0p = RMat::Zero(1, 5);
    spec.leave0p(0, 4) = 64.8;
    spec.alpha = RVec::Zero(5);
    spec.alpha(4) = 1.0; // start idle
    return spec;
}

void validate(const LifetimeSpec& spec) {
    const int np = spec.pm.model.np(), nm = spec.pm.model.nm();
    const auto n0h = spec.hold00.rows();
    if (spec.return_mp.rows() != nm || spec.return_mp.cols() != np ||
        spec.upper_pp.rows() != np || spec.upper_pp.cols() != np ||
        spec.upper_p0.rows() != np || spec.upper_p0.cols() != n0h ||
        spec.hold00.cols() != n0h || spec.leave0p.rows() != n0h ||
        spec.leave0p.cols() != np || spec.alpha.size() != np)
        throw DimensionMismatch("lifetime spec blocks have inconsistent sizes");
    const auto substochastic = [](const RMat& P) {
        return P.minCoeff() >= 0 &&
               (P.rowwise().sum().array() <= 1.0 + 1e-12).all();
    };
    if (!substochastic(spec.return_mp) || !substochastic(spec.upper_pp))
        throw InvalidBoundarySpec("boundary return matrices must be substochastic");
    if (spec.leave0p.minCoeff() < 0 ||
        ((spec.hold00 + spec.leave0p * RVec::Ones(spec.leave0p.cols()))
             .array() > 1e-9)
            .any())
        throw InvalidBoundarySpec("sticky-state rates are not a subgenerator row");
    if (spec.alpha.minCoeff() < 0 || std::abs(spec.alpha.sum() - 1.0) > 1e-12)
        throw InvalidBoundarySpec("alpha must be a probability vector over S+");
}

Diff lifetime_transform(const LifetimeSpec& spec, Cplx s) {
    validate(spec);
    const int p = spec.pm.params();
    const int np = spec.pm.model.np();
    const auto n0h = spec.hold00.rows();

    const auto fr = first_return(spec.pm, s);
    const auto pmx = passage_matrices(fr, 0.0, 1.0);

    const Diff ret = Diff::constant(spec.return_mp.cast<Cplx>(), p);
    const Diff W = inverse(Diff::identity(np, p) - pmx.Gpm * ret) * pmx.Hpp;

    const Diff Pbar =
        Diff::constant(spec.upper_pp.cast<Cplx>(), p) +
        Diff::constant(spec.upper_p0.cast<Cplx>(), p) *
            inverse(Diff::constant(
                s * Mat::Identity(n0h, n0h) - spec.hold00.cast<Cplx>(), p)) *
            Diff::constant(spec.leave0p.cast<Cplx>(), p);

    const Diff aW = Diff::constant(spec.alpha.transpose().cast<Cplx>(), p) * W;
    const Diff ones = Diff::constant(Mat::Ones(np, 1), p);
    return (aW * Pbar) * ones;
}

Diff lifetime_density(const LifetimeSpec& spec, double t,
                      const InversionSpec& ispec) {
    const int p = spec.pm.params();
    const auto wrapped = [&](Cplx u) -> Mat {
        const Diff d = lifetime_transform(spec, u);
        Mat out(1, 1 + d.d.data().cols());
        out << d.v, d.d.data();
        return out;
    };
    const auto res = invert(wrapped, t, ispec);
    Mat v = res.value.leftCols(1).cast<Cplx>();
    BlockJacobian j(1, 1, p);
    for (int k = 0; k < p; ++k)
        j.block(k) = res.value.block(0, 1 + k, 1, 1).cast<Cplx>();
    return Diff(std::move(v), std::move(j));
}

double lifetime_cdf(const LifetimeSpec& spec, double t,
                    const InversionSpec& ispec) {
    return invert_scalar(
        [&](Cplx u) { return lifetime_transform(spec, u).v(0, 0) / u; }, t,
        ispec);
}

double lifetime_median(const LifetimeSpec& spec, double lo, double hi) {
    if (lifetime_cdf(spec, lo) > 0.5 || lifetime_cdf(spec, hi) < 0.5)
        throw DimensionMismatch("median bracket does not contain the median");
    while (hi - lo > 1e-6 * hi) {
        const double mid = 0.5 * (lo + hi);
        (lifetime_cdf(spec, mid) < 0.5 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace sfm
