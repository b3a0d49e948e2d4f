#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sfm/ilt.hpp"
#include "sfm/quad.hpp"
#include "sfm/stationary.hpp"
#include "sfm/twophase.hpp"
#include "testutil.hpp"

using namespace sfm;
using sfmtest::rel_err;

namespace {

// independent oracle: power iteration on the fixed-point operator
RVec power_iteration_xi(const SfmModel& model, const Mat& Psi) {
    const auto mz = model.minus_zero();
    const Mat Tmz = model.tblock(mz, mz).cast<Cplx>();
    const Mat Minv = (-Tmz).partialPivLu().inverse();
    const Mat M = Minv.topRows(model.nm()) *
                  model.tblock(mz, model.Sp).cast<Cplx>() * Psi;
    RVec v = RVec::Ones(model.nm()) / model.nm();
    for (int it = 0; it < 20000; ++it) {
        RVec next = (v.transpose().cast<Cplx>() * M).real().transpose();
        next /= next.sum();
        if ((next - v).norm() < 1e-14)
            return next;
        v = next;
    }
    return v;
}

double mass_integral(const StationaryBundle& sb, int param = -1) {
    const double xmax = 40.0 / sb.decay_rate();
    return quad::integrate(
        [&](double x) {
            const Diff d = sb.density(x);
            return param < 0 ? d.v.real().sum()
                             : d.d.block(param).real().sum();
        },
        0.0, xmax, 1e-11);
}

} // namespace

TEST_CASE("two-phase stationary distribution matches closed forms") {
    const double a = 1.0, b = 0.5;
    const twophase::TwoPhase cf{a, b};
    const auto pm = sfmtest::simple_family(a, b);
    const auto sb = stationary(pm);

    CHECK(sb.xi.v(0, 0).real() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sb.alpha.v(0, 0).real() == doctest::Approx(1.0 / 6).epsilon(1e-12));
    CHECK(sb.p.v(0, 0).real() == doctest::Approx(1.0 / 3).epsilon(1e-12));

    // boundary-mass derivatives
    CHECK(sb.p.d.block(0)(0, 0).real() ==
          doctest::Approx(cf.dp_da()).epsilon(1e-10));
    CHECK(sb.p.d.block(1)(0, 0).real() ==
          doctest::Approx(cf.dp_db()).epsilon(1e-10));
    CHECK(cf.dp_da() == doctest::Approx(4.0 / 9));
    CHECK(cf.dp_db() == doctest::Approx(-8.0 / 9));

    // alpha derivatives
    CHECK(sb.alpha.d.block(0)(0, 0).real() ==
          doctest::Approx(cf.dalpha_da()).epsilon(1e-10));
    CHECK(sb.alpha.d.block(1)(0, 0).real() ==
          doctest::Approx(cf.dalpha_db()).epsilon(1e-10));

    // density and its derivatives; phases are (up, down) in original order
    for (double x : {0.2, 1.0, 3.5}) {
        const Diff d = sb.density(x);
        CHECK(d.v(0, 0).real() == doctest::Approx(cf.pi_plus(x)).epsilon(1e-12));
        CHECK(d.v(0, 1).real() == doctest::Approx(cf.pi_plus(x)).epsilon(1e-12));
        CHECK(d.d.block(0)(0, 0).real() ==
              doctest::Approx(cf.dpi_da(x)).epsilon(1e-9));
        CHECK(d.d.block(1)(0, 0).real() ==
              doctest::Approx(cf.dpi_db(x)).epsilon(1e-9));
        // the up and down density derivatives coincide for this model
        CHECK(std::abs(d.d.block(0)(0, 0) - d.d.block(0)(0, 1)) < 1e-12);
        CHECK(std::abs(d.d.block(1)(0, 0) - d.d.block(1)(0, 1)) < 1e-12);
    }

    // occupancy: integral of pi_plus equals the CTMC up-phase mass b/(a+b)
    const Diff L0 = sb.transform(Cplx(0, 0));
    CHECK(L0.v(0, 0).real() == doctest::Approx(b / (a + b)).epsilon(1e-12));

    // sign changes of the density derivatives: dpi/da flips at
    // x = 2b/(a^2-b^2) = 4/3 and dpi/db at x = 2a/(a^2-b^2) - 1/b = 2/3
    const double xa = 2.0 * b / (a * a - b * b);
    CHECK(sb.density(xa - 0.05).d.block(0)(0, 0).real() > 0.0);
    CHECK(sb.density(xa + 0.05).d.block(0)(0, 0).real() < 0.0);
    const double xb = 2.0 * a / (a * a - b * b) - 1.0 / b;
    CHECK(sb.density(xb - 0.05).d.block(1)(0, 0).real() < 0.0);
    CHECK(sb.density(xb + 0.05).d.block(1)(0, 0).real() > 0.0);
}

TEST_CASE("alpha vanishes at criticality") {
    // value-only route: the derivative systems are ill-conditioned this
    // close to drift zero, but alpha itself is well defined
    double prev = 1.0;
    for (double b : {0.8, 0.95, 0.99}) {
        const SfmModel model = sfmtest::simple_family(1.0, b).model;
        const auto fr0 = first_return(model, Cplx(0, 0));
        const RVec xi = solve_xi_vector(model, fr0);
        const double al = normalizing_alpha(model, xi, fr0);
        CHECK(al == doctest::Approx(b * (1.0 - b) / (1.0 + b)).epsilon(1e-9));
        CHECK(al < prev);
        prev = al;
    }
    CHECK(prev < 0.01);
}

TEST_CASE("unstable models are rejected") {
    RMat T(2, 2);
    T << -1, 1, 2, -2;
    RVec c(2);
    c << 2.0, -1.0; // drift = 2*(2/3) - 1/3 > 0
    const SfmModel model = make_model(T, c);
    CHECK_THROWS_AS(solve_xi_vector(model, first_return(model, Cplx(0, 0))),
                    UnstableModel);
    const auto pm = make_param_model(model, RVec::Zero(0), {}, {});
    CHECK_THROWS_AS(stationary(pm), UnstableModel);
}

TEST_CASE("xi matches power iteration and |S-|=1 forces xi=1") {
    for (unsigned seed : {11u, 12u, 13u, 14u}) {
        const auto fam = sfmtest::random_family(seed, 6, 2, seed % 2 == 0);
        const SfmModel model = fam.at(RVec::Zero(2));
        const auto fr0 = first_return(model, Cplx(0, 0));
        const RVec xi = solve_xi_vector(model, fr0);
        CHECK(xi.minCoeff() >= -1e-12);
        CHECK(xi.sum() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK((xi - power_iteration_xi(model, fr0.Psi)).norm() < 1e-10);
        if (model.nm() == 1)
            CHECK(xi(0) == doctest::Approx(1.0));
    }
}

TEST_CASE("value-only helpers agree with the bundle") {
    const auto fam = sfmtest::random_family(31, 5, 2, true);
    const auto sb = stationary(fam.pm());
    const SfmModel model = fam.at(RVec::Zero(2));
    const auto fr0 = first_return(model, Cplx(0, 0));
    const RVec xi = solve_xi_vector(model, fr0);
    const double alpha = normalizing_alpha(model, xi, fr0);
    const RVec p = boundary_mass(model, xi, alpha);
    CHECK((xi.transpose().cast<Cplx>() - sb.xi.v).norm() < 1e-12);
    CHECK(alpha == doctest::Approx(sb.alpha.v(0, 0).real()).epsilon(1e-12));
    CHECK((p.transpose().cast<Cplx>() - sb.p.v).norm() < 1e-12);
}

TEST_CASE("mass conservation and occupancy on random stable models") {
    for (unsigned seed : {51u, 52u, 53u}) {
        const auto fam = sfmtest::random_family(seed, 5, 2, seed == 52u);
        const auto sb = stationary(fam.pm());
        const SfmModel model = fam.at(RVec::Zero(2));

        CHECK(sb.p.v.real().minCoeff() >= -1e-12);
        CHECK(sb.density(0.7).v.real().minCoeff() >= -1e-12);

        // total mass by quadrature
        const double boundary = sb.p.v.real().sum();
        CHECK(boundary + mass_integral(sb) == doctest::Approx(1.0).epsilon(1e-8));

        // derivative of total mass vanishes
        for (int k = 0; k < 2; ++k) {
            const double dmass =
                sb.p.d.block(k).real().sum() + mass_integral(sb, k);
            CHECK(std::abs(dmass) < 1e-7);
        }

        // per-phase occupancy equals the CTMC stationary vector
        const RVec nu = ctmc_stationary(model);
        const Mat occ = sb.boundary_full().v + sb.transform(Cplx(0, 0)).v;
        CHECK((occ.real().transpose() - nu).cwiseAbs().maxCoeff() < 1e-8);

        // dxi sums to zero per parameter
        for (int k = 0; k < 2; ++k)
            CHECK(std::abs(sb.xi.d.block(k).sum()) < 1e-10);
    }
}

TEST_CASE("stationary derivatives match finite differences") {
    for (unsigned seed : {71u, 72u}) {
        const auto fam = sfmtest::random_family(seed, 5, 3, seed == 72u);
        const auto sb = stationary(fam.pm());
        const RVec th0 = RVec::Zero(3);
        for (int k = 0; k < 3; ++k) {
            const Mat want_xi = sfmtest::fd(
                [&](const RVec& t) {
                    const SfmModel mm = fam.at(t);
                    return Mat(solve_xi_vector(mm, first_return(mm, Cplx(0, 0)))
                                   .transpose()
                                   .cast<Cplx>());
                },
                th0, k);
            CHECK(rel_err(sb.xi.d.block(k), want_xi) < 1e-6);

            const Mat want_p = sfmtest::fd(
                [&](const RVec& t) {
                    const SfmModel mm = fam.at(t);
                    const auto fr = first_return(mm, Cplx(0, 0));
                    const RVec xi = solve_xi_vector(mm, fr);
                    return Mat(boundary_mass(mm, xi,
                                             normalizing_alpha(mm, xi, fr))
                                   .transpose()
                                   .cast<Cplx>());
                },
                th0, k);
            CHECK(rel_err(sb.p.d.block(k), want_p) < 1e-6);

            for (double x : {0.3, 1.1, 2.7}) {
                const Mat want_pi = sfmtest::fd(
                    [&](const RVec& t) {
                        ParamModel sub = fam.pm();
                        sub.model = fam.at(t);
                        return stationary(sub).density(x).v;
                    },
                    th0, k);
                CHECK(rel_err(sb.density(x).d.block(k), want_pi) < 1e-6);
            }
        }
    }
}

TEST_CASE("transform route agrees with the direct density") {
    const auto fam = sfmtest::random_family(91, 4, 2);
    const auto sb = stationary(fam.pm());
    InversionSpec spec; // CME at the default order

    for (double x : {0.6, 1.5}) {
        const Diff direct = sb.density(x);
        const auto val = invert(
            [&](Cplx s) { return Mat(sb.transform(s).v); }, x, spec);
        CHECK((val.value - direct.v).cwiseAbs().maxCoeff() < 1e-6);

        const auto jac = invert(
            [&](Cplx s) { return Mat(sb.transform(s).d.data()); }, x, spec);
        CHECK((jac.value - direct.d.data()).cwiseAbs().maxCoeff() < 1e-6);
    }
}
