#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sfm/simulate.hpp"
#include "sfm/transient.hpp"
#include "sfm/twophase.hpp"
#include "testutil.hpp"

using namespace sfm;

namespace {

SimConfig simple_start(long paths, double z, int phase) {
    SimConfig cfg;
    cfg.seed = 20240801;
    cfg.paths = paths;
    cfg.z = z;
    cfg.g = RVec::Zero(2);
    cfg.g(phase) = 1.0;
    return cfg;
}

} // namespace

TEST_CASE("seed determinism and serial/parallel equality") {
    const SfmModel model = sfmtest::simple_family(1.0, 0.5).model;
    SimConfig cfg = simple_start(20000, 1.0, 1);
    cfg.horizon = 10.0;

    const auto a = sim_boundary_probability(model, cfg, 5.0);
    const auto b = sim_boundary_probability(model, cfg, 5.0);
    SimConfig serial = cfg;
    serial.parallel = false;
    const auto c = sim_boundary_probability(model, serial, 5.0);
    for (int i = 0; i < model.m(); ++i) {
        CHECK(a[i].value == b[i].value);
        CHECK(a[i].se == b[i].se);
        CHECK(a[i].value == c[i].value);
        CHECK(a[i].se == c[i].se);
    }

    SimConfig other = cfg;
    other.seed = 7;
    const auto d = sim_boundary_probability(model, other, 5.0);
    CHECK(d[1].value != a[1].value);
}

TEST_CASE("standard error shrinks like one over sqrt(paths)") {
    const SfmModel model = sfmtest::simple_family(1.0, 0.5).model;
    SimConfig cfg = simple_start(20000, 1.0, 1);
    cfg.horizon = 10.0;
    const double se1 = sim_boundary_probability(model, cfg, 5.0)[1].se;
    cfg.paths *= 4;
    const double se2 = sim_boundary_probability(model, cfg, 5.0)[1].se;
    CHECK(se2 < se1 * 0.6);
    CHECK(se2 > se1 * 0.4);
}

TEST_CASE("long-run boundary probability matches the stationary mass") {
    const SfmModel model = sfmtest::simple_family(1.0, 0.5).model;
    const auto est =
        sim_boundary_probability(model, simple_start(1000000, 1.0, 1), 50.0);
    CHECK(std::abs(est[1].value - 1.0 / 3) <= 3 * est[1].se);
    CHECK(est[0].value == 0.0); // the boundary is left immediately in phase 1
    CHECK(est[1].se < 1e-3);
}

TEST_CASE("strictly increasing models never sit at the boundary") {
    RMat T(2, 2);
    T << -1, 1, 1, -1;
    RVec c(2);
    c << 1.0, 2.0;
    SfmModel model;
    model.T = T;
    model.c = c;
    model.Sp = {0, 1};
    SimConfig cfg;
    cfg.paths = 5000;
    cfg.z = 0.0;
    cfg.g = RVec::Constant(2, 0.5);
    const auto est = sim_boundary_probability(model, cfg, 2.0);
    CHECK(est[0].value == 0.0);
    CHECK(est[1].value == 0.0);
}

TEST_CASE("passage estimates match the two-boundary transform matrices") {
    const auto pm = sfmtest::simple_family(1.0, 0.5);
    const Cplx s(0.2, 0.0);
    const auto fr = first_return(pm, s);
    const auto pmx = passage_matrices(fr, 0.5, 1.0);

    const auto est = sim_passage(pm.model, simple_start(400000, 0.5, 1), 1.0,
                                 s.real());
    // start in the down phase: G_mm against absorption at 0 in phase 2,
    // H_mp against absorption at the upper level in phase 1
    CHECK(std::abs(est.hit_zero[1].value - pmx.Gmm.v(0, 0).real()) <=
          3 * est.hit_zero[1].se);
    CHECK(std::abs(est.hit_upper[0].value - pmx.Hmp.v(0, 0).real()) <=
          3 * est.hit_upper[0].se);
    CHECK(est.hit_zero[0].value == 0.0);  // can only drain in the down phase
    CHECK(est.hit_upper[1].value == 0.0); // can only rise in the up phase

    const auto up = sim_passage(pm.model, simple_start(400000, 0.5, 0), 1.0,
                                s.real());
    CHECK(std::abs(up.hit_zero[1].value - pmx.Gpm.v(0, 0).real()) <=
          3 * up.hit_zero[1].se);
    CHECK(std::abs(up.hit_upper[0].value - pmx.Hpp.v(0, 0).real()) <=
          3 * up.hit_upper[0].se);
}

TEST_CASE("boundary transform estimate matches the closed form") {
    const twophase::TwoPhase cf{1.0, 0.5};
    const SfmModel model = sfmtest::simple_family(1.0, 0.5).model;
    const double s = 1.0, z = 1.0;
    const auto est = sim_transform_boundary(model, simple_start(400000, z, 1), s);
    const double want = cf.ptilde(Cplx(s, 0), z).real();
    CHECK(std::abs(est[1].value - want) <= 3 * est[1].se + 1e-10);
    CHECK(est[0].value == 0.0);
}

TEST_CASE("kernel density at a late time approximates the stationary density") {
    const auto pm = sfmtest::simple_family(1.0, 0.5);
    const twophase::TwoPhase cf{1.0, 0.5};
    const auto est = sim_density(pm.model, simple_start(400000, 1.0, 1), 50.0, 1.0);
    for (int i = 0; i < 2; ++i)
        CHECK(std::abs(est[i].value - cf.pi_plus(1.0)) <=
              3 * est[i].se + 0.01); // 0.01 covers the kernel bias
}

TEST_CASE("ruin frequency for a strongly loaded model is near its atom") {
    // embedded insurance fluid: premium 4, exponential-ish claims
    RMat T(5, 5);
    T << -1, 0.5, 0, 0.5, 0,
         0, -1, 1, 0, 0,
         1, 0, -1, 0, 0,
         0, 0, 0, -2, 2,
         2, 0, 0, 0, -2;
    RVec c(5);
    c << 4, -1, -1, -1, -1;
    const SfmModel model = make_model(T, c);
    SimConfig cfg;
    cfg.seed = 99;
    cfg.paths = 200000;
    cfg.horizon = 400.0;
    cfg.z = 0.0;
    cfg.g = RVec::Zero(5);
    cfg.g(0) = 1.0;
    const auto est = sim_ruin(model, cfg, 50.0);
    // Pollaczek-Khinchine atom: lambda E[U] / c = 1.5 / 4
    CHECK(std::abs(est.value - 0.375) <= 3 * est.se + 1e-3);
}

TEST_CASE("bad configurations are rejected") {
    const SfmModel model = sfmtest::simple_family(1.0, 0.5).model;
    SimConfig cfg = simple_start(100, 1.0, 1);
    cfg.g = RVec::Ones(2); // not a probability vector
    CHECK_THROWS_AS(sim_boundary_probability(model, cfg, 1.0), DimensionMismatch);
    cfg = simple_start(100, 1.0, 1);
    cfg.paths = 0;
    CHECK_THROWS_AS(sim_boundary_probability(model, cfg, 1.0), DimensionMismatch);
}
