#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "sfm/hydro.hpp"
#include "sfm/ruin.hpp"
#include "sfm/simulate.hpp"
#include "sfm/stationary.hpp"
#include "sfm/transient.hpp"
#include "sfm/twophase.hpp"

using namespace sfm;

namespace {

struct Common {
    std::string out = "out";
    double tol = 0.0; // 0 keeps the per-command defaults
    std::string ilt_method = "cme";
    int ilt_order = 0;
    std::uint64_t seed = 1;

    void attach(CLI::App* cmd) {
        cmd->add_option("--out", out, "output directory for CSV files");
        cmd->add_option("--tol", tol, "override the discrepancy gate");
        cmd->add_option("--ilt-method", ilt_method, "euler or cme")
            ->check(CLI::IsMember({"euler", "cme"}));
        cmd->add_option("--ilt-order", ilt_order,
                        "transform evaluations per inversion (0 = default)");
        cmd->add_option("--seed", seed, "simulation seed");
    }

    InversionSpec ispec() const {
        InversionSpec spec;
        spec.method = ilt_method == "euler" ? IltMethod::euler : IltMethod::cme;
        spec.order = ilt_order;
        return spec;
    }
};

/// CSV writer with one fixed header; rows are written to a temp file and
/// renamed into place on close so readers never see a partial file.
class Csv {
public:
    Csv(const std::string& dir, const std::string& name,
        const std::vector<std::string>& header)
        : path_(std::filesystem::path(dir) / name), tmp_(path_.string() + ".tmp") {
        std::filesystem::create_directories(dir);
        out_.open(tmp_);
        if (!out_)
            throw ParseError("cannot write " + tmp_);
        for (size_t i = 0; i < header.size(); ++i)
            out_ << (i ? "," : "") << header[i];
        out_ << "\n";
    }
    void row(const std::vector<double>& cells) {
        char buf[32];
        for (size_t i = 0; i < cells.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.14e", cells[i]);
            out_ << (i ? "," : "") << buf;
        }
        out_ << "\n";
    }
    ~Csv() {
        out_.close();
        std::error_code ec;
        std::filesystem::rename(tmp_, path_, ec);
    }

private:
    std::filesystem::path path_;
    std::string tmp_;
    std::ofstream out_;
};

ParamModel two_phase(double a, double b) {
    RMat T(2, 2);
    T << -a, a, b, -b;
    RVec c(2);
    c << 1.0, -1.0;
    RMat Ea = RMat::Zero(2, 2), Eb = RMat::Zero(2, 2);
    Ea << -1, 1, 0, 0;
    Eb << 0, 0, 1, -1;
    RVec th(2);
    th << a, b;
    return make_param_model(make_model(T, c), th, {Ea, Eb},
                            {RVec::Zero(2), RVec::Zero(2)}, {"a", "b"});
}

// ---------------------------------------------------------------- simple

int cmd_simple(double a, double b, const Common& common) {
    if (a <= b || b <= 0)
        throw UnstableModel("simple model requires a > b > 0");
    const InversionSpec ispec = common.ispec();
    double worst_stationary = 0.0, worst_transient = 0.0;
    const auto track = [](double& worst, double delta) {
        worst = std::max(worst, std::abs(delta));
    };

    // boundary mass and its derivatives across the stable range of b
    {
        Csv csv(common.out, "simple_boundary_mass.csv",
                {"a", "b", "p_minus", "dp_da", "dp_db", "p_minus_closed",
                 "dp_da_closed", "dp_db_closed"});
        std::vector<double> bs;
        for (double bq = 0.1; bq < a - 0.015; bq += 0.05)
            bs.push_back(bq);
        bs.push_back(a - 0.01); // the near-critical edge stays finite
        for (double bq : bs) {
            const twophase::TwoPhase cf{a, bq};
            const auto st = stationary(two_phase(a, bq));
            const double p = st.p.v(0, 0).real();
            const double da = st.p.d.block(0)(0, 0).real();
            const double db = st.p.d.block(1)(0, 0).real();
            track(worst_stationary, p - cf.p_minus());
            track(worst_stationary, da - cf.dp_da());
            track(worst_stationary, db - cf.dp_db());
            csv.row({a, bq, p, da, db, cf.p_minus(), cf.dp_da(), cf.dp_db()});
        }
    }

    // stationary density pi+(x) and its derivatives
    {
        Csv csv(common.out, "simple_stationary_density.csv",
                {"a", "b", "x", "pi_plus", "pi_minus", "dpi_da", "dpi_db",
                 "pi_closed", "dpi_da_closed", "dpi_db_closed"});
        for (double bq : {0.3, 0.5, 0.7, 0.9}) {
            if (bq >= a)
                continue;
            const twophase::TwoPhase cf{a, bq};
            const auto st = stationary(two_phase(a, bq));
            for (double x = 0.2; x <= 5.0 + 1e-9; x += 0.2) {
                const Diff pi = st.density(x);
                const double plus = pi.v(0, 0).real();
                const double minus = pi.v(0, 1).real();
                const double da = pi.d.block(0)(0, 0).real();
                const double db = pi.d.block(1)(0, 0).real();
                track(worst_stationary, plus - cf.pi_plus(x));
                track(worst_stationary, minus - cf.pi_plus(x));
                track(worst_stationary, da - cf.dpi_da(x));
                track(worst_stationary, db - cf.dpi_db(x));
                csv.row({a, bq, x, plus, minus, da, db, cf.pi_plus(x),
                         cf.dpi_da(x), cf.dpi_db(x)});
            }
        }
    }

    const twophase::TwoPhase cf{a, b};
    const double z = 1.0;
    RVec g(1);
    g << 1.0;
    const auto pm = two_phase(a, b);

    // Near the kink at t = z the inversion's own error estimate reaches
    // ~1e-3, which is fine here: the closed-form column is inverted with
    // the same nodes, so the pair discrepancy cancels the inversion error.
    InversionSpec tspec = ispec;
    if (tspec.tolerance == 1e100)
        tspec.tolerance = 1e-2;

    // transient boundary probability p-(t) from level z in the down phase
    {
        Csv csv(common.out, "simple_transient_boundary.csv",
                {"a", "b", "t", "p_minus", "dp_da", "dp_db", "p_minus_closed",
                 "dp_da_closed", "dp_db_closed"});
        for (double t = 1.0; t <= 15.0 + 1e-9; t += 0.5) {
            const Diff p = time_domain_p(pm, z, g, StartSide::minus, t, tspec);
            const double got = p.v(0, 0).real();
            const double da = p.d.block(0)(0, 0).real();
            const double db = p.d.block(1)(0, 0).real();
            const double want = invert_scalar(
                [&](Cplx u) { return cf.ptilde(u, z); }, t, tspec);
            const double wda = invert_scalar(
                [&](Cplx u) { return cf.dptilde_da(u, z); }, t, tspec);
            const double wdb = invert_scalar(
                [&](Cplx u) { return cf.dptilde_db(u, z); }, t, tspec);
            track(worst_transient, got - want);
            track(worst_transient, da - wda);
            track(worst_transient, db - wdb);
            csv.row({a, b, t, got, da, db, want, wda, wdb});
        }
    }

    // transient density f(x, t); the closed-form derivative columns use a
    // central difference of the scalar transform in (a, b)
    {
        Csv csv(common.out, "simple_transient_density.csv",
                {"a", "b", "x", "t", "f_plus", "f_minus", "df_plus_da",
                 "df_plus_db", "df_minus_da", "df_minus_db", "f_plus_closed",
                 "f_minus_closed", "df_plus_da_closed", "df_plus_db_closed",
                 "df_minus_da_closed", "df_minus_db_closed"});
        const auto closed = [&](double aa, double bb, double x, double t,
                                int comp) {
            const twophase::TwoPhase c2{aa, bb};
            return invert_scalar(
                [&](Cplx u) { return c2.ftilde(u, x, z)[comp]; }, t, tspec);
        };
        const double h = 1e-6;
        for (double x : {0.5, 2.0}) {
            for (double t = 5.0; t <= 7.0 + 1e-9; t += 0.25) {
                const Diff f = time_domain_f(pm, z, g, StartSide::minus, x, t, tspec);
                std::vector<double> cells{a, b, x, t};
                double want[6];
                for (int comp = 0; comp < 2; ++comp) {
                    want[comp] = closed(a, b, x, t, comp);
                    want[2 + 2 * comp] =
                        (closed(a + h, b, x, t, comp) - closed(a - h, b, x, t, comp)) / (2 * h);
                    want[3 + 2 * comp] =
                        (closed(a, b + h, x, t, comp) - closed(a, b - h, x, t, comp)) / (2 * h);
                }
                const double got[6] = {f.v(0, 0).real(), f.v(0, 1).real(),
                                       f.d.block(0)(0, 0).real(),
                                       f.d.block(1)(0, 0).real(),
                                       f.d.block(0)(0, 1).real(),
                                       f.d.block(1)(0, 1).real()};
                for (int i = 0; i < 6; ++i)
                    track(worst_transient, got[i] - want[i]);
                cells.insert(cells.end(), got, got + 6);
                cells.insert(cells.end(), want, want + 6);
                csv.row(cells);
            }
        }
    }

    // mean busy period by complex step on the first-return transform
    const double h = 1e-8;
    const double busy =
        -first_return(pm, Cplx(0, h)).Psi(0, 0).imag() / h;
    std::printf("mean busy period: %.10f (closed form %.10f)\n", busy,
                2.0 / (a - b));

    const double gate_st = common.tol > 0 ? common.tol : 1e-8;
    const double gate_tr = common.tol > 0 ? common.tol : 1e-4;
    std::printf("max closed-form discrepancy: stationary %.3e (gate %.1e), "
                "transient %.3e (gate %.1e)\n",
                worst_stationary, gate_st, worst_transient, gate_tr);
    return worst_stationary <= gate_st && worst_transient <= gate_tr ? 0 : 1;
}

// ----------------------------------------------------------------- hydro

int cmd_hydro(double tmin, double tmax, double tstep, const Common& common) {
    const auto spec = power_station_spec();
    const InversionSpec ispec = common.ispec();

    Csv csv(common.out, "hydro_lifetime.csv",
            {"t", "h", "dh_theta1", "dh_theta2", "dh_theta3", "dh_theta4",
             "dh_theta5", "dh_theta6", "semirel_theta1", "semirel_theta2",
             "semirel_theta3", "semirel_theta4", "semirel_theta5",
             "semirel_theta6"});
    long opposite = 0, comparable = 0;
    for (double t = tmin; t <= tmax + 1e-9; t += tstep) {
        const Diff ht = lifetime_density(spec, t, ispec);
        std::vector<double> cells{t, ht.v(0, 0).real()};
        for (int k = 0; k < 6; ++k)
            cells.push_back(ht.d.block(k)(0, 0).real());
        for (int k = 0; k < 6; ++k)
            cells.push_back(spec.pm.theta(k) * cells[2 + k]);
        if (std::abs(cells[2]) > 1e-4) {
            ++comparable;
            if (cells[2] * cells[7] < 0)
                ++opposite;
        }
        csv.row(cells);
    }

    const double total = lifetime_cdf(spec, 1000.0, ispec);
    const double med = lifetime_median(spec);
    std::printf("lifetime mass up to t=1000: %.8f\n", total);
    std::printf("median lifetime: %.3f\n", med);
    std::printf("maintenance sensitivity opposite-signed on %ld/%ld grid points\n",
                opposite, comparable);
    const double gate = common.tol > 0 ? common.tol : 1e-4;
    return std::abs(total - 1.0) <= gate ? 0 : 1;
}

// ------------------------------------------------------------------ ruin

int cmd_ruin(double theta1, double theta2, double xmax, double xstep,
             const Common& common) {
    const auto spec = erlang_mixture_spec(theta1, theta2);
    const auto pm = ruin_embedding(spec);
    const auto fr0 = first_return(pm, Cplx(0, 0));
    const double load = spec.lambda * mean_claim(spec) / spec.premium;
    std::printf("mean claim %.10f, load rho = %.10f, psi(0) = rho\n",
                mean_claim(spec), load);

    {
        Csv csv(common.out, "ruin_probability.csv",
                {"x", "psi", "dpsi_theta1", "dpsi_theta2"});
        for (double x = 0.0; x <= xmax + 1e-9; x += xstep) {
            const Diff p = ruin_probability(fr0, x);
            csv.row({x, p.v(0, 0).real(), p.d.block(0)(0, 0).real(),
                     p.d.block(1)(0, 0).real()});
        }
    }
    {
        Csv csv(common.out, "ruin_theta_grid.csv",
                {"theta1", "theta2", "psi_at_1"});
        for (double t1 = 0.5; t1 <= 3.0 + 1e-9; t1 += 0.25)
            for (double t2 = 0.5; t2 <= 3.0 + 1e-9; t2 += 0.25) {
                const auto sq = erlang_mixture_spec(t1, t2);
                if (sq.lambda * mean_claim(sq) >= sq.premium)
                    continue; // negative loading corner: psi = 1 there
                const auto frq = first_return(ruin_embedding(sq), Cplx(0, 0));
                csv.row({t1, t2, ruin_probability(frq, 1.0).v(0, 0).real()});
            }
    }
    return 0;
}

// --------------------------------------------------------------- analyze

int cmd_analyze(const std::string& file, bool want_stationary,
                bool want_transient, bool want_simulate, double xmax,
                int xpoints, double zlevel, int start_phase,
                std::vector<double> ts, long paths, const Common& common) {
    const ParamModel pm = parse_model_file(file);
    const auto& model = pm.model;
    const int p = pm.params();
    std::printf("model: %d phases (%d up, %d down, %d zero), drift %.6f\n",
                model.m(), model.np(), model.nm(), model.n0(), drift(model));
    if (ts.empty())
        ts = {1.0, 5.0, 10.0};

    if (want_stationary) {
        const auto st = stationary(pm);
        std::printf("normalizing constant alpha = %.12e\n", st.alpha.v(0, 0).real());
        std::printf("density decay rate = %.12e\n", st.decay_rate());
        std::vector<std::string> header{"phase_index", "boundary_mass"};
        for (int k = 0; k < p; ++k)
            header.push_back("d_" + pm.param_names[k]);
        Csv bcsv(common.out, "analyze_boundary.csv", header);
        const Diff full = st.boundary_full();
        for (int i = 0; i < model.m(); ++i) {
            std::vector<double> cells{static_cast<double>(i), full.v(0, i).real()};
            for (int k = 0; k < p; ++k)
                cells.push_back(full.d.block(k)(0, i).real());
            bcsv.row(cells);
        }

        header = {"x"};
        for (int i = 0; i < model.m(); ++i) {
            header.push_back("pi_" + std::to_string(i));
            for (int k = 0; k < p; ++k)
                header.push_back("dpi_" + std::to_string(i) + "_" + pm.param_names[k]);
        }
        Csv dcsv(common.out, "analyze_density.csv", header);
        for (int j = 1; j <= xpoints; ++j) {
            const double x = xmax * j / xpoints;
            const Diff pi = st.density(x);
            std::vector<double> cells{x};
            for (int i = 0; i < model.m(); ++i) {
                cells.push_back(pi.v(0, i).real());
                for (int k = 0; k < p; ++k)
                    cells.push_back(pi.d.block(k)(0, i).real());
            }
            dcsv.row(cells);
        }
    }

    if (want_transient) {
        if (start_phase < 0 || start_phase >= model.m() ||
            model.c(start_phase) == 0)
            throw DimensionMismatch("start phase must have a nonzero rate");
        const bool up = model.c(start_phase) > 0;
        const auto& idx = up ? model.Sp : model.Sm;
        RVec g = RVec::Zero(static_cast<Eigen::Index>(idx.size()));
        for (size_t i = 0; i < idx.size(); ++i)
            if (idx[i] == start_phase)
                g(static_cast<Eigen::Index>(i)) = 1.0;
        std::vector<std::string> header{"t"};
        const auto mz = model.minus_zero();
        for (int i : mz) {
            header.push_back("p_" + std::to_string(i));
            for (int k = 0; k < p; ++k)
                header.push_back("dp_" + std::to_string(i) + "_" + pm.param_names[k]);
        }
        Csv csv(common.out, "analyze_transient.csv", header);
        for (double t : ts) {
            const Diff pt = time_domain_p(pm, zlevel, g,
                                          up ? StartSide::plus : StartSide::minus,
                                          t, common.ispec());
            std::vector<double> cells{t};
            for (Eigen::Index i = 0; i < pt.v.cols(); ++i) {
                cells.push_back(pt.v(0, i).real());
                for (int k = 0; k < p; ++k)
                    cells.push_back(pt.d.block(k)(0, i).real());
            }
            csv.row(cells);
        }
    }

    if (want_simulate) {
        SimConfig cfg;
        cfg.seed = common.seed;
        cfg.paths = paths;
        cfg.z = zlevel;
        cfg.horizon = ts.back() + 1.0;
        cfg.g = RVec::Zero(model.m());
        if (start_phase < 0 || start_phase >= model.m())
            throw DimensionMismatch("start phase out of range");
        cfg.g(start_phase) = 1.0;
        Csv csv(common.out, "analyze_simulate.csv",
                {"t", "phase_index", "boundary_probability", "standard_error"});
        for (double t : ts) {
            const auto est = sim_boundary_probability(model, cfg, t);
            for (int i = 0; i < model.m(); ++i)
                csv.row({t, static_cast<double>(i), est[i].value, est[i].se});
        }
    }
    return 0;
}

// -------------------------------------------------------------- simulate

int cmd_simulate(const std::string& file, double t, double x, double zlevel,
                 int start_phase, long paths, bool serial,
                 const Common& common) {
    const ParamModel pm = parse_model_file(file);
    const auto& model = pm.model;
    SimConfig cfg;
    cfg.seed = common.seed;
    cfg.paths = paths;
    cfg.z = zlevel;
    cfg.horizon = t + 1.0;
    cfg.parallel = !serial;
    cfg.g = RVec::Zero(model.m());
    if (start_phase < 0 || start_phase >= model.m())
        throw DimensionMismatch("start phase out of range");
    cfg.g(start_phase) = 1.0;

    Csv csv(common.out, "simulate_estimates.csv",
            {"t", "phase_index", "boundary_probability", "boundary_se",
             "density_at_x", "density_se"});
    const auto atom = sim_boundary_probability(model, cfg, t);
    const auto dens = sim_density(model, cfg, t, x);
    for (int i = 0; i < model.m(); ++i) {
        csv.row({t, static_cast<double>(i), atom[i].value, atom[i].se,
                 dens[i].value, dens[i].se});
        std::printf("phase %d: P(X=0) = %.6f +- %.6f, f(%g) = %.6f +- %.6f\n",
                    i, atom[i].value, atom[i].se, x, dens[i].value, dens[i].se);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sensitivity analysis of stochastic fluid models"};
    app.require_subcommand(1);
    Common common;

    auto* simple = app.add_subcommand(
        "simple", "two-phase model: closed forms vs the general pipeline");
    double a = 1.0, b = 0.5;
    simple->add_option("--a", a, "up-to-down switching rate");
    simple->add_option("--b", b, "down-to-up switching rate");
    common.attach(simple);

    auto* hydro = app.add_subcommand(
        "hydro", "power-station lifetime density and sensitivities");
    double tmin = 100.0, tmax = 400.0, tstep = 5.0;
    hydro->add_option("--t-min", tmin, "grid start");
    hydro->add_option("--t-max", tmax, "grid end");
    hydro->add_option("--t-step", tstep, "grid step");
    common.attach(hydro);

    auto* ruin = app.add_subcommand(
        "ruin", "insurance ruin probability via the fluid embedding");
    double theta1 = 1.0, theta2 = 2.0, xmax = 10.0, xstep = 0.25;
    ruin->add_option("--theta1", theta1, "first Erlang rate");
    ruin->add_option("--theta2", theta2, "second Erlang rate");
    ruin->add_option("--x-max", xmax, "surplus grid end");
    ruin->add_option("--x-step", xstep, "surplus grid step");
    common.attach(ruin);

    auto* analyze = app.add_subcommand("analyze", "analyze a model file");
    std::string file;
    bool want_stationary = false, want_transient = false, want_simulate = false;
    double axmax = 5.0, zlevel = 1.0;
    int xpoints = 50, start_phase = 0;
    std::vector<double> ts;
    long paths = 100000;
    analyze->add_option("model", file, "JSON model file")->required();
    analyze->add_flag("--stationary", want_stationary, "stationary distribution");
    analyze->add_flag("--transient", want_transient, "time-domain boundary probabilities");
    analyze->add_flag("--simulate", want_simulate, "Monte-Carlo estimates");
    analyze->add_option("--x-max", axmax, "density grid end");
    analyze->add_option("--x-points", xpoints, "density grid points");
    analyze->add_option("--z", zlevel, "initial level");
    analyze->add_option("--start-phase", start_phase, "initial phase index");
    analyze->add_option("--t", ts, "time points");
    analyze->add_option("--paths", paths, "simulation paths");
    common.attach(analyze);

    auto* simulate = app.add_subcommand("simulate", "simulate a model file");
    std::string sfile;
    double st = 10.0, sx = 1.0, sz = 0.0;
    int sphase = 0;
    long spaths = 100000;
    bool serial = false;
    simulate->add_option("model", sfile, "JSON model file")->required();
    simulate->add_option("--t", st, "observation time");
    simulate->add_option("--x", sx, "density evaluation level");
    simulate->add_option("--z", sz, "initial level");
    simulate->add_option("--start-phase", sphase, "initial phase index");
    simulate->add_option("--paths", spaths, "simulation paths");
    simulate->add_flag("--serial", serial, "disable the parallel path loop");
    common.attach(simulate);

    CLI11_PARSE(app, argc, argv);

    try {
        if (simple->parsed())
            return cmd_simple(a, b, common);
        if (hydro->parsed())
            return cmd_hydro(tmin, tmax, tstep, common);
        if (ruin->parsed())
            return cmd_ruin(theta1, theta2, xmax, xstep, common);
        if (analyze->parsed())
            return cmd_analyze(file, want_stationary, want_transient,
                               want_simulate, axmax, xpoints, zlevel,
                               start_phase, ts, paths, common);
        if (simulate->parsed())
            return cmd_simulate(sfile, st, sx, sz, sphase, spaths, serial, common);
    } catch (const SfmError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
