#include "sfm/transient.hpp"

#include <Eigen/Eigenvalues>

namespace sfm {

namespace {

Diff scatter_row(const Diff& row, const std::vector<int>& where, int m) {
    const int p = row.d.params();
    Mat v = Mat::Zero(1, m);
    BlockJacobian j(1, m, p);
    for (size_t i = 0; i < where.size(); ++i) {
        v(0, where[i]) = row.v(0, static_cast<Eigen::Index>(i));
        for (int k = 0; k < p; ++k)
            j.block(k)(0, where[i]) = row.d.block(k)(0, static_cast<Eigen::Index>(i));
    }
    return Diff(std::move(v), std::move(j));
}

// The two-block passage display: [0 G H 0] = F M^{-1} with
//   F = [0  Psi e^{Dx}  e^{U(y-x)}      0]      (rows S+)
//       [0  e^{Dx}      Xi e^{U(y-x)}   0]      (rows S-)
//   M = [I  0           e^{Uy}          0]
//       [0  I           Xi e^{Uy}       0]
//       [0  Psi e^{Dy}  I               0]
//       [0  e^{Dy}      0               I]
// column blocks sized S+, S-, S+, S-.
struct PassageParts {
    Diff F, M;
};

PassageParts passage_parts(const FirstReturnBundle& fr, double x, double y) {
    const Eigen::Index np = fr.Psi.rows(), nm = fr.Psi.cols();
    const int p = fr.dPsi.params();
    const Diff psi = fr.psi(), xi = fr.xi();
    const Diff EDx = expm(fr.d_(), x), EUyx = expm(fr.u(), y - x);
    const Diff EDy = expm(fr.d_(), y), EUy = expm(fr.u(), y);
    const Diff Zpp = Diff::constant(Mat::Zero(np, np), p);
    const Diff Zpm = Diff::constant(Mat::Zero(np, nm), p);
    const Diff Zmp = Diff::constant(Mat::Zero(nm, np), p);
    const Diff Zmm = Diff::constant(Mat::Zero(nm, nm), p);
    const Diff Ip = Diff::identity(np, p), Im = Diff::identity(nm, p);

    PassageParts parts;
    parts.F = vcat(hcat(hcat(Zpp, psi * EDx), hcat(EUyx, Zpm)),
                   hcat(hcat(Zmp, EDx), hcat(xi * EUyx, Zmm)));
    parts.M = vcat(vcat(hcat(hcat(Ip, Zpm), hcat(EUy, Zpm)),
                        hcat(hcat(Zmp, Im), hcat(xi * EUy, Zmm))),
                   vcat(hcat(hcat(Zpp, psi * EDy), hcat(Ip, Zpm)),
                        hcat(hcat(Zmp, EDy), hcat(Zmp, Im))));
    return parts;
}

} // namespace

PassageMatrices passage_matrices(const FirstReturnBundle& fr, double x,
                                 double y) {
    if (x < 0 || y < x)
        throw DimensionMismatch("passage levels need 0 <= x <= y");
    const Eigen::Index np = fr.Psi.rows(), nm = fr.Psi.cols();
    const auto parts = passage_parts(fr, x, y);
    Diff GH;
    try {
        GH = parts.F * inverse(parts.M);
    } catch (const SingularMatrix&) {
        throw SingularPassageSystem("two-boundary passage system is singular");
    }
    PassageMatrices out;
    out.x = x;
    out.y = y;
    out.s = fr.s;
    out.Gpm = slice(GH, 0, np, np, nm);
    out.Gmm = slice(GH, np, np, nm, nm);
    out.Hpp = slice(GH, 0, np + nm, np, np);
    out.Hmp = slice(GH, np, np + nm, nm, np);
    return out;
}

BlockJacobian dpassage_alt(const FirstReturnBundle& fr, double x, double y) {
    const auto parts = passage_parts(fr, x, y);
    const Mat Minv = parts.M.v.partialPivLu().inverse();
    if ((parts.M.v * Minv - Mat::Identity(parts.M.v.rows(), parts.M.v.cols()))
            .norm() > 1e-8 * std::max(1.0, parts.M.v.norm()))
        throw SingularPassageSystem("two-boundary passage system is singular");
    const Mat GH = parts.F.v * Minv;
    const int p = parts.F.d.params();
    BlockJacobian out(GH.rows(), GH.cols(), p);
    for (int k = 0; k < p; ++k)
        out.block(k) = (parts.F.d.block(k) - GH * parts.M.d.block(k)) * Minv;
    return out;
}

TransientTransforms transient_transforms(const ParamModel& pm, double z,
                                         const RVec& g, StartSide side,
                                         Cplx s) {
    const SfmModel& model = pm.model;
    if (z <= 0)
        throw DimensionMismatch("initial level z must be positive");
    if (s.real() <= 0)
        throw DimensionMismatch("transform point needs Re s > 0");
    const int want = side == StartSide::minus ? model.nm() : model.np();
    if (g.size() != want)
        throw DimensionMismatch("initial phase distribution has wrong size");

    TransientTransforms tt;
    tt.model = model;
    tt.s = s;
    tt.z = z;
    tt.side = side;
    tt.fr = first_return(pm, s);
    tt.pm_ = pm;

    const int p = pm.params();
    const int nm = model.nm(), n0 = model.n0();
    const auto mz = model.minus_zero();
    const Diff gc = Diff::constant(g.transpose().cast<Cplx>(), p);
    if (side == StartSide::minus) {
        tt.start_ = gc;
    } else {
        tt.gplus_ = gc;
        tt.start_ = gc * tt.fr.psi();
    }

    const Diff sI = Diff::constant(
        s * Mat::Identity(nm + n0, nm + n0), p);
    const Diff R = inverse(-pm.tdiff(mz, mz) + sI);
    const Diff Rtop = slice(R, 0, 0, nm, nm + n0);
    const Diff Mtil = Rtop * pm.tdiff(mz, model.Sp) * tt.fr.psi();
    tt.ptilde = ((tt.start_ * expm(tt.fr.d_(), z)) *
                 inverse(Diff::identity(nm, p) - Mtil)) *
                Rtop;
    return tt;
}

Diff TransientTransforms::f(double x) const {
    const ParamModel& pm = pm_;
    const int p = pm.params();
    const int np = model.np(), nm = model.nm(), n0 = model.n0();
    const Diff psi = fr.psi();
    const Diff cpinv = inverse(pm.cdiag(model.Sp, false));
    const Diff cminv = inverse(pm.cdiag(model.Sm, true));
    const Diff wings = hcat(cpinv, psi * cminv);

    // contribution of paths that drained to 0 and restarted
    const Diff head = ptilde * pm.tdiff(model.minus_zero(), model.Sp);
    Diff row = (head * expm(fr.k(), x)) * wings;

    const Diff Hmp_xx = passage_matrices(fr, x, x).Hmp;
    const Mat repeat = (Hmp_xx.v * psi.v);
    const double rho =
        Eigen::ComplexEigenSolver<Mat>(repeat).eigenvalues().cwiseAbs().maxCoeff();
    if (rho >= 1.0)
        throw SingularRepeatFactor("level-repeat kernel has spectral radius >= 1");

    if (x <= z) {
        // drop from z to x, then oscillate around x without draining
        const Diff rep = inverse(Diff::identity(nm, p) - Hmp_xx * psi);
        const Diff v = (start_ * expm(fr.d_(), z - x)) * rep;
        row = row + hcat((v * Hmp_xx) * cpinv, v * cminv);
    } else {
        // climb from z to x avoiding 0, then oscillate around x
        const Diff rep = inverse(Diff::identity(np, p) - psi * Hmp_xx);
        Diff u;
        if (side == StartSide::minus) {
            const Diff Hmp_zz = passage_matrices(fr, z, z).Hmp;
            u = (start_ * Hmp_zz) * passage_matrices(fr, z, x).Hpp * rep;
        } else {
            u = gplus_ * passage_matrices(fr, z, x).Hpp * rep;
        }
        row = row + u * wings;
    }

    Diff out = scatter_row(row, model.plus_minus(), model.m());
    if (n0 > 0) {
        const Diff sI0 = Diff::constant(s * Mat::Identity(n0, n0), p);
        const Diff to_zero =
            pm.tdiff(model.plus_minus(), model.S0) *
            inverse(-pm.tdiff(model.S0, model.S0) + sI0);
        out = out + scatter_row(row * to_zero, model.S0, model.m());
    }
    return out;
}

namespace {

Diff invert_diff(const std::function<Diff(Cplx)>& fn, double t,
                 InversionSpec spec) {
    if (spec.tolerance == 1e100)
        spec.tolerance = 1e-5;
    Eigen::Index cols = 0;
    int params = 0;
    const auto wrapped = [&](Cplx u) -> Mat {
        const Diff d = fn(u);
        cols = d.v.cols();
        params = d.d.params();
        Mat out(1, d.v.cols() + d.d.data().cols());
        out << d.v, d.d.data();
        return out;
    };
    const auto res = invert(wrapped, t, spec);
    Mat v = res.value.leftCols(cols).cast<Cplx>();
    BlockJacobian j(1, cols, params);
    for (int k = 0; k < params; ++k)
        j.block(k) = res.value.block(0, cols * (k + 1), 1, cols).cast<Cplx>();
    return Diff(std::move(v), std::move(j));
}

} // namespace

Diff time_domain_p(const ParamModel& pm, double z, const RVec& g,
                   StartSide side, double t, const InversionSpec& spec) {
    return invert_diff(
        [&](Cplx u) { return transient_transforms(pm, z, g, side, u).ptilde; },
        t, spec);
}

Diff time_domain_f(const ParamModel& pm, double z, const RVec& g,
                   StartSide side, double x, double t,
                   const InversionSpec& spec) {
    return invert_diff(
        [&](Cplx u) { return transient_transforms(pm, z, g, side, u).f(x); },
        t, spec);
}

} // namespace sfm
