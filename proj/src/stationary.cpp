#include "sfm/stationary.hpp"

#include <Eigen/Eigenvalues>

namespace sfm {

namespace {

// Place the columns of a 1 x k row-vector Diff at positions `where` of a
// 1 x m row, keeping the jacobian aligned.
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

Mat neg_inv(const RMat& block) {
    const Mat A = (-block).cast<Cplx>();
    Eigen::PartialPivLU<Mat> lu(A);
    const Mat inv = lu.inverse();
    if ((A * inv - Mat::Identity(A.rows(), A.cols())).norm() >
        1e-8 * std::max(1.0, A.norm()))
        throw SingularMatrix("taboo block is singular");
    return inv;
}

// M = [I 0] (-Tmzmz)^{-1} Tmz+ Psi, the fixed-point operator for xi.
Mat xi_operator(const SfmModel& model, const Mat& Psi) {
    const auto mz = model.minus_zero();
    const Mat Minv = neg_inv(model.tblock(mz, mz));
    const Mat Tmzp = model.tblock(mz, model.Sp).cast<Cplx>();
    return Minv.topRows(model.nm()) * Tmzp * Psi;
}

RVec solve_fixed_vector(const Mat& M) {
    const Eigen::Index n = M.rows();
    RMat A(n + 1, n);
    A.topRows(n) = (Mat::Identity(n, n) - M).transpose().real();
    A.bottomRows(1).setOnes();
    RVec b = RVec::Zero(n + 1);
    b(n) = 1.0;
    const RVec xi = A.colPivHouseholderQr().solve(b);
    // Psi enters M with its own Riccati residual (~1e-12 ||Q||), so the
    // stacked system is consistent only to that level; a rank defect shows
    // up as an O(1) residual instead.
    if ((A * xi - b).norm() > 1e-9 * std::max(1.0, 1.0 + M.norm()))
        throw SingularConstraintSystem("xi fixed-point system is inconsistent");
    return xi;
}

} // namespace

RVec solve_xi_vector(const SfmModel& model, const FirstReturnBundle& fr0) {
    if (model.nm() == 0)
        throw SignPartitionMismatch("stationary analysis needs S- nonempty");
    if (drift(model) >= 0)
        throw UnstableModel("drift must be negative");
    return solve_fixed_vector(xi_operator(model, fr0.Psi));
}

double normalizing_alpha(const SfmModel& model, const RVec& xi,
                         const FirstReturnBundle& fr0) {
    const auto mz = model.minus_zero();
    const auto pmix = model.plus_minus();
    const Mat Minv = neg_inv(model.tblock(mz, mz));
    const Mat Tmzp = model.tblock(mz, model.Sp).cast<Cplx>();

    Mat Kinv;
    try {
        Kinv = neg_inv(fr0.K.real());
    } catch (const SingularMatrix&) {
        throw SingularK("K(0) is singular");
    }

    Mat wings(model.np(), model.np() + model.nm());
    RVec cp(model.np()), cmabs(model.nm());
    for (int i = 0; i < model.np(); ++i)
        cp(i) = model.c(model.Sp[i]);
    for (int i = 0; i < model.nm(); ++i)
        cmabs(i) = std::abs(model.c(model.Sm[i]));
    wings << cp.cwiseInverse().asDiagonal().toDenseMatrix().cast<Cplx>(),
        fr0.Psi * cmabs.cwiseInverse().asDiagonal().toDenseMatrix().cast<Cplx>();

    Mat inner = Mat::Ones(model.np() + model.nm(), 1);
    if (model.n0() > 0)
        inner += model.tblock(pmix, model.S0).cast<Cplx>() *
                 neg_inv(model.tblock(model.S0, model.S0)) *
                 Mat::Ones(model.n0(), 1);

    Mat xi0 = Mat::Zero(1, model.nm() + model.n0());
    xi0.leftCols(model.nm()) = xi.transpose().cast<Cplx>();

    const Cplx Z =
        (xi0 * Minv *
         (Mat::Ones(model.nm() + model.n0(), 1) + Tmzp * Kinv * wings * inner))(0, 0);
    return 1.0 / Z.real();
}

RVec boundary_mass(const SfmModel& model, const RVec& xi, double alpha) {
    const auto mz = model.minus_zero();
    const Mat Minv = neg_inv(model.tblock(mz, mz));
    Mat xi0 = Mat::Zero(1, model.nm() + model.n0());
    xi0.leftCols(model.nm()) = xi.transpose().cast<Cplx>();
    return alpha * (xi0 * Minv).real().transpose();
}

StationaryBundle stationary(const ParamModel& pm) {
    const SfmModel& model = pm.model;
    if (model.nm() == 0)
        throw SignPartitionMismatch("stationary analysis needs S- nonempty");
    if (drift(model) >= 0)
        throw UnstableModel("drift must be negative");

    StationaryBundle sb;
    sb.model = model;
    sb.fr = first_return(pm, Cplx(0, 0));

    const int p = pm.params();
    const auto mz = model.minus_zero();
    const auto pmix = model.plus_minus();
    const int nm = model.nm(), n0 = model.n0(), np = model.np();

    const Diff Minv = inverse(-pm.tdiff(mz, mz));
    const Diff Tmzp = pm.tdiff(mz, model.Sp);
    const Diff psi = sb.fr.psi();

    // fixed-point operator and xi with its constrained-least-squares jacobian
    const Diff M = slice(Minv, 0, 0, nm, nm + n0) * Tmzp * psi;
    const RVec xi_val = solve_fixed_vector(M.v);

    BlockJacobian dxi(1, nm, p);
    if (nm == 1) {
        // a single down phase forces xi = 1 identically, so its derivative
        // vanishes; the least-squares route below degenerates here (and its
        // right-hand side is pure solver noise near criticality)
    } else {
        RMat A(nm + 1, nm);
        A.topRows(nm) = (Mat::Identity(nm, nm) - M.v).transpose().real();
        A.bottomRows(1).setOnes();
        const auto qr = A.colPivHouseholderQr();
        for (int k = 0; k < p; ++k) {
            RVec b = RVec::Zero(nm + 1);
            b.head(nm) =
                (xi_val.transpose().cast<Cplx>() * M.d.block(k)).real().transpose();
            const RVec xk = qr.solve(b);
            if ((A * xk - b).norm() > 1e-9 * std::max(1.0, b.norm() + A.norm()))
                throw SingularConstraintSystem(
                    "xi derivative system is inconsistent");
            dxi.block(k) = xk.transpose().cast<Cplx>();
        }
    }
    sb.xi = Diff(xi_val.transpose().cast<Cplx>(), dxi);

    const Diff xi0 = (n0 > 0)
                         ? hcat(sb.xi, Diff::constant(Mat::Zero(1, n0), p))
                         : sb.xi;

    Diff Kinv;
    try {
        Kinv = inverse(-sb.fr.k());
    } catch (const SingularMatrix&) {
        throw SingularK("K(0) is singular");
    }

    sb.wings = hcat(inverse(pm.cdiag(model.Sp, false)),
                    psi * inverse(pm.cdiag(model.Sm, true)));
    if (n0 > 0)
        sb.to_zero = pm.tdiff(pmix, model.S0) * inverse(-pm.tdiff(model.S0, model.S0));

    Diff inner = Diff::constant(Mat::Ones(np + nm, 1), p);
    if (n0 > 0)
        inner = inner + sb.to_zero * Diff::constant(Mat::Ones(n0, 1), p);

    const Diff Z =
        xi0 * Minv *
        (Diff::constant(Mat::Ones(nm + n0, 1), p) + Tmzp * Kinv * sb.wings * inner);
    sb.alpha = inverse(Z);
    sb.p = sb.alpha * (xi0 * Minv);
    sb.w = sb.p * Tmzp;
    return sb;
}

Diff StationaryBundle::boundary_full() const {
    std::vector<int> where = model.Sm;
    where.insert(where.end(), model.S0.begin(), model.S0.end());
    return scatter_row(p, where, model.m());
}

Diff StationaryBundle::density(double x) const {
    const Diff row_pm = (w * expm(fr.k(), x)) * wings;
    std::vector<int> where = model.plus_minus();
    Diff out = scatter_row(row_pm, where, model.m());
    if (model.n0() > 0)
        out = out + scatter_row(row_pm * to_zero, model.S0, model.m());
    return out;
}

Diff StationaryBundle::transform(Cplx v) const {
    const int p = w.d.params();
    const Diff resolvent =
        inverse(Diff::constant(v * Mat::Identity(fr.K.rows(), fr.K.cols()), p) -
                fr.k());
    const Diff row_pm = (w * resolvent) * wings;
    Diff out = scatter_row(row_pm, model.plus_minus(), model.m());
    if (model.n0() > 0)
        out = out + scatter_row(row_pm * to_zero, model.S0, model.m());
    return out;
}

double StationaryBundle::decay_rate() const {
    return std::abs(
        Eigen::ComplexEigenSolver<Mat>(fr.K).eigenvalues().real().maxCoeff());
}

} // namespace sfm
