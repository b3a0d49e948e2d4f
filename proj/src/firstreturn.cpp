#include "sfm/firstreturn.hpp"

namespace sfm {

Mat sylvester(const Mat& A, const Mat& B, const Mat& C) {
    const Eigen::Index n = A.rows(), m = B.rows();
    if (A.cols() != n || B.cols() != m || C.rows() != n || C.cols() != m)
        throw DimensionMismatch("sylvester shapes");
    if (n == 0 || m == 0)
        return Mat(n, m);
    if (n * m > 2500)
        throw DimensionMismatch("sylvester: problem larger than supported");

    // vec(AX + XB) = (I_m (x) A + B^T (x) I_n) vec(X), column-major vec
    Mat M = Mat::Zero(n * m, n * m);
    for (Eigen::Index j = 0; j < m; ++j)
        M.block(n * j, n * j, n, n) = A;
    for (Eigen::Index j = 0; j < m; ++j)
        for (Eigen::Index i = 0; i < m; ++i)
            M.block(n * j, n * i, n, n) +=
                B(i, j) * Mat::Identity(n, n);

    Eigen::VectorXcd vecC(n * m);
    for (Eigen::Index j = 0; j < m; ++j)
        vecC.segment(n * j, n) = C.col(j);

    const Eigen::VectorXcd vecX = M.partialPivLu().solve(vecC);
    Mat X(n, m);
    for (Eigen::Index j = 0; j < m; ++j)
        X.col(j) = vecX.segment(n * j, n);

    const double scale =
        (A.norm() + B.norm()) * std::max(1.0, X.norm()) + C.norm();
    if (!X.allFinite() || (A * X + X * B - C).norm() > 1e-12 * scale)
        throw SpectraOverlap("sylvester residual too large");
    return X;
}

namespace {

Mat riccati_newton(const Mat& Qpp, const Mat& Qpm, const Mat& Qmm,
                   const Mat& Qmp, Mat X) {
    const double qnorm = std::max(
        {Qpp.norm(), Qpm.norm(), Qmm.norm(), Qmp.norm(), 1e-300});
    for (int it = 0; it < 200; ++it) {
        const Mat R = Qpm + Qpp * X + X * Qmm + X * Qmp * X;
        if (R.norm() <= 1e-12 * qnorm)
            return X;
        const Mat step =
            sylvester(Qpp + X * Qmp, Qmm + Qmp * X, -R);
        X += step;
        if (step.norm() <= 1e-14 * std::max(1.0, X.norm())) {
            const Mat R2 = Qpm + Qpp * X + X * Qmm + X * Qmp * X;
            if (R2.norm() <= 1e-12 * qnorm)
                return X;
        }
    }
    throw NoConvergence("Riccati Newton iteration budget exhausted");
}

Mat solve_riccati(const Mat& Qpp, const Mat& Qpm, const Mat& Qmm,
                  const Mat& Qmp, const Mat* initial) {
    if (Qpm.rows() == 0 || Qpm.cols() == 0)
        return Mat(Qpm.rows(), Qpm.cols());
    const Mat X0 =
        initial ? *initial : Mat::Zero(Qpm.rows(), Qpm.cols()).eval();
    return riccati_newton(Qpp, Qpm, Qmm, Qmp, X0);
}

} // namespace

Mat solve_psi(const QBlocks& q, const Mat* initial) {
    return solve_riccati(q.Qpp, q.Qpm, q.Qmm, q.Qmp, initial);
}

Mat solve_xi(const QBlocks& q, const Mat* initial) {
    return solve_riccati(q.Qmm, q.Qmp, q.Qpp, q.Qpm, initial);
}

BlockJacobian dpsi(const Mat& Psi, const Mat& K, const Mat& D,
                   const QBlocksJac& dq) {
    BlockJacobian out(Psi.rows(), Psi.cols(), dq.dQpm.params());
    for (int k = 0; k < out.params(); ++k) {
        const Mat R = dq.dQpm.block(k) + dq.dQpp.block(k) * Psi +
                      Psi * dq.dQmm.block(k) + Psi * dq.dQmp.block(k) * Psi;
        out.block(k) = sylvester(K, D, -R);
    }
    return out;
}

BlockJacobian dxi(const Mat& Xi, const Mat& J, const Mat& U,
                  const QBlocksJac& dq) {
    BlockJacobian out(Xi.rows(), Xi.cols(), dq.dQpm.params());
    for (int k = 0; k < out.params(); ++k) {
        const Mat R = dq.dQmp.block(k) + dq.dQmm.block(k) * Xi +
                      Xi * dq.dQpp.block(k) + Xi * dq.dQpm.block(k) * Xi;
        out.block(k) = sylvester(J, U, -R);
    }
    return out;
}

FirstReturnBundle first_return(const ParamModel& pm, Cplx s) {
    if (s == Cplx(0, 0) && std::abs(drift(pm.model)) < 1e-10)
        throw NullRecurrent("drift too close to zero at s = 0");

    auto [Qpp, Qpm, Qmm, Qmp] = fluid_generator_diff(pm, s);
    const QBlocks q{s, Qpp.v, Qpm.v, Qmm.v, Qmp.v};

    FirstReturnBundle b;
    b.s = s;
    if (s.imag() != 0) {
        // complex s: Newton continuation from the solution at Re(s)
        const QBlocks qr = fluid_generator(pm.model, Cplx(s.real(), 0.0));
        const Mat psi0 = solve_psi(qr);
        const Mat xi0 = solve_xi(qr);
        b.Psi = solve_psi(q, &psi0);
        b.Xi = solve_xi(q, &xi0);
    } else {
        b.Psi = solve_psi(q);
        b.Xi = solve_xi(q);
    }
    b.D = Qmm.v + Qmp.v * b.Psi;
    b.U = Qpp.v + Qpm.v * b.Xi;
    b.K = Qpp.v + b.Psi * Qmp.v;
    b.J = Qmm.v + b.Xi * Qpm.v;

    const QBlocksJac dq{Qpp.d, Qpm.d, Qmm.d, Qmp.d};
    b.dPsi = dpsi(b.Psi, b.K, b.D, dq);
    b.dXi = dxi(b.Xi, b.J, b.U, dq);

    // product rule on the closure definitions
    Diff psi(b.Psi, b.dPsi), xi(b.Xi, b.dXi);
    b.dD = (Qmm + Qmp * psi).d;
    b.dU = (Qpp + Qpm * xi).d;
    b.dK = (Qpp + psi * Qmp).d;
    b.dJ = (Qmm + xi * Qpm).d;
    return b;
}

FirstReturnBundle first_return(const SfmModel& model, Cplx s) {
    ParamModel pm;
    pm.model = model;
    pm.theta = RVec::Zero(0);
    return first_return(pm, s);
}

} // namespace sfm
