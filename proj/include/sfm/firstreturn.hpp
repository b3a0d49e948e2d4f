#pragma once

#include "sfm/model.hpp"

namespace sfm {

/// First-return/first-passage transform matrices at a fixed s, with their
/// parameter jacobians:
///   Psi: up-start first return to the start level, ending phase down
///   Xi:  the mirrored quantity for the unbounded process
///   D = Qmm + Qmp Psi, U = Qpp + Qpm Xi, K = Qpp + Psi Qmp, J = Qmm + Xi Qpm
struct FirstReturnBundle {
    Cplx s;
    Mat Psi, Xi, D, U, K, J;
    BlockJacobian dPsi, dXi, dD, dU, dK, dJ;

    Diff psi() const { return Diff(Psi, dPsi); }
    Diff xi() const { return Diff(Xi, dXi); }
    Diff d_() const { return Diff(D, dD); }
    Diff u() const { return Diff(U, dU); }
    Diff k() const { return Diff(K, dK); }
    Diff j() const { return Diff(J, dJ); }
};

/// Solve AX + XB = C by Kronecker vectorization (dense, for n*m <= 2500).
Mat sylvester(const Mat& A, const Mat& B, const Mat& C);

/// Minimal nonnegative solution of 0 = Qpm + Qpp X + X Qmm + X Qmp X by
/// Newton iteration from X = 0 (or from `initial`; first_return uses this
/// to continue the complex-s solution from the one at Re s).
Mat solve_psi(const QBlocks& q, const Mat* initial = nullptr);

/// Mirrored equation 0 = Qmp + Qmm X + X Qpp + X Qpm X.
Mat solve_xi(const QBlocks& q, const Mat* initial = nullptr);

/// Jacobian of Psi: per parameter k, K X_k + X_k D = -R_k with
/// R_k = dQpm_k + dQpp_k Psi + Psi dQmm_k + Psi dQmp_k Psi.
BlockJacobian dpsi(const Mat& Psi, const Mat& K, const Mat& D,
                   const QBlocksJac& dq);

/// Mirrored jacobian of Xi: J X_k + X_k U = -R_k.
BlockJacobian dxi(const Mat& Xi, const Mat& J, const Mat& U,
                  const QBlocksJac& dq);

/// Everything at once for a parameterized model.
FirstReturnBundle first_return(const ParamModel& pm, Cplx s);

/// Same for a plain model (empty parameter vector).
FirstReturnBundle first_return(const SfmModel& model, Cplx s);

} // namespace sfm
