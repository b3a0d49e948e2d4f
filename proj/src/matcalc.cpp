#include "sfm/matcalc.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include "sfm/ilt.hpp"

namespace sfm {

BlockJacobian dproduct(const Mat& A, const BlockJacobian& dA,
                       const Mat& B, const BlockJacobian& dB) {
    if (A.cols() != B.rows())
        throw DimensionMismatch("A*B inner dimensions");
    if (A.rows() != dA.rows() || A.cols() != dA.cols() ||
        B.rows() != dB.rows() || B.cols() != dB.cols())
        throw DimensionMismatch("value/jacobian shapes");
    if (dA.params() != dB.params())
        throw DimensionMismatch("parameter counts differ");

    BlockJacobian out(A.rows(), B.cols(), dA.params());
    for (int k = 0; k < dA.params(); ++k)
        out.block(k) = dA.block(k) * B + A * dB.block(k);
    return out;
}

BlockJacobian dinverse(const Mat& A, const BlockJacobian& dA) {
    if (A.rows() != A.cols())
        throw DimensionMismatch("inverse of non-square matrix");
    Eigen::PartialPivLU<Mat> lu(A);
    const Mat Ainv = lu.inverse();
    if (!Ainv.allFinite() ||
        (A * Ainv - Mat::Identity(A.rows(), A.rows())).norm() >
            1e-8 * std::max(1.0, A.norm()))
        throw SingularMatrix("dinverse");

    BlockJacobian out(A.rows(), A.cols(), dA.params());
    for (int k = 0; k < dA.params(); ++k)
        out.block(k) = -Ainv * dA.block(k) * Ainv;
    return out;
}

BlockJacobian dexp(const Mat& A, const BlockJacobian& dA, double x) {
    if (A.rows() != A.cols())
        throw DimensionMismatch("exp of non-square matrix");
    const Eigen::Index n = A.rows();
    BlockJacobian out(n, n, dA.params());
    for (int k = 0; k < dA.params(); ++k) {
        Mat aug = Mat::Zero(2 * n, 2 * n);
        aug.topLeftCorner(n, n) = A;
        aug.topRightCorner(n, n) = dA.block(k);
        aug.bottomRightCorner(n, n) = A;
        const Mat e = (aug * x).exp();
        if (!e.allFinite())
            throw NonFinite("dexp");
        out.block(k) = e.topRightCorner(n, n);
    }
    return out;
}

BlockJacobian dexp_via_ilt(const Mat& A, const BlockJacobian& dA, double x) {
    const Eigen::Index n = A.rows();
    const int p = dA.params();
    auto F = [&](Cplx v) -> Mat {
        const Mat R = (A - v * Mat::Identity(n, n)).partialPivLu().inverse();
        Mat out(n, n * p);
        for (int k = 0; k < p; ++k)
            out.block(0, n * k, n, n) = R * dA.block(k) * R;
        return out;
    };
    InversionSpec spec;
    const Mat val = invert(F, x, spec).value;
    BlockJacobian out(n, n, p);
    for (int k = 0; k < p; ++k)
        out.block(k) = val.block(0, n * k, n, n);
    return out;
}

Diff operator*(const Diff& a, const Diff& b) {
    return Diff(a.v * b.v, dproduct(a.v, a.d, b.v, b.d));
}

Diff operator+(const Diff& a, const Diff& b) {
    return Diff(a.v + b.v, a.d + b.d);
}

Diff operator-(const Diff& a, const Diff& b) {
    return Diff(a.v - b.v, a.d - b.d);
}

Diff operator-(const Diff& a) { return Diff(-a.v, -a.d); }

Diff operator*(Cplx c, const Diff& b) { return Diff(c * b.v, b.d * c); }

Diff inverse(const Diff& a) {
    BlockJacobian d = dinverse(a.v, a.d);
    return Diff(a.v.partialPivLu().inverse(), std::move(d));
}

Diff expm(const Diff& a, double x) {
    return Diff((a.v * x).exp(), dexp(a.v, a.d, x));
}

Diff hcat(const Diff& a, const Diff& b) {
    if (a.v.rows() != b.v.rows() || a.d.params() != b.d.params())
        throw DimensionMismatch("hcat");
    Mat v(a.v.rows(), a.v.cols() + b.v.cols());
    v << a.v, b.v;
    BlockJacobian d(v.rows(), v.cols(), a.d.params());
    for (int k = 0; k < a.d.params(); ++k)
        d.block(k) << a.d.block(k), b.d.block(k);
    return Diff(std::move(v), std::move(d));
}

Diff vcat(const Diff& a, const Diff& b) {
    if (a.v.cols() != b.v.cols() || a.d.params() != b.d.params())
        throw DimensionMismatch("vcat");
    Mat v(a.v.rows() + b.v.rows(), a.v.cols());
    v << a.v, b.v;
    BlockJacobian d(v.rows(), v.cols(), a.d.params());
    for (int k = 0; k < a.d.params(); ++k)
        d.block(k) << a.d.block(k), b.d.block(k);
    return Diff(std::move(v), std::move(d));
}

Diff slice(const Diff& a, Eigen::Index row0, Eigen::Index col0,
           Eigen::Index rows, Eigen::Index cols) {
    Mat v = a.v.block(row0, col0, rows, cols);
    BlockJacobian d(rows, cols, a.d.params());
    for (int k = 0; k < a.d.params(); ++k)
        d.block(k) = a.d.block(k).block(row0, col0, rows, cols);
    return Diff(std::move(v), std::move(d));
}

} // namespace sfm
