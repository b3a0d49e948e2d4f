#pragma once

#include <complex>
#include <Eigen/Dense>

#include "sfm/errors.hpp"

namespace sfm {

using Cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

/// Derivative of an m x n matrix A(theta) with respect to theta in R^p,
/// stored as the horizontal block-row [dA/dtheta_1 | ... | dA/dtheta_p].
class BlockJacobian {
public:
    BlockJacobian() : rows_(0), cols_(0), params_(0) {}

    BlockJacobian(Eigen::Index rows, Eigen::Index cols, int params)
        : rows_(rows), cols_(cols), params_(params),
          data_(Mat::Zero(rows, cols * params)) {}

    static BlockJacobian zero(Eigen::Index rows, Eigen::Index cols, int params) {
        return BlockJacobian(rows, cols, params);
    }

    Eigen::Index rows() const { return rows_; }
    Eigen::Index cols() const { return cols_; }
    int params() const { return params_; }

    Eigen::Block<Mat> block(int k) {
        return data_.block(0, cols_ * k, rows_, cols_);
    }
    Eigen::Block<const Mat> block(int k) const {
        return data_.block(0, cols_ * k, rows_, cols_);
    }

    const Mat& data() const { return data_; }

    double norm() const { return data_.norm(); }

    BlockJacobian& operator+=(const BlockJacobian& o) {
        require_same_shape(o);
        data_ += o.data_;
        return *this;
    }
    BlockJacobian operator+(const BlockJacobian& o) const {
        BlockJacobian r(*this);
        r += o;
        return r;
    }
    BlockJacobian operator-() const {
        BlockJacobian r(*this);
        r.data_ = -r.data_;
        return r;
    }
    BlockJacobian operator-(const BlockJacobian& o) const {
        BlockJacobian r(*this);
        r.require_same_shape(o);
        r.data_ -= o.data_;
        return r;
    }
    BlockJacobian operator*(Cplx a) const {
        BlockJacobian r(*this);
        r.data_ *= a;
        return r;
    }

private:
    void require_same_shape(const BlockJacobian& o) const {
        if (rows_ != o.rows_ || cols_ != o.cols_ || params_ != o.params_)
            throw DimensionMismatch("jacobian shapes differ");
    }

    Eigen::Index rows_, cols_;
    int params_;
    Mat data_;
};

/// Product rule: block(k) = dA_k B + A dB_k.
BlockJacobian dproduct(const Mat& A, const BlockJacobian& dA,
                       const Mat& B, const BlockJacobian& dB);

/// Inverse rule: block(k) = -A^{-1} dA_k A^{-1}.
BlockJacobian dinverse(const Mat& A, const BlockJacobian& dA);

/// Derivative of exp(A x), computed from the block-augmented exponential
/// exp([[A, dA_k],[0, A]] x) whose top-right block is d exp(Ax)/dtheta_k.
BlockJacobian dexp(const Mat& A, const BlockJacobian& dA, double x);

/// Same quantity obtained by numerically inverting the Laplace transform
/// v -> (A - vI)^{-1} dA_k (A - vI)^{-1}; requires the spectrum of A in the
/// open left half-plane. Cross-validation path for dexp.
BlockJacobian dexp_via_ilt(const Mat& A, const BlockJacobian& dA, double x);

/// A matrix together with its jacobian; the combinators below implement the
/// product/inverse/exponential rules so composite expressions can be
/// differentiated by writing them down once.
struct Diff {
    Mat v;
    BlockJacobian d;

    Diff() = default;
    Diff(Mat value, BlockJacobian jac) : v(std::move(value)), d(std::move(jac)) {
        if (v.rows() != d.rows() || v.cols() != d.cols())
            throw DimensionMismatch("value/jacobian shapes differ");
    }

    /// A theta-independent matrix.
    static Diff constant(Mat value, int params) {
        BlockJacobian j(value.rows(), value.cols(), params);
        return Diff(std::move(value), std::move(j));
    }
    static Diff identity(Eigen::Index n, int params) {
        return constant(Mat::Identity(n, n), params);
    }
};

Diff operator*(const Diff& a, const Diff& b);
Diff operator+(const Diff& a, const Diff& b);
Diff operator-(const Diff& a, const Diff& b);
Diff operator-(const Diff& a);
Diff operator*(Cplx a, const Diff& b);

/// inverse(A) with jacobian by the inverse rule.
Diff inverse(const Diff& a);

/// exp(A x) with jacobian by dexp.
Diff expm(const Diff& a, double x);

/// Horizontal / vertical concatenation (value and each jacobian slab).
Diff hcat(const Diff& a, const Diff& b);
Diff vcat(const Diff& a, const Diff& b);

/// Row/column slices keeping the jacobian aligned.
Diff slice(const Diff& a, Eigen::Index row0, Eigen::Index col0,
           Eigen::Index rows, Eigen::Index cols);

} // namespace sfm
