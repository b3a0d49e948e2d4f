#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include "sfm/matcalc.hpp"
#include "testutil.hpp"

using namespace sfm;
using sfmtest::fd;
using sfmtest::rel_err;

namespace {

// truncated-series oracle for d exp(Ax): sum_n x^n/n! sum_k A^k dA A^{n-1-k}
Mat dexp_series(const Mat& A, const Mat& dA, double x) {
    const Eigen::Index n = A.rows();
    Mat total = Mat::Zero(n, n);
    std::vector<Mat> powers = {Mat::Identity(n, n)};
    double factorial = 1.0;
    for (int order = 1; order <= 200; ++order) {
        powers.push_back(powers.back() * A);
        factorial *= order;
        Mat term = Mat::Zero(n, n);
        for (int k = 0; k < order; ++k)
            term += powers[k] * dA * powers[order - 1 - k];
        term *= std::pow(x, order) / factorial;
        total += term;
        if (term.norm() < 1e-16 * std::max(1.0, total.norm()))
            break;
    }
    return total;
}

Mat poly_matrix(const RVec& th, int which) {
    Mat A(3, 3);
    const double a = th(0), b = th(1);
    if (which == 0)
        A << 1 + a, 2 * b, a * b, 0.5, a * a, 1 + b, b * b, a, 2.0;
    else
        A << a, 1 + b * b, 0.3, 2 * a * b, 1.0, b, a + b, 0.1, a * a + 1;
    return A;
}

BlockJacobian poly_jac(const RVec& th, int which) {
    BlockJacobian j(3, 3, 2);
    for (int k = 0; k < 2; ++k)
        j.block(k) = fd([&](const RVec& t) { return poly_matrix(t, which); },
                        th, k, 1e-7);
    return j;
}

} // namespace

TEST_CASE("block jacobian tiling") {
    BlockJacobian j(2, 3, 4);
    CHECK(j.data().rows() == 2);
    CHECK(j.data().cols() == 12);
    for (int k = 0; k < 4; ++k) {
        j.block(k).setConstant(Cplx(k, 0));
    }
    for (int k = 0; k < 4; ++k)
        CHECK(j.block(k)(1, 2) == Cplx(k, 0));
    CHECK(BlockJacobian::zero(2, 3, 4).norm() == 0.0);
}

TEST_CASE("dproduct basics") {
    const Mat I = Mat::Identity(2, 2);
    const BlockJacobian z = BlockJacobian::zero(2, 2, 3);
    CHECK(dproduct(I, z, I, z).norm() == 0.0);

    // scalar bilinear case: d(ab) = (b, a)
    Mat a(1, 1), b(1, 1);
    a << 2.0;
    b << 5.0;
    BlockJacobian da(1, 1, 2), db(1, 1, 2);
    da.block(0)(0, 0) = 1.0;
    db.block(1)(0, 0) = 1.0;
    const BlockJacobian d = dproduct(a, da, b, db);
    CHECK(d.block(0)(0, 0).real() == doctest::Approx(5.0));
    CHECK(d.block(1)(0, 0).real() == doctest::Approx(2.0));
}

TEST_CASE("dproduct matches finite differences") {
    RVec th(2);
    th << 0.4, -0.7;
    const Mat A = poly_matrix(th, 0), B = poly_matrix(th, 1);
    const BlockJacobian d = dproduct(A, poly_jac(th, 0), B, poly_jac(th, 1));
    for (int k = 0; k < 2; ++k) {
        const Mat want = fd(
            [&](const RVec& t) -> Mat {
                return poly_matrix(t, 0) * poly_matrix(t, 1);
            },
            th, k, 1e-6);
        CHECK(rel_err(d.block(k), want) < 1e-8);
    }
}

TEST_CASE("dproduct identity consistency") {
    RVec th(2);
    th << 0.3, 0.2;
    const Mat A = poly_matrix(th, 0);
    const BlockJacobian dA = poly_jac(th, 0);
    const Mat I = Mat::Identity(3, 3);
    const BlockJacobian z = BlockJacobian::zero(3, 3, 2);
    CHECK((dproduct(A, dA, I, z).data() - dA.data()).norm() < 1e-12);
    CHECK((dproduct(I, z, A, dA).data() - dA.data()).norm() < 1e-12);
}

TEST_CASE("dinverse") {
    // diagonal case
    Mat A = Mat::Zero(2, 2);
    A(0, 0) = 2.0;
    A(1, 1) = 3.0;
    BlockJacobian dA(2, 2, 2);
    dA.block(0)(0, 0) = 1.0;
    dA.block(1)(1, 1) = 1.0;
    const BlockJacobian d = dinverse(A, dA);
    CHECK(d.block(0)(0, 0).real() == doctest::Approx(-0.25));
    CHECK(std::abs(d.block(0)(1, 1)) == 0.0);

    CHECK(dinverse(A, BlockJacobian::zero(2, 2, 2)).norm() == 0.0);

    RVec th(2);
    th << 0.1, 0.05;
    const Mat P = poly_matrix(th, 0);
    const BlockJacobian dP = poly_jac(th, 0);
    const BlockJacobian di = dinverse(P, dP);
    for (int k = 0; k < 2; ++k) {
        const Mat want = fd(
            [&](const RVec& t) -> Mat {
                return poly_matrix(t, 0).inverse();
            },
            th, k, 1e-6);
        CHECK(rel_err(di.block(k), want) < 1e-7);
    }

    // derivative of A * A^{-1} = I vanishes
    const BlockJacobian zero =
        dproduct(P, dP, P.inverse(), dinverse(P, dP));
    CHECK(zero.norm() < 1e-10);

    CHECK_THROWS_AS(dinverse(Mat::Zero(2, 2), dA), SingularMatrix);
}

TEST_CASE("dexp scalar and trivial cases") {
    CHECK(dexp(poly_matrix((RVec(2) << 0.2, 0.3).finished(), 0),
               BlockJacobian::zero(3, 3, 2), 1.5)
              .norm() == 0.0);

    // A = -theta, x = 2: d/dtheta e^{-theta x} = -2 e^{-2} at theta = 1
    Mat A(1, 1);
    A << -1.0;
    BlockJacobian dA(1, 1, 1);
    dA.block(0)(0, 0) = -1.0;
    const BlockJacobian d = dexp(A, dA, 2.0);
    CHECK(d.block(0)(0, 0).real() ==
          doctest::Approx(-2.0 * std::exp(-2.0)).epsilon(1e-10));
}

TEST_CASE("dexp agrees with series oracle and semigroup rule") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-0.6, 0.6);
    for (int rep = 0; rep < 5; ++rep) {
        Mat A(4, 4), dAk(4, 4);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                A(i, j) = u(rng);
                dAk(i, j) = u(rng);
            }
        A -= 1.5 * Mat::Identity(4, 4);  // stable
        BlockJacobian dA(4, 4, 1);
        dA.block(0) = dAk;

        const double x = 0.8, y = 0.5;
        const BlockJacobian dx = dexp(A, dA, x);
        CHECK(rel_err(dx.block(0), dexp_series(A, dAk, x)) < 1e-12);

        const BlockJacobian dy = dexp(A, dA, y);
        const BlockJacobian dxy = dexp(A, dA, x + y);
        const Mat semigroup = dx.block(0) * (A * y).exp().eval() +
                              (A * x).exp().eval() * dy.block(0);
        CHECK(rel_err(dxy.block(0), semigroup) < 1e-8);
    }
}

TEST_CASE("dexp_via_ilt agrees with dexp on stable matrices") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (int rep = 0; rep < 4; ++rep) {
        Mat A(3, 3);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                A(i, j) = u(rng);
        A -= 2.0 * Mat::Identity(3, 3);
        BlockJacobian dA(3, 3, 2);
        for (int k = 0; k < 2; ++k)
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j)
                    dA.block(k)(i, j) = u(rng);
        for (double x : {0.5, 1.0, 2.5}) {
            const BlockJacobian a = dexp(A, dA, x);
            const BlockJacobian b = dexp_via_ilt(A, dA, x);
            CHECK(rel_err(b.data(), a.data(), 1e-9) < 1e-6);
        }
    }
}

TEST_CASE("diff combinators compose") {
    RVec th(2);
    th << 0.25, -0.15;
    const Diff A{poly_matrix(th, 0), poly_jac(th, 0)};
    const Diff B{poly_matrix(th, 1), poly_jac(th, 1)};

    const Diff expr = inverse(A) * B + Cplx(2.0, 0.0) * B;
    for (int k = 0; k < 2; ++k) {
        const Mat want = fd(
            [&](const RVec& t) -> Mat {
                const Mat a = poly_matrix(t, 0), b = poly_matrix(t, 1);
                return a.inverse() * b + 2.0 * b;
            },
            th, k, 1e-6);
        CHECK(rel_err(expr.d.block(k), want) < 1e-7);
    }

    const Diff cat = hcat(vcat(A, B), vcat(B, A));
    CHECK(cat.v.rows() == 6);
    CHECK(cat.v.cols() == 6);
    const Diff back = slice(cat, 0, 0, 3, 3);
    CHECK((back.v - A.v).norm() == 0.0);
    CHECK((back.d.data() - A.d.data()).norm() == 0.0);

    const Diff E = expm(A, 0.7);
    CHECK(rel_err(E.d.block(0),
                  fd([&](const RVec& t) -> Mat {
                      return (poly_matrix(t, 0) * 0.7).exp();
                  }, th, 0, 1e-6)) < 1e-7);

    CHECK_THROWS_AS(A * Diff::constant(Mat::Identity(2, 2), 2),
                    DimensionMismatch);
}
