#include "sfm/ruin.hpp"

#include <Eigen/LU>

namespace sfm {

RuinSpec erlang_mixture_spec(double theta1, double theta2) {
    RuinSpec spec;
    spec.alpha = RVec::Zero(4);
    spec.alpha(0) = 0.5;
    spec.alpha(2) = 0.5;
    spec.M = RMat::Zero(4, 4);
    spec.M(0, 0) = -theta1;
    spec.M(0, 1) = theta1;
    spec.M(1, 1) = -theta1;
    spec.M(2, 2) = -theta2;
    spec.M(2, 3) = theta2;
    spec.M(3, 3) = -theta2;
    RMat d1 = RMat::Zero(4, 4), d2 = RMat::Zero(4, 4);
    d1(0, 0) = -1;
    d1(0, 1) = 1;
    d1(1, 1) = -1;
    d2(2, 2) = -1;
    d2(2, 3) = 1;
    d2(3, 3) = -1;
    spec.dM = {d1, d2};
    spec.param_names = {"theta1", "theta2"};
    return spec;
}

namespace {

void validate(const RuinSpec& spec) {
    const auto n = spec.M.rows();
    if (n == 0 || spec.M.cols() != n || spec.alpha.size() != n)
        throw InvalidPhaseType("claim distribution blocks have inconsistent sizes");
    for (const auto& d : spec.dM)
        if (d.rows() != n || d.cols() != n)
            throw InvalidPhaseType("subgenerator derivative has wrong shape");
    if (spec.alpha.minCoeff() < 0 || spec.alpha.sum() > 1.0 + 1e-12)
        throw InvalidPhaseType("alpha must be a substochastic start vector");
    const RVec exit = -spec.M * RVec::Ones(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j)
            if (i != j && spec.M(i, j) < 0)
                throw InvalidPhaseType("subgenerator off-diagonals must be >= 0");
        if (exit(i) < -1e-12)
            throw InvalidPhaseType("subgenerator row sums must be <= 0");
    }
    if (std::abs(spec.M.determinant()) < 1e-12)
        throw InvalidPhaseType("subgenerator must be nonsingular");
    if (spec.premium <= 0 || spec.lambda <= 0)
        throw InvalidPhaseType("premium and claim intensity must be positive");
}

} // namespace

double mean_claim(const RuinSpec& spec) {
    return spec.alpha.transpose() *
           spec.M.partialPivLu().solve(RVec::Constant(spec.M.rows(), -1.0));
}

ParamModel ruin_embedding(const RuinSpec& spec) {
    validate(spec);
    if (spec.lambda * mean_claim(spec) >= spec.premium)
        throw NegativeLoading("lambda E[claim] >= premium: ruin is certain");

    const auto n = spec.M.rows();
    const auto m = n + 1;
    RMat T = RMat::Zero(m, m);
    T(0, 0) = -spec.lambda;
    T.block(0, 1, 1, n) = spec.lambda * spec.alpha.transpose();
    T.block(1, 1, n, n) = spec.M;
    T.block(1, 0, n, 1) = -spec.M * RVec::Ones(n);
    RVec c = RVec::Constant(m, -1.0);
    c(0) = spec.premium;

    RVec theta = RVec::Zero(static_cast<Eigen::Index>(spec.dM.size()));
    std::vector<RMat> dT;
    std::vector<RVec> dC;
    for (const auto& d : spec.dM) {
        RMat dTk = RMat::Zero(m, m);
        dTk.block(1, 1, n, n) = d;
        dTk.block(1, 0, n, 1) = -d * RVec::Ones(n);
        dT.push_back(dTk);
        dC.push_back(RVec::Zero(m));
    }
    return make_param_model(make_model(T, c), theta, dT, dC,
                            spec.param_names);
}

Diff ruin_probability(const FirstReturnBundle& fr0, double x) {
    if (fr0.Psi.rows() != 1)
        throw DimensionMismatch("ruin embedding must have a single up phase");
    if (x < 0)
        throw DimensionMismatch("initial surplus must be nonnegative");
    const Diff row = fr0.psi() * expm(fr0.d_(), x);
    const int p = fr0.dPsi.params();
    const Diff ones = Diff::constant(Mat::Ones(row.v.cols(), 1), p);
    return row * ones;
}

} // namespace sfm
