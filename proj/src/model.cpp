#include "sfm/model.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace sfm {

namespace {

std::vector<int> cat(const std::vector<int>& a, const std::vector<int>& b) {
    std::vector<int> r = a;
    r.insert(r.end(), b.begin(), b.end());
    return r;
}

} // namespace

std::vector<int> SfmModel::minus_zero() const { return cat(Sm, S0); }
std::vector<int> SfmModel::plus_minus() const { return cat(Sp, Sm); }

RMat SfmModel::tblock(const std::vector<int>& rows,
                      const std::vector<int>& cols) const {
    RMat out(rows.size(), cols.size());
    for (size_t i = 0; i < rows.size(); ++i)
        for (size_t j = 0; j < cols.size(); ++j)
            out(i, j) = T(rows[i], cols[j]);
    return out;
}

SfmModel make_model(RMat T, RVec c, std::vector<std::string> names) {
    if (T.rows() != T.cols() || T.rows() != c.size())
        throw DimensionMismatch("T must be square and match c");
    SfmModel model;
    model.T = std::move(T);
    model.c = std::move(c);
    for (int i = 0; i < model.m(); ++i) {
        if (model.c(i) > 0)
            model.Sp.push_back(i);
        else if (model.c(i) < 0)
            model.Sm.push_back(i);
        else
            model.S0.push_back(i);
    }
    if (names.empty())
        for (int i = 0; i < model.m(); ++i)
            names.push_back("phase" + std::to_string(i + 1));
    model.phase_names = std::move(names);
    validate(model);
    return model;
}

void validate(const SfmModel& model) {
    const int m = model.m();
    if (m == 0)
        throw DimensionMismatch("empty model");
    const double tnorm = model.T.cwiseAbs().rowwise().sum().maxCoeff();
    const double tol = 1e-12 * std::max(1.0, tnorm);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j)
            if (i != j && model.T(i, j) < -tol)
                throw GeneratorRowSum("negative off-diagonal entry in row " +
                                      std::to_string(i + 1));
        if (std::abs(model.T.row(i).sum()) > tol)
            throw GeneratorRowSum("row " + std::to_string(i + 1) +
                                  " sums to " + std::to_string(model.T.row(i).sum()));
    }
    for (int i : model.Sp)
        if (!(model.c(i) > 0))
            throw SignPartitionMismatch("phase " + std::to_string(i + 1));
    for (int i : model.Sm)
        if (!(model.c(i) < 0))
            throw SignPartitionMismatch("phase " + std::to_string(i + 1));
    for (int i : model.S0)
        if (model.c(i) != 0)
            throw SignPartitionMismatch("phase " + std::to_string(i + 1));
    if (model.Sp.size() + model.Sm.size() + model.S0.size() !=
        static_cast<size_t>(m))
        throw SignPartitionMismatch("partition does not cover the state space");

    // irreducibility: strong connectivity of the nonzero off-diagonal pattern
    auto reach = [&](bool forward) {
        std::vector<bool> seen(m, false);
        std::vector<int> stack = {0};
        seen[0] = true;
        while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            for (int v = 0; v < m; ++v) {
                const double w = forward ? model.T(u, v) : model.T(v, u);
                if (u != v && w != 0 && !seen[v]) {
                    seen[v] = true;
                    stack.push_back(v);
                }
            }
        }
        return seen;
    };
    const auto fwd = reach(true), bwd = reach(false);
    for (int i = 0; i < m; ++i)
        if (!fwd[i] || !bwd[i])
            throw NotIrreducible("phase " + std::to_string(i + 1) +
                                 " not strongly connected to phase 1");
}

RVec ctmc_stationary(const SfmModel& model) {
    const int m = model.m();
    RMat A = model.T.transpose();
    A.row(m - 1).setOnes();
    RVec b = RVec::Zero(m);
    b(m - 1) = 1.0;
    Eigen::FullPivLU<RMat> lu(A);
    if (!lu.isInvertible())
        throw SingularSystem("stationary system of the modulating CTMC");
    RVec nu = lu.solve(b);
    const double tnorm = model.T.cwiseAbs().maxCoeff();
    if ((model.T.transpose() * nu).norm() > 1e-10 * std::max(1.0, tnorm))
        throw SingularSystem("stationary residual too large");
    return nu;
}

double drift(const SfmModel& model) {
    return model.c.dot(ctmc_stationary(model));
}

namespace {

Mat cplx(const RMat& a) { return a.cast<Cplx>(); }

struct QAssembly {
    Diff Qpp, Qpm, Qmm, Qmp;
};

// Shared assembly for fluid_generator and its jacobian: with p = 0 the Diff
// jacobians are empty and only the values matter.
QAssembly assemble_q(const ParamModel& pm, Cplx s) {
    const SfmModel& mo = pm.model;
    const int p = pm.params();
    const Eigen::Index np = mo.np(), nm = mo.nm(), n0 = mo.n0();

    auto Tpp = pm.tdiff(mo.Sp, mo.Sp);
    auto Tpm = pm.tdiff(mo.Sp, mo.Sm);
    auto Tmm = pm.tdiff(mo.Sm, mo.Sm);
    auto Tmp = pm.tdiff(mo.Sm, mo.Sp);
    auto Cp_inv = inverse(pm.cdiag(mo.Sp, false));
    auto Cm_inv = inverse(pm.cdiag(mo.Sm, true));
    auto Ip = s * Diff::identity(np, p);
    auto Im = s * Diff::identity(nm, p);

    QAssembly q;
    if (n0 == 0) {
        q.Qpp = Cp_inv * (Tpp - Ip);
        q.Qpm = Cp_inv * Tpm;
        q.Qmm = Cm_inv * (Tmm - Im);
        q.Qmp = Cm_inv * Tmp;
        return q;
    }

    auto Tp0 = pm.tdiff(mo.Sp, mo.S0);
    auto Tm0 = pm.tdiff(mo.Sm, mo.S0);
    auto T00 = pm.tdiff(mo.S0, mo.S0);
    auto T0p = pm.tdiff(mo.S0, mo.Sp);
    auto T0m = pm.tdiff(mo.S0, mo.Sm);
    auto T00s = T00 - s * Diff::identity(n0, p);
    {
        Eigen::PartialPivLU<Mat> lu(T00s.v);
        const Mat inv = lu.inverse();
        if (!inv.allFinite() ||
            (T00s.v * inv - Mat::Identity(n0, n0)).norm() >
                1e-8 * std::max(1.0, T00s.v.norm()))
            throw SingularTabooBlock("T00 - sI");
    }
    auto R0 = inverse(T00s);
    q.Qpp = Cp_inv * (Tpp - Ip - Tp0 * R0 * T0p);
    q.Qpm = Cp_inv * (Tpm - Tp0 * R0 * T0m);
    q.Qmm = Cm_inv * (Tmm - Im - Tm0 * R0 * T0m);
    q.Qmp = Cm_inv * (Tmp - Tm0 * R0 * T0p);
    return q;
}

ParamModel constant_family(const SfmModel& model) {
    ParamModel pm;
    pm.model = model;
    pm.theta = RVec::Zero(0);
    return pm;
}

} // namespace

QBlocks fluid_generator(const SfmModel& model, Cplx s) {
    const auto q = assemble_q(constant_family(model), s);
    return QBlocks{s, q.Qpp.v, q.Qpm.v, q.Qmm.v, q.Qmp.v};
}

BlockJacobian ParamModel::tjac(const std::vector<int>& rows,
                               const std::vector<int>& cols) const {
    BlockJacobian out(rows.size(), cols.size(), params());
    for (int k = 0; k < params(); ++k)
        for (size_t i = 0; i < rows.size(); ++i)
            for (size_t j = 0; j < cols.size(); ++j)
                out.block(k)(i, j) = dT[k](rows[i], cols[j]);
    return out;
}

Diff ParamModel::tdiff(const std::vector<int>& rows,
                       const std::vector<int>& cols) const {
    return Diff(cplx(model.tblock(rows, cols)), tjac(rows, cols));
}

Diff ParamModel::cdiag(const std::vector<int>& idx, bool abs) const {
    const Eigen::Index n = idx.size();
    Mat v = Mat::Zero(n, n);
    BlockJacobian d(n, n, params());
    for (Eigen::Index i = 0; i < n; ++i) {
        const double sign = (abs && model.c(idx[i]) < 0) ? -1.0 : 1.0;
        v(i, i) = sign * model.c(idx[i]);
        for (int k = 0; k < params(); ++k)
            d.block(k)(i, i) = sign * dC[k](idx[i]);
    }
    return Diff(std::move(v), std::move(d));
}

std::array<Diff, 4> fluid_generator_diff(const ParamModel& pm, Cplx s) {
    auto q = assemble_q(pm, s);
    return {std::move(q.Qpp), std::move(q.Qpm), std::move(q.Qmm),
            std::move(q.Qmp)};
}

QBlocksJac fluid_generator_jacobian(const ParamModel& pm, Cplx s) {
    auto q = assemble_q(pm, s);
    return QBlocksJac{std::move(q.Qpp.d), std::move(q.Qpm.d),
                      std::move(q.Qmm.d), std::move(q.Qmp.d)};
}

ParamModel make_param_model(SfmModel model, RVec theta, std::vector<RMat> dT,
                            std::vector<RVec> dC,
                            std::vector<std::string> param_names) {
    if (dT.size() != dC.size() ||
        (theta.size() != static_cast<Eigen::Index>(dT.size())))
        throw DimensionMismatch("theta/dT/dC sizes differ");
    const int m = model.m();
    const double tnorm = std::max(1.0, model.T.cwiseAbs().maxCoeff());
    for (size_t k = 0; k < dT.size(); ++k) {
        if (dT[k].rows() != m || dT[k].cols() != m || dC[k].size() != m)
            throw DimensionMismatch("dT/dC shape for parameter " +
                                    std::to_string(k + 1));
        for (int i = 0; i < m; ++i)
            if (std::abs(dT[k].row(i).sum()) > 1e-10 * tnorm)
                throw GeneratorRowSum("dT for parameter " +
                                      std::to_string(k + 1) +
                                      " has nonzero row sum");
    }
    ParamModel pm;
    pm.model = std::move(model);
    pm.theta = std::move(theta);
    pm.dT = std::move(dT);
    pm.dC = std::move(dC);
    if (param_names.empty())
        for (int k = 0; k < pm.params(); ++k)
            param_names.push_back("theta" + std::to_string(k + 1));
    pm.param_names = std::move(param_names);
    return pm;
}

namespace {

RMat json_matrix(const nlohmann::json& j, int m) {
    if (!j.is_array() || j.size() != static_cast<size_t>(m))
        throw ParseError("matrix must have " + std::to_string(m) + " rows");
    RMat out(m, m);
    for (int i = 0; i < m; ++i) {
        const auto& row = j[i];
        if (!row.is_array() || row.size() != static_cast<size_t>(m))
            throw ParseError("matrix row " + std::to_string(i + 1) +
                             " must have " + std::to_string(m) + " entries");
        for (int k = 0; k < m; ++k)
            out(i, k) = row[k].get<double>();
    }
    return out;
}

RVec json_vector(const nlohmann::json& j, int m) {
    if (!j.is_array() || j.size() != static_cast<size_t>(m))
        throw ParseError("vector must have " + std::to_string(m) + " entries");
    RVec out(m);
    for (int i = 0; i < m; ++i)
        out(i) = j[i].get<double>();
    return out;
}

} // namespace

ParamModel parse_model_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(e.what());
    }
    if (!j.contains("T") || !j.contains("c"))
        throw ParseError("model file requires fields 'T' and 'c'");
    if (!j["c"].is_array() || j["c"].empty())
        throw ParseError("'c' must be a nonempty array");
    const int m = static_cast<int>(j["c"].size());

    std::vector<std::string> names;
    if (j.contains("phases")) {
        for (const auto& n : j["phases"])
            names.push_back(n.get<std::string>());
        if (names.size() != static_cast<size_t>(m))
            throw ParseError("'phases' length must match 'c'");
    }
    SfmModel model = make_model(json_matrix(j["T"], m), json_vector(j["c"], m),
                                std::move(names));

    int p = 0;
    RVec theta = RVec::Zero(0);
    std::vector<std::string> pnames;
    if (j.contains("params")) {
        const auto& pj = j["params"];
        if (!pj.contains("names") || !pj.contains("values") ||
            pj["names"].size() != pj["values"].size())
            throw ParseError("'params' requires matching 'names' and 'values'");
        p = static_cast<int>(pj["names"].size());
        theta = RVec(p);
        for (int k = 0; k < p; ++k) {
            pnames.push_back(pj["names"][k].get<std::string>());
            theta(k) = pj["values"][k].get<double>();
        }
    }
    std::vector<RMat> dT;
    std::vector<RVec> dC;
    for (int k = 0; k < p; ++k) {
        if (j.contains("dT")) {
            if (j["dT"].size() != static_cast<size_t>(p))
                throw ParseError("'dT' must have one matrix per parameter");
            dT.push_back(json_matrix(j["dT"][k], m));
        } else {
            dT.push_back(RMat::Zero(m, m));
        }
        if (j.contains("dC")) {
            if (j["dC"].size() != static_cast<size_t>(p))
                throw ParseError("'dC' must have one vector per parameter");
            dC.push_back(json_vector(j["dC"][k], m));
        } else {
            dC.push_back(RVec::Zero(m));
        }
    }
    return make_param_model(std::move(model), std::move(theta), std::move(dT),
                            std::move(dC), std::move(pnames));
}

ParamModel parse_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_model_json(ss.str());
}

} // namespace sfm
