#pragma once

#include <string>
#include <vector>

#include "sfm/matcalc.hpp"

namespace sfm {

/// A stochastic fluid model: level X(t) moving at rate c[phase] while a CTMC
/// with generator T modulates the phase, with a sticky lower boundary at 0.
struct SfmModel {
    RMat T;
    RVec c;
    std::vector<int> Sp, Sm, S0; // phases with c>0, c<0, c==0
    std::vector<std::string> phase_names;

    int m() const { return static_cast<int>(T.rows()); }
    int np() const { return static_cast<int>(Sp.size()); }
    int nm() const { return static_cast<int>(Sm.size()); }
    int n0() const { return static_cast<int>(S0.size()); }

    /// S- then S0 (rows/cols of the "minus-or-zero" blocks).
    std::vector<int> minus_zero() const;
    /// S+ then S- (rows of the "either-sign" blocks).
    std::vector<int> plus_minus() const;

    RMat tblock(const std::vector<int>& rows, const std::vector<int>& cols) const;
};

/// Build a model, deriving the partition from the signs of c; validates.
SfmModel make_model(RMat T, RVec c, std::vector<std::string> names = {});

/// Check all model invariants (row sums, sign partition, irreducibility).
void validate(const SfmModel& model);

/// Stationary distribution nu of the modulating CTMC: nu T = 0, nu 1 = 1.
RVec ctmc_stationary(const SfmModel& model);

/// Mean drift mu = sum_i c_i nu_i.
double drift(const SfmModel& model);

/// The four blocks of the fluid generator Q(s).
struct QBlocks {
    Cplx s;
    Mat Qpp, Qpm, Qmm, Qmp;
};

QBlocks fluid_generator(const SfmModel& model, Cplx s);

/// A model family over parameters theta, with dT/dtheta_k and dc/dtheta_k.
struct ParamModel {
    SfmModel model;
    RVec theta;
    std::vector<RMat> dT;
    std::vector<RVec> dC;
    std::vector<std::string> param_names;

    int params() const { return static_cast<int>(dT.size()); }

    /// Jacobian of a sliced T block.
    BlockJacobian tjac(const std::vector<int>& rows,
                       const std::vector<int>& cols) const;
    /// Sliced T block with its jacobian.
    Diff tdiff(const std::vector<int>& rows,
               const std::vector<int>& cols) const;
    /// diag(c_i, i in idx) with jacobian; abs=true takes |c_i| (so the
    /// derivative flips sign on negative rates).
    Diff cdiag(const std::vector<int>& idx, bool abs) const;
};

ParamModel make_param_model(SfmModel model, RVec theta, std::vector<RMat> dT,
                            std::vector<RVec> dC,
                            std::vector<std::string> param_names = {});

/// Jacobians of the four Q(s) blocks.
struct QBlocksJac {
    BlockJacobian dQpp, dQpm, dQmm, dQmp;
};

QBlocksJac fluid_generator_jacobian(const ParamModel& pm, Cplx s);

/// Q blocks and their jacobians as Diff values (Qpp, Qpm, Qmm, Qmp).
std::array<Diff, 4> fluid_generator_diff(const ParamModel& pm, Cplx s);

/// Parse the JSON model file format (see README for the schema). A file
/// without "params" yields a ParamModel with p = 0.
ParamModel parse_model_file(const std::string& path);
ParamModel parse_model_json(const std::string& text);

} // namespace sfm
