#pragma once

#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "krds/common.hpp"

namespace krds {

enum class Layout { ensemble_pairs, time_delayed, hankel };

std::string layout_name(Layout l);
Layout layout_from_name(const std::string& s);

struct SnapshotMatrices {
    CMat X;
    CMat Y;
    Layout layout = Layout::time_delayed;
    double dt = 1.0; // time of one operator application

    void validate() const;
};

struct DmdOptions {
    double eps = 1e-12;
    double residual_threshold = std::numeric_limits<double>::infinity();
    bool scale_columns = true;

    void validate() const;
};

nlohmann::json dmd_options_to_json(const DmdOptions& o);
DmdOptions dmd_options_from_json(const nlohmann::json& j, DmdOptions base = {});

struct RitzPair {
    cplx lambda;
    CVec ritz_vector; // unit 2-norm
    double residual = 0.0;
    cplx continuous_lambda;
    //! Unit-norm xi with phi(x) = xi^H f(x) (left eigenvector of S_r lifted by U_r).
    CVec left_vector;
};

struct DmdResult {
    std::vector<RitzPair> pairs;    // retained, sorted by residual then |lambda| descending
    std::vector<RitzPair> rejected; // residual above threshold
    int rank_r = 0;
    std::vector<double> singular_values;
    bool scaling_applied = false;
    std::vector<int> zero_columns; // left unscaled during column scaling
    Layout layout = Layout::time_delayed;
    double dt = 1.0;

    std::vector<cplx> eigenvalues() const;
    std::vector<cplx> continuous_eigenvalues() const;
};

nlohmann::json dmd_result_to_json(const DmdResult& r);

DmdResult dmd_rrr(const SnapshotMatrices& data, const DmdOptions& opts = {});

//! Eigenvalues of the least-squares companion matrix X^+ Y (hankel layout).
DmdResult companion_dmd(const SnapshotMatrices& data);

//! Columns are the per-pair eigenfunction representations: Ritz vectors for
//! hankel/time-delayed data, xi vectors (phi(x) = xi^H f(x)) for ensemble pairs.
CMat eigenfunction_coefficients(const DmdResult& result, const SnapshotMatrices& data);

//! Recomputes ||(Y V_r S_r^{-1}) w - lambda U_r w|| for an arbitrary unit
//! vector in the range of U_r, in the same (optionally scaled) frame as dmd_rrr.
double ritz_residual(const SnapshotMatrices& data, const DmdOptions& opts, cplx lambda,
                     const CVec& ritz_vector);

cplx continuous_from_discrete(cplx lambda, double dt);

} // namespace krds
