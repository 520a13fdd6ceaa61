#include "krds/dmd.hpp"

#include <algorithm>
#include <cmath>

namespace krds {

namespace {

struct Prepared {
    CMat X, Y;
    std::vector<int> zero_columns;
};

Prepared prepare(const SnapshotMatrices& data, bool scale) {
    Prepared p{data.X, data.Y, {}};
    if (!scale) return p;
    for (Eigen::Index i = 0; i < p.X.cols(); ++i) {
        double d = p.X.col(i).norm();
        if (d > 0.0) {
            p.X.col(i) /= d;
            p.Y.col(i) /= d;
        } else {
            p.zero_columns.push_back(static_cast<int>(i));
        }
    }
    return p;
}

struct Reduced {
    CMat Ur, B, Sr;
    Vec sv;
    int r = 0;
};

Reduced reduce(const CMat& X, const CMat& Y, double eps) {
    Eigen::BDCSVD<CMat> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) throw NumericalError("dmd: SVD did not converge");
    Reduced red;
    red.sv = svd.singularValues();
    const double s1 = red.sv(0);
    if (!(s1 > 0.0)) throw DegenerateData("dmd: X has no nonzero singular value");
    int r = 0;
    for (Eigen::Index i = 0; i < red.sv.size(); ++i)
        if (red.sv(i) >= s1 * eps) r = static_cast<int>(i) + 1;
    red.r = r;
    red.Ur = svd.matrixU().leftCols(r);
    Vec inv = red.sv.head(r).cwiseInverse();
    red.B = Y * (svd.matrixV().leftCols(r) * inv.asDiagonal());
    red.Sr = red.Ur.adjoint() * red.B;
    return red;
}

void sort_pairs(std::vector<RitzPair>& v) {
    std::stable_sort(v.begin(), v.end(), [](const RitzPair& a, const RitzPair& b) {
        if (a.residual != b.residual) return a.residual < b.residual;
        return std::abs(a.lambda) > std::abs(b.lambda);
    });
}

nlohmann::json cplx_json(cplx z) { return nlohmann::json::array({z.real(), z.imag()}); }

} // namespace

std::string layout_name(Layout l) {
    switch (l) {
    case Layout::ensemble_pairs: return "ensemble_pairs";
    case Layout::time_delayed: return "time_delayed";
    case Layout::hankel: return "hankel";
    }
    return "?";
}

Layout layout_from_name(const std::string& s) {
    if (s == "ensemble_pairs") return Layout::ensemble_pairs;
    if (s == "time_delayed") return Layout::time_delayed;
    if (s == "hankel") return Layout::hankel;
    throw InvalidArgument("unknown layout '" + s + "'");
}

void SnapshotMatrices::validate() const {
    require(X.rows() == Y.rows() && X.cols() == Y.cols(), "snapshots: X and Y shapes differ");
    require(X.rows() >= 1, "snapshots: need at least one row");
    require(X.cols() >= 2, "snapshots: need at least two columns");
    require(X.allFinite() && Y.allFinite(), "snapshots: non-finite entries");
    require(dt > 0.0, "snapshots: dt must be positive");
}

void DmdOptions::validate() const {
    require(eps > 0.0 && eps < 1.0, "dmd options: eps must lie in (0, 1)");
    require(residual_threshold > 0.0, "dmd options: residual threshold must be positive");
}

nlohmann::json dmd_options_to_json(const DmdOptions& o) {
    nlohmann::json j;
    j["eps"] = o.eps;
    if (std::isinf(o.residual_threshold))
        j["residual_threshold"] = "inf";
    else
        j["residual_threshold"] = o.residual_threshold;
    j["scale_columns"] = o.scale_columns;
    return j;
}

DmdOptions dmd_options_from_json(const nlohmann::json& j, DmdOptions o) {
    require(j.is_object(), "dmd options must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        const auto& k = it.key();
        if (k == "eps") {
            o.eps = it.value().get<double>();
        } else if (k == "residual_threshold") {
            if (it.value().is_string()) {
                require(it.value().get<std::string>() == "inf", "residual_threshold: expected number or \"inf\"");
                o.residual_threshold = std::numeric_limits<double>::infinity();
            } else {
                o.residual_threshold = it.value().get<double>();
            }
        } else if (k == "scale_columns") {
            o.scale_columns = it.value().get<bool>();
        } else {
            throw InvalidArgument("unknown dmd option '" + k + "'");
        }
    }
    o.validate();
    return o;
}

std::vector<cplx> DmdResult::eigenvalues() const {
    std::vector<cplx> v;
    for (auto& p : pairs) v.push_back(p.lambda);
    return v;
}

std::vector<cplx> DmdResult::continuous_eigenvalues() const {
    std::vector<cplx> v;
    for (auto& p : pairs) v.push_back(p.continuous_lambda);
    return v;
}

nlohmann::json dmd_result_to_json(const DmdResult& r) {
    nlohmann::json j;
    j["layout"] = layout_name(r.layout);
    j["dt"] = r.dt;
    j["rank_r"] = r.rank_r;
    j["singular_values"] = r.singular_values;
    j["scaling_applied"] = r.scaling_applied;
    j["zero_columns"] = r.zero_columns;
    auto pairs = nlohmann::json::array();
    for (auto& p : r.pairs)
        pairs.push_back({{"lambda", cplx_json(p.lambda)},
                         {"continuous_lambda", cplx_json(p.continuous_lambda)},
                         {"residual", p.residual}});
    j["pairs"] = pairs;
    j["n_rejected"] = r.rejected.size();
    return j;
}

cplx continuous_from_discrete(cplx lambda, double dt) { return std::log(lambda) / dt; }

DmdResult dmd_rrr(const SnapshotMatrices& data, const DmdOptions& opts) {
    data.validate();
    opts.validate();
    if (data.X.norm() == 0.0) throw DegenerateData("dmd_rrr: X is identically zero");

    Prepared p = prepare(data, opts.scale_columns);
    Reduced red = reduce(p.X, p.Y, opts.eps);

    Eigen::ComplexEigenSolver<CMat> es(red.Sr, true);
    if (es.info() != Eigen::Success) throw NumericalError("dmd_rrr: eigensolver did not converge");
    const CMat& W = es.eigenvectors();
    const CVec& lam = es.eigenvalues();
    Eigen::FullPivLU<CMat> lu(W);
    CMat Winv;
    if (lu.isInvertible()) Winv = lu.inverse();

    DmdResult res;
    res.rank_r = red.r;
    res.singular_values.assign(red.sv.data(), red.sv.data() + red.sv.size());
    res.scaling_applied = opts.scale_columns;
    res.zero_columns = p.zero_columns;
    res.layout = data.layout;
    res.dt = data.dt;

    for (int k = 0; k < red.r; ++k) {
        CVec w = W.col(k);
        w /= w.norm();
        RitzPair rp;
        rp.lambda = lam(k);
        rp.ritz_vector = red.Ur * w;
        double nz = rp.ritz_vector.norm();
        rp.ritz_vector /= nz;
        rp.residual = (red.B * w - lam(k) * (red.Ur * w)).norm() / nz;
        rp.continuous_lambda = continuous_from_discrete(lam(k), data.dt);
        if (Winv.size() > 0) {
            rp.left_vector = red.Ur * Winv.row(k).adjoint();
            rp.left_vector /= rp.left_vector.norm();
        }
        if (rp.residual <= opts.residual_threshold)
            res.pairs.push_back(std::move(rp));
        else
            res.rejected.push_back(std::move(rp));
    }
    sort_pairs(res.pairs);
    sort_pairs(res.rejected);
    return res;
}

DmdResult companion_dmd(const SnapshotMatrices& data) {
    data.validate();
    require(data.layout == Layout::hankel, "companion_dmd: requires hankel layout");
    const auto n = data.X.rows(), m = data.X.cols();
    Eigen::BDCSVD<CMat> svd(data.X, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) throw NumericalError("companion_dmd: SVD did not converge");
    Vec sv = svd.singularValues();
    const double tol = static_cast<double>(n) * std::numeric_limits<double>::epsilon() * sv(0);
    int numrank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > tol) ++numrank;
    if (sv.size() < m || numrank < m)
        throw DegenerateData("companion_dmd: X is rank deficient (numerical rank " +
                             std::to_string(numrank) + " < " + std::to_string(m) + ")");
    CMat C = svd.matrixV() * sv.cwiseInverse().asDiagonal() * svd.matrixU().adjoint() * data.Y;

    Eigen::ComplexEigenSolver<CMat> es(C, true);
    if (es.info() != Eigen::Success) throw NumericalError("companion_dmd: eigensolver did not converge");

    DmdResult res;
    res.rank_r = static_cast<int>(m);
    res.singular_values.assign(sv.data(), sv.data() + sv.size());
    res.layout = data.layout;
    res.dt = data.dt;
    for (Eigen::Index k = 0; k < m; ++k) {
        CVec c = es.eigenvectors().col(k);
        CVec z = data.X * c;
        double nz = z.norm();
        RitzPair rp;
        rp.lambda = es.eigenvalues()(k);
        rp.ritz_vector = z / nz;
        rp.residual = (data.Y * c - rp.lambda * z).norm() / nz;
        rp.continuous_lambda = continuous_from_discrete(rp.lambda, data.dt);
        res.pairs.push_back(std::move(rp));
    }
    sort_pairs(res.pairs);
    return res;
}

CMat eigenfunction_coefficients(const DmdResult& result, const SnapshotMatrices& data) {
    require(result.layout == data.layout, "eigenfunction_coefficients: result/data layout mismatch");
    const auto n = data.X.rows();
    CMat out(n, static_cast<Eigen::Index>(result.pairs.size()));
    for (std::size_t k = 0; k < result.pairs.size(); ++k) {
        const auto& p = result.pairs[k];
        switch (data.layout) {
        case Layout::hankel:
        case Layout::time_delayed: out.col(static_cast<Eigen::Index>(k)) = p.ritz_vector; break;
        case Layout::ensemble_pairs:
            if (p.left_vector.size() != n)
                throw NumericalError("eigenfunction_coefficients: defective Rayleigh quotient");
            out.col(static_cast<Eigen::Index>(k)) = p.left_vector;
            break;
        default: throw Unsupported("eigenfunction_coefficients: unsupported layout");
        }
    }
    return out;
}

double ritz_residual(const SnapshotMatrices& data, const DmdOptions& opts, cplx lambda,
                     const CVec& ritz_vector) {
    data.validate();
    Prepared p = prepare(data, opts.scale_columns);
    Reduced red = reduce(p.X, p.Y, opts.eps);
    CVec w = red.Ur.adjoint() * ritz_vector;
    return (red.B * w - lambda * (red.Ur * w)).norm() / (red.Ur * w).norm();
}

} // namespace krds
