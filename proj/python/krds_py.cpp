#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <limits>

#include "krds/dmd.hpp"
#include "krds/experiments.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

py::object to_py(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

json from_py(const py::object& o) {
    return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

krds::ExperimentConfig make_config(const std::string& name, const py::object& config) {
    if (config.is_none()) return krds::default_config(name);
    return krds::config_from_json(from_py(config), name);
}

py::dict run(const std::string& name, const py::object& config, py::object seed, py::object out_dir) {
    auto c = make_config(name, config);
    if (!seed.is_none()) c.seed = seed.cast<std::uint64_t>();
    krds::ExperimentResult r;
    {
        py::gil_scoped_release nogil;
        r = krds::run_experiment(c);
    }
    if (!out_dir.is_none()) krds::write_artifacts(r, py::str(out_dir).cast<std::string>());
    return to_py(krds::report_json(r)).cast<py::dict>();
}

py::dict dmd(const krds::CMat& X, const krds::CMat& Y, double dt, double eps, double residual_threshold,
             bool scale_columns, const std::string& layout) {
    krds::SnapshotMatrices s{X, Y, krds::layout_from_name(layout), dt};
    krds::DmdOptions o;
    o.eps = eps;
    o.residual_threshold = residual_threshold;
    o.scale_columns = scale_columns;
    auto r = krds::dmd_rrr(s, o);
    const auto n = static_cast<Eigen::Index>(r.pairs.size());
    krds::CVec lam(n), cont(n);
    Eigen::VectorXd res(n);
    krds::CMat vecs(X.rows(), n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto& p = r.pairs[static_cast<std::size_t>(k)];
        lam(k) = p.lambda;
        cont(k) = p.continuous_lambda;
        res(k) = p.residual;
        vecs.col(k) = p.ritz_vector;
    }
    py::dict d;
    d["eigenvalues"] = lam;
    d["continuous_eigenvalues"] = cont;
    d["residuals"] = res;
    d["ritz_vectors"] = vecs;
    d["rank"] = r.rank_r;
    d["singular_values"] = r.singular_values;
    d["n_rejected"] = r.rejected.size();
    return d;
}

} // namespace

PYBIND11_MODULE(krds, m) {
    m.doc() = "Koopman spectra of random dynamical systems";
    m.attr("schema_version") = krds::kSchemaVersion;

    // translators are tried newest first, so the base class goes first
    py::register_exception<krds::Error>(m, "NumericalError", PyExc_RuntimeError);
    py::register_exception<krds::Unsupported>(m, "Unsupported", PyExc_ValueError);
    py::register_exception<krds::InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);

    m.def("experiments", &krds::experiment_names);
    m.def("default_config", [](const std::string& name) { return to_py(krds::config_to_json(krds::default_config(name))); });
    m.def("run", &run, py::arg("experiment"), py::arg("config") = py::none(), py::arg("seed") = py::none(),
          py::arg("out_dir") = py::none(), "Run an experiment and return its report.");
    m.def(
        "oracle",
        [](const std::string& name, const py::object& config) {
            return to_py(krds::experiment_oracle(make_config(name, config)));
        },
        py::arg("experiment"), py::arg("config") = py::none());
    m.def("dmd_rrr", &dmd, py::arg("X"), py::arg("Y"), py::arg("dt") = 1.0, py::arg("eps") = 1e-12,
          py::arg("residual_threshold") = std::numeric_limits<double>::infinity(), py::arg("scale_columns") = true,
          py::arg("layout") = "time_delayed");
}
