#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "krds/dmd.hpp"
#include "krds/integrators.hpp"
#include "krds/models.hpp"

namespace krds {

inline constexpr int kSchemaVersion = 1;

struct ExperimentConfig {
    std::string name;
    std::uint64_t seed = 1;
    std::uint64_t stream_id = 0; // base stream; every run derives its streams from it
    ModelSpec model;
    DmdOptions dmd;
    nlohmann::json params = nlohmann::json::object();
    std::string out_dir;
};

//! Registry order.
const std::vector<std::string>& experiment_names();
bool is_experiment(const std::string& name);

//! Defaults for a registered experiment; throws InvalidArgument otherwise.
ExperimentConfig default_config(const std::string& name);

nlohmann::json config_to_json(const ExperimentConfig& c);
//! Overlays j on the defaults of j["experiment"] (or of `name` when given).
//! Accepts a metadata.json document as well (its "config" member is used).
//! Keys absent from the defaults are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j, const std::string& name = "");

struct MatchedPair {
    cplx computed;
    cplx reference;
    double error = 0.0;
    int reference_index = 0;
};

struct EigMatchReport {
    std::vector<MatchedPair> matched; // in reference order
    double l1 = 0.0, l2 = 0.0, linf = 0.0;
    std::vector<cplx> unmatched_computed;
    std::vector<cplx> unmatched_reference;
};

//! Greedy nearest-neighbour matching in ascending |computed - reference|.
EigMatchReport match_eigenvalues(const std::vector<cplx>& computed,
                                 const std::vector<cplx>& reference);
nlohmann::json match_to_json(const EigMatchReport& r);

struct Check {
    std::string name;
    double value = 0.0;
    std::string relation; // "<", "<=", ">=", "==", "in"
    double bound = 0.0;
    double bound_hi = 0.0; // only for "in": bound <= value <= bound_hi
    bool passed = false;
    std::string detail;
};

Check make_check(std::string name, double value, std::string relation, double bound,
                 double bound_hi = 0.0, std::string detail = "");

struct EigenRow {
    std::string run;
    int index = 0;
    cplx lambda;
    cplx continuous;
    double residual = 0.0;
    double threshold = 0.0;
};

//! Samples of unit-normalized eigenfunctions, one block per run and pair.
struct EigenfunctionBlock {
    std::string run;
    int pair = 0;
    cplx lambda;
    Mat coords; // samples x coord_names.size()
    CVec values;
};

struct ExperimentResult {
    ExperimentConfig config;
    std::vector<Check> checks;
    nlohmann::json details = nlohmann::json::object();
    std::vector<EigenRow> eigenvalues;
    std::vector<std::string> coord_names;
    std::vector<EigenfunctionBlock> eigenfunctions;
    Trajectory sample_path;
    double runtime_seconds = 0.0;

    bool passed() const;
};

ExperimentResult run_experiment(const ExperimentConfig& config);

//! report.json content (no timestamps or timings).
nlohmann::json report_json(const ExperimentResult& r);
//! metadata.json content; its "config" member reruns the experiment.
nlohmann::json metadata_json(const ExperimentResult& r);
//! Writes eigenvalues.csv, eigenfunctions.csv, trajectory.csv (+ .json sidecar),
//! report.json and metadata.json into dir (created if missing).
void write_artifacts(const ExperimentResult& r, const std::string& dir);
void write_trajectory_csv(const Trajectory& t, const std::string& path, const nlohmann::json& extra);

//! Reference spectrum of the experiment's default setting as JSON.
nlohmann::json experiment_oracle(const ExperimentConfig& config);

enum ExitCode { exit_pass = 0, exit_tolerance = 1, exit_usage = 2, exit_numerical = 3 };
ExitCode exit_code_for(const Error& e);

} // namespace krds
