#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "krds/experiments.hpp"

namespace {

void print_checks(const krds::ExperimentResult& r) {
    for (const auto& c : r.checks) {
        std::cout << (c.passed ? "PASS " : "FAIL ") << r.config.name << ' ' << c.name << " value=" << c.value
                  << ' ' << c.relation << ' ' << c.bound;
        if (c.relation == "in") std::cout << ".." << c.bound_hi;
        std::cout << '\n';
    }
}

krds::ExperimentConfig load_config(const std::string& name, const std::string& path) {
    if (path.empty()) return krds::default_config(name);
    std::ifstream in(path);
    if (!in) throw krds::InvalidArgument("cannot open config file " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw krds::InvalidArgument("config file " + path + ": " + e.what());
    }
    return krds::config_from_json(j, name);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stochastic Koopman / DMD experiment runner"};
    app.require_subcommand(1);

    std::string exp, config_path, out_dir;
    std::uint64_t seed = 0;

    auto* run = app.add_subcommand("run", "run an experiment and write its artifacts");
    run->add_option("experiment", exp, "experiment name")->required();
    run->add_option("--config", config_path, "JSON config (or a previous metadata.json)");
    auto* seed_opt = run->add_option("--seed", seed, "master seed");
    run->add_option("--out", out_dir, "output directory");

    auto* list = app.add_subcommand("list", "list experiments");

    auto* oracle = app.add_subcommand("oracle", "print the reference spectrum of an experiment");
    oracle->add_option("experiment", exp, "experiment name")->required();
    oracle->add_option("--config", config_path, "JSON config");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : krds::exit_usage;
    }

    try {
        if (list->parsed()) {
            for (const auto& n : krds::experiment_names()) std::cout << n << '\n';
            return krds::exit_pass;
        }
        if (!krds::is_experiment(exp)) {
            std::cerr << "error: unknown experiment '" << exp << "'; known:";
            for (const auto& n : krds::experiment_names()) std::cerr << ' ' << n;
            std::cerr << '\n';
            return krds::exit_usage;
        }
        auto cfg = load_config(exp, config_path);
        if (oracle->parsed()) {
            std::cout << krds::experiment_oracle(cfg).dump(2) << '\n';
            return krds::exit_pass;
        }
        if (*seed_opt) cfg.seed = seed;
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (cfg.out_dir.empty()) cfg.out_dir = "out/" + exp;
        auto res = krds::run_experiment(cfg);
        krds::write_artifacts(res, cfg.out_dir);
        print_checks(res);
        std::cout << (res.passed() ? "PASS " : "FAIL ") << exp << " (" << res.runtime_seconds << " s) -> "
                  << cfg.out_dir << '\n';
        return res.passed() ? krds::exit_pass : krds::exit_tolerance;
    } catch (const krds::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return krds::exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return krds::exit_numerical;
    }
}
