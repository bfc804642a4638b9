// Command-line driver: config-driven verification experiments with JSON/CSV
// reports. Exit codes: 0 all checks pass, 1 a check failed, 2 configuration
// error, 3 numerical abort.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "evobs/errors.hpp"
#include "evobs/runner.hpp"

namespace fs = std::filesystem;
using namespace evobs;

namespace {

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v ? std::string(v) : fallback;
}

int run_command(const std::string& command, const std::string& config_path,
                const std::string& outdir, const std::string& seed_override,
                const std::string& workers_override) {
    RunConfig cfg = load_config(config_path);
    if (!seed_override.empty()) cfg.seed = std::stoull(seed_override);
    if (!workers_override.empty()) cfg.workers = std::stoi(workers_override);
    if (cfg.workers < 1) throw ConfigError("workers must be >= 1");

    if (!outdir.empty()) fs::create_directories(outdir);

    const Workspace ws = build_workspace(cfg);

    SuiteReport rep;
    if (command == "check-pseudoconvex")
        rep = run_check_pseudoconvex(ws, outdir);
    else if (command == "simulate")
        rep = run_simulate(ws, outdir);
    else if (command == "verify-energy")
        rep = run_verify_energy(ws, outdir);
    else if (command == "verify-continuation")
        rep = run_verify_continuation(ws, outdir);
    else if (command == "observability-scan")
        rep = run_observability_scan(ws, outdir);
    else if (command == "full-suite")
        rep = run_full_suite(ws, outdir);
    else
        throw ConfigError("unknown subcommand '" + command + "'");

    if (!outdir.empty()) {
        write_report(rep, (fs::path(outdir) / "report.json").string());
        write_report_csv(rep, (fs::path(outdir) / "report.csv").string());
    } else {
        std::cout << report_json(rep);
    }

    int failed = 0;
    for (const auto& r : rep.records)
        if (!r.informational && !r.pass) {
            ++failed;
            std::cerr << "FAIL " << r.name << " " << r.display << " margin=" << r.margin
                      << " residual=" << r.residual << "\n";
        }
    std::cerr << rep.command << ": " << rep.records.size() << " records, " << failed
              << " failing\n";
    return failed == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical verification toolkit for evolution-equation "
                 "observability and continuation estimates"};
    app.require_subcommand(1);

    std::string config_path = env_or("EVOBS_CONFIG", "");
    std::string outdir = env_or("EVOBS_OUT", "");
    std::string seed = env_or("EVOBS_SEED", "");
    std::string workers = env_or("EVOBS_WORKERS", "");

    const std::vector<std::string> commands = {"check-pseudoconvex", "simulate",
                                               "verify-energy",      "verify-continuation",
                                               "observability-scan", "full-suite"};
    std::string chosen;
    for (const auto& name : commands) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "config JSON path");
        sub->add_option("--out", outdir, "report output directory");
        sub->add_option("--seed", seed, "override the sampling seed");
        sub->add_option("--workers", workers, "worker thread count");
        sub->callback([&chosen, name] { chosen = name; });
    }

    CLI11_PARSE(app, argc, argv);

    try {
        if (config_path.empty()) throw ConfigError("no config given (--config or EVOBS_CONFIG)");
        return run_command(chosen, config_path, outdir, seed, workers);
    } catch (const ConfigError& e) {
        std::cerr << error_json("config", e.what());
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << error_json("numerical", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::cerr << error_json("internal", e.what());
        return 3;
    }
}
