#pragma once

#include <string>
#include <vector>

#include "evobs/config.hpp"

namespace evobs {

/// One verified statement in a suite run. `display` is the tag of the
/// inequality or identity the record checks; informational records never gate
/// the overall result.
struct CheckRecord {
    std::string name;
    std::string display;
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0;
    double residual = 0.0;
    double tolerance = 0.0;
    bool pass = true;
    bool informational = false;
};

struct SuiteReport {
    std::string command;
    RunConfig config;
    std::vector<CheckRecord> records;

    bool overall_pass() const;
    void add(CheckRecord rec);
    void merge(const SuiteReport& other);
};

/// JSON emission. Deterministic for a fixed (config, seed) apart from the
/// meta.timestamp field.
std::string report_json(const SuiteReport& rep);
void write_report(const SuiteReport& rep, const std::string& path);
void write_report_csv(const SuiteReport& rep, const std::string& path);

/// Error document for the CLI's failure path.
std::string error_json(const std::string& kind, const std::string& message);

} // namespace evobs
