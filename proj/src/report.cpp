#include "evobs/report.hpp"

#include <chrono>
#include <fstream>

#include <json.hpp>

#include "evobs/errors.hpp"

namespace evobs {

using nlohmann::json;

bool SuiteReport::overall_pass() const {
    for (const auto& r : records)
        if (!r.informational && !r.pass) return false;
    return true;
}

void SuiteReport::add(CheckRecord rec) { records.push_back(std::move(rec)); }

void SuiteReport::merge(const SuiteReport& other) {
    records.insert(records.end(), other.records.begin(), other.records.end());
}

std::string report_json(const SuiteReport& rep) {
    json j;
    j["meta"]["command"] = rep.command;
    j["meta"]["config_hash"] = config_hash(rep.config);
    j["meta"]["seed"] = rep.config.seed;
    j["meta"]["grid"] = {{"dim", rep.config.dim},
                         {"n", std::vector<int>(rep.config.n.begin(),
                                                rep.config.n.begin() + rep.config.dim)}};
    j["meta"]["timestamp"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count();
    j["checks"] = json::array();
    for (const auto& r : rep.records) {
        j["checks"].push_back({{"name", r.name},
                               {"display", r.display},
                               {"lhs", r.lhs},
                               {"rhs", r.rhs},
                               {"margin", r.margin},
                               {"residual", r.residual},
                               {"tolerance", r.tolerance},
                               {"pass", r.pass},
                               {"informational", r.informational}});
    }
    j["overall_pass"] = rep.overall_pass();
    return j.dump(2) + "\n";
}

void write_report(const SuiteReport& rep, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    out << report_json(rep);
}

void write_report_csv(const SuiteReport& rep, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    out << "name,display,lhs,rhs,margin,residual,tolerance,pass,informational\n";
    out.precision(17);
    for (const auto& r : rep.records)
        out << r.name << ',' << r.display << ',' << r.lhs << ',' << r.rhs << ',' << r.margin
            << ',' << r.residual << ',' << r.tolerance << ',' << (r.pass ? 1 : 0) << ','
            << (r.informational ? 1 : 0) << '\n';
}

std::string error_json(const std::string& kind, const std::string& message) {
    json j;
    j["error"] = {{"kind", kind}, {"message", message}};
    return j.dump() + "\n";
}

} // namespace evobs
