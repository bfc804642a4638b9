#include "evobs/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "evobs/errors.hpp"

namespace evobs {

using nlohmann::json;

namespace {

ScalarFieldSpec parse_scalar_spec(const json& j, const std::string& what) {
    if (!j.is_object() || !j.contains("form"))
        throw ConfigError(what + ": expected an object with 'form'");
    ScalarFieldSpec s;
    s.form = j.at("form").get<std::string>();
    if (!scalar_form_known(s.form))
        throw ConfigError(what + ": unknown form '" + s.form + "'");
    if (j.contains("params")) s.params = j.at("params").get<std::vector<double>>();
    return s;
}

json scalar_spec_json(const ScalarFieldSpec& s) {
    return json{{"form", s.form}, {"params", s.params}};
}

} // namespace

RunConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }

    RunConfig cfg;
    try {
        const auto& grid = j.at("grid");
        cfg.dim = grid.at("dim").get<int>();
        if (cfg.dim != 1 && cfg.dim != 2) throw ConfigError("grid.dim must be 1 or 2");
        const auto extents = grid.at("extents");
        const auto counts = grid.at("n");
        if (static_cast<int>(extents.size()) != cfg.dim ||
            static_cast<int>(counts.size()) != cfg.dim)
            throw ConfigError("grid.extents / grid.n must have one entry per axis");
        for (int k = 0; k < cfg.dim; ++k) {
            cfg.lo[k] = extents.at(k).at(0).get<double>();
            cfg.hi[k] = extents.at(k).at(1).get<double>();
            cfg.n[k] = counts.at(k).get<int>();
            if (!(cfg.hi[k] > cfg.lo[k])) throw ConfigError("degenerate grid extents");
            if (cfg.n[k] < 3) throw ConfigError("grid.n must be >= 3 per axis");
        }

        if (j.contains("metric")) {
            const auto& m = j.at("metric");
            const std::string kind = m.value("kind", "identity");
            if (kind == "identity") {
                cfg.metric.kind = MetricSpec::Kind::identity;
            } else if (kind == "diagonal" || kind == "full") {
                cfg.metric.kind = kind == "diagonal" ? MetricSpec::Kind::diagonal
                                                     : MetricSpec::Kind::full;
                for (const auto& e : m.at("entries"))
                    cfg.metric.entries.push_back(parse_scalar_spec(e, "metric entry"));
            } else {
                throw ConfigError("metric.kind must be identity, diagonal or full");
            }
        }

        if (j.contains("psi")) cfg.psi = parse_scalar_spec(j.at("psi"), "psi");
        if (j.contains("q") && !j.at("q").is_null())
            cfg.q = parse_scalar_spec(j.at("q"), "q");
        if (j.contains("p") && !j.at("p").is_null())
            cfg.p = parse_scalar_spec(j.at("p"), "p");

        const auto& time = j.at("time");
        cfg.horizon = time.at("horizon").get<double>();
        cfg.steps = time.at("steps").get<int>();
        cfg.method = time.value("method", "spectral");
        if (!(cfg.horizon > 0.0)) throw ConfigError("time.horizon must be positive");
        if (cfg.steps < 1) throw ConfigError("time.steps must be >= 1");
        if (cfg.method != "spectral" && cfg.method != "stepper")
            throw ConfigError("time.method must be spectral or stepper");

        if (j.contains("lambdas")) {
            const auto& l = j.at("lambdas");
            if (l.contains("multipliers"))
                cfg.lambda_multipliers = l.at("multipliers").get<std::vector<double>>();
            if (l.contains("indices"))
                cfg.lambda_indices = l.at("indices").get<std::vector<int>>();
        }
        if (j.contains("thetas")) cfg.thetas = j.at("thetas").get<std::vector<double>>();
        for (double th : cfg.thetas)
            if (!(th > 1.0)) throw ConfigError("thetas must all exceed 1");
        if (j.contains("o4_lambdas"))
            cfg.o4_lambdas = j.at("o4_lambdas").get<std::vector<double>>();

        const auto& sampling = j.at("sampling");
        cfg.sample_count = sampling.at("count").get<int>();
        if (!sampling.contains("seed"))
            throw ConfigError("sampling.seed is required for reproducibility");
        cfg.seed = sampling.at("seed").get<std::uint64_t>();
        cfg.mode_cutoff = sampling.value("mode_cutoff", 30);
        if (cfg.sample_count < 1) throw ConfigError("sampling.count must be >= 1");
        if (cfg.mode_cutoff < 1) throw ConfigError("sampling.mode_cutoff must be >= 1");

        if (j.contains("regions")) {
            const auto& r = j.at("regions");
            cfg.interior_fraction = r.value("interior_fraction", cfg.interior_fraction);
            cfg.spacetime_fraction = r.value("spacetime_fraction", cfg.spacetime_fraction);
            cfg.spacetime_seed = r.value("spacetime_seed", cfg.spacetime_seed);
            if (!(cfg.interior_fraction > 0.0 && cfg.interior_fraction < 1.0))
                throw ConfigError("regions.interior_fraction must be in (0,1)");
            if (!(cfg.spacetime_fraction > 0.0 && cfg.spacetime_fraction <= 1.0))
                throw ConfigError("regions.spacetime_fraction must be in (0,1]");
        }

        if (j.contains("tolerances"))
            cfg.headroom = j.at("tolerances").value("headroom", 1.0);
        if (j.contains("output")) cfg.dump_fields = j.at("output").value("dump_fields", false);
        cfg.workers = j.value("workers", 1);
        if (cfg.workers < 1) throw ConfigError("workers must be >= 1");
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config field error: ") + e.what());
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string canonical_config(const RunConfig& cfg) {
    json j;
    j["grid"]["dim"] = cfg.dim;
    for (int k = 0; k < cfg.dim; ++k) {
        j["grid"]["extents"].push_back({cfg.lo[k], cfg.hi[k]});
        j["grid"]["n"].push_back(cfg.n[k]);
    }
    j["metric"]["kind"] = cfg.metric.kind == MetricSpec::Kind::identity
                              ? "identity"
                              : (cfg.metric.kind == MetricSpec::Kind::diagonal ? "diagonal"
                                                                               : "full");
    for (const auto& e : cfg.metric.entries)
        j["metric"]["entries"].push_back(scalar_spec_json(e));
    j["psi"] = scalar_spec_json(cfg.psi);
    j["q"] = cfg.q ? scalar_spec_json(*cfg.q) : json(nullptr);
    j["p"] = cfg.p ? scalar_spec_json(*cfg.p) : json(nullptr);
    j["time"] = {{"horizon", cfg.horizon}, {"steps", cfg.steps}, {"method", cfg.method}};
    j["lambdas"] = {{"multipliers", cfg.lambda_multipliers}, {"indices", cfg.lambda_indices}};
    j["thetas"] = cfg.thetas;
    j["o4_lambdas"] = cfg.o4_lambdas;
    j["sampling"] = {{"count", cfg.sample_count},
                     {"seed", cfg.seed},
                     {"mode_cutoff", cfg.mode_cutoff}};
    j["regions"] = {{"interior_fraction", cfg.interior_fraction},
                    {"spacetime_fraction", cfg.spacetime_fraction},
                    {"spacetime_seed", cfg.spacetime_seed}};
    j["tolerances"] = {{"headroom", cfg.headroom}};
    // workers and output options are execution details: they must not change
    // the experiment identity (reruns with different --workers are identical)
    return j.dump();
}

std::string config_hash(const RunConfig& cfg) {
    // FNV-1a over the canonical serialization.
    const std::string s = canonical_config(cfg);
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    std::ostringstream out;
    out << std::hex << h;
    return out.str();
}

} // namespace evobs
