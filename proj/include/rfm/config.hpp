#pragma once

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "rfm/imex.hpp"
#include "rfm/problems.hpp"
#include "rfm/spectral.hpp"

namespace rfm {

/// Raised for any config defect: unknown keys, wrong types, bad values,
/// inconsistent combinations. The message starts with a stable machine
/// -readable tag ("unknown_key:", "bad_type:", "bad_value:", "conflict:",
/// "missing_key:", "io:") followed by a human-readable detail.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One run request as read from a JSON file. Unset numeric fields keep their
/// sentinel (0 / negative / empty) and are filled from the problem catalog
/// during resolve(). String enums stay strings here so the echoed config is
/// exactly what was validated.
struct RunConfig {
    std::string problem;
    std::map<std::string, double> params; // problem parameter overrides

    std::vector<int> subdivisions;  // per dim; empty = catalog default
    int features_per_subdomain = 0; // 0 = catalog default
    int collocation_per_dim = 0;    // 0 = catalog default
    double weight_range = 0.0;      // 0 = catalog default

    std::uint64_t seed = 1;
    double tau = 1e-16;
    std::string activation = "tanh";
    std::string pou = "psi_a";
    std::string tableau = "ars443";

    double t_final = -1.0; // negative = catalog default
    double dt = 0.0;       // exactly one of dt / num_steps may be set
    int num_steps = 0;
    std::vector<double> dt_list; // converge; empty = catalog default list

    std::vector<double> snapshot_times;
    std::string output_dir = "out";
    RowWeights row_weights{};
    SpectralConfig oracle{};
};

namespace detail {

inline ConfigError key_error(const std::string& tag, const std::string& key,
                             const std::string& detail) {
    return ConfigError(tag + ": " + key + (detail.empty() ? "" : " (" + detail + ")"));
}

inline double as_number(const nlohmann::json& v, const std::string& key) {
    if (!v.is_number()) throw key_error("bad_type", key, "expected a number");
    return v.get<double>();
}

inline int as_count(const nlohmann::json& v, const std::string& key) {
    if (!v.is_number_integer() || v.get<long long>() < 1)
        throw key_error("bad_type", key, "expected a positive integer");
    return static_cast<int>(v.get<long long>());
}

inline std::string as_string(const nlohmann::json& v, const std::string& key) {
    if (!v.is_string()) throw key_error("bad_type", key, "expected a string");
    return v.get<std::string>();
}

inline std::vector<double> as_number_list(const nlohmann::json& v, const std::string& key) {
    if (!v.is_array()) throw key_error("bad_type", key, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) out.push_back(as_number(e, key));
    return out;
}

} // namespace detail

/// Parse a config object. A solve/converge manifest ({"config": {...},
/// "results": {...}}) is accepted directly: the embedded config is used and
/// the result block is ignored, so re-running a manifest reproduces the run.
inline RunConfig parse_config(const nlohmann::json& input) {
    if (!input.is_object()) throw ConfigError("bad_type: top level (expected a JSON object)");
    const nlohmann::json& j = input.contains("config") ? input.at("config") : input;
    if (!j.is_object()) throw ConfigError("bad_type: config (expected a JSON object)");

    RunConfig cfg;
    for (const auto& [key, value] : j.items()) {
        if (key == "problem") {
            cfg.problem = detail::as_string(value, key);
        } else if (key == "params") {
            if (!value.is_object())
                throw detail::key_error("bad_type", key, "expected an object of numbers");
            for (const auto& [pk, pv] : value.items())
                cfg.params[pk] = detail::as_number(pv, "params." + pk);
        } else if (key == "subdivisions") {
            if (value.is_number_integer()) {
                cfg.subdivisions = {detail::as_count(value, key)};
            } else if (value.is_array()) {
                for (const auto& e : value) cfg.subdivisions.push_back(detail::as_count(e, key));
                if (cfg.subdivisions.empty())
                    throw detail::key_error("bad_value", key, "must not be empty");
            } else {
                throw detail::key_error("bad_type", key, "expected integer or integer array");
            }
        } else if (key == "features_per_subdomain") {
            cfg.features_per_subdomain = detail::as_count(value, key);
        } else if (key == "collocation_per_dim") {
            cfg.collocation_per_dim = detail::as_count(value, key);
            if (cfg.collocation_per_dim < 2)
                throw detail::key_error("bad_value", key, "must be >= 2");
        } else if (key == "weight_range") {
            cfg.weight_range = detail::as_number(value, key);
            if (!(cfg.weight_range > 0.0))
                throw detail::key_error("bad_value", key, "must be > 0");
        } else if (key == "seed") {
            if (value.is_number_unsigned()) {
                cfg.seed = value.get<std::uint64_t>();
            } else if (value.is_number_integer() && value.get<long long>() >= 0) {
                cfg.seed = static_cast<std::uint64_t>(value.get<long long>());
            } else {
                throw detail::key_error("bad_type", key, "expected a non-negative integer");
            }
        } else if (key == "tau") {
            cfg.tau = detail::as_number(value, key);
            if (!(cfg.tau >= 0.0) || !std::isfinite(cfg.tau))
                throw detail::key_error("bad_value", key, "must be finite and >= 0");
        } else if (key == "activation") {
            cfg.activation = detail::as_string(value, key);
        } else if (key == "pou") {
            cfg.pou = detail::as_string(value, key);
        } else if (key == "tableau") {
            cfg.tableau = detail::as_string(value, key);
        } else if (key == "t_final") {
            cfg.t_final = detail::as_number(value, key);
            if (!(cfg.t_final >= 0.0))
                throw detail::key_error("bad_value", key, "must be >= 0");
        } else if (key == "dt") {
            cfg.dt = detail::as_number(value, key);
            if (!(cfg.dt > 0.0)) throw detail::key_error("bad_value", key, "must be > 0");
        } else if (key == "num_steps") {
            cfg.num_steps = detail::as_count(value, key);
        } else if (key == "dt_list") {
            cfg.dt_list = detail::as_number_list(value, key);
            for (double d : cfg.dt_list)
                if (!(d > 0.0)) throw detail::key_error("bad_value", key, "entries must be > 0");
        } else if (key == "snapshot_times") {
            cfg.snapshot_times = detail::as_number_list(value, key);
            for (double t : cfg.snapshot_times)
                if (!(t >= 0.0)) throw detail::key_error("bad_value", key, "entries must be >= 0");
        } else if (key == "output_dir") {
            cfg.output_dir = detail::as_string(value, key);
            if (cfg.output_dir.empty())
                throw detail::key_error("bad_value", key, "must not be empty");
        } else if (key == "row_weights") {
            if (!value.is_object())
                throw detail::key_error("bad_type", key, "expected an object");
            for (const auto& [wk, wv] : value.items()) {
                const double w = detail::as_number(wv, key + "." + wk);
                if (!(w > 0.0))
                    throw detail::key_error("bad_value", key + "." + wk, "must be > 0");
                if (wk == "collocation") cfg.row_weights.collocation = w;
                else if (wk == "boundary") cfg.row_weights.boundary = w;
                else if (wk == "continuity") cfg.row_weights.continuity = w;
                else throw detail::key_error("unknown_key", key + "." + wk, "");
            }
        } else if (key == "oracle") {
            if (!value.is_object())
                throw detail::key_error("bad_type", key, "expected an object");
            for (const auto& [ok, ov] : value.items()) {
                if (ok == "modes") cfg.oracle.modes = detail::as_count(ov, key + ".modes");
                else if (ok == "dt_ref") {
                    cfg.oracle.dt_ref = detail::as_number(ov, key + ".dt_ref");
                    if (!(cfg.oracle.dt_ref > 0.0))
                        throw detail::key_error("bad_value", key + ".dt_ref", "must be > 0");
                } else if (ok == "integrator") {
                    cfg.oracle.integrator = detail::as_string(ov, key + ".integrator");
                } else {
                    throw detail::key_error("unknown_key", key + "." + ok, "");
                }
            }
        } else {
            throw detail::key_error("unknown_key", key, "");
        }
    }

    if (cfg.problem.empty()) throw ConfigError("missing_key: problem");
    if (cfg.dt > 0.0 && cfg.num_steps > 0)
        throw ConfigError("conflict: dt and num_steps are mutually exclusive");
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("io: cannot open config file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("bad_type: config file is not valid JSON (") + e.what() +
                          ")");
    }
    return parse_config(j);
}

/// A config with every field made concrete: catalog defaults applied, enums
/// parsed, the problem instantiated with its overrides.
struct ResolvedRun {
    RunConfig effective; // fully-populated copy (what manifests echo)
    ProblemSpec problem;
    Activation activation = Activation::Tanh;
    Pou pou = Pou::PsiA;
    Tableau tableau;
    SolveSettings settings; // dt left at the single-run value
    std::vector<double> dt_list;
};

/// Exact-division check used by the solve path: K dt must hit T within 1e-12.
inline bool divides_t_final(double t_final, double dt) {
    const double k = std::round(t_final / dt);
    return std::abs(k * dt - t_final) <= 1e-12;
}

inline ResolvedRun resolve(const RunConfig& in) {
    ResolvedRun r;
    try {
        r.problem = make_problem(in.problem, in.params);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("bad_value: problem (") + e.what() + ")");
    }

    RunConfig cfg = in;
    const ProblemDefaults& d = r.problem.defaults;
    if (cfg.subdivisions.empty()) {
        cfg.subdivisions.assign(r.problem.dim, d.m_per_dim);
    } else if (cfg.subdivisions.size() == 1 && r.problem.dim > 1) {
        cfg.subdivisions.assign(r.problem.dim, cfg.subdivisions[0]);
    } else if (static_cast<int>(cfg.subdivisions.size()) != r.problem.dim) {
        throw ConfigError("bad_value: subdivisions (length must match problem dimension)");
    }
    if (cfg.features_per_subdomain == 0) cfg.features_per_subdomain = d.j_n;
    if (cfg.collocation_per_dim == 0) cfg.collocation_per_dim = d.q_per_dim;
    if (cfg.weight_range == 0.0) cfg.weight_range = d.r_m;
    if (cfg.t_final < 0.0) cfg.t_final = d.t_final;
    if (cfg.dt_list.empty()) cfg.dt_list = d.dt_list;
    cfg.params = r.problem.params; // echo the realized parameter set

    if (cfg.num_steps > 0) {
        cfg.dt = cfg.t_final / cfg.num_steps;
        cfg.num_steps = 0;
    }

    try {
        r.activation = activation_from_string(cfg.activation);
        r.pou = pou_from_string(cfg.pou);
        r.tableau = tableau_by_name(cfg.tableau);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("bad_value: ") + e.what());
    }

    r.settings.dt = cfg.dt; // 0 until the command picks one (solve requires it)
    r.settings.t_final = cfg.t_final;
    r.settings.q_per_dim = cfg.collocation_per_dim;
    r.settings.tau = cfg.tau;
    r.settings.tableau = r.tableau;
    r.settings.weights = cfg.row_weights;
    r.settings.snapshot_times = cfg.snapshot_times;
    r.dt_list = cfg.dt_list;
    r.effective = std::move(cfg);
    return r;
}

inline std::shared_ptr<const FeatureBank> make_bank(const ResolvedRun& r) {
    return std::make_shared<FeatureBank>(
        sample_bank(decompose(r.problem.domain, r.effective.subdivisions),
                    r.effective.features_per_subdomain, r.effective.weight_range, r.activation,
                    r.pou, r.effective.seed));
}

/// JSON echo of the effective (fully resolved) config. Feeding this object
/// back through parse_config/resolve reproduces the identical run; doubles
/// round-trip exactly through the serializer.
inline nlohmann::json config_json(const RunConfig& cfg) {
    nlohmann::json j;
    j["problem"] = cfg.problem;
    if (!cfg.params.empty()) j["params"] = cfg.params;
    j["subdivisions"] = cfg.subdivisions;
    j["features_per_subdomain"] = cfg.features_per_subdomain;
    j["collocation_per_dim"] = cfg.collocation_per_dim;
    j["weight_range"] = cfg.weight_range;
    j["seed"] = cfg.seed;
    j["tau"] = cfg.tau;
    j["activation"] = cfg.activation;
    j["pou"] = cfg.pou;
    j["tableau"] = cfg.tableau;
    j["t_final"] = cfg.t_final;
    if (cfg.dt > 0.0) j["dt"] = cfg.dt;
    if (!cfg.dt_list.empty()) j["dt_list"] = cfg.dt_list;
    if (!cfg.snapshot_times.empty()) j["snapshot_times"] = cfg.snapshot_times;
    j["output_dir"] = cfg.output_dir;
    j["row_weights"] = {{"collocation", cfg.row_weights.collocation},
                        {"boundary", cfg.row_weights.boundary},
                        {"continuity", cfg.row_weights.continuity}};
    j["oracle"] = {{"modes", cfg.oracle.modes},
                   {"dt_ref", cfg.oracle.dt_ref},
                   {"integrator", cfg.oracle.integrator}};
    return j;
}

} // namespace rfm
