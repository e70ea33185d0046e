// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "softcap/engine.hpp"
#include "softcap/models.hpp"

namespace softcap::cli {

/// Raised for any schema or value problem; the message names the offending
/// field path.  Syntax errors keep the parser's line/column message.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct VerifierSpec {
    std::string name;
    std::int64_t z_max = 0;   // assumptions; 0 = model validation default
    std::int64_t k_max = 64;  // assumptions: visit depth at size 1
    std::vector<std::int64_t> x_list;  // doob
    std::int64_t k_hi = 5;             // geometry
    double delta = 0.0;                // return_time
    std::int64_t c_max = 0;            // return_time; 0 = model max jump
    std::vector<std::int64_t> k_list;  // scan
    std::int64_t z0_offset = -1;       // scan: start at K + offset
};

struct OracleSpec {
    bool present = false;
    std::int64_t state_cap = 0;
    double tolerance = 1e-12;
};

struct RunConfig {
    ModelSpec model;
    bool has_ensemble = false;
    EnsembleConfig ensemble;  // parallelism 0 = not set in the file
    bool has_verifiers = false;
    std::vector<VerifierSpec> verifiers;
    OracleSpec oracle;
};

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& obj, const std::string& path,
                           std::initializer_list<const char*> allowed) {
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* key : allowed) {
            if (item.key() == key) known = true;
        }
        if (!known) {
            throw ConfigError("unknown key '" + path + "." + item.key() + "'");
        }
    }
}

inline const json& require(const json& obj, const std::string& path, const char* key) {
    const auto it = obj.find(key);
    if (it == obj.end()) {
        throw ConfigError("missing required key '" + path + "." + key + "'");
    }
    return *it;
}

inline std::int64_t as_int(const json& v, const std::string& path) {
    if (!v.is_number_integer()) {
        throw ConfigError("'" + path + "' must be an integer");
    }
    return v.get<std::int64_t>();
}

inline std::uint64_t as_uint(const json& v, const std::string& path) {
    if (!(v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0))) {
        throw ConfigError("'" + path + "' must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
}

inline double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError("'" + path + "' must be a number");
    return v.get<double>();
}

inline bool as_bool(const json& v, const std::string& path) {
    if (!v.is_boolean()) throw ConfigError("'" + path + "' must be a boolean");
    return v.get<bool>();
}

inline std::vector<std::int64_t> as_int_list(const json& v, const std::string& path) {
    if (!v.is_array() || v.empty()) {
        throw ConfigError("'" + path + "' must be a non-empty array of integers");
    }
    std::vector<std::int64_t> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(as_int(v[i], path + "[" + std::to_string(i) + "]"));
    }
    return out;
}

inline ModelKind kind_from_string(const std::string& s, const std::string& path) {
    if (s == "ratio_birth_death") return ModelKind::ratio_birth_death;
    if (s == "biased_walk") return ModelKind::biased_walk;
    if (s == "moran_toy") return ModelKind::moran_toy;
    if (s == "cell_cycle") return ModelKind::cell_cycle;
    if (s == "symmetric_walk") return ModelKind::symmetric_walk;
    if (s == "counterexample") return ModelKind::counterexample;
    throw ConfigError("'" + path + "' names no cataloged model kind: " + s);
}

inline ModelSpec parse_model(const json& obj) {
    if (!obj.is_object()) throw ConfigError("'model' must be an object");
    ModelSpec spec;
    const json& kind = require(obj, "model", "kind");
    if (!kind.is_string()) throw ConfigError("'model.kind' must be a string");
    spec.kind = kind_from_string(kind.get<std::string>(), "model.kind");
    spec.capacity = as_int(require(obj, "model", "K"), "model.K");
    if (obj.contains("z_max")) spec.z_max = as_int(obj["z_max"], "model.z_max");

    // Kind-specific parameters; anything off-kind is rejected like an
    // unknown key so a misplaced parameter cannot be silently ignored.
    switch (spec.kind) {
        case ModelKind::biased_walk:
            reject_unknown(obj, "model", {"kind", "K", "z_max", "delta"});
            spec.delta = as_number(require(obj, "model", "delta"), "model.delta");
            break;
        case ModelKind::moran_toy: {
            reject_unknown(obj, "model", {"kind", "K", "z_max", "offspring_pmf"});
            const json& pmf = require(obj, "model", "offspring_pmf");
            if (!pmf.is_array() || pmf.empty()) {
                throw ConfigError(
                    "'model.offspring_pmf' must be a non-empty array of [count, prob]");
            }
            for (std::size_t i = 0; i < pmf.size(); ++i) {
                const std::string path =
                    "model.offspring_pmf[" + std::to_string(i) + "]";
                if (!pmf[i].is_array() || pmf[i].size() != 2) {
                    throw ConfigError("'" + path + "' must be a [count, prob] pair");
                }
                spec.offspring_pmf.push_back({as_int(pmf[i][0], path + "[0]"),
                                              as_number(pmf[i][1], path + "[1]")});
            }
            break;
        }
        case ModelKind::cell_cycle: {
            reject_unknown(obj, "model", {"kind", "K", "z_max", "p_die"});
            const json& table = require(obj, "model", "p_die");
            if (!table.is_array() || table.empty()) {
                throw ConfigError("'model.p_die' must be a non-empty array of numbers");
            }
            for (std::size_t i = 0; i < table.size(); ++i) {
                spec.p_die.push_back(
                    as_number(table[i], "model.p_die[" + std::to_string(i) + "]"));
            }
            break;
        }
        case ModelKind::counterexample:
            reject_unknown(obj, "model", {"kind", "K", "z_max", "decay_base"});
            if (obj.contains("decay_base")) {
                spec.decay_base = as_number(obj["decay_base"], "model.decay_base");
            }
            break;
        default:
            reject_unknown(obj, "model", {"kind", "K", "z_max"});
            break;
    }
    return spec;
}

inline EnsembleConfig parse_ensemble(const json& obj) {
    if (!obj.is_object()) throw ConfigError("'ensemble' must be an object");
    reject_unknown(obj, "ensemble",
                   {"reps", "step_budget", "z0", "master_seed", "parallelism",
                    "record_full_traces", "record_sizes"});
    EnsembleConfig cfg;
    cfg.reps = as_int(require(obj, "ensemble", "reps"), "ensemble.reps");
    cfg.step_budget =
        as_int(require(obj, "ensemble", "step_budget"), "ensemble.step_budget");
    cfg.z0 = as_int(require(obj, "ensemble", "z0"), "ensemble.z0");
    cfg.master_seed = obj.contains("master_seed")
                          ? as_uint(obj["master_seed"], "ensemble.master_seed")
                          : 1;
    cfg.parallelism =
        obj.contains("parallelism") ? as_int(obj["parallelism"], "ensemble.parallelism") : 0;
    cfg.record_full_traces =
        obj.contains("record_full_traces")
            ? as_bool(obj["record_full_traces"], "ensemble.record_full_traces")
            : false;
    cfg.record_sizes = obj.contains("record_sizes")
                           ? as_bool(obj["record_sizes"], "ensemble.record_sizes")
                           : false;
    return cfg;
}

inline VerifierSpec parse_verifier(const json& obj, const std::string& path) {
    if (!obj.is_object()) throw ConfigError("'" + path + "' must be an object");
    const json& name = require(obj, path, "name");
    if (!name.is_string()) throw ConfigError("'" + path + ".name' must be a string");
    VerifierSpec v;
    v.name = name.get<std::string>();
    if (v.name == "assumptions") {
        reject_unknown(obj, path, {"name", "z_max", "k_max"});
        if (obj.contains("z_max")) v.z_max = as_int(obj["z_max"], path + ".z_max");
        if (obj.contains("k_max")) v.k_max = as_int(obj["k_max"], path + ".k_max");
    } else if (v.name == "extinction" || v.name == "hit_zero") {
        reject_unknown(obj, path, {"name"});
    } else if (v.name == "doob") {
        reject_unknown(obj, path, {"name", "x_list"});
        v.x_list = as_int_list(require(obj, path, "x_list"), path + ".x_list");
    } else if (v.name == "geometry") {
        reject_unknown(obj, path, {"name", "k_hi"});
        if (obj.contains("k_hi")) v.k_hi = as_int(obj["k_hi"], path + ".k_hi");
    } else if (v.name == "return_time") {
        reject_unknown(obj, path, {"name", "delta", "c_max"});
        v.delta = as_number(require(obj, path, "delta"), path + ".delta");
        if (obj.contains("c_max")) v.c_max = as_int(obj["c_max"], path + ".c_max");
    } else if (v.name == "scan") {
        reject_unknown(obj, path, {"name", "K_list", "z0_offset"});
        v.k_list = as_int_list(require(obj, path, "K_list"), path + ".K_list");
        if (obj.contains("z0_offset")) {
            v.z0_offset = as_int(obj["z0_offset"], path + ".z0_offset");
        }
    } else {
        throw ConfigError("'" + path + ".name' names no verifier: " + v.name);
    }
    return v;
}

inline OracleSpec parse_oracle(const json& obj) {
    if (!obj.is_object()) throw ConfigError("'oracle' must be an object");
    reject_unknown(obj, "oracle", {"state_cap", "tolerance"});
    OracleSpec o;
    o.present = true;
    o.state_cap = as_int(require(obj, "oracle", "state_cap"), "oracle.state_cap");
    if (obj.contains("tolerance")) {
        o.tolerance = as_number(obj["tolerance"], "oracle.tolerance");
    }
    return o;
}

}  // namespace detail

inline RunConfig parse_config(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(e.what());  // carries line/column
    }
    if (!doc.is_object()) throw ConfigError("config root must be an object");
    detail::reject_unknown(doc, "$", {"model", "ensemble", "verifiers", "oracle"});

    RunConfig cfg;
    cfg.model = detail::parse_model(detail::require(doc, "$", "model"));
    if (doc.contains("ensemble")) {
        cfg.has_ensemble = true;
        cfg.ensemble = detail::parse_ensemble(doc["ensemble"]);
    }
    if (doc.contains("verifiers")) {
        const nlohmann::json& list = doc["verifiers"];
        if (!list.is_array()) throw ConfigError("'verifiers' must be an array");
        cfg.has_verifiers = true;
        for (std::size_t i = 0; i < list.size(); ++i) {
            cfg.verifiers.push_back(detail::parse_verifier(
                list[i], "verifiers[" + std::to_string(i) + "]"));
        }
    }
    if (doc.contains("oracle")) cfg.oracle = detail::parse_oracle(doc["oracle"]);
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return parse_config(text);
}

}  // namespace softcap::cli
