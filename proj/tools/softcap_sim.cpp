// SPDX-License-Identifier: Apache-2.0
//
// softcap_sim: simulate stepwise population dynamics under a soft carrying
// capacity, verify the extinction bounds against ensembles, solve small
// chains exactly, and scan extinction times across capacities.

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "config.hpp"
#include "json_out.hpp"
#include "softcap/absorption.hpp"
#include "softcap/engine.hpp"
#include "softcap/models.hpp"
#include "softcap/report.hpp"
#include "softcap/verify.hpp"

namespace {

using namespace softcap;
using cli::ConfigError;
using cli::RunConfig;
using cli::VerifierSpec;

struct Options {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::int64_t parallelism = 0;  // 0 = not given
    std::string out_dir;
    std::string emit;
};

constexpr const char* kFooter =
    R"(Config schema (JSON object; unknown keys are rejected):
  model:     kind (ratio_birth_death|biased_walk|moran_toy|cell_cycle|
             symmetric_walk|counterexample), K, z_max?, and per kind:
             delta (biased_walk), offspring_pmf [[count,prob],...] (moran_toy),
             p_die [..] (cell_cycle), decay_base? (counterexample)
  ensemble:  reps, step_budget, z0, master_seed?=1, parallelism?,
             record_full_traces?=false, record_sizes?=false
  verifiers: array of {name, ...}: assumptions {z_max?,k_max?}, extinction,
             doob {x_list}, hit_zero, geometry {k_hi?},
             return_time {delta,c_max?}, scan {K_list,z0_offset?=-1}
  oracle:    state_cap, tolerance?=1e-12

CSV column order (RFC 4180, '.' decimal separator):
  reports.csv  name,theoretical,empirical,stderr,n,verdict
  oracle.csv   z,extinction_prob,expected_steps,escape_prob,certified
  scan.csv     K,z0,mean_time,stderr,n_extinct,n_censored,oracle_mean

Parallelism precedence: --parallelism, then SOFTCAP_SIM_THREADS, then the
config value, then 1.  Exit codes: 0 = no bound violated, 1 = some bound
violated, 2 = usage or config error.)";

std::int64_t env_parallelism() {
    const char* env = std::getenv("SOFTCAP_SIM_THREADS");
    if (env == nullptr || *env == '\0') return 0;
    std::int64_t value = 0;
    const char* end = env + std::string_view(env).size();
    const auto res = std::from_chars(env, end, value);
    if (res.ec != std::errc() || res.ptr != end || value < 1) {
        throw ConfigError(std::string("SOFTCAP_SIM_THREADS must be a positive integer, got '") +
                          env + "'");
    }
    return value;
}

std::int64_t resolve_parallelism(const Options& opts, const RunConfig& cfg) {
    if (opts.parallelism > 0) return opts.parallelism;
    if (const std::int64_t env = env_parallelism(); env > 0) return env;
    if (cfg.has_ensemble && cfg.ensemble.parallelism > 0) return cfg.ensemble.parallelism;
    return 1;
}

EnsembleConfig resolved_ensemble(const Options& opts, const RunConfig& cfg,
                                 const Model& model) {
    if (!cfg.has_ensemble) {
        throw ConfigError("this subcommand requires an 'ensemble' block");
    }
    EnsembleConfig e = cfg.ensemble;
    e.capacity = model.capacity();
    e.parallelism = resolve_parallelism(opts, cfg);
    if (opts.seed_set) e.master_seed = opts.seed;
    return e;
}

void write_file(const std::string& dir, const std::string& name,
                const std::string& bytes) {
    std::filesystem::create_directories(dir);
    const auto path = std::filesystem::path(dir) / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << bytes;
}

// Parameter validation for every verifier entry, before any simulation or
// output: a bad entry must fail with no partial artifacts.
void validate_verifiers(const RunConfig& cfg, const Model& model) {
    for (const VerifierSpec& v : cfg.verifiers) {
        if (v.name == "assumptions") {
            const std::int64_t z_max =
                v.z_max > 0 ? v.z_max : model.spec().validation_z_max();
            if (z_max < model.capacity()) {
                throw ConfigError("assumptions: z_max below the model's K");
            }
            if (v.k_max < 1) throw ConfigError("assumptions: k_max must be >= 1");
        } else if (v.name == "doob") {
            for (const std::int64_t x : v.x_list) {
                if (x < model.capacity()) {
                    throw ConfigError("doob: every x must be >= K");
                }
            }
        } else if (v.name == "geometry") {
            if (!model.has_death_floor()) {
                throw ConfigError(
                    "geometry: the model declares no uniform death-risk floor, "
                    "so p = 1 - eps^(K-1) is undefined");
            }
            if (v.k_hi < 1 || v.k_hi > 255) {
                throw ConfigError("geometry: k_hi must lie in [1, 255]");
            }
        } else if (v.name == "return_time") {
            if (!(v.delta > 0.0)) throw ConfigError("return_time: delta must be > 0");
            const std::int64_t c_max =
                v.c_max > 0 ? v.c_max
                            : std::max(model.max_up_jump(), model.max_down_jump());
            if (std::max(model.max_up_jump(), model.max_down_jump()) > c_max) {
                throw ConfigError("return_time: model jumps exceed c_max");
            }
        } else if (v.name == "scan") {
            for (const std::int64_t k : v.k_list) {
                if (k < 1) throw ConfigError("scan: every K must be >= 1");
            }
        }
    }
}

std::vector<BoundReport> apply_verifiers(const RunConfig& cfg, const Model& model,
                                         const EnsembleSummary& summary) {
    std::vector<BoundReport> reports;
    auto append = [&](std::vector<BoundReport> part) {
        for (auto& r : part) reports.push_back(std::move(r));
    };
    for (const VerifierSpec& v : cfg.verifiers) {
        if (v.name == "assumptions") {
            const std::int64_t z_max =
                v.z_max > 0 ? v.z_max : model.spec().validation_z_max();
            append(check_assumptions(model, model.capacity(), z_max, v.k_max));
        } else if (v.name == "extinction") {
            reports.push_back(estimate_extinction(summary, model));
        } else if (v.name == "doob") {
            append(check_doob_above(summary, model.capacity(), v.x_list));
        } else if (v.name == "hit_zero") {
            reports.push_back(check_hit_zero(summary, model, model.capacity()));
        } else if (v.name == "geometry") {
            append(check_excursion_geometry(summary, model, epsilon_k_for(model),
                                            v.k_hi));
        } else if (v.name == "return_time") {
            const std::int64_t c_max =
                v.c_max > 0 ? v.c_max
                            : std::max(model.max_up_jump(), model.max_down_jump());
            append(check_return_time(summary, model, model.capacity(), v.delta, c_max));
        }
        // "scan" entries parameterize the scan subcommand, not verify.
    }
    return reports;
}

int cmd_simulate(const Options& opts, const RunConfig& cfg, const Model& model) {
    EnsembleConfig ecfg = resolved_ensemble(opts, cfg, model);
    const bool emit_traces = opts.emit == "traces";
    if (emit_traces) ecfg.record_full_traces = true;
    const bool recording = ecfg.record_full_traces;

    std::ostringstream spill;
    const EnsembleSummary summary =
        run_ensemble(model, ecfg, recording ? &spill : nullptr);

    if (!opts.out_dir.empty()) {
        write_file(opts.out_dir, "summary.json", cli::dump(cli::summary_json(summary)));
        if (recording) write_file(opts.out_dir, "traces.jsonl", spill.str());
    }
    if (emit_traces) {
        std::cout << spill.str();
    } else {
        std::cout << cli::dump(cli::summary_json(summary));
    }
    return 0;
}

int cmd_verify(const Options& opts, const RunConfig& cfg, const Model& model) {
    if (!cfg.has_verifiers) {
        throw ConfigError("verify requires a 'verifiers' array");
    }
    bool any_applicable = false;
    for (const auto& v : cfg.verifiers) any_applicable |= v.name != "scan";
    if (!any_applicable) {
        throw ConfigError("verify requires at least one verifier besides 'scan'");
    }
    validate_verifiers(cfg, model);
    const EnsembleConfig ecfg = resolved_ensemble(opts, cfg, model);
    const EnsembleSummary summary = run_ensemble(model, ecfg);
    const std::vector<BoundReport> reports = apply_verifiers(cfg, model, summary);

    if (!opts.out_dir.empty()) {
        write_file(opts.out_dir, "reports.csv", reports_csv(reports));
        write_file(opts.out_dir, "reports.json", cli::dump(cli::reports_json(reports)));
        write_file(opts.out_dir, "summary.json", cli::dump(cli::summary_json(summary)));
    }
    if (opts.emit == "summary") {
        std::cout << cli::dump(cli::summary_json(summary));
    } else {
        std::cout << reports_csv(reports);
    }
    return any_violated(reports) ? 1 : 0;
}

int cmd_oracle(const Options& opts, const RunConfig& cfg, const Model& model) {
    if (!cfg.oracle.present) {
        throw ConfigError("oracle requires an 'oracle' block with state_cap");
    }
    ExactSolution sol;
    try {
        sol = exact_absorption(model, cfg.oracle.state_cap, cfg.oracle.tolerance);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());  // refusals are configuration problems
    }
    if (!opts.out_dir.empty()) {
        write_file(opts.out_dir, "oracle.csv", cli::oracle_csv(sol));
        write_file(opts.out_dir, "oracle.json", cli::dump(cli::oracle_json(sol)));
    }
    std::cout << cli::oracle_csv(sol);
    return 0;
}

int cmd_scan(const Options& opts, const RunConfig& cfg, const Model& model) {
    const VerifierSpec* scan = nullptr;
    for (const auto& v : cfg.verifiers) {
        if (v.name == "scan") {
            scan = &v;
            break;
        }
    }
    if (scan == nullptr) {
        throw ConfigError("scan requires a verifiers entry named 'scan' with K_list");
    }
    validate_verifiers(cfg, model);
    const EnsembleConfig ecfg = resolved_ensemble(opts, cfg, model);
    ScalingTable table;
    try {
        table = scan_capacity(cfg.model, scan->k_list, ecfg.reps, ecfg.step_budget,
                              ecfg.master_seed, ecfg.parallelism, scan->z0_offset);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());  // a K in the list failed model validation
    }
    if (!opts.out_dir.empty()) {
        write_file(opts.out_dir, "scan.csv", scaling_csv(table));
        write_file(opts.out_dir, "scan.json", cli::dump(cli::scan_json(table)));
    }
    std::cout << cli::dump(cli::scan_json(table));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Population dynamics under a soft carrying capacity: simulator, "
        "bound verifier, exact absorption oracle, and capacity scans."};
    app.footer(kFooter);
    app.require_subcommand(1);

    Options opts;
    CLI::Option* seed_opt = nullptr;
    auto add_common = [&](CLI::App* sub, bool with_emit,
                          const std::vector<std::string>& emit_values) {
        sub->add_option("--config", opts.config_path, "JSON run configuration")
            ->required();
        seed_opt = sub->add_option("--seed", opts.seed,
                                   "master seed (overrides ensemble.master_seed)");
        sub->add_option("--parallelism", opts.parallelism, "worker thread count")
            ->check(CLI::PositiveNumber);
        sub->add_option("--out", opts.out_dir, "directory for output artifacts");
        if (with_emit) {
            sub->add_option("--emit", opts.emit, "what to write to stdout")
                ->check(CLI::IsMember(emit_values));
        }
        return sub;
    };

    CLI::App* simulate = add_common(
        app.add_subcommand("simulate", "run an ensemble, emit summary or traces"),
        true, {"summary", "traces"});
    CLI::Option* sim_seed = seed_opt;
    CLI::App* verify = add_common(
        app.add_subcommand("verify", "run configured bound verifiers over an ensemble"),
        true, {"reports", "summary"});
    CLI::Option* verify_seed = seed_opt;
    CLI::App* oracle = add_common(
        app.add_subcommand("oracle", "exact absorption probabilities and times"),
        false, {});
    CLI::App* scan = add_common(
        app.add_subcommand("scan", "mean extinction time across capacities"), false, {});
    CLI::Option* scan_seed = seed_opt;

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    opts.seed_set = sim_seed->count() > 0 || verify_seed->count() > 0 ||
                    scan_seed->count() > 0;

    try {
        const RunConfig cfg = cli::load_config(opts.config_path);
        Model model = [&] {
            try {
                return build_model(cfg.model);
            } catch (const std::exception& e) {
                throw ConfigError(std::string("model: ") + e.what());
            }
        }();
        if (simulate->parsed()) return cmd_simulate(opts, cfg, model);
        if (verify->parsed()) return cmd_verify(opts, cfg, model);
        if (oracle->parsed()) return cmd_oracle(opts, cfg, model);
        if (scan->parsed()) return cmd_scan(opts, cfg, model);
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
