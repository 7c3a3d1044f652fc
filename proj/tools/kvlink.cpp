#include "kvlink/experiments.hpp"
#include "kvlink/validate.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>

namespace ex = kvlink::experiments;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kOther = 1, kParse = 2, kPreset = 3, kOutput = 4, kValidation = 5 };

const std::set<std::string> kExperiments = {"compare", "threshold", "jmsra", "sweep", "multiround"};

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string preset;
};

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw ex::ConfigError("cannot read config '" + path + "'");
    json cfg;
    try {
        cfg = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ex::ConfigError("config '" + path + "': " + e.what());
    }
    if (!cfg.is_object()) throw ex::ConfigError("config '" + path + "' must hold an object");
    return cfg;
}

/// Picks the single experiment block of the config. `command` may be empty,
/// in which case the block decides.
std::string resolve_command(const json& cfg, const std::string& command) {
    std::vector<std::string> blocks;
    for (const auto& [key, value] : cfg.items()) {
        if (kExperiments.count(key) != 0) blocks.push_back(key);
    }
    if (blocks.size() > 1) throw ex::ConfigError("config holds more than one experiment block");
    if (command.empty()) {
        if (blocks.empty()) throw ex::ConfigError("config holds no experiment block");
        return blocks.front();
    }
    if (!blocks.empty() && blocks.front() != command) {
        throw ex::ConfigError("config block '" + blocks.front() + "' does not match command '" + command + "'");
    }
    return command;
}

int run_experiment(const Globals& g, const std::string& requested, const json& overrides) {
    const json cfg = load_config(g.config_path);
    const std::string command = resolve_command(cfg, requested);
    json block = cfg.value(command, json::object());
    if (!block.is_object()) throw ex::ConfigError("block '" + command + "' must be an object");
    for (const auto& [key, value] : overrides.items()) block[key] = value;

    const kvlink::ModelSpec model =
        g.preset.empty() ? ex::model_from_json(cfg.value("model", json())) : ex::model_from_json(json(g.preset));

    std::optional<std::uint64_t> seed = g.seed;
    if (!seed && cfg.contains("seed")) {
        try {
            seed = cfg.at("seed").get<std::uint64_t>();
        } catch (const json::exception&) {
            throw ex::ConfigError("'seed' must be a non-negative integer");
        }
    }
    const bool stochastic = command == "jmsra" || command == "sweep" || command == "multiround";
    if (stochastic && !seed) throw ex::ConfigError(command + " needs a seed (--seed or \"seed\" in the config)");

    ex::ExperimentOutput output;
    if (command == "compare") output = ex::run_compare(block, model);
    if (command == "threshold") output = ex::run_threshold(block, model);
    if (command == "jmsra") output = ex::run_single_scenario(block, model, *seed);
    if (command == "sweep") output = ex::run_sweep(block, model, *seed);
    if (command == "multiround") output = ex::run_multiround(block, model, *seed);
    output.resolved_config = json{{"model", ex::model_to_json(model)}, {command, output.resolved_config}};

    const std::string out = g.out.empty() ? "kvlink_" + command + ".csv" : g.out;
    for (const auto& path : ex::write_outputs(output, out)) std::cout << path.string() << '\n';
    if (command == "threshold") {
        const auto& r = output.result;
        std::cout << "k4 " << ex::format_double(r["k4"].get<double>()) << "\nk5 "
                  << ex::format_double(r["k5"].get<double>()) << "\nk6 "
                  << ex::format_double(r["k6"].get<double>()) << "\nf(1) "
                  << ex::format_double(r["f_at_1"].get<double>()) << "\nrho* "
                  << (r["rho_star"].is_number() ? ex::format_double(r["rho_star"].get<double>())
                                                : std::string("none"))
                  << '\n';
    }
    return kOk;
}

int run_validate(const std::vector<int>& criteria, const std::string& json_path,
                 std::optional<std::int64_t> inject_k2, std::optional<std::uint64_t> seed) {
    kvlink::validate::Options options;
    options.only.insert(criteria.begin(), criteria.end());
    if (seed) options.seed = *seed;
    if (inject_k2) {
        auto k = kvlink::derive_constants(kvlink::ModelSpec::llama_7b());
        k.k2 = *inject_k2;
        options.constants_override = k;
    }
    const auto report = kvlink::validate::run(options);
    std::cout << report.to_text();
    if (!json_path.empty()) {
        std::ofstream os(json_path, std::ios::binary | std::ios::trunc);
        if (!os) throw ex::OutputError("cannot write '" + json_path + "'");
        os << report.to_json().dump(2) << '\n';
    }
    return report.all_passed() ? kOk : kValidation;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Latency model and mode/bandwidth optimizer for KV-cache sharing between LLM agents"};
    app.set_version_flag("--version", std::string(KVLINK_VERSION));
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    std::uint64_t seed_value = 0;
    app.add_option("--config", g.config_path, "JSON config with one experiment block")->check(CLI::ExistingFile);
    auto* seed_opt = app.add_option("--seed", seed_value, "Root seed for stochastic experiments");
    app.add_option("--out", g.out, "Main CSV path; siblings share its stem");
    app.add_option("--preset", g.preset, "Model preset (llama-7b)");

    json overrides = json::object();
    std::string selected;

    auto* run = app.add_subcommand("run", "Run the experiment named by the config block");
    run->callback([&] { selected = ""; });

    auto* compare = app.add_subcommand("compare", "NL vs KV end-to-end latency ratio sweep");
    std::string axis, grid;
    compare->add_option("--axis", axis, "beta | compute | snr | aa_count");
    compare->add_option("--grid", grid, "start:stop:count or a comma list");

    auto* threshold = app.add_subcommand("threshold", "Decision polynomial and bandwidth threshold");
    double alpha = 0, xi = 0, snr_db = 0, receiver_tflops = 0;
    auto* alpha_opt = threshold->add_option("--alpha", alpha, "Output tokens");
    auto* xi_opt = threshold->add_option("--xi", xi, "KV debt tokens");
    auto* snr_opt = threshold->add_option("--snr-db", snr_db, "Full-band SNR");
    auto* rt_opt = threshold->add_option("--receiver-tflops", receiver_tflops, "Receiver compute");

    auto* jm = app.add_subcommand("jmsra", "One randomized AAs -> EA round solved by JMSRA");
    double c0 = 0;
    std::size_t agents = 0;
    auto* c0_opt = jm->add_option("--c0-tflops", c0, "EA compute");
    auto* agents_opt = jm->add_option("--agents", agents, "Number of AAs");

    auto* sweep = app.add_subcommand("sweep", "JMSRA vs baselines over bandwidth or AA count");
    std::string sweep_axis, sweep_grid;
    std::size_t trials = 0;
    double sweep_c0 = 0;
    sweep->add_option("--axis", sweep_axis, "bandwidth (Hz grid) | agents");
    sweep->add_option("--grid", sweep_grid, "start:stop:count or a comma list");
    auto* trials_opt = sweep->add_option("--trials", trials, "Seeds per grid point");
    auto* sweep_c0_opt = sweep->add_option("--c0-tflops", sweep_c0, "EA compute");

    auto* multi = app.add_subcommand("multiround", "Multi-round dialogue simulation");
    int rounds = 0;
    std::vector<std::string> policies;
    auto* rounds_opt = multi->add_option("--rounds", rounds, "Number of rounds");
    multi->add_option("--policy", policies, "jmsra | all_nl | all_kv (repeatable)");

    auto* val = app.add_subcommand("validate", "Run the acceptance checks");
    std::vector<int> criteria;
    std::string report_json;
    std::int64_t inject_k2 = 0;
    val->add_option("--criteria", criteria, "Subset of criterion ids")->check(CLI::Range(1, 10));
    val->add_option("--json", report_json, "Also write the report as JSON");
    auto* inject_opt = val->add_option("--inject-k2", inject_k2, "Replace k2 to exercise a failing check");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kParse;
    }
    if (*seed_opt) g.seed = seed_value;

    try {
        if (*val) {
            return run_validate(criteria, report_json,
                                *inject_opt ? std::optional<std::int64_t>(inject_k2) : std::nullopt, g.seed);
        }
        if (*compare) {
            selected = "compare";
            if (!axis.empty()) overrides["axis"] = axis;
            if (!grid.empty()) overrides["grid"] = grid;
        } else if (*threshold) {
            selected = "threshold";
            if (*alpha_opt) overrides["alpha"] = alpha;
            if (*xi_opt) overrides["xi"] = xi;
            if (*snr_opt) overrides["snr_db"] = snr_db;
            if (*rt_opt) overrides["receiver_tflops"] = receiver_tflops;
        } else if (*jm) {
            selected = "jmsra";
            if (*c0_opt) overrides["c0_tflops"] = c0;
            if (*agents_opt) overrides["agents"] = agents;
        } else if (*sweep) {
            selected = "sweep";
            if (!sweep_axis.empty()) overrides["axis"] = sweep_axis;
            if (!sweep_grid.empty()) overrides["grid"] = sweep_grid;
            if (*trials_opt) overrides["trials"] = trials;
            if (*sweep_c0_opt) overrides["c0_tflops"] = sweep_c0;
        } else if (*multi) {
            selected = "multiround";
            if (*rounds_opt) overrides["rounds"] = rounds;
            if (!policies.empty()) overrides["policies"] = policies;
        }
        return run_experiment(g, selected, overrides);
    } catch (const ex::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kParse;
    } catch (const ex::UnknownPreset& e) {
        std::cerr << "error: unknown preset: " << e.what() << '\n';
        return kPreset;
    } catch (const ex::OutputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kOutput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kOther;
    }
}
