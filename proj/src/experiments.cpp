#include "kvlink/experiments.hpp"

#include "kvlink/channel.hpp"
#include "kvlink/decision.hpp"
#include "kvlink/errors.hpp"
#include "kvlink/optimizer.hpp"
#include "kvlink/parallel.hpp"
#include "kvlink/scenario.hpp"
#include "kvlink/static_e2e.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace kvlink::experiments {

namespace fs = std::filesystem;

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string CsvTable::to_string() const {
    std::string out;
    auto line = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i != 0) out += ',';
            out += cells[i];
        }
        out += '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
}

namespace {

template <typename T>
T get(const json& block, const char* key, T fallback) {
    if (!block.contains(key)) return fallback;
    try {
        return block.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config field '") + key + "': " + e.what());
    }
}

std::vector<double> get_grid(const json& block, const char* key, std::vector<double> fallback) {
    if (!block.contains(key)) return fallback;
    const auto& v = block.at(key);
    if (v.is_string()) return parse_grid(v.get<std::string>());
    if (v.is_array()) {
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) throw ConfigError(std::string("config field '") + key + "' must hold numbers");
            out.push_back(e.get<double>());
        }
        if (out.empty()) throw ConfigError(std::string("config field '") + key + "' is empty");
        return out;
    }
    throw ConfigError(std::string("config field '") + key + "' must be a grid string or an array");
}

std::string b(bool v) { return v ? "1" : "0"; }
std::string n(std::size_t v) { return std::to_string(v); }

std::vector<std::string> row(std::initializer_list<std::string> cells) { return cells; }

LinkBudget link_for_snr(double snr_db, double bandwidth_hz, double noise_dbm_per_hz) {
    const double n0 = dbm_to_watts(noise_dbm_per_hz);
    return LinkBudget{db_to_linear(snr_db) * bandwidth_hz * n0, 0.0, 1.0, n0, bandwidth_hz};
}

SingleRoundConfig single_round_from(const json& block, const ModelSpec& model) {
    SingleRoundConfig c;
    c.model = model;
    c.agents = get<std::size_t>(block, "agents", c.agents);
    c.distance_min_m = get(block, "distance_min_m", c.distance_min_m);
    c.distance_max_m = get(block, "distance_max_m", c.distance_max_m);
    c.power_min_dbm = get(block, "power_min_dbm", c.power_min_dbm);
    c.power_max_dbm = get(block, "power_max_dbm", c.power_max_dbm);
    c.alpha_base = get(block, "alpha_base", c.alpha_base);
    c.debt_ratio_min = get(block, "debt_ratio_min", c.debt_ratio_min);
    c.debt_ratio_max = get(block, "debt_ratio_max", c.debt_ratio_max);
    c.ea_history = get(block, "ea_history", c.ea_history);
    c.compression = get(block, "compression", c.compression);
    c.bits_per_token = get(block, "bits_per_token", c.bits_per_token);
    c.bandwidth_hz = get(block, "bandwidth_ghz", c.bandwidth_hz / 1e9) * 1e9;
    c.noise_dbm_per_hz = get(block, "noise_dbm_per_hz", c.noise_dbm_per_hz);
    c.ea_tflops = get(block, "c0_tflops", c.ea_tflops);
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return c;
}

json single_round_to_json(const SingleRoundConfig& c) {
    return json{{"agents", c.agents},
                {"distance_min_m", c.distance_min_m},
                {"distance_max_m", c.distance_max_m},
                {"power_min_dbm", c.power_min_dbm},
                {"power_max_dbm", c.power_max_dbm},
                {"alpha_base", c.alpha_base},
                {"debt_ratio_min", c.debt_ratio_min},
                {"debt_ratio_max", c.debt_ratio_max},
                {"ea_history", c.ea_history},
                {"compression", c.compression},
                {"bits_per_token", c.bits_per_token},
                {"bandwidth_ghz", c.bandwidth_hz / 1e9},
                {"noise_dbm_per_hz", c.noise_dbm_per_hz},
                {"c0_tflops", c.ea_tflops}};
}

json modes_json(const ModeVector& x) {
    json out = json::array();
    for (const auto m : x) out.push_back(m == Mode::kv ? 1 : 0);
    return out;
}

json trace_json(const SearchTrace& t) {
    json steps = json::array();
    for (const auto& s : t.steps) {
        steps.push_back({{"step", s.step}, {"flipped_agent", s.flipped_agent}, {"J_s", s.J}});
    }
    return json{{"initial_J_s", t.initial_J}, {"steps", steps}};
}

json assignment_json(const Assignment& a) {
    return json{{"x", modes_json(a.x)},
                {"rho", a.rho},
                {"J_s", a.J},
                {"tau_s", a.tau},
                {"ea_prefill_s", a.ea_prefill},
                {"trace", {{"forward", trace_json(a.forward)}, {"backward", trace_json(a.backward)}}},
                {"evaluations", a.stats.evaluations},
                {"bisection_iters", a.bisection_iters}};
}

}  // namespace

ModelSpec model_from_json(const json& j) {
    if (j.is_null()) return ModelSpec::llama_7b();
    if (j.is_string()) {
        try {
            return ModelSpec::preset(j.get<std::string>());
        } catch (const std::out_of_range& e) {
            throw UnknownPreset(e.what());
        }
    }
    if (!j.is_object()) throw ConfigError("'model' must be a preset name or an object");
    ModelSpec spec = ModelSpec::llama_7b();
    if (j.contains("preset")) {
        spec = model_from_json(j.at("preset"));
    }
    spec.layers = get(j, "layers", spec.layers);
    spec.heads = get(j, "heads", spec.heads);
    spec.head_dim = get(j, "head_dim", spec.head_dim);
    spec.hidden_dim = get(j, "hidden_dim", spec.hidden_dim);
    spec.ffn_dim = get(j, "ffn_dim", spec.ffn_dim);
    spec.vocab = get(j, "vocab", spec.vocab);
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return spec;
}

json model_to_json(const ModelSpec& s) {
    return json{{"layers", s.layers},         {"heads", s.heads},     {"head_dim", s.head_dim},
                {"hidden_dim", s.hidden_dim}, {"ffn_dim", s.ffn_dim}, {"vocab", s.vocab}};
}

std::vector<double> parse_grid(const std::string& text) {
    auto number = [&](const std::string& tok) {
        try {
            std::size_t used = 0;
            const double v = std::stod(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
            return v;
        } catch (const std::exception&) {
            throw ConfigError("bad grid value '" + tok + "' in '" + text + "'");
        }
    };
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(text);
        for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
        if (parts.size() != 3) throw ConfigError("grid '" + text + "' must read start:stop:count");
        const double lo = number(parts[0]);
        const double hi = number(parts[1]);
        const double count = number(parts[2]);
        if (count < 1 || count != std::floor(count)) throw ConfigError("grid count must be a positive integer");
        const auto k = static_cast<std::size_t>(count);
        for (std::size_t i = 0; i < k; ++i) {
            out.push_back(k == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(k - 1));
        }
        return out;
    }
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ',');) out.push_back(number(p));
    if (out.empty()) throw ConfigError("empty grid");
    return out;
}

ExperimentOutput run_compare(const json& block, const ModelSpec& model) {
    SweepDefaults d;
    d.model = model;
    const SweepAxis axis = [&] {
        try {
            return parse_sweep_axis(get<std::string>(block, "axis", "snr"));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }();
    d.prompt_tokens = get(block, "prompt_tokens", d.prompt_tokens);
    d.beta = get(block, "beta", d.beta);
    d.final_output = get(block, "final_output", d.final_output);
    d.agents = get<std::size_t>(block, "agents", d.agents);
    d.flops = get(block, "tflops", d.flops / 1e12) * 1e12;
    d.snr_db = get(block, "snr_db", d.snr_db);
    d.bits_per_token = get(block, "bits_per_token", d.bits_per_token);
    d.compression = get(block, "compression", d.compression);
    d.bandwidth_hz = get(block, "bandwidth_ghz", d.bandwidth_hz / 1e9) * 1e9;
    const auto grid = get_grid(block, "grid", default_sweep_grid(axis));

    std::vector<SweepRow> rows;
    try {
        rows = ratio_sweep(axis, grid, d);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    ExperimentOutput out;
    out.command = "compare";
    out.resolved_config = json{{"axis", to_string(axis)},
                               {"grid", grid},
                               {"prompt_tokens", d.prompt_tokens},
                               {"beta", d.beta},
                               {"final_output", d.final_output},
                               {"agents", d.agents},
                               {"tflops", d.flops / 1e12},
                               {"snr_db", d.snr_db},
                               {"bits_per_token", d.bits_per_token},
                               {"compression", d.compression},
                               {"bandwidth_ghz", d.bandwidth_hz / 1e9}};
    CsvTable t;
    t.header = {"axis_name", "axis_value", "t_nl_s", "t_kv_s", "ratio", "bottleneck_aa_nl",
                "bottleneck_aa_kv"};
    for (const auto& r : rows) {
        t.rows.push_back(row({to_string(r.axis), format_double(r.x), format_double(r.t_nl),
                              format_double(r.t_kv), format_double(r.ratio), n(r.bottleneck_nl),
                              n(r.bottleneck_kv)}));
    }
    out.tables.emplace_back("", std::move(t));
    return out;
}

ExperimentOutput run_threshold(const json& block, const ModelSpec& model) {
    const Workload w(model);
    const double bandwidth = get(block, "bandwidth_ghz", 2e9 / 1e9) * 1e9;
    const double noise = get(block, "noise_dbm_per_hz", -140.0);
    const double snr_db = get(block, "snr_db", 5.0);
    TransmissionContext ctx;
    ctx.output_tokens = get(block, "alpha", 512.0);
    ctx.kv_debt = get(block, "xi", 6000.0);
    ctx.receiver_history = get(block, "theta_r", 0.0);
    ctx.compression = get(block, "compression", 2.0);
    ctx.bits_per_token = get(block, "bits_per_token", 16.0);
    ctx.receiver_flops = get(block, "receiver_tflops", 1.0) * 1e12;
    ctx.rho = get(block, "rho", 1.0);
    ctx.link = link_for_snr(snr_db, bandwidth, noise);
    try {
        ctx.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    const auto curve_xi = get_grid(block, "curve_xi", {0, 2000, 4000, 6000, 8000});
    const auto curve_snr = get_grid(block, "curve_snr_db", {0, 5, 10, 15, 20});
    const auto rho_points = get<std::size_t>(block, "rho_points", 200);
    const auto surface_xi = get_grid(block, "surface_xi", parse_grid("0:10000:21"));
    const auto surface_alpha = get_grid(block, "surface_alpha", parse_grid("128:1024:15"));
    if (rho_points < 2) throw ConfigError("rho_points must be >= 2");

    ExperimentOutput out;
    out.command = "threshold";
    out.resolved_config = json{{"alpha", ctx.output_tokens},     {"xi", ctx.kv_debt},
                               {"theta_r", ctx.receiver_history}, {"compression", ctx.compression},
                               {"bits_per_token", ctx.bits_per_token},
                               {"receiver_tflops", ctx.receiver_flops / 1e12},
                               {"rho", ctx.rho},                  {"snr_db", snr_db},
                               {"bandwidth_ghz", bandwidth / 1e9},       {"noise_dbm_per_hz", noise},
                               {"curve_xi", curve_xi},            {"curve_snr_db", curve_snr},
                               {"rho_points", rho_points},        {"surface_xi", surface_xi},
                               {"surface_alpha", surface_alpha}};

    const auto poly = decision_poly(w, ctx);
    json threshold = nullptr;
    try {
        if (const auto r = bandwidth_threshold(w, ctx)) threshold = *r;
    } catch (const KvNotDominant& e) {
        threshold = "error: " + std::string(e.what());
    }
    out.result = json{{"k4", poly.k4},
                      {"k5", poly.k5},
                      {"k6", poly.k6},
                      {"f_at_rho", poly(ctx.output_tokens)},
                      {"f_at_1", decision_value_at(w, ctx, 1.0)},
                      {"rho_star", threshold},
                      {"mode", to_string(select_mode(w, ctx))}};

    CsvTable curve;
    curve.header = {"series", "xi", "snr_db", "rho", "f_s"};
    auto add_series = [&](const char* name, double xi, double snr) {
        TransmissionContext c = ctx;
        c.kv_debt = xi;
        c.link = link_for_snr(snr, bandwidth, noise);
        for (std::size_t k = 1; k <= rho_points; ++k) {
            const double rho = static_cast<double>(k) / static_cast<double>(rho_points);
            curve.rows.push_back(row({name, format_double(xi), format_double(snr), format_double(rho),
                                      format_double(decision_value_at(w, c, rho))}));
        }
    };
    for (const double xi : curve_xi) add_series("xi", xi, snr_db);
    for (const double snr : curve_snr) add_series("snr", ctx.kv_debt, snr);

    CsvTable surface;
    surface.header = {"xi", "alpha", "rho_star"};
    for (const double xi : surface_xi) {
        for (const double alpha : surface_alpha) {
            TransmissionContext c = ctx;
            c.kv_debt = xi;
            c.output_tokens = alpha;
            std::string cell;
            try {
                if (const auto r = bandwidth_threshold(w, c)) cell = format_double(*r);
            } catch (const KvNotDominant&) {
            }
            surface.rows.push_back(row({format_double(xi), format_double(alpha), cell}));
        }
    }
    out.tables.emplace_back("", std::move(curve));
    out.tables.emplace_back("_surface", std::move(surface));
    return out;
}

ExperimentOutput run_single_scenario(const json& block, const ModelSpec& model, std::uint64_t seed) {
    const auto cfg = single_round_from(block, model);
    SolverOptions options;
    options.delta = get(block, "delta", options.delta);
    const auto sample = sample_single_round(cfg, seed);
    const auto& inst = sample.instance;
    const auto best = jmsra(inst, options);
    const auto nl_u = baseline(inst, Mode::nl, Allocation::uniform, options);
    const auto kv_u = baseline(inst, Mode::kv, Allocation::uniform, options);
    const auto nl_o = baseline(inst, Mode::nl, Allocation::optimized, options);
    const auto kv_o = baseline(inst, Mode::kv, Allocation::optimized, options);

    ExperimentOutput out;
    out.command = "jmsra";
    out.stochastic = true;
    out.seed = seed;
    out.resolved_config = single_round_to_json(cfg);
    out.resolved_config["delta"] = options.delta;
    out.result = assignment_json(best);
    out.result["kv_count"] = best.kv_count();
    out.result["baselines"] = json{{"all_nl_uniform_s", nl_u.J},
                                   {"all_kv_uniform_s", kv_u.J},
                                   {"all_nl_opt_s", nl_o.J},
                                   {"all_kv_opt_s", kv_o.J}};

    CsvTable footprint;
    footprint.header = {"series", "step", "flipped_agent", "J_s"};
    auto add_trace = [&](const char* name, const SearchTrace& t) {
        footprint.rows.push_back(row({name, "0", "-1", format_double(t.initial_J)}));
        for (const auto& s : t.steps) {
            footprint.rows.push_back(row({name, std::to_string(s.step), std::to_string(s.flipped_agent),
                                          format_double(s.J)}));
        }
    };
    add_trace("forward", best.forward);
    add_trace("backward", best.backward);
    footprint.rows.push_back(row({"all_nl_uniform", "0", "-1", format_double(nl_u.J)}));
    footprint.rows.push_back(row({"all_kv_uniform", "0", "-1", format_double(kv_u.J)}));

    CsvTable topology;
    topology.header = {"agent_id", "distance_m", "tx_power_dbm", "fading_amp", "snr_db",
                       "alpha",    "xi",         "mode",         "rho"};
    for (std::size_t i = 0; i < sample.draws.size(); ++i) {
        const auto& d = sample.draws[i];
        topology.rows.push_back(row({n(i), format_double(d.distance_m), format_double(d.tx_power_dbm),
                                     format_double(d.fading_amp), format_double(d.snr.db()),
                                     format_double(d.output_tokens), format_double(d.kv_debt),
                                     to_string(best.x[i]), format_double(best.rho[i])}));
    }
    out.tables.emplace_back("", std::move(footprint));
    out.tables.emplace_back("_topology", std::move(topology));
    return out;
}

ExperimentOutput run_sweep(const json& block, const ModelSpec& model, std::uint64_t seed) {
    const auto axis = get<std::string>(block, "axis", "bandwidth");
    if (axis != "bandwidth" && axis != "agents") {
        throw ConfigError("sweep axis must be 'bandwidth' or 'agents', got '" + axis + "'");
    }
    json base = block;
    if (!base.contains("c0_tflops")) base["c0_tflops"] = 10.0;
    const auto cfg = single_round_from(base, model);
    const auto grid = get_grid(block, "grid", axis == "bandwidth" ? parse_grid("0.5e9:4e9:8")
                                                                   : parse_grid("5:30:6"));
    const auto trials = get<std::size_t>(block, "trials", 1);
    if (trials < 1) throw ConfigError("trials must be >= 1");
    SolverOptions options;
    options.delta = get(block, "delta", options.delta);

    ExperimentOutput out;
    out.command = "sweep";
    out.stochastic = true;
    out.seed = seed;
    out.resolved_config = single_round_to_json(cfg);
    out.resolved_config["axis"] = axis;
    out.resolved_config["grid"] = grid;
    out.resolved_config["trials"] = trials;
    out.resolved_config["delta"] = options.delta;

    CsvTable t;
    t.header = {"axis_name",        "axis_value",       "trial",          "seed",
                "jmsra_s",          "all_nl_uniform_s", "all_nl_opt_s",   "all_kv_uniform_s",
                "all_kv_opt_s",     "kv_count",         "evaluations"};
    std::vector<SingleRoundConfig> configs;
    for (const double x : grid) {
        SingleRoundConfig c = cfg;
        if (axis == "bandwidth") {
            c.bandwidth_hz = x;
        } else {
            if (x < 1 || x != std::floor(x)) throw ConfigError("agent counts must be positive integers");
            c.agents = static_cast<std::size_t>(x);
        }
        configs.push_back(c);
    }
    std::vector<std::vector<std::string>> rows(grid.size() * trials);
    parallel_for(rows.size(), [&](std::size_t k) {
        const std::size_t g = k / trials;
        const std::size_t trial = k % trials;
        const std::uint64_t trial_seed = derive_seed(seed, trial);
        const auto inst = sample_single_round(configs[g], trial_seed).instance;
        const auto best = jmsra(inst, options);
        rows[k] = row({axis, format_double(grid[g]), n(trial), std::to_string(trial_seed),
                       format_double(best.J),
                       format_double(baseline(inst, Mode::nl, Allocation::uniform, options).J),
                       format_double(baseline(inst, Mode::nl, Allocation::optimized, options).J),
                       format_double(baseline(inst, Mode::kv, Allocation::uniform, options).J),
                       format_double(baseline(inst, Mode::kv, Allocation::optimized, options).J),
                       n(best.kv_count()), n(best.stats.evaluations)});
    });
    t.rows = std::move(rows);
    out.tables.emplace_back("", std::move(t));
    return out;
}

ExperimentOutput run_multiround(const json& block, const ModelSpec& model, std::uint64_t seed) {
    MultiRoundConfig c;
    c.model = model;
    c.max_agents = get<std::size_t>(block, "max_agents", c.max_agents);
    c.ea_tflops = get(block, "ea_tflops", c.ea_tflops);
    c.aa_tflops_min = get(block, "aa_tflops_min", c.aa_tflops_min);
    c.aa_tflops_max = get(block, "aa_tflops_max", c.aa_tflops_max);
    c.ea_power_dbm = get(block, "ea_power_dbm", c.ea_power_dbm);
    c.power_min_dbm = get(block, "power_min_dbm", c.power_min_dbm);
    c.power_max_dbm = get(block, "power_max_dbm", c.power_max_dbm);
    c.distance_min_m = get(block, "distance_min_m", c.distance_min_m);
    c.distance_max_m = get(block, "distance_max_m", c.distance_max_m);
    c.ea_prompt = get(block, "ea_prompt", c.ea_prompt);
    c.ea_output = get(block, "ea_output", c.ea_output);
    c.aa_input = get(block, "aa_input", c.aa_input);
    c.aa_output = get(block, "aa_output", c.aa_output);
    c.ea_context_limit = get(block, "ea_context_limit", c.ea_context_limit);
    c.ea_window = get(block, "ea_window", c.ea_window);
    c.aa_context_limit = get(block, "aa_context_limit", c.aa_context_limit);
    c.aa_window = get(block, "aa_window", c.aa_window);
    c.activity_probability = get(block, "activity_probability", c.activity_probability);
    c.compression = get(block, "compression", c.compression);
    c.bits_per_token = get(block, "bits_per_token", c.bits_per_token);
    c.bandwidth_hz = get(block, "bandwidth_ghz", c.bandwidth_hz / 1e9) * 1e9;
    c.noise_dbm_per_hz = get(block, "noise_dbm_per_hz", c.noise_dbm_per_hz);
    c.delta = get(block, "delta", c.delta);
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    const int rounds = get(block, "rounds", 30);
    if (rounds < 1) throw ConfigError("rounds must be >= 1");
    const auto policy_names = get<std::vector<std::string>>(block, "policies", {"jmsra", "all_nl"});
    std::vector<Policy> policies;
    for (const auto& p : policy_names) {
        try {
            policies.push_back(parse_policy(p));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    if (policies.empty()) throw ConfigError("at least one policy is required");

    ExperimentOutput out;
    out.command = "multiround";
    out.stochastic = true;
    out.seed = seed;
    out.resolved_config = json{{"max_agents", c.max_agents},
                               {"ea_tflops", c.ea_tflops},
                               {"aa_tflops_min", c.aa_tflops_min},
                               {"aa_tflops_max", c.aa_tflops_max},
                               {"ea_power_dbm", c.ea_power_dbm},
                               {"power_min_dbm", c.power_min_dbm},
                               {"power_max_dbm", c.power_max_dbm},
                               {"distance_min_m", c.distance_min_m},
                               {"distance_max_m", c.distance_max_m},
                               {"ea_prompt", c.ea_prompt},
                               {"ea_output", c.ea_output},
                               {"aa_input", c.aa_input},
                               {"aa_output", c.aa_output},
                               {"ea_context_limit", c.ea_context_limit},
                               {"ea_window", c.ea_window},
                               {"aa_context_limit", c.aa_context_limit},
                               {"aa_window", c.aa_window},
                               {"activity_probability", c.activity_probability},
                               {"compression", c.compression},
                               {"bits_per_token", c.bits_per_token},
                               {"bandwidth_ghz", c.bandwidth_hz / 1e9},
                               {"noise_dbm_per_hz", c.noise_dbm_per_hz},
                               {"delta", c.delta},
                               {"rounds", rounds},
                               {"policies", policy_names}};

    for (const auto policy : policies) {
        const auto traces = run_multi_round(c, rounds, seed, policy);
        CsvTable trace;
        trace.header = {"round", "agent_id", "active", "mode",  "rho",
                        "prefill_s", "decode_s", "comm_s", "theta", "xi"};
        CsvTable ea;
        ea.header = {"round", "theta0", "prefill_s", "decode_s", "total_s"};
        for (const auto& r : traces) {
            for (const auto& a : r.agents) {
                trace.rows.push_back(row({std::to_string(r.round), n(a.agent_id), b(a.active),
                                          a.active ? to_string(a.mode) : "", format_double(a.rho),
                                          format_double(a.prefill_s), format_double(a.decode_s),
                                          format_double(a.comm_s), format_double(a.theta),
                                          format_double(a.xi)}));
            }
            ea.rows.push_back(row({std::to_string(r.round), format_double(r.theta0),
                                   format_double(r.ea_prefill_s), format_double(r.ea_decode_s),
                                   format_double(r.ea_compute_s())}));
        }
        const std::string suffix = "_" + to_string(policy);
        out.tables.emplace_back("_trace" + suffix, std::move(trace));
        out.tables.emplace_back("_ea" + suffix, std::move(ea));
    }
    return out;
}

std::vector<fs::path> write_outputs(const ExperimentOutput& output, const fs::path& out) {
    std::vector<fs::path> written;
    const fs::path dir = out.parent_path();
    if (!dir.empty()) {
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw OutputError("cannot create '" + dir.string() + "': " + ec.message());
    }
    const std::string stem = (dir / out.stem()).string();
    auto write = [&](const fs::path& path, const std::string& text) {
        std::ofstream os(path, std::ios::binary | std::ios::trunc);
        if (!os) throw OutputError("cannot write '" + path.string() + "'");
        os << text;
        os.close();
        if (!os) throw OutputError("failed writing '" + path.string() + "'");
        written.push_back(path);
    };
    for (const auto& [suffix, table] : output.tables) {
        write(suffix.empty() ? out : fs::path(stem + suffix + ".csv"), table.to_string());
    }
    if (!output.result.is_null()) {
        write(stem + "_result.json", output.result.dump(2) + "\n");
    }
    json files = json::array();
    for (const auto& p : written) files.push_back(p.filename().string());
    json sidecar{{"tool", "kvlink"},
                 {"version", KVLINK_VERSION},
                 {"command", output.command},
                 {"config", output.resolved_config},
                 {"outputs", files}};
    sidecar["seed"] = output.stochastic ? json(output.seed) : json(nullptr);
    write(stem + ".json", sidecar.dump(2) + "\n");
    return written;
}

}  // namespace kvlink::experiments
