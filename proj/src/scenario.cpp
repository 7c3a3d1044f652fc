#include "kvlink/scenario.hpp"

#include <algorithm>
#include <stdexcept>

namespace kvlink {

namespace {

double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

void check_range(double lo, double hi, const char* what) {
    if (!(lo <= hi)) {
        throw std::invalid_argument(std::string(what) + ": min exceeds max");
    }
}

LinkBudget budget(double power_dbm, double distance_m, double fading, double noise_dbm_per_hz,
                  double bandwidth_hz) {
    return LinkBudget{dbm_to_watts(power_dbm), path_loss_db(distance_m), fading,
                      dbm_to_watts(noise_dbm_per_hz), bandwidth_hz};
}

// Stream tags for derive_seed.
constexpr std::uint64_t kAgentStream = 1;
constexpr std::uint64_t kActivityStream = 2;
constexpr std::uint64_t kComputeStream = 3;

}  // namespace

void SingleRoundConfig::validate() const {
    model.validate();
    if (agents < 1) throw std::invalid_argument("single-round: need at least one AA");
    check_range(distance_min_m, distance_max_m, "distance");
    check_range(power_min_dbm, power_max_dbm, "power");
    check_range(debt_ratio_min, debt_ratio_max, "debt ratio");
    if (!(distance_min_m > 0.0)) throw std::invalid_argument("distance must be > 0");
    if (!(alpha_base > 0.0) || debt_ratio_min < 0.0 || ea_history < 0.0) {
        throw std::invalid_argument("single-round: bad token parameters");
    }
    if (!(compression >= 1.0) || !(bandwidth_hz > 0.0) || !(ea_tflops > 0.0) || bits_per_token < 1.0) {
        throw std::invalid_argument("single-round: bad link/compute parameters");
    }
}

SingleRoundSample sample_single_round(const SingleRoundConfig& config, std::uint64_t seed) {
    config.validate();
    const Workload workload(config.model);
    SingleRoundSample out;
    out.instance.workload = workload;
    out.instance.bandwidth_hz = config.bandwidth_hz;
    out.instance.ea_flops = config.ea_tflops * 1e12;
    out.instance.ea_history = config.ea_history;
    for (std::size_t i = 0; i < config.agents; ++i) {
        Rng rng(derive_seed(seed, kAgentStream, i));
        AgentDraw d;
        d.distance_m = uniform(rng, config.distance_min_m, config.distance_max_m);
        d.tx_power_dbm = uniform(rng, config.power_min_dbm, config.power_max_dbm);
        d.fading_amp = sample_rayleigh(rng);
        d.output_tokens = config.alpha_base * (0.8 + 0.4 * uniform(rng, 0.0, 1.0));
        d.kv_debt = uniform(rng, config.debt_ratio_min, config.debt_ratio_max) * d.output_tokens;
        d.snr = link_snr(budget(d.tx_power_dbm, d.distance_m, d.fading_amp, config.noise_dbm_per_hz,
                                config.bandwidth_hz));
        out.instance.agents.push_back(ScenarioInstance::make_agent(
            workload, d.snr, d.output_tokens, d.kv_debt, config.compression, config.bits_per_token));
        out.draws.push_back(d);
    }
    return out;
}

void MultiRoundConfig::validate() const {
    model.validate();
    if (max_agents < 1) throw std::invalid_argument("multi-round: need at least one AA");
    check_range(aa_tflops_min, aa_tflops_max, "AA compute");
    check_range(power_min_dbm, power_max_dbm, "power");
    check_range(distance_min_m, distance_max_m, "distance");
    if (!(distance_min_m > 0.0) || !(aa_tflops_min > 0.0) || !(ea_tflops > 0.0)) {
        throw std::invalid_argument("multi-round: distances and compute must be > 0");
    }
    if (!(ea_prompt > 0.0) || !(ea_output > 0.0) || !(aa_input > 0.0) || !(aa_output > 0.0)) {
        throw std::invalid_argument("multi-round: token counts must be > 0");
    }
    if (ea_window > ea_context_limit || aa_window > aa_context_limit || ea_window < 0.0 ||
        aa_window < 0.0) {
        throw std::invalid_argument("multi-round: window must lie within the context limit");
    }
    if (ea_context_limit < ea_prompt + ea_output || aa_context_limit < aa_input + aa_output) {
        throw std::invalid_argument("multi-round: context limit shorter than one round");
    }
    if (activity_probability < 0.0 || activity_probability > 1.0) {
        throw std::invalid_argument("multi-round: activity probability must lie in [0, 1]");
    }
    if (!(compression >= 1.0) || !(bandwidth_hz > 0.0) || !(delta > 0.0)) {
        throw std::invalid_argument("multi-round: bad compression, bandwidth or delta");
    }
}

std::string to_string(Policy p) {
    switch (p) {
        case Policy::jmsra: return "jmsra";
        case Policy::all_nl: return "all_nl";
        case Policy::all_kv: return "all_kv";
    }
    return "?";
}

Policy parse_policy(const std::string& name) {
    if (name == "jmsra") return Policy::jmsra;
    if (name == "all_nl") return Policy::all_nl;
    if (name == "all_kv") return Policy::all_kv;
    throw std::invalid_argument("unknown policy '" + name + "'");
}

AgentLedger::AgentLedger(double context_limit, double window) : limit_(context_limit), window_(window) {}

void AgentLedger::append_owned(double tokens) {
    history_ += tokens;
    debt_ += tokens;
    evict();
}

void AgentLedger::append_shared(double tokens) {
    history_ += tokens;
    evict();
}

void AgentLedger::evict() {
    // Oldest tokens leave first; any of them still counted as debt go too.
    history_ = std::min(history_, limit_);
    debt_ = std::min({debt_, history_, window_});
}

bool AgentLedger::invariants_hold() const noexcept {
    return debt_ >= 0.0 && debt_ <= window_ && debt_ <= history_ && history_ >= 0.0 &&
           history_ <= limit_;
}

double RoundTrace::kv_fraction() const {
    if (active.empty()) return 0.0;
    std::size_t kv = 0;
    for (const auto id : active) {
        if (agents.at(id).mode == Mode::kv) ++kv;
    }
    return static_cast<double>(kv) / static_cast<double>(active.size());
}

MultiRoundState initial_state(const MultiRoundConfig& config, std::uint64_t seed) {
    config.validate();
    MultiRoundState s;
    s.ea = AgentLedger(config.ea_context_limit, config.ea_window);
    for (std::size_t i = 0; i < config.max_agents; ++i) {
        s.aas.emplace_back(config.aa_context_limit, config.aa_window);
        Rng rng(derive_seed(seed, kComputeStream, i));
        s.aa_flops.push_back(uniform(rng, config.aa_tflops_min, config.aa_tflops_max) * 1e12);
    }
    return s;
}

RoundTrace step_multi_round(MultiRoundState& state, const MultiRoundConfig& config,
                            std::uint64_t round_seed, Policy policy) {
    config.validate();
    if (state.aas.size() != config.max_agents || state.aa_flops.size() != config.max_agents) {
        throw std::invalid_argument("multi-round state does not match the config");
    }
    const Workload workload(config.model);
    const std::size_t n = config.max_agents;
    const double ea_flops = config.ea_tflops * 1e12;

    RoundTrace trace;
    trace.round = ++state.round;
    trace.agents.resize(n + 1);
    for (std::size_t id = 0; id <= n; ++id) trace.agents[id].agent_id = id;

    // (a) who takes part, and this round's channels
    std::vector<bool> active(n, false);
    {
        Rng rng(derive_seed(round_seed, kActivityStream));
        std::bernoulli_distribution coin(config.activity_probability);
        for (int attempt = 0; attempt < 64 && trace.active.empty(); ++attempt) {
            for (std::size_t i = 0; i < n; ++i) {
                active[i] = coin(rng);
                if (active[i]) trace.active.push_back(i + 1);
            }
        }
    }
    if (trace.active.empty()) {
        trace.skipped = true;
        trace.theta0 = state.ea.history();
        trace.xi0 = state.ea.debt();
        trace.xi0_after_broadcast = trace.xi0;
        for (std::size_t i = 0; i < n; ++i) {
            trace.agents[i + 1].theta = state.aas[i].history();
            trace.agents[i + 1].xi = state.aas[i].debt();
        }
        return trace;
    }

    std::vector<LinkBudget> downlink(n);
    std::vector<LinkSnr> uplink(n);
    for (const auto id : trace.active) {
        const std::size_t i = id - 1;
        Rng rng(derive_seed(round_seed, kAgentStream, i));
        const double distance = uniform(rng, config.distance_min_m, config.distance_max_m);
        const double power = uniform(rng, config.power_min_dbm, config.power_max_dbm);
        const double h_down = sample_rayleigh(rng);
        const double h_up = sample_rayleigh(rng);
        downlink[i] = budget(config.ea_power_dbm, distance, h_down, config.noise_dbm_per_hz,
                             config.bandwidth_hz);
        uplink[i] = link_snr(budget(power, distance, h_up, config.noise_dbm_per_hz, config.bandwidth_hz));
    }

    // (b) EA produces its turn and broadcasts it
    auto& ea = state.ea;
    if (trace.round == 1) {
        ea.append_owned(config.ea_prompt);
        trace.ea_prefill_s += workload.prefill_latency(ea_flops, config.ea_prompt, ea.history());
    }
    trace.ea_decode_s = workload.autoregressive_latency(ea_flops, config.ea_output, ea.history());
    const double ea_debt = ea.debt();

    std::vector<TransmissionContext> receivers;
    for (const auto id : trace.active) {
        const std::size_t i = id - 1;
        TransmissionContext ctx;
        ctx.output_tokens = config.ea_output;
        ctx.kv_debt = ea_debt;
        ctx.receiver_history = state.aas[i].history();
        ctx.compression = config.compression;
        ctx.bits_per_token = config.bits_per_token;
        ctx.receiver_flops = state.aa_flops[i];
        ctx.link = downlink[i];
        ctx.rho = 1.0;
        receivers.push_back(ctx);
    }
    const auto broadcast = broadcast_mode_select(workload, receivers);
    switch (policy) {
        case Policy::jmsra: trace.ea_mode = broadcast.mode; break;
        case Policy::all_nl: trace.ea_mode = Mode::nl; break;
        case Policy::all_kv: trace.ea_mode = Mode::kv; break;
    }
    const double kv_tokens0 = ea_debt + config.ea_output;
    trace.ea_broadcast_s = trace.ea_mode == Mode::kv
                               ? workload.kv_payload_bits(kv_tokens0, config.compression) / broadcast.rate
                               : token_payload_bits(config.ea_output, config.bits_per_token) / broadcast.rate;
    ea.append_owned(config.ea_output);
    if (trace.ea_mode == Mode::kv) ea.clear_debt();
    trace.xi0_after_broadcast = ea.debt();

    // (c) AAs absorb the broadcast, sense, answer, and contend for the uplink
    ScenarioInstance uplink_round;
    uplink_round.workload = workload;
    uplink_round.bandwidth_hz = config.bandwidth_hz;
    uplink_round.ea_flops = ea_flops;
    std::vector<double> aa_debt;
    for (const auto id : trace.active) {
        const std::size_t i = id - 1;
        auto& aa = state.aas[i];
        auto& rec = trace.agents[id];
        rec.active = true;
        if (trace.ea_mode == Mode::nl) {
            rec.prefill_s += workload.prefill_latency(state.aa_flops[i], config.ea_output,
                                                      aa.history() + config.ea_output);
            aa.append_owned(config.ea_output);
        } else {
            aa.append_shared(kv_tokens0);
        }
        rec.prefill_s += workload.prefill_latency(state.aa_flops[i], config.aa_input,
                                                  aa.history() + config.aa_input);
        aa.append_owned(config.aa_input);
        rec.decode_s = workload.autoregressive_latency(state.aa_flops[i], config.aa_output, aa.history());
        aa_debt.push_back(aa.debt());
        uplink_round.agents.push_back(ScenarioInstance::make_agent(
            workload, uplink[i], config.aa_output, aa.debt(), config.compression, config.bits_per_token));
    }
    uplink_round.ea_history = ea.history();

    SolverOptions options;
    options.delta = config.delta;
    Assignment assignment;
    switch (policy) {
        case Policy::jmsra: assignment = jmsra(uplink_round, options); break;
        case Policy::all_nl: assignment = baseline(uplink_round, Mode::nl, Allocation::optimized, options); break;
        case Policy::all_kv: assignment = baseline(uplink_round, Mode::kv, Allocation::optimized, options); break;
    }
    trace.uplink_s = assignment.tau;
    trace.J = assignment.J;
    trace.ea_prefill_s += assignment.ea_prefill;

    // (d) ledgers: the EA ingests every reply, KV senders clear their debt
    double ingested = 0;
    for (std::size_t k = 0; k < trace.active.size(); ++k) {
        const std::size_t id = trace.active[k];
        auto& aa = state.aas[id - 1];
        auto& rec = trace.agents[id];
        const auto& up = uplink_round.agents[k];
        rec.mode = assignment.x[k];
        rec.rho = assignment.rho[k];
        rec.comm_s = up.bits(rec.mode) / ofdma_rate(rec.rho, config.bandwidth_hz, up.snr);
        aa.append_owned(config.aa_output);
        if (rec.mode == Mode::kv) {
            aa.clear_debt();
            ingested += aa_debt[k] + config.aa_output;
        } else {
            ingested += config.aa_output;
        }
    }
    ea.append_owned(ingested);

    trace.theta0 = ea.history();
    trace.xi0 = ea.debt();
    auto& ea_rec = trace.agents[0];
    ea_rec.active = true;
    ea_rec.mode = trace.ea_mode;
    ea_rec.rho = 1.0;
    ea_rec.prefill_s = trace.ea_prefill_s;
    ea_rec.decode_s = trace.ea_decode_s;
    ea_rec.comm_s = trace.ea_broadcast_s;
    ea_rec.theta = trace.theta0;
    ea_rec.xi = trace.xi0;
    for (std::size_t i = 0; i < n; ++i) {
        trace.agents[i + 1].theta = state.aas[i].history();
        trace.agents[i + 1].xi = state.aas[i].debt();
    }
    return trace;
}

std::vector<RoundTrace> run_multi_round(const MultiRoundConfig& config, int rounds,
                                        std::uint64_t seed, Policy policy) {
    if (rounds < 1) {
        throw std::invalid_argument("need at least one round");
    }
    auto state = initial_state(config, seed);
    std::vector<RoundTrace> traces;
    traces.reserve(static_cast<std::size_t>(rounds));
    for (int r = 1; r <= rounds; ++r) {
        traces.push_back(step_multi_round(state, config, derive_seed(seed, static_cast<std::uint64_t>(r)),
                                          policy));
    }
    return traces;
}

}  // namespace kvlink
