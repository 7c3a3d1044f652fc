#pragma once

#include "kvlink/channel.hpp"
#include "kvlink/decision.hpp"
#include "kvlink/optimizer.hpp"
#include "kvlink/workload.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace kvlink {

/// Randomized single-round AAs -> EA instance.
struct SingleRoundConfig {
    ModelSpec model = ModelSpec::llama_7b();
    std::size_t agents = 20;
    double distance_min_m = 5;
    double distance_max_m = 10;
    double power_min_dbm = 10;
    double power_max_dbm = 23;
    double alpha_base = 1024;      // alpha = base * (0.8 + 0.4 U[0,1])
    double debt_ratio_min = 2.8;   // xi = U[min, max] * alpha
    double debt_ratio_max = 3.2;
    double ea_history = 1024 * 5;
    double compression = 2;
    double bits_per_token = 16;
    double bandwidth_hz = 2e9;
    double noise_dbm_per_hz = -140;
    double ea_tflops = 10;

    void validate() const;
};

struct AgentDraw {
    double distance_m = 0;
    double tx_power_dbm = 0;
    double fading_amp = 0;
    double output_tokens = 0;
    double kv_debt = 0;
    LinkSnr snr;
};

struct SingleRoundSample {
    ScenarioInstance instance;
    std::vector<AgentDraw> draws;
};

/// Deterministic in (config, seed); each agent draws from its own stream.
SingleRoundSample sample_single_round(const SingleRoundConfig& config, std::uint64_t seed);

struct MultiRoundConfig {
    ModelSpec model = ModelSpec::llama_7b();
    std::size_t max_agents = 20;
    double ea_tflops = 20;
    double aa_tflops_min = 5;
    double aa_tflops_max = 15;
    double ea_power_dbm = 30;
    double power_min_dbm = 10;
    double power_max_dbm = 23;
    double distance_min_m = 5;
    double distance_max_m = 10;
    double ea_prompt = 1024;
    double ea_output = 1024;
    double aa_input = 1024;
    double aa_output = 1024;
    double ea_context_limit = 1024.0 * 20 * 20;
    double ea_window = 1024.0 * 20 * 5;
    double aa_context_limit = 1024.0 * 50;
    double aa_window = 1024.0 * 10;
    double activity_probability = 0.75;
    double compression = 2;
    double bits_per_token = 16;
    double bandwidth_hz = 2e9;
    double noise_dbm_per_hz = -140;
    double delta = 1e-4;

    void validate() const;
};

enum class Policy { jmsra, all_nl, all_kv };

std::string to_string(Policy p);
Policy parse_policy(const std::string& name);

/// Context bookkeeping of one agent. `history` is the context length; `debt`
/// counts context tokens whose KV no peer holds yet.
class AgentLedger {
public:
    AgentLedger() = default;
    AgentLedger(double context_limit, double window);

    double history() const noexcept { return history_; }
    double debt() const noexcept { return debt_; }
    double context_limit() const noexcept { return limit_; }
    double window() const noexcept { return window_; }

    /// Tokens that only this agent holds KV for (own input, own output,
    /// token-mode receptions).
    void append_owned(double tokens);
    /// Tokens whose KV arrived from a peer.
    void append_shared(double tokens);
    /// Debt clearing after a KV transmission.
    void clear_debt() noexcept { debt_ = 0; }

    /// 0 <= debt <= window, debt <= history <= context_limit.
    bool invariants_hold() const noexcept;

private:
    void evict();

    double history_ = 0;
    double debt_ = 0;
    double limit_ = 0;
    double window_ = 0;
};

struct AgentRoundRecord {
    std::size_t agent_id = 0;  // 0 is the EA, AAs are 1..max_agents
    bool active = false;
    Mode mode = Mode::nl;
    double rho = 0;
    double prefill_s = 0;
    double decode_s = 0;
    double comm_s = 0;
    double theta = 0;  // after the round
    double xi = 0;
};

struct RoundTrace {
    int round = 0;
    bool skipped = false;
    std::vector<std::size_t> active;  // AA ids, 1-based
    Mode ea_mode = Mode::nl;
    double ea_broadcast_s = 0;
    double ea_prefill_s = 0;  // prompt (round 1) + ingest of token replies
    double ea_decode_s = 0;
    double uplink_s = 0;      // tau of the AAs -> EA phase
    double J = 0;             // ingest prefill + tau
    double theta0 = 0;        // EA context after the round
    double xi0 = 0;
    double xi0_after_broadcast = 0;
    std::vector<AgentRoundRecord> agents;  // EA first, then every AA

    double ea_compute_s() const { return ea_prefill_s + ea_decode_s; }
    /// Share of active AAs that sent KV this round.
    double kv_fraction() const;
};

struct MultiRoundState {
    int round = 0;
    AgentLedger ea;
    std::vector<AgentLedger> aas;
    std::vector<double> aa_flops;
};

/// Fresh ledgers; AA compute capacities are drawn once from `seed`.
MultiRoundState initial_state(const MultiRoundConfig& config, std::uint64_t seed);

/// Advances one dialogue round: EA broadcast, AA sensing and inference,
/// AA uplink, ledger update.
RoundTrace step_multi_round(MultiRoundState& state, const MultiRoundConfig& config,
                            std::uint64_t round_seed, Policy policy);

std::vector<RoundTrace> run_multi_round(const MultiRoundConfig& config, int rounds,
                                        std::uint64_t seed, Policy policy);

}  // namespace kvlink
