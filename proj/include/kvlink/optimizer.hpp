#pragma once

#include "kvlink/channel.hpp"
#include "kvlink/decision.hpp"
#include "kvlink/workload.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace kvlink {

using ModeVector = std::vector<Mode>;

/// What one AA would put on the uplink under either mode.
struct AgentUplink {
    LinkSnr snr;               // full-band SNR of the AA -> EA link
    double output_tokens = 0;  // alpha_i
    double nl_bits = 0;        // b alpha_i
    double kv_bits = 0;        // 32 L H d_h (xi_i + alpha_i) / gamma_i

    double bits(Mode m) const { return m == Mode::kv ? kv_bits : nl_bits; }
};

/// One AAs -> EA contention round.
struct ScenarioInstance {
    std::vector<AgentUplink> agents;
    double bandwidth_hz = 2e9;
    double ea_flops = 10e12;
    double ea_history = 0;  // theta_0: EA context before ingesting the round
    Workload workload{ModelSpec::llama_7b()};

    std::size_t size() const noexcept { return agents.size(); }
    void validate() const;

    static AgentUplink make_agent(const Workload& w, LinkSnr snr, double output_tokens,
                                  double kv_debt, double compression, double bits_per_token);
};

struct SolverOptions {
    double delta = 1e-4;  // outer bisection tolerance, seconds
    double rho_floor = 1e-9;
    int inner_max_iters = 80;
};

/// Work counters, accumulated over every call that received them.
struct SolverStats {
    std::size_t evaluations = 0;      // CalcLatency calls made by the greedy search
    std::size_t bisection_calls = 0;
    int max_bisection_iters = 0;
    /// min over calls of (ceil(log2(T_max / delta)) + 1 - iterations); >= 0
    /// means every call met the iteration bound.
    int min_bisection_slack = 1 << 30;

    void merge(const SolverStats& other);
};

struct BisectionResult {
    double tau = 0;            // T_high at termination
    std::vector<double> rho;   // normalized, sums to 1
    int iterations = 0;
    double t_max = 0;
};

struct TraceStep {
    int step = 0;
    int flipped_agent = -1;
    double J = 0;
};

struct SearchTrace {
    double initial_J = 0;
    std::vector<TraceStep> steps;  // one entry per accepted flip
};

struct GreedyResult {
    ModeVector x;
    double J = 0;
    SearchTrace trace;
    std::size_t evaluations = 0;
};

struct Assignment {
    ModeVector x;
    std::vector<double> rho;
    double J = 0;
    double tau = 0;
    double ea_prefill = 0;
    SearchTrace forward;
    SearchTrace backward;
    SolverStats stats;
    int bisection_iters = 0;  // of the final allocation call

    std::size_t kv_count() const;
};

/// EA prefill over the tokens of every NL agent; zero when none.
double ea_prefill_cost(const ModeVector& x, const ScenarioInstance& scenario);

/// Minimum required share so that bits / R(rho) <= deadline; +inf when the
/// full band is not enough.
double required_share(double bits, LinkSnr snr, double bandwidth_hz, double deadline,
                      const SolverOptions& options = {});

/// Min-max bandwidth split for a fixed mode vector by bisecting the common
/// deadline. Throws Infeasible when some agent has a zero-SNR link.
BisectionResult bandwidth_bisection(const ModeVector& x, const ScenarioInstance& scenario,
                                    const SolverOptions& options = {}, SolverStats* stats = nullptr);

/// EA prefill + optimal min-max airtime.
double calc_latency(const ModeVector& x, const ScenarioInstance& scenario,
                    const SolverOptions& options = {}, SolverStats* stats = nullptr);

/// Flips agents toward `target` one at a time, always taking the largest
/// latency reduction (lowest index on ties), until no flip strictly helps.
GreedyResult greedy_search(ModeVector x_init, Mode target, const ScenarioInstance& scenario,
                           const SolverOptions& options = {}, SolverStats* stats = nullptr);

/// Bidirectional greedy over modes with bisection bandwidth allocation.
Assignment jmsra(const ScenarioInstance& scenario, const SolverOptions& options = {});

/// Every mode vector; reference for small instances (at most 20 agents).
Assignment exhaustive_search(const ScenarioInstance& scenario, const SolverOptions& options = {});

enum class Allocation { uniform, optimized };

/// Fixed-mode baseline with either rho_i = 1/I or the bisection split.
Assignment baseline(const ScenarioInstance& scenario, Mode mode, Allocation allocation,
                    const SolverOptions& options = {});

}  // namespace kvlink
