#pragma once

#include "kvlink/channel.hpp"
#include "kvlink/workload.hpp"

#include <optional>
#include <span>
#include <string>

namespace kvlink {

enum class Mode : unsigned char { nl = 0, kv = 1 };

inline const char* to_string(Mode m) { return m == Mode::kv ? "KV" : "NL"; }

/// One transmitter -> receiver hand-off as seen by the transmitter.
struct TransmissionContext {
    double output_tokens = 1;      // alpha: tokens produced this turn
    double kv_debt = 0;            // xi: context tokens whose KV the receiver lacks
    double receiver_history = 0;   // theta_r
    double compression = 2.0;      // gamma
    double bits_per_token = 16.0;  // b
    double receiver_flops = 1e12;
    LinkBudget link;
    double rho = 1.0;

    void validate() const;
    /// OFDMA rate at this context's bandwidth share.
    double rate() const;
};

/// f(alpha) = k4 alpha^2 + k5 alpha + k6 = t_NL - t_KV for one hand-off.
struct DecisionPoly {
    double k4 = 0;
    double k5 = 0;
    double k6 = 0;

    double operator()(double alpha) const { return (k4 * alpha + k5) * alpha + k6; }
};

/// Receiver prefill over the tokens plus their airtime.
double marginal_latency_nl(const Workload& w, const TransmissionContext& ctx);
double marginal_latency_nl_at_rate(const Workload& w, const TransmissionContext& ctx, double rate);

/// Airtime of the unshared KV cache plus this turn's KV; no receiver compute.
double marginal_latency_kv(const Workload& w, const TransmissionContext& ctx);
double marginal_latency_kv_at_rate(const Workload& w, const TransmissionContext& ctx, double rate);

/// A(alpha): receiver prefill seconds the KV mode saves.
double nl_compute_cost(const Workload& w, const TransmissionContext& ctx);
/// D(alpha): KV bits minus token bits.
double kv_excess_bits(const Workload& w, const TransmissionContext& ctx);

DecisionPoly decision_poly(const Workload& w, const TransmissionContext& ctx);

/// KV iff f(alpha) > 0; a tie goes to NL.
Mode select_mode(const Workload& w, const TransmissionContext& ctx);

/// f as a function of the bandwidth share, A - D / R(rho). ctx.rho is ignored.
double decision_value_at(const Workload& w, const TransmissionContext& ctx, double rho);

/// Share rho* at which both modes tie; KV wins above it. Empty when NL wins
/// even on the full band. Throws KvNotDominant when D(alpha) <= 0.
std::optional<double> bandwidth_threshold(const Workload& w, const TransmissionContext& ctx);

struct BroadcastDecision {
    Mode mode = Mode::nl;
    double rate = 0;      // worst-receiver full-band rate
    double worst_nl = 0;  // max over receivers of the NL marginal latency
    double worst_kv = 0;
};

/// Min-max choice for one full-band broadcast. Every receiver sees the same
/// worst-case rate; the mode with the smaller worst marginal latency wins
/// (ties -> NL). Rejects an empty receiver set.
BroadcastDecision broadcast_mode_select(const Workload& w,
                                        std::span<const TransmissionContext> receivers);

}  // namespace kvlink
