#pragma once

#include "kvlink/channel.hpp"
#include "kvlink/workload.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace kvlink {

/// Token bookkeeping of the two-round EA <-> AAs dialogue.
///
/// Round 1: the EA reads its prompt and produces `ea_output_r1` tokens that
/// reach every AA; each AA answers internally with `aa_output_r1[i]` tokens.
/// Round 2: each AA senses `aa_input_r2[i]` new tokens and replies with
/// `aa_output_r2[i]` tokens; the EA then produces `ea_output_r2` tokens.
struct DialogueShape {
    double ea_prompt = 1024;     // s_{0,1}
    double ea_output_r1 = 1024;  // alpha_{0,1}
    double ea_output_r2 = 100;   // alpha_{0,2}
    std::vector<double> aa_output_r1;
    std::vector<double> aa_input_r2;
    std::vector<double> aa_output_r2;
    double ea_compression = 2.0;
    std::vector<double> aa_compression;
    double bits_per_token = 16.0;

    std::size_t agents() const noexcept { return aa_output_r2.size(); }
    void validate() const;

    /// EA input in round 2 under token transmission: sum of AA replies.
    double ea_input_r2_tokens() const;
    /// Context length of AA i before its round-2 decode in KV mode.
    double aa_history_kv(std::size_t i) const;
    /// EA context before its final decode in KV mode.
    double ea_history_kv() const;

    /// Equal agents: s_{0,1} = s_{i,2} = s, every output is beta times its
    /// input except the EA's final answer.
    static DialogueShape symmetric(std::size_t agents, double prompt_tokens, double beta,
                                   double final_output, double compression,
                                   double bits_per_token);
};

struct AgentComputes {
    double ea_flops = 10e12;
    std::vector<double> aa_flops;
};

/// EA->AA downlink SNRs (full band, broadcast) and AA->EA uplink SNRs with
/// their bandwidth shares.
struct LinkSet {
    double bandwidth_hz = 2e9;
    std::vector<LinkSnr> downlink;
    std::vector<LinkSnr> uplink;
    std::vector<double> rho;
};

struct ModeLatencyBreakdown {
    std::array<double, 2> ea_inference{};
    double ea_comm = 0.0;
    std::vector<std::array<double, 2>> aa_inference;
    std::vector<double> aa_comm;
    std::size_t bottleneck_aa = 0;
    double total = 0.0;

    /// Sum of both inference rounds and the uplink of AA i.
    double aa_path(std::size_t i) const {
        return aa_inference[i][0] + aa_inference[i][1] + aa_comm[i];
    }
};

/// All agents exchange token indices.
ModeLatencyBreakdown nl_mode_latency(const Workload& workload, const DialogueShape& shape,
                                     const AgentComputes& computes, const LinkSet& links);

/// All agents exchange (compressed) KV caches; receivers skip prefill.
ModeLatencyBreakdown kv_mode_latency(const Workload& workload, const DialogueShape& shape,
                                     const AgentComputes& computes, const LinkSet& links);

enum class SweepAxis { beta, compute, snr, aa_count };

std::string to_string(SweepAxis axis);
/// Accepts "beta", "compute", "snr", "aa_count" (also "agents").
SweepAxis parse_sweep_axis(const std::string& name);

/// Symmetric operating point shared by every agent in a ratio sweep.
struct SweepDefaults {
    ModelSpec model = ModelSpec::llama_7b();
    double prompt_tokens = 1024;
    double beta = 1.0;
    double final_output = 100;
    std::size_t agents = 5;
    double flops = 10e12;
    double snr_db = 5.0;
    double bits_per_token = 16.0;
    double compression = 2.0;
    double bandwidth_hz = 2e9;
};

struct SweepRow {
    SweepAxis axis = SweepAxis::snr;
    double x = 0.0;
    double t_nl = 0.0;
    double t_kv = 0.0;
    double ratio = 0.0;
    std::size_t bottleneck_nl = 0;
    std::size_t bottleneck_kv = 0;
};

/// Grid the sweep uses when none is given. x is TFLOPS on the compute
/// axis, dB on the snr axis.
std::vector<double> default_sweep_grid(SweepAxis axis);

/// Evaluates t_NL / t_KV at each grid point, varying one parameter of
/// `defaults`. Uniform bandwidth split, one common SNR on every link.
std::vector<SweepRow> ratio_sweep(SweepAxis axis, std::span<const double> grid,
                                  const SweepDefaults& defaults);

}  // namespace kvlink
