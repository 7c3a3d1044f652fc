#include "kvlink/static_e2e.hpp"

#include "kvlink/errors.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace kvlink {

void DialogueShape::validate() const {
    const std::size_t n = agents();
    if (n == 0) {
        throw std::invalid_argument("dialogue needs at least one AA");
    }
    if (aa_output_r1.size() != n || aa_input_r2.size() != n || aa_compression.size() != n) {
        throw std::invalid_argument("dialogue: per-AA vectors differ in length");
    }
    auto positive = [](double v) { return v > 0.0; };
    if (!positive(ea_prompt) || !positive(ea_output_r1) || !positive(ea_output_r2)) {
        throw std::invalid_argument("dialogue: EA token counts must be > 0");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!positive(aa_output_r1[i]) || !positive(aa_input_r2[i]) || !positive(aa_output_r2[i])) {
            throw std::invalid_argument("dialogue: AA token counts must be > 0");
        }
        if (!(aa_compression[i] >= 1.0)) {
            throw std::invalid_argument("dialogue: compression ratio must be >= 1");
        }
    }
    if (!(ea_compression >= 1.0)) {
        throw std::invalid_argument("dialogue: compression ratio must be >= 1");
    }
}

double DialogueShape::ea_input_r2_tokens() const {
    return std::accumulate(aa_output_r2.begin(), aa_output_r2.end(), 0.0);
}

double DialogueShape::aa_history_kv(std::size_t i) const {
    return (ea_prompt + ea_output_r1) + aa_output_r1.at(i) + aa_input_r2.at(i);
}

double DialogueShape::ea_history_kv() const {
    double eps = ea_prompt + ea_output_r1;
    for (std::size_t i = 0; i < agents(); ++i) {
        eps += aa_output_r1[i] + (aa_input_r2[i] + aa_output_r2[i]);
    }
    return eps;
}

DialogueShape DialogueShape::symmetric(std::size_t agents, double prompt_tokens, double beta,
                                       double final_output, double compression,
                                       double bits_per_token) {
    DialogueShape d;
    d.ea_prompt = prompt_tokens;
    d.ea_output_r1 = beta * prompt_tokens;
    d.ea_output_r2 = final_output;
    // An AA's round-1 input is the EA's round-1 output.
    d.aa_output_r1.assign(agents, beta * d.ea_output_r1);
    d.aa_input_r2.assign(agents, prompt_tokens);
    d.aa_output_r2.assign(agents, beta * prompt_tokens);
    d.ea_compression = compression;
    d.aa_compression.assign(agents, compression);
    d.bits_per_token = bits_per_token;
    return d;
}

namespace {

void check_inputs(const DialogueShape& shape, const AgentComputes& computes, const LinkSet& links) {
    shape.validate();
    const std::size_t n = shape.agents();
    if (computes.aa_flops.size() != n || links.downlink.size() != n || links.uplink.size() != n ||
        links.rho.size() != n) {
        throw std::invalid_argument("computes/links do not match the AA count");
    }
}

double checked_rate(double rate) {
    if (!(rate > 0.0) || !std::isfinite(rate)) {
        throw LinkUnusable("link unusable: zero rate");
    }
    return rate;
}

void finish(ModeLatencyBreakdown& out) {
    double worst = -1.0;
    for (std::size_t i = 0; i < out.aa_comm.size(); ++i) {
        const double path = out.aa_path(i);
        if (path > worst) {
            worst = path;
            out.bottleneck_aa = i;
        }
    }
    out.total = out.ea_inference[0] + out.ea_inference[1] + out.ea_comm + worst;
}

}  // namespace

ModeLatencyBreakdown nl_mode_latency(const Workload& workload, const DialogueShape& shape,
                                     const AgentComputes& computes, const LinkSet& links) {
    check_inputs(shape, computes, links);
    const std::size_t n = shape.agents();
    const double b = shape.bits_per_token;
    const double ea_ctx_r1 = shape.ea_prompt + shape.ea_output_r1;

    ModeLatencyBreakdown out;
    out.ea_inference[0] = workload.total_inference_latency(computes.ea_flops, shape.ea_output_r1,
                                                           shape.ea_prompt, shape.ea_prompt);
    const double r0 = checked_rate(broadcast_rate(links.bandwidth_hz, links.downlink));
    out.ea_comm = token_payload_bits(shape.ea_output_r1, b) / r0;

    out.aa_inference.resize(n);
    out.aa_comm.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double c = computes.aa_flops[i];
        // Round 1: prefill the EA's tokens, then answer.
        out.aa_inference[i][0] = workload.total_inference_latency(
            c, shape.aa_output_r1[i], shape.ea_output_r1, shape.ea_output_r1);
        // Round 2: sensed input on top of the round-1 history.
        const double history = shape.ea_output_r1 + shape.aa_output_r1[i];
        out.aa_inference[i][1] = workload.total_inference_latency(
            c, shape.aa_output_r2[i], history + shape.aa_input_r2[i], shape.aa_input_r2[i]);
        const double ri = checked_rate(ofdma_rate(links.rho[i], links.bandwidth_hz, links.uplink[i]));
        out.aa_comm[i] = token_payload_bits(shape.aa_output_r2[i], b) / ri;
    }

    const double s02 = shape.ea_input_r2_tokens();
    out.ea_inference[1] =
        workload.total_inference_latency(computes.ea_flops, shape.ea_output_r2, ea_ctx_r1 + s02, s02);
    finish(out);
    return out;
}

ModeLatencyBreakdown kv_mode_latency(const Workload& workload, const DialogueShape& shape,
                                     const AgentComputes& computes, const LinkSet& links) {
    check_inputs(shape, computes, links);
    const std::size_t n = shape.agents();
    const double ea_ctx_r1 = shape.ea_prompt + shape.ea_output_r1;

    ModeLatencyBreakdown out;
    out.ea_inference[0] = workload.total_inference_latency(computes.ea_flops, shape.ea_output_r1,
                                                           shape.ea_prompt, shape.ea_prompt);
    const double r0 = checked_rate(broadcast_rate(links.bandwidth_hz, links.downlink));
    out.ea_comm = workload.kv_payload_bits(ea_ctx_r1, shape.ea_compression) / r0;

    out.aa_inference.resize(n);
    out.aa_comm.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double c = computes.aa_flops[i];
        // Round 1 inherits the EA's cache and starts decoding directly.
        out.aa_inference[i][0] = workload.autoregressive_latency(c, shape.aa_output_r1[i], ea_ctx_r1);
        const double omega = shape.aa_history_kv(i);
        out.aa_inference[i][1] = workload.prefill_latency(c, shape.aa_input_r2[i], omega) +
                                 workload.autoregressive_latency(c, shape.aa_output_r2[i], omega);
        const double ri = checked_rate(ofdma_rate(links.rho[i], links.bandwidth_hz, links.uplink[i]));
        const double fresh = shape.aa_output_r1[i] + shape.aa_input_r2[i] + shape.aa_output_r2[i];
        out.aa_comm[i] = workload.kv_payload_bits(fresh, shape.aa_compression[i]) / ri;
    }

    out.ea_inference[1] =
        workload.autoregressive_latency(computes.ea_flops, shape.ea_output_r2, shape.ea_history_kv());
    finish(out);
    return out;
}

std::string to_string(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::beta: return "beta";
        case SweepAxis::compute: return "compute";
        case SweepAxis::snr: return "snr";
        case SweepAxis::aa_count: return "aa_count";
    }
    return "?";
}

SweepAxis parse_sweep_axis(const std::string& name) {
    if (name == "beta") return SweepAxis::beta;
    if (name == "compute") return SweepAxis::compute;
    if (name == "snr") return SweepAxis::snr;
    if (name == "aa_count" || name == "agents") return SweepAxis::aa_count;
    throw std::invalid_argument("unknown sweep axis '" + name + "'");
}

std::vector<double> default_sweep_grid(SweepAxis axis) {
    std::vector<double> grid;
    switch (axis) {
        case SweepAxis::beta:
            // 33 log-spaced points over [1/4, 4]
            for (int k = 0; k <= 32; ++k) {
                grid.push_back(std::pow(2.0, -2.0 + 4.0 * k / 32.0));
            }
            break;
        case SweepAxis::compute:
            for (int tflops = 1; tflops <= 50; ++tflops) grid.push_back(tflops);
            break;
        case SweepAxis::snr:
            for (int db = -10; db <= 30; ++db) grid.push_back(db);
            break;
        case SweepAxis::aa_count:
            for (int n = 1; n <= 30; ++n) grid.push_back(n);
            break;
    }
    return grid;
}

std::vector<SweepRow> ratio_sweep(SweepAxis axis, std::span<const double> grid,
                                  const SweepDefaults& defaults) {
    if (grid.empty()) {
        throw std::invalid_argument("sweep grid is empty");
    }
    const Workload workload(defaults.model);
    std::vector<SweepRow> rows;
    rows.reserve(grid.size());
    for (const double x : grid) {
        SweepDefaults p = defaults;
        switch (axis) {
            case SweepAxis::beta: p.beta = x; break;
            case SweepAxis::compute: p.flops = x * 1e12; break;
            case SweepAxis::snr: p.snr_db = x; break;
            case SweepAxis::aa_count:
                if (x < 1.0 || x != std::floor(x)) {
                    throw std::invalid_argument("AA count must be a positive integer");
                }
                p.agents = static_cast<std::size_t>(x);
                break;
        }
        const auto shape = DialogueShape::symmetric(p.agents, p.prompt_tokens, p.beta, p.final_output,
                                                    p.compression, p.bits_per_token);
        AgentComputes computes{p.flops, std::vector<double>(p.agents, p.flops)};
        const LinkSnr snr = LinkSnr::from_db(p.snr_db);
        LinkSet links{p.bandwidth_hz, std::vector<LinkSnr>(p.agents, snr),
                      std::vector<LinkSnr>(p.agents, snr),
                      std::vector<double>(p.agents, 1.0 / static_cast<double>(p.agents))};
        const auto nl = nl_mode_latency(workload, shape, computes, links);
        const auto kv = kv_mode_latency(workload, shape, computes, links);
        rows.push_back(SweepRow{axis, x, nl.total, kv.total, nl.total / kv.total, nl.bottleneck_aa,
                                kv.bottleneck_aa});
    }
    return rows;
}

}  // namespace kvlink
