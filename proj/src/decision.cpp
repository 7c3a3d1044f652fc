#include "kvlink/decision.hpp"

#include "kvlink/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace kvlink {

void TransmissionContext::validate() const {
    if (!(output_tokens >= 1.0)) {
        throw std::invalid_argument("transmission: output_tokens must be >= 1");
    }
    if (kv_debt < 0.0 || receiver_history < 0.0) {
        throw std::invalid_argument("transmission: debt and history must be >= 0");
    }
    if (!(compression >= 1.0)) {
        throw std::invalid_argument("transmission: compression must be >= 1");
    }
    if (bits_per_token < 0.0 || !(receiver_flops > 0.0)) {
        throw std::invalid_argument("transmission: bad bits_per_token or receiver_flops");
    }
    if (!(rho > 0.0) || rho > 1.0) {
        throw std::invalid_argument("transmission: rho must lie in (0, 1]");
    }
    link.validate();
}

double TransmissionContext::rate() const {
    return ofdma_rate(rho, link.bandwidth_hz, link_snr(link));
}

namespace {

double usable(double rate) {
    if (!(rate > 0.0) || !std::isfinite(rate)) {
        throw LinkUnusable("link unusable: zero rate");
    }
    return rate;
}

}  // namespace

double nl_compute_cost(const Workload& w, const TransmissionContext& ctx) {
    ctx.validate();
    return w.prefill_latency(ctx.receiver_flops, ctx.output_tokens,
                             ctx.output_tokens + ctx.receiver_history);
}

double kv_excess_bits(const Workload& w, const TransmissionContext& ctx) {
    ctx.validate();
    return w.kv_payload_bits(ctx.kv_debt + ctx.output_tokens, ctx.compression) -
           token_payload_bits(ctx.output_tokens, ctx.bits_per_token);
}

double marginal_latency_nl_at_rate(const Workload& w, const TransmissionContext& ctx, double rate) {
    return nl_compute_cost(w, ctx) + token_payload_bits(ctx.output_tokens, ctx.bits_per_token) / usable(rate);
}

double marginal_latency_nl(const Workload& w, const TransmissionContext& ctx) {
    ctx.validate();
    return marginal_latency_nl_at_rate(w, ctx, ctx.rate());
}

double marginal_latency_kv_at_rate(const Workload& w, const TransmissionContext& ctx, double rate) {
    ctx.validate();
    return w.kv_payload_bits(ctx.kv_debt + ctx.output_tokens, ctx.compression) / usable(rate);
}

double marginal_latency_kv(const Workload& w, const TransmissionContext& ctx) {
    ctx.validate();
    return marginal_latency_kv_at_rate(w, ctx, ctx.rate());
}

DecisionPoly decision_poly(const Workload& w, const TransmissionContext& ctx) {
    ctx.validate();
    const double rate = usable(ctx.rate());
    const double k1 = static_cast<double>(w.constants().k1);
    const double k2 = static_cast<double>(w.constants().k2);
    const double k3 = static_cast<double>(w.constants().k3);
    // 16 k1 / gamma is the compressed KV size of one token.
    const double kv_bits = w.kv_payload_bits(1.0, ctx.compression);
    const double c = ctx.receiver_flops;
    DecisionPoly p;
    p.k4 = 2.0 * k1 / c;
    p.k5 = (k2 + 2.0 * k1 * ctx.receiver_history) / c + (ctx.bits_per_token - kv_bits) / rate;
    p.k6 = k3 / c - kv_bits * ctx.kv_debt / rate;
    return p;
}

Mode select_mode(const Workload& w, const TransmissionContext& ctx) {
    return decision_poly(w, ctx)(ctx.output_tokens) > 0.0 ? Mode::kv : Mode::nl;
}

double decision_value_at(const Workload& w, const TransmissionContext& ctx, double rho) {
    TransmissionContext at = ctx;
    at.rho = rho;
    at.validate();
    return nl_compute_cost(w, at) - kv_excess_bits(w, at) / usable(at.rate());
}

std::optional<double> bandwidth_threshold(const Workload& w, const TransmissionContext& ctx) {
    TransmissionContext probe = ctx;
    probe.rho = 1.0;
    const double excess = kv_excess_bits(w, probe);
    if (!(excess > 0.0)) {
        throw KvNotDominant("KV payload not dominant: D(alpha) <= 0");
    }
    const double a = nl_compute_cost(w, probe);
    auto f = [&](double rho) { return decision_value_at(w, ctx, rho); };
    if (f(1.0) <= 0.0) {
        return std::nullopt;
    }
    // f is strictly increasing in rho and tends to -inf at 0+.
    const double rho_tol = 1e-6;
    const double f_tol = 1e-7 * std::abs(a);
    double lo = 0.0;
    double hi = 1.0;
    double best = 1.0;
    double best_abs = std::abs(f(1.0));
    for (int iter = 0; iter < 60; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double v = f(mid);
        if (std::abs(v) < best_abs) {
            best = mid;
            best_abs = std::abs(v);
        }
        if (v > 0.0) {
            hi = mid;
        } else {
            lo = mid;
        }
        if (hi - lo <= rho_tol && best_abs <= f_tol) {
            break;
        }
    }
    return best;
}

BroadcastDecision broadcast_mode_select(const Workload& w,
                                        std::span<const TransmissionContext> receivers) {
    if (receivers.empty()) {
        throw std::invalid_argument("broadcast decision needs at least one receiver");
    }
    std::vector<LinkSnr> snrs;
    snrs.reserve(receivers.size());
    for (const auto& r : receivers) {
        r.validate();
        snrs.push_back(link_snr(r.link));
    }
    BroadcastDecision d;
    d.rate = usable(broadcast_rate(receivers.front().link.bandwidth_hz, snrs));
    for (const auto& r : receivers) {
        d.worst_nl = std::max(d.worst_nl, marginal_latency_nl_at_rate(w, r, d.rate));
        d.worst_kv = std::max(d.worst_kv, marginal_latency_kv_at_rate(w, r, d.rate));
    }
    d.mode = d.worst_kv < d.worst_nl ? Mode::kv : Mode::nl;
    return d;
}

}  // namespace kvlink
