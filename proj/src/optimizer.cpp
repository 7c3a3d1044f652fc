#include "kvlink/optimizer.hpp"

#include "kvlink/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace kvlink {

void ScenarioInstance::validate() const {
    if (agents.empty()) {
        throw std::invalid_argument("scenario needs at least one AA");
    }
    if (!(bandwidth_hz > 0.0) || !(ea_flops > 0.0) || ea_history < 0.0) {
        throw std::invalid_argument("scenario: bad bandwidth, EA compute or EA history");
    }
    for (const auto& a : agents) {
        if (!(a.nl_bits > 0.0) || !(a.kv_bits > 0.0) || !(a.output_tokens > 0.0)) {
            throw std::invalid_argument("scenario: payloads and output tokens must be > 0");
        }
        if (a.snr.linear < 0.0) {
            throw std::invalid_argument("scenario: negative SNR");
        }
    }
}

AgentUplink ScenarioInstance::make_agent(const Workload& w, LinkSnr snr, double output_tokens,
                                         double kv_debt, double compression,
                                         double bits_per_token) {
    AgentUplink a;
    a.snr = snr;
    a.output_tokens = output_tokens;
    a.nl_bits = token_payload_bits(output_tokens, bits_per_token);
    a.kv_bits = w.kv_payload_bits(kv_debt + output_tokens, compression);
    return a;
}

void SolverStats::merge(const SolverStats& other) {
    evaluations += other.evaluations;
    bisection_calls += other.bisection_calls;
    max_bisection_iters = std::max(max_bisection_iters, other.max_bisection_iters);
    min_bisection_slack = std::min(min_bisection_slack, other.min_bisection_slack);
}

std::size_t Assignment::kv_count() const {
    return static_cast<std::size_t>(std::count(x.begin(), x.end(), Mode::kv));
}

double ea_prefill_cost(const ModeVector& x, const ScenarioInstance& scenario) {
    if (x.size() != scenario.size()) {
        throw std::invalid_argument("mode vector length differs from the AA count");
    }
    double tokens = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] == Mode::nl) {
            tokens += scenario.agents[i].output_tokens;
        }
    }
    if (tokens == 0.0) {
        return 0.0;
    }
    return scenario.workload.prefill_latency(scenario.ea_flops, tokens, tokens + scenario.ea_history);
}

double required_share(double bits, LinkSnr snr, double bandwidth_hz, double deadline,
                      const SolverOptions& options) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (!(deadline > 0.0)) {
        return inf;
    }
    auto latency = [&](double rho) { return bits / ofdma_rate(rho, bandwidth_hz, snr); };
    if (latency(1.0) > deadline) {
        return inf;
    }
    double lo = options.rho_floor;
    if (latency(lo) <= deadline) {
        return lo;
    }
    double hi = 1.0;
    for (int iter = 0; iter < options.inner_max_iters && hi - lo > 1e-13 * hi; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (latency(mid) <= deadline) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

namespace {

double share_sum(const ModeVector& x, const ScenarioInstance& scenario, double deadline,
                 const SolverOptions& options, std::vector<double>* shares) {
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto& a = scenario.agents[i];
        const double r = required_share(a.bits(x[i]), a.snr, scenario.bandwidth_hz, deadline, options);
        if (shares != nullptr) {
            (*shares)[i] = r;
        } else if (sum + r > 1.0) {
            return sum + r;  // already infeasible
        }
        sum += r;
    }
    return sum;
}

int iteration_bound(double t_max, double delta) {
    if (t_max <= delta) {
        return 1;
    }
    return static_cast<int>(std::ceil(std::log2(t_max / delta))) + 1;
}

}  // namespace

BisectionResult bandwidth_bisection(const ModeVector& x, const ScenarioInstance& scenario,
                                    const SolverOptions& options, SolverStats* stats) {
    scenario.validate();
    if (x.size() != scenario.size()) {
        throw std::invalid_argument("mode vector length differs from the AA count");
    }
    if (!(options.delta > 0.0)) {
        throw std::invalid_argument("bisection tolerance must be > 0");
    }
    const std::size_t n = x.size();
    const double uniform = 1.0 / static_cast<double>(n);

    BisectionResult out;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = scenario.agents[i];
        if (!(a.snr.linear > 0.0)) {
            throw Infeasible("infeasible: AA " + std::to_string(i) + " has a zero-SNR link");
        }
        out.t_max = std::max(out.t_max, a.bits(x[i]) / ofdma_rate(uniform, scenario.bandwidth_hz, a.snr));
    }

    // The uniform split meets t_max, so the upper end is always feasible.
    double lo = 0.0;
    double hi = out.t_max;
    while (hi - lo > options.delta) {
        const double mid = 0.5 * (lo + hi);
        if (share_sum(x, scenario, mid, options, nullptr) <= 1.0) {
            hi = mid;
        } else {
            lo = mid;
        }
        ++out.iterations;
    }
    out.tau = hi;

    out.rho.assign(n, 0.0);
    const double sum = share_sum(x, scenario, hi, options, &out.rho);
    std::vector<double> tight(n, 0.0);
    double tight_sum = 0.0;
    if (lo > 0.0) {
        share_sum(x, scenario, lo, options, &tight);
        for (auto& r : tight) {
            r = std::min(r, 1.0);
            tight_sum += r;
        }
    }
    if (!std::isfinite(sum)) {
        // Only reachable through rounding at t_max; fall back to the split that defines it.
        std::fill(out.rho.begin(), out.rho.end(), uniform);
    } else if (tight_sum > 1.0 && sum < 1.0) {
        // Blend the requirements at both ends of the final bracket so that the
        // shares sum to one and every latency stays inside [lo, hi].
        const double w = (1.0 - sum) / (tight_sum - sum);
        double blended = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            out.rho[i] += w * (tight[i] - out.rho[i]);
            blended += out.rho[i];
        }
        for (auto& r : out.rho) r /= blended;
    } else {
        for (auto& r : out.rho) r /= sum;
    }

    if (stats != nullptr) {
        ++stats->bisection_calls;
        stats->max_bisection_iters = std::max(stats->max_bisection_iters, out.iterations);
        stats->min_bisection_slack = std::min(stats->min_bisection_slack,
                                              iteration_bound(out.t_max, options.delta) - out.iterations);
    }
    return out;
}

double calc_latency(const ModeVector& x, const ScenarioInstance& scenario,
                    const SolverOptions& options, SolverStats* stats) {
    return ea_prefill_cost(x, scenario) + bandwidth_bisection(x, scenario, options, stats).tau;
}

GreedyResult greedy_search(ModeVector x_init, Mode target, const ScenarioInstance& scenario,
                           const SolverOptions& options, SolverStats* stats) {
    if (x_init.size() != scenario.size()) {
        throw std::invalid_argument("mode vector length differs from the AA count");
    }
    GreedyResult out;
    out.x = std::move(x_init);
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < out.x.size(); ++i) {
        if (out.x[i] != target) candidates.push_back(i);
    }

    auto evaluate = [&](const ModeVector& x) {
        ++out.evaluations;
        return calc_latency(x, scenario, options, stats);
    };

    double current = evaluate(out.x);
    out.trace.initial_J = current;
    int step = 0;
    while (!candidates.empty()) {
        std::size_t best_pos = 0;
        double best_j = std::numeric_limits<double>::infinity();
        for (std::size_t pos = 0; pos < candidates.size(); ++pos) {
            ModeVector trial = out.x;
            trial[candidates[pos]] = target;
            const double j = evaluate(trial);
            // candidates stay sorted, so strict < keeps the lowest index on ties
            if (j < best_j) {
                best_j = j;
                best_pos = pos;
            }
        }
        if (!(best_j < current)) {
            break;
        }
        const std::size_t k = candidates[best_pos];
        out.x[k] = target;
        current = best_j;
        candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(best_pos));
        out.trace.steps.push_back(TraceStep{++step, static_cast<int>(k), current});
    }
    out.J = current;
    if (stats != nullptr) {
        stats->evaluations += out.evaluations;
    }
    return out;
}

namespace {

Assignment finalize(ModeVector x, const ScenarioInstance& scenario, const SolverOptions& options,
                    SolverStats& stats) {
    Assignment a;
    a.x = std::move(x);
    const auto split = bandwidth_bisection(a.x, scenario, options, &stats);
    a.rho = split.rho;
    a.tau = split.tau;
    a.bisection_iters = split.iterations;
    a.ea_prefill = ea_prefill_cost(a.x, scenario);
    a.J = a.ea_prefill + a.tau;
    a.stats = stats;
    return a;
}

}  // namespace

Assignment jmsra(const ScenarioInstance& scenario, const SolverOptions& options) {
    scenario.validate();
    const std::size_t n = scenario.size();
    SolverStats stats;
    auto fwd = greedy_search(ModeVector(n, Mode::nl), Mode::kv, scenario, options, &stats);
    auto bwd = greedy_search(ModeVector(n, Mode::kv), Mode::nl, scenario, options, &stats);
    const bool forward_wins = fwd.J <= bwd.J;
    Assignment a = finalize(forward_wins ? fwd.x : bwd.x, scenario, options, stats);
    a.forward = std::move(fwd.trace);
    a.backward = std::move(bwd.trace);
    return a;
}

Assignment exhaustive_search(const ScenarioInstance& scenario, const SolverOptions& options) {
    scenario.validate();
    const std::size_t n = scenario.size();
    if (n > 20) {
        throw std::invalid_argument("exhaustive search is limited to 20 agents");
    }
    SolverStats stats;
    ModeVector best;
    double best_j = std::numeric_limits<double>::infinity();
    ModeVector x(n, Mode::nl);
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = ((mask >> i) & 1U) != 0U ? Mode::kv : Mode::nl;
        }
        ++stats.evaluations;
        const double j = calc_latency(x, scenario, options, &stats);
        if (j < best_j) {
            best_j = j;
            best = x;
        }
    }
    return finalize(std::move(best), scenario, options, stats);
}

Assignment baseline(const ScenarioInstance& scenario, Mode mode, Allocation allocation,
                    const SolverOptions& options) {
    scenario.validate();
    const std::size_t n = scenario.size();
    ModeVector x(n, mode);
    if (allocation == Allocation::optimized) {
        SolverStats stats;
        return finalize(std::move(x), scenario, options, stats);
    }
    Assignment a;
    a.x = std::move(x);
    const double uniform = 1.0 / static_cast<double>(n);
    a.rho.assign(n, uniform);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& ag = scenario.agents[i];
        const double rate = ofdma_rate(uniform, scenario.bandwidth_hz, ag.snr);
        if (!(rate > 0.0)) {
            throw Infeasible("infeasible: AA " + std::to_string(i) + " has a zero-SNR link");
        }
        a.tau = std::max(a.tau, ag.bits(mode) / rate);
    }
    a.ea_prefill = ea_prefill_cost(a.x, scenario);
    a.J = a.ea_prefill + a.tau;
    return a;
}

}  // namespace kvlink
