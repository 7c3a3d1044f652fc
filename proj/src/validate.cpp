#include "kvlink/validate.hpp"

#include "kvlink/channel.hpp"
#include "kvlink/decision.hpp"
#include "kvlink/errors.hpp"
#include "kvlink/optimizer.hpp"
#include "kvlink/parallel.hpp"
#include "kvlink/scenario.hpp"
#include "kvlink/static_e2e.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <random>
#include <sstream>

namespace kvlink::validate {

namespace {

// Hand-computed llama-7b constants: L = 32, H = 32, d_h = 128, d_m = 4096,
// d_f = 11008, d_v = 32000.
constexpr std::int64_t kOracleK1 = 262'144;
constexpr std::int64_t kOracleK2 = 10'066'329'600;
constexpr std::int64_t kOracleK3 = 262'144'000;

struct Outcome {
    bool passed = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            if (!passed) detail << "; ";
            passed = false;
            detail << what;
        }
    }
};

std::string fmt(double v, int precision = 4) {
    std::ostringstream os;
    os << std::setprecision(precision) << v;
    return os.str();
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) {
    double s = 0;
    for (const double x : v) s += x;
    return s / static_cast<double>(v.size());
}

LinkBudget link_with_snr_db(double snr_db, double bandwidth_hz) {
    const double n0 = dbm_to_watts(-140.0);
    return LinkBudget{db_to_linear(snr_db) * bandwidth_hz * n0, 0.0, 1.0, n0, bandwidth_hz};
}

/// Tally of the complexity counters observed by criteria 6 to 8.
struct Complexity {
    std::size_t instances = 0;
    std::size_t evaluation_violations = 0;
    std::size_t bisection_violations = 0;
    std::size_t worst_evaluations = 0;
    int min_slack = std::numeric_limits<int>::max();

    void observe(const Assignment& a, std::size_t agents) {
        ++instances;
        const std::size_t bound = agents * (agents + 1) + 2;
        worst_evaluations = std::max(worst_evaluations, a.stats.evaluations);
        if (a.stats.evaluations > bound) ++evaluation_violations;
        min_slack = std::min(min_slack, a.stats.min_bisection_slack);
        if (a.stats.min_bisection_slack < 0) ++bisection_violations;
    }
    void merge(const Complexity& o) {
        instances += o.instances;
        evaluation_violations += o.evaluation_violations;
        bisection_violations += o.bisection_violations;
        worst_evaluations = std::max(worst_evaluations, o.worst_evaluations);
        min_slack = std::min(min_slack, o.min_slack);
    }
};

class Runner {
public:
    explicit Runner(const Options& options)
        : options_(options),
          workload_(options.constants_override
                        ? Workload(ModelSpec::llama_7b(), *options.constants_override)
                        : Workload(ModelSpec::llama_7b())) {}

    Outcome constants() const {
        Outcome o;
        const auto& k = workload_.constants();
        o.require(k.k1 == kOracleK1, "k1 = " + std::to_string(k.k1) + ", expected " + std::to_string(kOracleK1));
        o.require(k.k2 == kOracleK2, "k2 = " + std::to_string(k.k2) + ", expected " + std::to_string(kOracleK2));
        o.require(k.k3 == kOracleK3, "k3 = " + std::to_string(k.k3) + ", expected " + std::to_string(kOracleK3));
        o.require(kv_bits_per_token(ModelSpec::llama_7b()) == 16 * kOracleK1, "KV bits per token != 16 k1");
        if (o.passed) o.detail << "k1, k2, k3 = 262144, 10066329600, 262144000";
        return o;
    }

    Outcome phase_sum() const {
        Outcome o;
        Rng rng(derive_seed(options_.seed, 2));
        std::uniform_real_distribution<double> tokens(1.0, 8192.0);
        std::uniform_real_distribution<double> history(0.0, 32768.0);
        std::uniform_real_distribution<double> log_flops(std::log(1e11), std::log(1e15));
        const auto& k = workload_.constants();
        const long double k1 = k.k1, k2 = k.k2, k3 = k.k3;
        double worst = 0;
        double worst_oracle = 0;
        for (int t = 0; t < 1000; ++t) {
            const double s = tokens(rng);
            const double a = tokens(rng);
            const double phi = s + history(rng);
            const double c = std::exp(log_flops(rng));
            const double sum = workload_.prefill_latency(c, s, phi) + workload_.autoregressive_latency(c, a, phi);
            const double total = workload_.total_inference_latency(c, a, phi, s);
            worst = std::max(worst, std::abs(sum - total) / std::abs(total));
            const long double A = a, S = s, P = phi;
            const long double oracle =
                (k1 * A * A + 2 * k1 * P * (A + S) + (k1 + k2 + k3) * A + k2 * S + k3) / c;
            worst_oracle = std::max(worst_oracle, static_cast<double>(std::abs((total - oracle) / oracle)));
        }
        o.require(worst <= 1e-12, "phase sum max rel err " + fmt(worst));
        o.require(worst_oracle <= 1e-12, "closed form vs oracle max rel err " + fmt(worst_oracle));
        if (o.passed) o.detail << "max rel err " << fmt(worst) << " over 1000 draws";
        return o;
    }

    Outcome monotonicity() const {
        Outcome o;
        Rng rng(derive_seed(options_.seed, 3));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::size_t rate_fail = 0, f_fail = 0, iff_fail = 0, root_fail = 0, with_root = 0;
        double worst_root = 0;
        for (int t = 0; t < 1000; ++t) {
            const double bandwidth = 1e8 + unit(rng) * 3.9e9;
            const double snr_db = -10.0 + 40.0 * unit(rng);
            const LinkSnr snr = LinkSnr::from_db(snr_db);
            double r1 = 1e-6 + unit(rng) * (1.0 - 1e-6);
            double r2 = 1e-6 + unit(rng) * (1.0 - 1e-6);
            if (r1 > r2) std::swap(r1, r2);
            if (r1 < r2 && !(ofdma_rate(r1, bandwidth, snr) < ofdma_rate(r2, bandwidth, snr))) ++rate_fail;
            const double oracle_rate = r2 * bandwidth * std::log2(1.0 + snr.linear / r2);
            if (std::abs(ofdma_rate(r2, bandwidth, snr) - oracle_rate) > 1e-12 * oracle_rate) ++rate_fail;

            TransmissionContext ctx;
            ctx.output_tokens = 1.0 + 2047.0 * unit(rng);
            ctx.kv_debt = 20000.0 * unit(rng);
            ctx.receiver_history = 20000.0 * unit(rng);
            ctx.compression = 1.0 + 7.0 * unit(rng);
            ctx.bits_per_token = 16.0;
            ctx.receiver_flops = (0.5 + 49.5 * unit(rng)) * 1e12;
            ctx.link = link_with_snr_db(snr_db, bandwidth);
            const double a = nl_compute_cost(workload_, ctx);
            const double d = kv_excess_bits(workload_, ctx);
            if (d > 0) {
                double prev = -std::numeric_limits<double>::infinity();
                for (int k = 1; k <= 64; ++k) {
                    const double v = decision_value_at(workload_, ctx, k / 64.0);
                    if (!(v > prev)) ++f_fail;
                    prev = v;
                }
            }
            const bool kv_at_full = decision_value_at(workload_, ctx, 1.0) > 0;
            std::optional<double> root;
            try {
                root = bandwidth_threshold(workload_, ctx);
            } catch (const KvNotDominant&) {
            }
            if (kv_at_full != root.has_value()) ++iff_fail;
            if (root) {
                ++with_root;
                const double rel = std::abs(decision_value_at(workload_, ctx, *root)) / std::abs(a);
                worst_root = std::max(worst_root, rel);
                if (rel > 1e-6) ++root_fail;
            }
        }
        o.require(rate_fail == 0, std::to_string(rate_fail) + " rate monotonicity/oracle failures");
        o.require(f_fail == 0, std::to_string(f_fail) + " f(rho) monotonicity failures");
        o.require(iff_fail == 0, std::to_string(iff_fail) + " f(1) > 0 <=> rho* mismatches");
        o.require(root_fail == 0, std::to_string(root_fail) + " roots with |f| > 1e-6 |A|");
        if (o.passed) {
            o.detail << "1000 contexts, " << with_root << " with rho*, max |f(rho*)|/|A| " << fmt(worst_root);
        }
        return o;
    }

    Outcome ratio_shapes() const {
        Outcome o;
        SweepDefaults d;
        d.model = ModelSpec::llama_7b();
        auto sweep = [&](SweepAxis axis) {
            const auto grid = default_sweep_grid(axis);
            return ratio_sweep(axis, grid, d);
        };
        auto crosses = [](const std::vector<SweepRow>& rows) {
            for (std::size_t i = 1; i < rows.size(); ++i) {
                if ((rows[i - 1].ratio - 1.0) * (rows[i].ratio - 1.0) <= 0.0) return true;
            }
            return false;
        };
        const auto snr = sweep(SweepAxis::snr);
        bool snr_mono = true;
        for (std::size_t i = 1; i < snr.size(); ++i) snr_mono = snr_mono && snr[i].ratio >= snr[i - 1].ratio;
        o.require(snr.front().x <= -10.0 && snr.back().x >= 30.0, "SNR grid does not span [-10, 30] dB");
        o.require(snr_mono, "SNR ratio not nondecreasing");
        o.require(crosses(snr), "SNR ratio does not cross 1");

        const auto agents = sweep(SweepAxis::aa_count);
        bool agents_mono = true;
        for (std::size_t i = 1; i < agents.size(); ++i) {
            if (agents[i - 1].x >= 2 && agents[i].x <= 20) {
                agents_mono = agents_mono && agents[i].ratio >= agents[i - 1].ratio;
            }
        }
        o.require(agents_mono, "I ratio not nondecreasing on [2, 20]");

        const auto beta = sweep(SweepAxis::beta);
        const auto compute = sweep(SweepAxis::compute);
        o.require(crosses(beta), "beta ratio has no crossover");
        o.require(crosses(compute), "compute ratio has no crossover");
        if (o.passed) {
            o.detail << "snr " << fmt(snr.front().ratio) << "->" << fmt(snr.back().ratio) << ", I "
                     << fmt(agents.front().ratio) << "->" << fmt(agents.back().ratio) << ", beta "
                     << fmt(beta.front().ratio) << "->" << fmt(beta.back().ratio) << ", C "
                     << fmt(compute.front().ratio) << "->" << fmt(compute.back().ratio);
        }
        return o;
    }

    /// Brute-force min-max airtime over a simplex grid of step 1/n for three agents.
    static double grid_min_max(const std::vector<double>& bits, const std::vector<LinkSnr>& snr,
                               double bandwidth, int n) {
        std::vector<std::vector<double>> lat(3, std::vector<double>(n + 1));
        for (int a = 0; a < 3; ++a) {
            lat[a][0] = std::numeric_limits<double>::infinity();
            for (int k = 1; k <= n; ++k) {
                const double rho = static_cast<double>(k) / n;
                lat[a][k] = bits[a] / (rho * bandwidth * std::log2(1.0 + snr[a].linear / rho));
            }
        }
        double best = std::numeric_limits<double>::infinity();
        for (int i = 1; i < n; ++i) {
            for (int j = 1; i + j < n; ++j) {
                best = std::min(best, std::max({lat[0][i], lat[1][j], lat[2][n - i - j]}));
            }
        }
        return best;
    }

    Outcome bisection_optimality() const {
        Outcome o;
        SingleRoundConfig cfg;
        cfg.agents = 3;
        SolverOptions opts;
        std::size_t tau_fail = 0, agent_fail = 0, sum_fail = 0, floor_clamped = 0;
        double worst_gap = 0;
        for (int t = 0; t < 100; ++t) {
            auto inst = sample_single_round(cfg, derive_seed(options_.seed, 5, t)).instance;
            inst.workload = workload_;
            Rng rng(derive_seed(options_.seed, 5, t, 1));
            const int mask = 1 + static_cast<int>(rng() % 7);
            ModeVector x(3);
            std::vector<double> bits(3);
            std::vector<LinkSnr> snr(3);
            for (int i = 0; i < 3; ++i) {
                x[i] = ((mask >> i) & 1) != 0 ? Mode::kv : Mode::nl;
                bits[i] = inst.agents[i].bits(x[i]);
                snr[i] = inst.agents[i].snr;
            }
            const auto res = bandwidth_bisection(x, inst, opts);
            const double grid = grid_min_max(bits, snr, inst.bandwidth_hz, 1500);
            const double gap = std::abs(res.tau - grid) / grid;
            worst_gap = std::max(worst_gap, gap);
            if (gap > 0.01) ++tau_fail;
            double sum = 0;
            for (int i = 0; i < 3; ++i) {
                sum += res.rho[i];
                const double lat = bits[i] / ofdma_rate(res.rho[i], inst.bandwidth_hz, snr[i]);
                const bool clamped = bits[i] / ofdma_rate(opts.rho_floor, inst.bandwidth_hz, snr[i]) <= res.tau;
                if (clamped) ++floor_clamped;
                if (lat > res.tau + opts.delta || (!clamped && lat < res.tau - opts.delta)) ++agent_fail;
            }
            if (sum > 1.0 + 1e-15 || sum < 1.0 - 1e-9) ++sum_fail;
        }
        o.require(tau_fail == 0, std::to_string(tau_fail) + " instances off the grid optimum by > 1%");
        o.require(agent_fail == 0, std::to_string(agent_fail) + " agent latencies farther than delta from tau");
        o.require(sum_fail == 0, std::to_string(sum_fail) + " shares not summing to 1");
        if (o.passed) o.detail << "100 instances, max gap to grid optimum " << fmt(worst_gap) << ", " << floor_clamped
                             << " agents held at the share floor";
        return o;
    }

    Outcome versus_exhaustive(Complexity& complexity) const {
        Outcome o;
        constexpr int kInstances = 100;
        const double c0_cycle[] = {5, 10, 20, 35};
        struct Row {
            double j = 0, ex = 0, nl_u = 0, kv_u = 0;
            Assignment a;
            std::size_t agents = 0;
        };
        std::vector<Row> rows(kInstances);
        parallel_for(rows.size(), [&](std::size_t t) {
            SingleRoundConfig cfg;
            cfg.agents = 4 + t % 7;
            cfg.ea_tflops = c0_cycle[(t / 7) % 4];
            auto inst = sample_single_round(cfg, derive_seed(options_.seed, 6, t)).instance;
            inst.workload = workload_;
            auto& r = rows[t];
            r.a = jmsra(inst);
            r.j = r.a.J;
            r.ex = exhaustive_search(inst).J;
            r.nl_u = baseline(inst, Mode::nl, Allocation::uniform).J;
            r.kv_u = baseline(inst, Mode::kv, Allocation::uniform).J;
            r.agents = cfg.agents;
        });
        std::size_t below = 0, within = 0, above_uniform = 0;
        double worst = 0;
        for (const auto& r : rows) {
            complexity.observe(r.a, r.agents);
            if (r.j < r.ex) ++below;
            const double gap = (r.j - r.ex) / r.ex;
            worst = std::max(worst, gap);
            if (gap <= 0.05) ++within;
            if (r.j > r.nl_u || r.j > r.kv_u) ++above_uniform;
        }
        o.require(below == 0, std::to_string(below) + " instances beat the exhaustive optimum");
        o.require(within >= 95, std::to_string(within) + "/100 within 5% of exhaustive");
        o.require(above_uniform == 0, std::to_string(above_uniform) + " instances worse than a uniform baseline");
        if (o.passed) o.detail << within << "/100 within 5%, worst gap " << fmt(worst);
        return o;
    }

    struct Trial {
        Assignment j;
        double nl_u = 0, kv_u = 0, kv_o = 0, nl_o = 0;
    };

    std::vector<Trial> trials(double c0, std::size_t agents, double bandwidth, int count,
                              std::uint64_t tag) const {
        std::vector<Trial> out(static_cast<std::size_t>(count));
        parallel_for(out.size(), [&](std::size_t t) {
            SingleRoundConfig cfg;
            cfg.agents = agents;
            cfg.ea_tflops = c0;
            cfg.bandwidth_hz = bandwidth;
            auto inst = sample_single_round(cfg, derive_seed(options_.seed, tag, t)).instance;
            inst.workload = workload_;
            auto& r = out[t];
            r.j = jmsra(inst);
            r.nl_u = baseline(inst, Mode::nl, Allocation::uniform).J;
            r.kv_u = baseline(inst, Mode::kv, Allocation::uniform).J;
            r.nl_o = baseline(inst, Mode::nl, Allocation::optimized).J;
            r.kv_o = baseline(inst, Mode::kv, Allocation::optimized).J;
        });
        return out;
    }

    Outcome banded(Complexity& complexity) const {
        Outcome o;
        auto column = [](const std::vector<Trial>& ts, auto pick) {
            std::vector<double> v;
            for (const auto& t : ts) v.push_back(pick(t));
            return v;
        };
        const auto low = trials(5, 20, 2e9, 20, 7);
        const auto high = trials(35, 20, 2e9, 20, 8);
        for (const auto& t : low) complexity.observe(t.j, 20);
        for (const auto& t : high) complexity.observe(t.j, 20);

        const double nl_u = median(column(low, [](const Trial& t) { return t.nl_u; }));
        const double kv_u = median(column(low, [](const Trial& t) { return t.kv_u; }));
        const double kv_o = median(column(low, [](const Trial& t) { return t.kv_o; }));
        const double j = median(column(low, [](const Trial& t) { return t.j.J; }));
        std::size_t kv = 0;
        for (const auto& t : low) kv += t.j.kv_count();
        const double kv_share = static_cast<double>(kv) / (20.0 * 20.0);
        o.require(nl_u > 60, "C0=5: median All-NL-uniform " + fmt(nl_u) + " s <= 60 s");
        o.require(kv_u >= 25 && kv_u <= 60, "C0=5: median All-KV-uniform " + fmt(kv_u) + " s outside [25, 60]");
        o.require(j <= 0.5 * nl_u, "C0=5: median J " + fmt(j) + " s > half of All-NL-uniform");
        o.require(j <= kv_o, "C0=5: median J " + fmt(j) + " s > All-KV-optimized " + fmt(kv_o));
        o.require(kv_share >= 0.6, "C0=5: KV share " + fmt(kv_share) + " < 0.6");

        const double nl_u_hi = median(column(high, [](const Trial& t) { return t.nl_u; }));
        const double j_hi = median(column(high, [](const Trial& t) { return t.j.J; }));
        std::size_t kv_hi = 0;
        for (const auto& t : high) kv_hi += t.j.kv_count();
        const double kv_share_hi = static_cast<double>(kv_hi) / (20.0 * 20.0);
        o.require(j_hi <= nl_u_hi, "C0=35: median J " + fmt(j_hi) + " s > All-NL-uniform " + fmt(nl_u_hi));
        o.require(kv_share_hi < 0.5, "C0=35: KV share " + fmt(kv_share_hi) + " is not a minority");

        if (!o.passed) o.detail << " | ";
        o.detail << "C0=5 medians: NL-u " << fmt(nl_u) << " s, KV-u " << fmt(kv_u) << " s, KV-opt "
                 << fmt(kv_o) << " s, J " << fmt(j) << " s, KV share " << fmt(kv_share)
                 << "; C0=35: NL-u " << fmt(nl_u_hi) << " s, J " << fmt(j_hi) << " s, KV share "
                 << fmt(kv_share_hi);
        return o;
    }

    Outcome sweeps(Complexity& complexity) const {
        Outcome o;
        constexpr int kSeeds = 5;
        const std::vector<double> bandwidths = {0.5e9, 1e9, 1.5e9, 2e9, 2.5e9, 3e9, 3.5e9, 4e9};
        std::vector<double> nl_u, nl_o, kv_u;
        std::size_t not_best = 0;
        for (std::size_t g = 0; g < bandwidths.size(); ++g) {
            const auto ts = trials(10, 20, bandwidths[g], kSeeds, 9);
            std::vector<double> a, b, c;
            for (const auto& t : ts) {
                complexity.observe(t.j, 20);
                a.push_back(t.nl_u);
                b.push_back(t.nl_o);
                c.push_back(t.kv_u);
                if (t.j.J > std::min({t.nl_u, t.nl_o, t.kv_u, t.kv_o})) ++not_best;
            }
            nl_u.push_back(mean(a));
            nl_o.push_back(mean(b));
            kv_u.push_back(mean(c));
        }
        auto spread = [](const std::vector<double>& v) {
            const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
            return (*hi - *lo) / *lo;
        };
        const double kv_drop = (kv_u.front() - kv_u.back()) / kv_u.front();
        o.require(spread(nl_u) <= 0.02, "All-NL-uniform varies " + fmt(spread(nl_u)) + " across B");
        o.require(spread(nl_o) <= 0.02, "All-NL-optimized varies " + fmt(spread(nl_o)) + " across B");
        o.require(kv_drop > 0.3, "All-KV-uniform drops only " + fmt(kv_drop) + " across B");
        o.require(not_best == 0, std::to_string(not_best) + " bandwidth instances where J is not the lowest");

        const std::vector<std::size_t> counts = {5, 10, 15, 20, 25, 30};
        double j5 = 0, nl5 = 0, j30 = 0, kvo30 = 0;
        for (const auto n : counts) {
            const auto ts = trials(10, n, 2e9, kSeeds, 10);
            std::vector<double> j, nl, kvo;
            for (const auto& t : ts) {
                complexity.observe(t.j, n);
                j.push_back(t.j.J);
                nl.push_back(t.nl_o);
                kvo.push_back(t.kv_o);
            }
            if (n == 5) {
                j5 = mean(j);
                nl5 = mean(nl);
            }
            if (n == 30) {
                j30 = mean(j);
                kvo30 = mean(kvo);
            }
        }
        o.require(std::abs(j5 - nl5) <= 0.1 * nl5, "I=5: J " + fmt(j5) + " s vs All-NL " + fmt(nl5) + " s");
        o.require(std::abs(j30 - kvo30) <= 0.1 * kvo30,
                  "I=30: J " + fmt(j30) + " s vs All-KV-optimized " + fmt(kvo30) + " s");
        if (!o.passed) o.detail << " | ";
        o.detail << "B sweep: NL spread " << fmt(spread(nl_u)) << ", KV-u drop " << fmt(kv_drop)
                 << "; I=5 J/NL " << fmt(j5 / nl5) << ", I=30 J/KV-opt " << fmt(j30 / kvo30);
        return o;
    }

    Outcome multi_round() const {
        Outcome o;
        MultiRoundConfig cfg;
        constexpr int kRounds = 30;
        std::ostringstream summary;
        for (int s = 0; s < 5; ++s) {
            const std::uint64_t seed = derive_seed(options_.seed, 11, static_cast<std::uint64_t>(s));
            const auto jm = run_multi_round(cfg, kRounds, seed, Policy::jmsra);
            const auto nl = run_multi_round(cfg, kRounds, seed, Policy::all_nl);
            const std::string tag = "seed " + std::to_string(s) + ": ";
            bool ea_ok = true, reset_ok = true, bounds_ok = true;
            for (const auto* run : {&jm, &nl}) {
                for (const auto& r : *run) {
                    if (r.skipped) continue;
                    if (r.ea_mode == Mode::kv && r.xi0_after_broadcast != 0.0) reset_ok = false;
                    if (r.xi0 > cfg.ea_window || r.theta0 > cfg.ea_context_limit) bounds_ok = false;
                    for (std::size_t id = 1; id < r.agents.size(); ++id) {
                        const auto& a = r.agents[id];
                        if (a.active && a.mode == Mode::kv && a.xi != 0.0) reset_ok = false;
                        if (a.xi > cfg.aa_window || a.theta > cfg.aa_context_limit) bounds_ok = false;
                    }
                }
            }
            for (const auto& r : jm) {
                if (r.skipped) continue;
                const Mode expected = r.round == 1 ? Mode::kv : Mode::nl;
                if (r.ea_mode != expected) ea_ok = false;
            }
            auto pooled = [&](int from, int to) {
                std::size_t kv = 0, active = 0;
                for (const auto& r : jm) {
                    if (r.round < from || r.round > to || r.skipped) continue;
                    active += r.active.size();
                    for (const auto id : r.active) kv += r.agents[id].mode == Mode::kv ? 1 : 0;
                }
                return active == 0 ? 0.0 : static_cast<double>(kv) / static_cast<double>(active);
            };
            const double early = pooled(1, 5);
            const double late = pooled(15, 25);
            int first_over = 0;
            for (const auto& r : nl) {
                if (r.round <= 25 && r.ea_compute_s() > 100.0) {
                    first_over = r.round;
                    break;
                }
            }
            const double jm21 = jm[20].ea_prefill_s;
            const double nl21 = nl[20].ea_prefill_s;
            o.require(ea_ok, tag + "EA mode is not KV exactly in round 1");
            o.require(reset_ok, tag + "debt not reset after a KV transmission");
            o.require(bounds_ok, tag + "debt or history exceeds its cap");
            o.require(late > early, tag + "KV share rounds 15-25 " + fmt(late) + " <= rounds 1-5 " + fmt(early));
            o.require(first_over > 0, tag + "all_nl EA compute stays <= 100 s through round 25");
            o.require(jm21 < 0.1 * nl21, tag + "round-21 EA prefill " + fmt(jm21) + " s vs all_nl " + fmt(nl21) + " s");
            summary << (s == 0 ? "" : "; ") << "s" << s << " kv " << fmt(early, 2) << "->" << fmt(late, 2)
                    << ", nl>100s@r" << first_over << ", r21 prefill " << fmt(jm21, 3) << "/" << fmt(nl21, 3);
        }
        if (!o.passed) o.detail << " | ";
        o.detail << summary.str();
        return o;
    }

    static Outcome complexity_report(const Complexity& c) {
        Outcome o;
        o.require(c.instances > 0, "no instances observed");
        o.require(c.evaluation_violations == 0,
                  std::to_string(c.evaluation_violations) + " instances over I(I+1)+2 evaluations");
        o.require(c.bisection_violations == 0,
                  std::to_string(c.bisection_violations) + " bisections over the iteration bound");
        if (o.passed) {
            o.detail << c.instances << " instances, worst evaluations " << c.worst_evaluations
                     << ", min bisection slack " << c.min_slack;
        }
        return o;
    }

private:
    Options options_;
    Workload workload_;
};

}  // namespace

bool Report::all_passed() const {
    return std::all_of(results.begin(), results.end(), [](const CriterionResult& r) { return r.passed; });
}

std::string Report::to_text() const {
    std::ostringstream os;
    for (const auto& r : results) {
        os << "criterion " << std::setw(2) << r.id << ' ' << (r.passed ? "PASS" : "FAIL") << ' '
           << std::fixed << std::setprecision(3) << r.seconds << "s " << r.name << ": " << r.detail << '\n';
        os.unsetf(std::ios::fixed);
    }
    return os.str();
}

nlohmann::json Report::to_json() const {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& r : results) {
        list.push_back({{"id", r.id},
                        {"name", r.name},
                        {"passed", r.passed},
                        {"seconds", r.seconds},
                        {"budget_seconds", r.budget_seconds},
                        {"detail", r.detail}});
    }
    return nlohmann::json{{"passed", all_passed()}, {"criteria", list}};
}

Report run(const Options& options) {
    const Runner runner(options);
    auto wanted = [&](int id) { return options.only.empty() || options.only.count(id) != 0; };
    Complexity complexity;
    Report report;
    const bool need_complexity = wanted(10);

    struct Spec {
        int id;
        const char* name;
        double budget;
        std::function<Outcome(Complexity&)> body;
    };
    const std::vector<Spec> specs = {
        {1, "constant derivation", 1, [&](Complexity&) { return runner.constants(); }},
        {2, "phase-sum identity", 1, [&](Complexity&) { return runner.phase_sum(); }},
        {3, "monotonicity suite", 5, [&](Complexity&) { return runner.monotonicity(); }},
        {4, "ratio sweep shapes", 5, [&](Complexity&) { return runner.ratio_shapes(); }},
        {5, "bisection optimality", 30, [&](Complexity&) { return runner.bisection_optimality(); }},
        {6, "jmsra vs exhaustive", 120, [&](Complexity& c) { return runner.versus_exhaustive(c); }},
        {7, "banded single-round reproduction", 120, [&](Complexity& c) { return runner.banded(c); }},
        {8, "sweep shapes", 180, [&](Complexity& c) { return runner.sweeps(c); }},
        {9, "multi-round behaviour", 300, [&](Complexity&) { return runner.multi_round(); }},
        {10, "complexity counters", 0, [&](Complexity& c) { return Runner::complexity_report(c); }},
    };
    for (const auto& spec : specs) {
        const bool feeds = spec.id >= 6 && spec.id <= 8 && need_complexity;
        if (!wanted(spec.id) && !feeds) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = spec.body(complexity);
        } catch (const std::exception& e) {
            outcome.passed = false;
            outcome.detail << "exception: " << e.what();
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!wanted(spec.id)) continue;
        CriterionResult r;
        r.id = spec.id;
        r.name = spec.name;
        r.seconds = seconds;
        r.budget_seconds = spec.budget;
        r.passed = outcome.passed;
        r.detail = outcome.detail.str();
        if (spec.budget > 0 && seconds > spec.budget) {
            r.passed = false;
            r.detail += " | runtime over the " + fmt(spec.budget) + " s budget";
        }
        report.results.push_back(std::move(r));
    }
    return report;
}

}  // namespace kvlink::validate
