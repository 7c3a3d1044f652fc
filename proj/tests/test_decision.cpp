#include "kvlink/decision.hpp"
#include "kvlink/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace kvlink;

namespace {

constexpr double k1 = 262'144, k2 = 10'066'329'600, k3 = 262'144'000;

LinkBudget link_at(double snr_db, double bandwidth) {
    const double n0 = dbm_to_watts(-140);
    return LinkBudget{db_to_linear(snr_db) * bandwidth * n0, 0.0, 1.0, n0, bandwidth};
}

TransmissionContext fig5_context(double xi, double snr_db) {
    TransmissionContext c;
    c.output_tokens = 512;
    c.kv_debt = xi;
    c.receiver_history = 0;
    c.compression = 2;
    c.bits_per_token = 16;
    c.receiver_flops = 1e12;
    c.link = link_at(snr_db, 2e9);
    return c;
}

}  // namespace

TEST_CASE("marginal latencies against the oracle") {
    const Workload w(ModelSpec::llama_7b());
    auto c = fig5_context(6000, 5);
    c.receiver_history = 700;
    c.rho = 0.4;
    const double r = 0.4 * 2e9 * std::log2(1 + db_to_linear(5) / 0.4);
    const double a = 512;
    const double nl = (2 * k1 * a * a + (k2 + 2 * k1 * 700) * a + k3) / 1e12 + 16 * a / r;
    const double kv = 16 * k1 * (6000 + a) / 2 / r;
    CHECK(marginal_latency_nl(w, c) == doctest::Approx(nl).epsilon(1e-12));
    CHECK(marginal_latency_kv(w, c) == doctest::Approx(kv).epsilon(1e-12));
    const auto p = decision_poly(w, c);
    CHECK(p.k4 == doctest::Approx(2 * k1 / 1e12));
    CHECK(p.k5 == doctest::Approx((k2 + 2 * k1 * 700) / 1e12 + (16 - 16 * k1 / 2) / r));
    CHECK(p.k6 == doctest::Approx(k3 / 1e12 - 16 * k1 * 6000 / 2 / r));
    CHECK(p(a) == doctest::Approx(nl - kv).epsilon(1e-9));
    CHECK(decision_value_at(w, c, 0.4) == doctest::Approx(nl - kv).epsilon(1e-9));
}

TEST_CASE("select_mode follows the sign of f") {
    const Workload w(ModelSpec::llama_7b());
    // Fast receiver and weak link: tokens win.
    auto c = fig5_context(6000, -5);
    c.receiver_flops = 50e12;
    CHECK(select_mode(w, c) == Mode::nl);
    // Slow receiver with a long history and a strong link: KV wins.
    c = fig5_context(0, 30);
    c.receiver_history = 100000;
    c.receiver_flops = 0.5e12;
    CHECK(select_mode(w, c) == Mode::kv);
}

TEST_CASE("bandwidth threshold") {
    const Workload w(ModelSpec::llama_7b());
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> xi(0, 12000), snr(-10, 30);
    int found = 0;
    for (int i = 0; i < 300; ++i) {
        const auto c = fig5_context(xi(rng), snr(rng));
        const auto root = bandwidth_threshold(w, c);
        const bool kv_full = decision_value_at(w, c, 1.0) > 0;
        CHECK(root.has_value() == kv_full);
        if (root) {
            ++found;
            CHECK(*root > 0.0);
            CHECK(*root <= 1.0);
            CHECK(std::abs(decision_value_at(w, c, *root)) <= 1e-6 * nl_compute_cost(w, c));
        }
    }
    CHECK(found > 0);
}

TEST_CASE("threshold rejects a non-dominant KV payload") {
    const Workload w(ModelSpec::llama_7b());
    auto c = fig5_context(0, 5);
    c.bits_per_token = 1e7;
    CHECK_THROWS_AS(bandwidth_threshold(w, c), KvNotDominant);
}

TEST_CASE("more debt pushes the threshold up") {
    const Workload w(ModelSpec::llama_7b());
    const auto lo = bandwidth_threshold(w, fig5_context(0, 20));
    const auto hi = bandwidth_threshold(w, fig5_context(3000, 20));
    REQUIRE(lo.has_value());
    REQUIRE(hi.has_value());
    CHECK(*hi > *lo);
}

TEST_CASE("broadcast decision uses the worst link") {
    const Workload w(ModelSpec::llama_7b());
    std::vector<TransmissionContext> rx = {fig5_context(1000, 20), fig5_context(1000, 0)};
    rx[0].receiver_flops = 2e12;
    const auto d = broadcast_mode_select(w, rx);
    const double worst_rate = 2e9 * std::log2(1 + db_to_linear(0));
    CHECK(d.rate == doctest::Approx(worst_rate));
    const double nl = std::max(marginal_latency_nl_at_rate(w, rx[0], worst_rate),
                               marginal_latency_nl_at_rate(w, rx[1], worst_rate));
    CHECK(d.worst_nl == doctest::Approx(nl));
    CHECK(d.mode == (d.worst_kv < d.worst_nl ? Mode::kv : Mode::nl));
    CHECK_THROWS(broadcast_mode_select(w, std::vector<TransmissionContext>{}));
}

TEST_CASE("context validation") {
    const Workload w(ModelSpec::llama_7b());
    auto c = fig5_context(0, 5);
    c.rho = 0;
    CHECK_THROWS(marginal_latency_nl(w, c));
    c = fig5_context(0, 5);
    c.output_tokens = 0;
    CHECK_THROWS(select_mode(w, c));
    c = fig5_context(0, 5);
    c.link.fading_amp = 0;
    CHECK_THROWS_AS(marginal_latency_kv(w, c), LinkUnusable);
}
