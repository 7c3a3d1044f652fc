#include "kvlink/static_e2e.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace kvlink;

namespace {

constexpr double k1 = 262'144, k2 = 10'066'329'600, k3 = 262'144'000;
constexpr double kv_bits = 4'194'304;

double pre(double c, double s, double phi) { return (k2 * s + 2 * k1 * phi * s + k3) / c; }
double dec(double c, double a, double phi) {
    return a == 0 ? 0 : (k1 * a * a + 2 * k1 * phi * a + (k1 + k2 + k3) * a) / c;
}
double rate(double rho, double b, double g) { return rho * b * std::log2(1 + g / rho); }

struct Case {
    DialogueShape shape;
    AgentComputes computes;
    LinkSet links;
};

Case two_agents() {
    Case c;
    auto& s = c.shape;
    s.ea_prompt = 300;
    s.ea_output_r1 = 200;
    s.ea_output_r2 = 50;
    s.aa_output_r1 = {120, 80};
    s.aa_input_r2 = {400, 250};
    s.aa_output_r2 = {90, 150};
    s.ea_compression = 2;
    s.aa_compression = {2, 4};
    s.bits_per_token = 16;
    c.computes = {8e12, {5e12, 12e12}};
    c.links = {1e9, {LinkSnr{3.0}, LinkSnr{5.0}}, {LinkSnr{2.0}, LinkSnr{0.5}}, {0.3, 0.7}};
    return c;
}

}  // namespace

TEST_CASE("token mode against a hand oracle") {
    const auto c = two_agents();
    const auto& s = c.shape;
    const Workload w(ModelSpec::llama_7b());
    const auto got = nl_mode_latency(w, s, c.computes, c.links);

    const double c0 = 8e12;
    const double ea1 = pre(c0, 300, 300) + dec(c0, 200, 300);
    const double bc = 16 * 200 / (1e9 * std::log2(1 + 3.0));
    std::vector<double> path(2);
    const double cs[] = {5e12, 12e12};
    const double up_g[] = {2.0, 0.5};
    const double rho[] = {0.3, 0.7};
    for (int i = 0; i < 2; ++i) {
        const double r1 = pre(cs[i], 200, 200) + dec(cs[i], s.aa_output_r1[i], 200);
        const double phi = 200 + s.aa_output_r1[i] + s.aa_input_r2[i];
        const double r2 = pre(cs[i], s.aa_input_r2[i], phi) + dec(cs[i], s.aa_output_r2[i], phi);
        path[i] = r1 + r2 + 16 * s.aa_output_r2[i] / rate(rho[i], 1e9, up_g[i]);
    }
    const double s02 = 90 + 150;
    const double ea2 = pre(c0, s02, 300 + 200 + s02) + dec(c0, 50, 300 + 200 + s02);
    const double total = ea1 + bc + std::max(path[0], path[1]) + ea2;
    CHECK(got.total == doctest::Approx(total).epsilon(1e-12));
    CHECK(got.bottleneck_aa == (path[0] > path[1] ? 0U : 1U));
    CHECK(got.ea_comm == doctest::Approx(bc));
}

TEST_CASE("KV mode against a hand oracle") {
    const auto c = two_agents();
    const auto& s = c.shape;
    const Workload w(ModelSpec::llama_7b());
    const auto got = kv_mode_latency(w, s, c.computes, c.links);

    const double c0 = 8e12;
    const double ea1 = pre(c0, 300, 300) + dec(c0, 200, 300);
    const double bc = kv_bits * (300 + 200) / 2 / (1e9 * std::log2(1 + 3.0));
    const double cs[] = {5e12, 12e12};
    const double up_g[] = {2.0, 0.5};
    const double rho[] = {0.3, 0.7};
    const double gam[] = {2, 4};
    double worst = 0;
    double eps = 500;
    for (int i = 0; i < 2; ++i) {
        const double r1 = dec(cs[i], s.aa_output_r1[i], 500);
        const double omega = 500 + s.aa_output_r1[i] + s.aa_input_r2[i];
        const double r2 = pre(cs[i], s.aa_input_r2[i], omega) + dec(cs[i], s.aa_output_r2[i], omega);
        const double fresh = s.aa_output_r1[i] + s.aa_input_r2[i] + s.aa_output_r2[i];
        worst = std::max(worst, r1 + r2 + kv_bits * fresh / gam[i] / rate(rho[i], 1e9, up_g[i]));
        eps += fresh;
    }
    const double ea2 = dec(c0, 50, eps);
    CHECK(got.total == doctest::Approx(ea1 + bc + worst + ea2).epsilon(1e-12));
    CHECK(s.ea_history_kv() == doctest::Approx(eps));
}

TEST_CASE("both modes share the EA's first inference") {
    const auto c = two_agents();
    const Workload w(ModelSpec::llama_7b());
    const auto nl = nl_mode_latency(w, c.shape, c.computes, c.links);
    const auto kv = kv_mode_latency(w, c.shape, c.computes, c.links);
    CHECK(nl.ea_inference[0] == kv.ea_inference[0]);
}

TEST_CASE("shape validation and zero links") {
    auto c = two_agents();
    const Workload w(ModelSpec::llama_7b());
    c.shape.aa_input_r2.pop_back();
    CHECK_THROWS(nl_mode_latency(w, c.shape, c.computes, c.links));
    c = two_agents();
    c.links.uplink[1] = LinkSnr{0.0};
    CHECK_THROWS(kv_mode_latency(w, c.shape, c.computes, c.links));
}

TEST_CASE("symmetric shape") {
    const auto s = DialogueShape::symmetric(3, 1024, 0.5, 100, 2, 16);
    CHECK(s.agents() == 3);
    CHECK(s.ea_output_r1 == 512);
    CHECK(s.aa_output_r1[0] == 256);
    CHECK(s.aa_input_r2[2] == 1024);
    CHECK(s.aa_output_r2[1] == 512);
    CHECK(s.ea_input_r2_tokens() == 1536);
}

TEST_CASE("ratio sweep properties") {
    SweepDefaults d;
    const auto snr = ratio_sweep(SweepAxis::snr, default_sweep_grid(SweepAxis::snr), d);
    for (std::size_t i = 1; i < snr.size(); ++i) CHECK(snr[i].ratio >= snr[i - 1].ratio);
    CHECK(snr.front().ratio < 1.0);
    CHECK(snr.back().ratio > 1.0);
    const auto comp = ratio_sweep(SweepAxis::compute, default_sweep_grid(SweepAxis::compute), d);
    CHECK(comp.front().ratio > 1.0);
    CHECK(comp.back().ratio < 1.0);
    for (const auto& r : snr) CHECK(r.ratio == doctest::Approx(r.t_nl / r.t_kv));
}

TEST_CASE("sweep axis names") {
    CHECK(parse_sweep_axis("agents") == SweepAxis::aa_count);
    CHECK(to_string(SweepAxis::beta) == "beta");
    CHECK_THROWS(parse_sweep_axis("nope"));
    const std::vector<double> bad = {1.5};
    CHECK_THROWS(ratio_sweep(SweepAxis::aa_count, bad, SweepDefaults{}));
}
