#include "kvlink/scenario.hpp"

#include <doctest.h>

#include <cmath>

using namespace kvlink;

TEST_CASE("single-round sampling is deterministic and in range") {
    SingleRoundConfig cfg;
    const auto a = sample_single_round(cfg, 42);
    const auto b = sample_single_round(cfg, 42);
    const auto c = sample_single_round(cfg, 43);
    REQUIRE(a.draws.size() == 20);
    bool differs = false;
    for (std::size_t i = 0; i < 20; ++i) {
        const auto& d = a.draws[i];
        CHECK(d.distance_m == b.draws[i].distance_m);
        CHECK(d.snr.linear == b.draws[i].snr.linear);
        differs = differs || d.distance_m != c.draws[i].distance_m;
        CHECK(d.distance_m >= 5.0);
        CHECK(d.distance_m <= 10.0);
        CHECK(d.tx_power_dbm >= 10.0);
        CHECK(d.tx_power_dbm <= 23.0);
        CHECK(d.output_tokens >= 0.8 * 1024);
        CHECK(d.output_tokens <= 1.2 * 1024);
        CHECK(d.kv_debt >= 2.8 * d.output_tokens);
        CHECK(d.kv_debt <= 3.2 * d.output_tokens);
        const auto& ag = a.instance.agents[i];
        CHECK(ag.nl_bits == doctest::Approx(16 * d.output_tokens));
        CHECK(ag.kv_bits == doctest::Approx(4'194'304.0 * (d.kv_debt + d.output_tokens) / 2));
    }
    CHECK(differs);
    CHECK(a.instance.ea_history == 5120);
}

TEST_CASE("an agent's draw does not depend on the agent count") {
    SingleRoundConfig small;
    small.agents = 3;
    SingleRoundConfig big;
    const auto a = sample_single_round(small, 7);
    const auto b = sample_single_round(big, 7);
    for (std::size_t i = 0; i < 3; ++i) CHECK(a.draws[i].snr.linear == b.draws[i].snr.linear);
}

TEST_CASE("ledger caps and debt") {
    AgentLedger l(100, 30);
    l.append_owned(20);
    CHECK(l.history() == 20);
    CHECK(l.debt() == 20);
    l.append_owned(20);
    CHECK(l.debt() == 30);
    l.append_shared(100);
    CHECK(l.history() == 100);
    CHECK(l.debt() == 30);
    l.clear_debt();
    CHECK(l.debt() == 0);
    CHECK(l.invariants_hold());
}

TEST_CASE("policies") {
    CHECK(parse_policy("all_nl") == Policy::all_nl);
    CHECK(to_string(Policy::jmsra) == "jmsra");
    CHECK_THROWS(parse_policy("random"));
}

TEST_CASE("multi-round invariants") {
    MultiRoundConfig cfg;
    cfg.max_agents = 6;
    const auto traces = run_multi_round(cfg, 12, 5, Policy::jmsra);
    REQUIRE(traces.size() == 12);
    for (const auto& r : traces) {
        CHECK(r.agents.size() == 7);
        CHECK(r.xi0 <= cfg.ea_window);
        CHECK(r.theta0 <= cfg.ea_context_limit);
        if (r.ea_mode == Mode::kv) CHECK(r.xi0_after_broadcast == 0.0);
        for (std::size_t id = 1; id < r.agents.size(); ++id) {
            const auto& a = r.agents[id];
            CHECK(a.xi <= cfg.aa_window);
            CHECK(a.theta <= cfg.aa_context_limit);
            if (a.active && a.mode == Mode::kv) CHECK(a.xi == 0.0);
            if (!a.active) CHECK(a.comm_s == 0.0);
        }
    }
    CHECK(traces.front().ea_prefill_s > 0.0);
}

TEST_CASE("multi-round runs are reproducible") {
    MultiRoundConfig cfg;
    cfg.max_agents = 5;
    const auto a = run_multi_round(cfg, 6, 9, Policy::all_kv);
    const auto b = run_multi_round(cfg, 6, 9, Policy::all_kv);
    for (std::size_t r = 0; r < a.size(); ++r) {
        CHECK(a[r].J == b[r].J);
        CHECK(a[r].active == b[r].active);
    }
}

TEST_CASE("all-token dialogue bloats the EA prefill") {
    MultiRoundConfig cfg;
    const auto nl = run_multi_round(cfg, 10, 3, Policy::all_nl);
    const auto kv = run_multi_round(cfg, 10, 3, Policy::all_kv);
    CHECK(nl.back().ea_prefill_s > nl[1].ea_prefill_s);
    CHECK(kv.back().ea_prefill_s == 0.0);
}

TEST_CASE("a silent round is skipped") {
    MultiRoundConfig cfg;
    cfg.max_agents = 3;
    cfg.activity_probability = 0.0;
    const auto t = run_multi_round(cfg, 2, 1, Policy::jmsra);
    CHECK(t[0].skipped);
    CHECK(t[0].active.empty());
}

TEST_CASE("config validation") {
    MultiRoundConfig cfg;
    cfg.aa_window = cfg.aa_context_limit + 1;
    CHECK_THROWS(run_multi_round(cfg, 1, 1, Policy::jmsra));
    SingleRoundConfig s;
    s.agents = 0;
    CHECK_THROWS(sample_single_round(s, 1));
}
