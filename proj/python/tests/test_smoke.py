import math

import pytest

import kvlink


def test_constants():
    assert kvlink.derive_constants(kvlink.ModelSpec.llama_7b()) == (262144, 10066329600, 262144000)
    assert kvlink.kv_bits_per_token(kvlink.ModelSpec.llama_7b()) == 4194304


def test_unknown_preset():
    with pytest.raises(IndexError):
        kvlink.ModelSpec.preset("nope")


def test_prefill_and_phase_sum():
    w = kvlink.Workload(kvlink.ModelSpec.llama_7b())
    assert w.prefill_latency(1.0, 1.0, 1.0) == pytest.approx(10328997888.0)
    s, a, phi, c = 300.0, 200.0, 900.0, 7e12
    total = w.total_inference_latency(c, a, phi, s)
    assert w.prefill_latency(c, s, phi) + w.autoregressive_latency(c, a, phi) == pytest.approx(total, rel=1e-12)


def test_rates():
    assert kvlink.ofdma_rate(1.0, 1e9, 3.0) == pytest.approx(2e9)
    assert kvlink.broadcast_rate(1e9, [3.0, 1.0]) == pytest.approx(1e9)
    assert kvlink.path_loss_db(10.0) == pytest.approx(65.0)
    with pytest.raises(ValueError):
        kvlink.ofdma_rate(0.0, 1e9, 1.0)


def test_decision():
    d = kvlink.decision(alpha=512, xi=6000, snr_db=5)
    assert d["mode"] in ("NL", "KV")
    assert d["f"] == pytest.approx(d["t_nl"] - d["t_kv"], rel=1e-9)
    if d["rho_star"] is not None:
        assert 0 < d["rho_star"] <= 1


def test_ratio_sweep_crosses_one():
    rows = kvlink.ratio_sweep("snr")
    ratios = [r["ratio"] for r in rows]
    assert ratios == sorted(ratios)
    assert ratios[0] < 1 < ratios[-1]


def test_single_round():
    res = kvlink.single_round(agents=6, c0_tflops=5, seed=3)
    j = res["jmsra"]
    assert len(j["x"]) == 6
    assert math.isclose(sum(j["rho"]), 1.0, rel_tol=0, abs_tol=1e-9)
    assert j["J"] >= res["exhaustive"]["J"]
    assert j["J"] <= res["all_nl_uniform"]["J"]
    assert j["J"] <= res["all_kv_uniform"]["J"]
    assert j["evaluations"] <= 6 * 7 + 2


def test_multi_round():
    trace = kvlink.multi_round(rounds=4, seed=1, policy="all_nl", max_agents=5)
    assert [r["round"] for r in trace] == [1, 2, 3, 4]
    assert all(r["ea_mode"] == "NL" for r in trace if not r["skipped"])


def test_validate_fast_criteria():
    report = kvlink.validate([1, 2, 3])
    assert [r["id"] for r in report] == [1, 2, 3]
    assert all(r["passed"] for r in report)
