#include "kvlink/workload.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

using namespace kvlink;

namespace {

// Oracle: FLOP-count coefficients written out from the layer shapes.
WorkloadConstants oracle_constants(std::int64_t L, std::int64_t H, std::int64_t dh, std::int64_t dm,
                                   std::int64_t df, std::int64_t dv) {
    return {2 * L * H * dh, 8 * L * H * dh * dm + 4 * L * dm * df, 2 * dm * dv};
}

}  // namespace

TEST_CASE("llama-7b constants are frozen") {
    const auto k = derive_constants(ModelSpec::llama_7b());
    CHECK(k.k1 == 262'144);
    CHECK(k.k2 == 10'066'329'600);
    CHECK(k.k3 == 262'144'000);
    CHECK(k == oracle_constants(32, 32, 128, 4096, 11008, 32000));
    CHECK(kv_bits_per_token(ModelSpec::llama_7b()) == 4'194'304);
    CHECK(kv_bits_per_token(ModelSpec::llama_7b()) == 16 * k.k1);
}

TEST_CASE("presets") {
    CHECK(ModelSpec::preset("llama-7b") == ModelSpec::llama_7b());
    CHECK_THROWS_AS(ModelSpec::preset("gpt-9"), std::out_of_range);
}

TEST_CASE("constants follow an arbitrary shape") {
    ModelSpec s;
    s.layers = 3;
    s.heads = 5;
    s.head_dim = 7;
    s.hidden_dim = 11;
    s.ffn_dim = 13;
    s.vocab = 17;
    CHECK(derive_constants(s) == oracle_constants(3, 5, 7, 11, 13, 17));
    CHECK(kv_bits_per_token(s) == 32 * 3 * 5 * 7);
}

TEST_CASE("model validation") {
    ModelSpec s = ModelSpec::llama_7b();
    s.heads = 0;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = ModelSpec::llama_7b();
    s.vocab = 1;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("prefill at one FLOP/s") {
    const Workload w(ModelSpec::llama_7b());
    // k2 + 2 k1 + k3 for a single token with no history
    CHECK(w.prefill_latency(1.0, 1.0, 1.0) == doctest::Approx(10'328'997'888.0).epsilon(1e-15));
    CHECK(w.prefill_latency(1e12, 1024, 1024) ==
          doctest::Approx((10'066'329'600.0 * 1024 + 2.0 * 262'144 * 1024 * 1024 + 262'144'000) / 1e12));
}

TEST_CASE("decode cost") {
    const Workload w(ModelSpec::llama_7b());
    CHECK(w.autoregressive_latency(1e12, 0, 500) == 0.0);
    const double a = 100, phi = 2000;
    const double expect =
        (262'144.0 * a * a + 2 * 262'144.0 * phi * a + (262'144.0 + 10'066'329'600.0 + 262'144'000.0) * a) / 1e12;
    CHECK(w.autoregressive_latency(1e12, a, phi) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("phase sum equals the closed form") {
    const Workload w(ModelSpec::llama_7b());
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> tok(1, 4096), hist(0, 10000), c(1e11, 1e14);
    for (int i = 0; i < 200; ++i) {
        const double s = tok(rng), a = tok(rng), phi = s + hist(rng), flops = c(rng);
        const double sum = w.prefill_latency(flops, s, phi) + w.autoregressive_latency(flops, a, phi);
        CHECK(std::abs(sum - w.total_inference_latency(flops, a, phi, s)) <= 1e-12 * sum);
    }
}

TEST_CASE("prefill grows with input and context") {
    const Workload w(ModelSpec::llama_7b());
    CHECK(w.prefill_latency(1e12, 200, 400) > w.prefill_latency(1e12, 100, 400));
    CHECK(w.prefill_latency(1e12, 100, 800) > w.prefill_latency(1e12, 100, 400));
    CHECK(w.prefill_latency(2e12, 100, 400) == doctest::Approx(0.5 * w.prefill_latency(1e12, 100, 400)));
}

TEST_CASE("argument checks") {
    const Workload w(ModelSpec::llama_7b());
    CHECK_THROWS_AS(w.prefill_latency(1e12, 0, 10), std::invalid_argument);
    CHECK_THROWS_AS(w.prefill_latency(1e12, 10, 5), std::invalid_argument);
    CHECK_THROWS_AS(w.prefill_latency(0, 10, 10), std::invalid_argument);
    CHECK_THROWS_AS(w.autoregressive_latency(1e12, -1, 10), std::invalid_argument);
    CHECK_THROWS_AS(w.kv_payload_bits(10, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(w.kv_payload_bits(-1, 2), std::invalid_argument);
    CHECK_THROWS_AS(Workload(ModelSpec::llama_7b(), WorkloadConstants{0, 1, 1}), std::invalid_argument);
}

TEST_CASE("payload sizes") {
    const Workload w(ModelSpec::llama_7b());
    CHECK(w.kv_payload_bits(2048, 2) == doctest::Approx(4'194'304.0 * 1024));
    CHECK(token_payload_bits(512, 16) == 8192.0);
}

TEST_CASE("injected constants change latency but not KV size") {
    auto k = derive_constants(ModelSpec::llama_7b());
    k.k2 += 1'000'000;
    const Workload bad(ModelSpec::llama_7b(), k);
    const Workload good(ModelSpec::llama_7b());
    CHECK(bad.prefill_latency(1e12, 10, 10) > good.prefill_latency(1e12, 10, 10));
    CHECK(bad.kv_payload_bits(10, 2) == good.kv_payload_bits(10, 2));
}
