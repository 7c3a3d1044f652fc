#pragma once

#include <cstdint>
#include <string>

namespace kvlink {

/// Decoder-only transformer shape. Only the scalars that drive FLOP counts
/// and KV-cache size are kept.
struct ModelSpec {
    std::int64_t layers = 1;
    std::int64_t heads = 1;
    std::int64_t head_dim = 1;
    std::int64_t hidden_dim = 1;
    std::int64_t ffn_dim = 1;
    std::int64_t vocab = 2;

    /// Throws std::invalid_argument on a non-positive field or vocab < 2.
    void validate() const;

    static ModelSpec llama_7b();
    /// Looks up a named preset ("llama-7b"); throws std::out_of_range.
    static ModelSpec preset(const std::string& name);

    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// FLOP-count coefficients of the per-agent inference latency:
///   k1 = 2 L H d_h                      (FLOPs / token^2)
///   k2 = 8 L H d_h d_m + 4 L d_m d_f    (FLOPs / token)
///   k3 = 2 d_m d_v                      (FLOPs)
struct WorkloadConstants {
    std::int64_t k1 = 0;
    std::int64_t k2 = 0;
    std::int64_t k3 = 0;

    friend bool operator==(const WorkloadConstants&, const WorkloadConstants&) = default;
};

WorkloadConstants derive_constants(const ModelSpec& spec);

/// Bits to ship one token of uncompressed FP16 KV cache: 32 L H d_h.
std::int64_t kv_bits_per_token(const ModelSpec& spec);

/// Inference cost and payload model for one model architecture.
///
/// Latencies are in seconds given an effective compute rate in FLOP/s.
/// Token counts are real-valued so that sampled lengths need no rounding.
class Workload {
public:
    explicit Workload(ModelSpec spec);
    /// Uses the given constants instead of deriving them (fault injection in
    /// self-checks). KV payload size still follows `spec`.
    Workload(ModelSpec spec, WorkloadConstants constants);

    const ModelSpec& spec() const noexcept { return spec_; }
    const WorkloadConstants& constants() const noexcept { return k_; }

    /// Prefill over `input_tokens` new tokens whose attention span is
    /// `context_tokens` (= input + prior history). Rejects input_tokens <= 0
    /// and context_tokens < input_tokens.
    double prefill_latency(double flops, double input_tokens, double context_tokens) const;

    /// Token-by-token generation of `output_tokens` after a context of
    /// `context_tokens`. Zero output tokens costs nothing.
    double autoregressive_latency(double flops, double output_tokens, double context_tokens) const;

    /// Closed form of prefill + autoregressive.
    double total_inference_latency(double flops, double output_tokens, double context_tokens,
                                   double input_tokens) const;

    /// 32 L H d_h * context / gamma. Rejects gamma < 1 and negative context.
    double kv_payload_bits(double context_tokens, double compression) const;

private:
    ModelSpec spec_;
    WorkloadConstants k_;
    double kv_bits_per_token_;
};

/// b * alpha.
double token_payload_bits(double output_tokens, double bits_per_token);

}  // namespace kvlink
