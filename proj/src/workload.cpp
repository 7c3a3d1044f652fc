#include "kvlink/workload.hpp"

#include <stdexcept>

namespace kvlink {

void ModelSpec::validate() const {
    if (layers < 1 || heads < 1 || head_dim < 1 || hidden_dim < 1 || ffn_dim < 1) {
        throw std::invalid_argument("model spec: all dimensions must be >= 1");
    }
    if (vocab < 2) {
        throw std::invalid_argument("model spec: vocab must be >= 2");
    }
}

ModelSpec ModelSpec::llama_7b() {
    return ModelSpec{32, 32, 128, 4096, 11008, 32000};
}

ModelSpec ModelSpec::preset(const std::string& name) {
    if (name == "llama-7b") {
        return llama_7b();
    }
    throw std::out_of_range("unknown model preset '" + name + "'");
}

WorkloadConstants derive_constants(const ModelSpec& spec) {
    spec.validate();
    const std::int64_t lh = spec.layers * spec.heads * spec.head_dim;
    WorkloadConstants k;
    k.k1 = 2 * lh;
    k.k2 = 8 * lh * spec.hidden_dim + 4 * spec.layers * spec.hidden_dim * spec.ffn_dim;
    k.k3 = 2 * spec.hidden_dim * spec.vocab;
    return k;
}

std::int64_t kv_bits_per_token(const ModelSpec& spec) {
    spec.validate();
    return 32 * spec.layers * spec.heads * spec.head_dim;
}

Workload::Workload(ModelSpec spec) : Workload(spec, derive_constants(spec)) {}

Workload::Workload(ModelSpec spec, WorkloadConstants constants)
    : spec_(spec), k_(constants), kv_bits_per_token_(static_cast<double>(kv_bits_per_token(spec))) {
    if (k_.k1 <= 0 || k_.k2 <= 0 || k_.k3 <= 0) {
        throw std::invalid_argument("workload constants must be positive");
    }
}

namespace {

void check_flops(double flops) {
    if (!(flops > 0.0)) {
        throw std::invalid_argument("compute rate must be > 0 FLOP/s");
    }
}

}  // namespace

double Workload::prefill_latency(double flops, double input_tokens, double context_tokens) const {
    check_flops(flops);
    if (!(input_tokens > 0.0)) {
        throw std::invalid_argument("prefill needs at least one input token");
    }
    if (context_tokens < input_tokens) {
        throw std::invalid_argument("prefill context shorter than its input");
    }
    const double k1 = static_cast<double>(k_.k1);
    const double k2 = static_cast<double>(k_.k2);
    const double k3 = static_cast<double>(k_.k3);
    return (k2 * input_tokens + 2.0 * k1 * context_tokens * input_tokens + k3) / flops;
}

double Workload::autoregressive_latency(double flops, double output_tokens,
                                        double context_tokens) const {
    check_flops(flops);
    if (output_tokens < 0.0 || context_tokens < 0.0) {
        throw std::invalid_argument("token counts must be >= 0");
    }
    if (output_tokens == 0.0) {
        return 0.0;
    }
    const double k1 = static_cast<double>(k_.k1);
    const double k2 = static_cast<double>(k_.k2);
    const double k3 = static_cast<double>(k_.k3);
    const double a = output_tokens;
    return (k1 * a * a + 2.0 * k1 * context_tokens * a + (k1 + k2 + k3) * a) / flops;
}

double Workload::total_inference_latency(double flops, double output_tokens, double context_tokens,
                                         double input_tokens) const {
    check_flops(flops);
    if (!(input_tokens > 0.0) || !(output_tokens > 0.0)) {
        throw std::invalid_argument("total inference needs s >= 1 and alpha >= 1");
    }
    if (context_tokens < input_tokens) {
        throw std::invalid_argument("inference context shorter than its input");
    }
    const double k1 = static_cast<double>(k_.k1);
    const double k2 = static_cast<double>(k_.k2);
    const double k3 = static_cast<double>(k_.k3);
    const double a = output_tokens;
    const double s = input_tokens;
    const double phi = context_tokens;
    return (k1 * a * a + 2.0 * k1 * phi * (a + s) + (k1 + k2 + k3) * a + k2 * s + k3) / flops;
}

double Workload::kv_payload_bits(double context_tokens, double compression) const {
    if (!(compression >= 1.0)) {
        throw std::invalid_argument("KV compression ratio must be >= 1");
    }
    if (context_tokens < 0.0) {
        throw std::invalid_argument("context length must be >= 0");
    }
    return kv_bits_per_token_ * context_tokens / compression;
}

double token_payload_bits(double output_tokens, double bits_per_token) {
    if (output_tokens < 0.0) {
        throw std::invalid_argument("token count must be >= 0");
    }
    return bits_per_token * output_tokens;
}

}  // namespace kvlink
