#include "kvlink/channel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kvlink {

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }
double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double linear) { return 10.0 * std::log10(linear); }

void LinkBudget::validate() const {
    if (!(tx_power_w > 0.0) || !(bandwidth_hz > 0.0) || !(noise_density_w_per_hz > 0.0)) {
        throw std::invalid_argument("link budget: power, bandwidth and noise must be > 0");
    }
    if (fading_amp < 0.0 || path_loss_db < 0.0) {
        throw std::invalid_argument("link budget: fading and path loss must be >= 0");
    }
}

double path_loss_db(double distance_m) {
    if (!(distance_m > 0.0)) {
        throw std::invalid_argument("distance must be > 0 m");
    }
    return 30.0 + 35.0 * std::log10(distance_m);
}

LinkSnr link_snr(const LinkBudget& budget) {
    budget.validate();
    const double gain = std::pow(10.0, -budget.path_loss_db / 10.0) * budget.fading_amp *
                        budget.fading_amp;
    return LinkSnr{budget.tx_power_w * gain / (budget.bandwidth_hz * budget.noise_density_w_per_hz)};
}

double ofdma_rate(double rho, double bandwidth_hz, LinkSnr snr) {
    if (!(rho > 0.0) || rho > 1.0) {
        throw std::invalid_argument("bandwidth fraction must lie in (0, 1]");
    }
    return rho * bandwidth_hz * std::log2(1.0 + snr.linear / rho);
}

double broadcast_rate(double bandwidth_hz, std::span<const LinkSnr> snrs) {
    if (snrs.empty()) {
        throw std::invalid_argument("broadcast needs at least one receiver");
    }
    const auto worst = std::min_element(snrs.begin(), snrs.end(),
                                        [](LinkSnr a, LinkSnr b) { return a.linear < b.linear; });
    return bandwidth_hz * std::log2(1.0 + worst->linear);
}

double sample_rayleigh(Rng& rng) {
    // h^2 ~ Exp(1)
    std::exponential_distribution<double> power(1.0);
    return std::sqrt(power(rng));
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    std::uint64_t h = mix(root);
    h = mix(h ^ a);
    h = mix(h ^ b);
    h = mix(h ^ c);
    return h;
}

}  // namespace kvlink
