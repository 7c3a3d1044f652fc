#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace kvlink {

/// Random engine threaded explicitly through every stochastic call.
using Rng = std::mt19937_64;

double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);
double db_to_linear(double db);
double linear_to_db(double linear);

/// Linear full-band SNR of one link.
struct LinkSnr {
    double linear = 0.0;

    double db() const { return linear_to_db(linear); }
    static LinkSnr from_db(double db) { return LinkSnr{db_to_linear(db)}; }
};

/// One directed wireless link. Power in watts, path loss in dB, noise
/// density in W/Hz, bandwidth in Hz. `fading_amp` is the small-scale
/// amplitude h; the composite gain is 10^(-PL/10) * h^2.
struct LinkBudget {
    double tx_power_w = 1.0;
    double path_loss_db = 0.0;
    double fading_amp = 1.0;
    double noise_density_w_per_hz = 1.0;
    double bandwidth_hz = 1.0;

    void validate() const;
};

/// 30 + 35 log10(d); rejects d <= 0.
double path_loss_db(double distance_m);

/// P g / (B N0) with g = 10^(-PL/10) h^2.
LinkSnr link_snr(const LinkBudget& budget);

/// OFDMA rate for a share `rho` of `bandwidth_hz`: rho B log2(1 + snr/rho).
/// Noise scales with the allocated band, so the per-band SNR is snr/rho.
double ofdma_rate(double rho, double bandwidth_hz, LinkSnr snr);

/// Full-band rate a broadcaster can sustain to every receiver, i.e. the
/// worst receiver's capacity. Rejects an empty set.
double broadcast_rate(double bandwidth_hz, std::span<const LinkSnr> snrs);

/// Rayleigh amplitude with E[h^2] = 1 (scale 1/sqrt(2)).
double sample_rayleigh(Rng& rng);

/// Mixes a root seed with stream tags into an independent 64-bit seed, so
/// per-round / per-agent streams do not depend on how many others exist.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

}  // namespace kvlink
