#include "kvlink/channel.hpp"

#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

using namespace kvlink;

TEST_CASE("unit conversions") {
    CHECK(dbm_to_watts(30) == doctest::Approx(1.0));
    CHECK(dbm_to_watts(-140) == doctest::Approx(1e-17));
    CHECK(watts_to_dbm(0.001) == doctest::Approx(0.0));
    CHECK(db_to_linear(10) == doctest::Approx(10.0));
    CHECK(linear_to_db(100) == doctest::Approx(20.0));
    CHECK(LinkSnr::from_db(3).db() == doctest::Approx(3.0));
}

TEST_CASE("path loss") {
    CHECK(path_loss_db(1) == doctest::Approx(30.0));
    CHECK(path_loss_db(10) == doctest::Approx(65.0));
    CHECK(path_loss_db(100) == doctest::Approx(100.0));
    CHECK_THROWS_AS(path_loss_db(0), std::invalid_argument);
}

TEST_CASE("link snr") {
    // 23 dBm over 10 m, unit fading, -140 dBm/Hz across 2 GHz
    const LinkBudget b{dbm_to_watts(23), path_loss_db(10), 1.0, dbm_to_watts(-140), 2e9};
    const double noise_dbm = -140 + 10 * std::log10(2e9);
    CHECK(link_snr(b).db() == doctest::Approx(23 - 65 - noise_dbm));
    LinkBudget faded = b;
    faded.fading_amp = 0.5;
    CHECK(link_snr(faded).linear == doctest::Approx(0.25 * link_snr(b).linear));
    LinkBudget bad = b;
    bad.bandwidth_hz = 0;
    CHECK_THROWS_AS(link_snr(bad), std::invalid_argument);
}

TEST_CASE("ofdma rate") {
    const LinkSnr g{3.0};
    CHECK(ofdma_rate(1.0, 2e9, g) == doctest::Approx(2e9 * 2.0));
    CHECK(ofdma_rate(0.5, 2e9, g) == doctest::Approx(0.5 * 2e9 * std::log2(7.0)));
    double prev = 0;
    for (int k = 1; k <= 100; ++k) {
        const double r = ofdma_rate(k / 100.0, 1e9, g);
        CHECK(r > prev);
        prev = r;
    }
    CHECK_THROWS_AS(ofdma_rate(0.0, 1e9, g), std::invalid_argument);
    CHECK_THROWS_AS(ofdma_rate(1.5, 1e9, g), std::invalid_argument);
}

TEST_CASE("broadcast rate follows the worst receiver") {
    const std::vector<LinkSnr> snrs = {{4.0}, {1.0}, {9.0}};
    CHECK(broadcast_rate(1e9, snrs) == doctest::Approx(1e9));
    for (const auto s : snrs) CHECK(broadcast_rate(1e9, snrs) <= ofdma_rate(1.0, 1e9, s));
    CHECK_THROWS_AS(broadcast_rate(1e9, std::vector<LinkSnr>{}), std::invalid_argument);
}

TEST_CASE("rayleigh power has unit mean") {
    Rng rng(11);
    double sum = 0, sum_sq = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double h = sample_rayleigh(rng);
        CHECK_UNARY(h >= 0.0);
        sum += h * h;
        sum_sq += h * h * h * h;
    }
    CHECK(sum / n == doctest::Approx(1.0).epsilon(0.01));
    // Exp(1): E[X^2] = 2
    CHECK(sum_sq / n == doctest::Approx(2.0).epsilon(0.03));
}

TEST_CASE("derived seeds are stable and distinct") {
    CHECK(derive_seed(1, 2) == derive_seed(1, 2));
    CHECK(derive_seed(1, 2) != derive_seed(1, 3));
    CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));
    CHECK(derive_seed(0, 0) != derive_seed(1, 0));
}
