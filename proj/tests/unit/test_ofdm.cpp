#include <doctest.h>

#include <cmath>
#include <numeric>

#include "dtisac/ofdm.hpp"
#include "dtisac/random.hpp"

using namespace dtisac;
using namespace dtisac::ofdm;

TEST_CASE("subcarrier channels")
{
    // Single tap at p = 0: every subcarrier sees the same vector.
    ComplexMatrix cir = ComplexMatrix::Zero(2, 3);
    cir(0, 0) = {1.0, 0.5};
    cir(1, 0) = {-0.2, 0.0};
    const ComplexMatrix flat = subcarrier_channels(cir, 8);
    REQUIRE(flat.cols() == 8);
    for (Eigen::Index w = 0; w < 8; ++w)
        CHECK((flat.col(w) - cir.col(0)).norm() < 1e-15);

    // Tap p = 1 rotates subcarrier w by exp(-i 2 pi w / W).
    ComplexMatrix shifted = ComplexMatrix::Zero(1, 2);
    shifted(0, 1) = 1.0;
    const ComplexMatrix hw = subcarrier_channels(shifted, 4);
    CHECK(std::abs(hw(0, 1) - Complex(0.0, -1.0)) < 1e-15);
    CHECK(std::abs(hw(0, 2) - Complex(-1.0, 0.0)) < 1e-15);

    // Parseval: sum_w |h_w|^2 = W sum_p |h[p]|^2.
    Rng rng(1);
    ComplexMatrix random(4, 6);
    for (Eigen::Index i = 0; i < random.size(); ++i)
        random(i) = complex_normal(rng, 1.0);
    const ComplexMatrix big = subcarrier_channels(random, 64);
    CHECK(big.squaredNorm() == doctest::Approx(64.0 * random.squaredNorm()).epsilon(1e-12));

    CHECK_THROWS_AS(subcarrier_channels(random, 5), std::invalid_argument);
}

TEST_CASE("water-filling")
{
    const auto equal = waterfill({2.0, 2.0, 2.0, 2.0}, 4.0, 1.0);
    for (double p : equal)
        CHECK(p == doctest::Approx(1.0).epsilon(1e-14));

    const auto gated = waterfill({1.0, 0.0, 1.0}, 2.0, 1.0);
    CHECK(gated[1] == 0.0);
    CHECK(gated[0] == doctest::Approx(1.0).epsilon(1e-14));

    // Weak subcarrier switched off: mu - 1/g <= 0 there.
    const auto weak = waterfill({10.0, 0.01}, 1.0, 1.0);
    CHECK(weak[1] == 0.0);
    CHECK(weak[0] == doctest::Approx(1.0).epsilon(1e-14));

    CHECK_THROWS_AS(waterfill({0.0, -1.0}, 1.0, 1.0), std::invalid_argument);

    // KKT on a random instance: active p_w = mu - n/g_w, inactive n/g_w >= mu.
    Rng rng(2);
    std::vector<double> gains(200);
    for (auto& g : gains)
        g = std::norm(complex_normal(rng, 1.0));
    const double budget = 3.0, noise = 0.05;
    const auto p = waterfill(gains, budget, noise);
    const double mu = water_level(gains, budget, noise);
    CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(budget).epsilon(1e-12));
    std::size_t active = 0;
    for (std::size_t w = 0; w < gains.size(); ++w) {
        if (p[w] > 0.0) {
            ++active;
            CHECK(std::abs(p[w] + noise / gains[w] - mu) <= 1e-12 * mu);
        } else {
            CHECK(noise / gains[w] >= mu * (1 - 1e-12));
        }
    }
    CHECK(active > 0);
    CHECK(active < gains.size());
}

TEST_CASE("overhead factor")
{
    ddam::FrameConfig frame;
    frame.samples_per_block = 10000;
    frame.pilot_length = 100;
    frame.guard = 100;
    OfdmConfig cfg;
    cfg.subcarriers = 512;
    cfg.cyclic_prefix = 100;
    CHECK(symbols_per_block(frame, cfg) == 15);
    CHECK(overhead_factor(frame, cfg) == doctest::Approx((9700.0 - 1500.0) / 10000.0).epsilon(1e-15));
    CHECK(overhead_factor(frame, cfg) == doctest::Approx(0.82));

    cfg.subcarriers = 9700;
    CHECK_THROWS_AS(overhead_factor(frame, cfg), std::invalid_argument);
    OfdmConfig bad;
    bad.cyclic_prefix = 8;
    CHECK_THROWS_AS(bad.validate(9), std::invalid_argument);
    CHECK_NOTHROW(bad.validate(8));
}

TEST_CASE("OFDM rate on a flat single-antenna channel")
{
    ddam::FrameConfig frame;
    frame.samples_per_block = 10000;
    frame.pilot_length = 100;
    frame.guard = 100;
    OfdmConfig cfg;
    cfg.subcarriers = 512;
    cfg.cyclic_prefix = 100;
    const ComplexMatrix h = ComplexMatrix::Constant(1, 512, Complex(0.0, 2.0));
    const double power = 1.0, noise = 0.1;
    const double rate = ofdm_rate(frame, cfg, {h}, {h}, power, noise);
    // Equal split: each subcarrier gets P/W against noise n/W, gain 4.
    CHECK(rate == doctest::Approx(0.82 * std::log2(1.0 + 4.0 * power / noise)).epsilon(1e-12));
    CHECK_THROWS_AS(ofdm_rate(frame, cfg, {h}, {}, power, noise), std::invalid_argument);
}

TEST_CASE("PAPR")
{
    ComplexVector tone = ComplexVector::Zero(4);
    tone(0) = 1.0;
    CHECK(to_db(papr(tone)) == doctest::Approx(6.0206).epsilon(1e-4));
    CHECK(papr(ComplexVector::Constant(16, Complex(0.0, 1.0))) == doctest::Approx(1.0));
    CHECK_THROWS_AS(papr(ComplexVector::Zero(3)), std::invalid_argument);

    // One active subcarrier is a constant envelope.
    ComplexVector single = ComplexVector::Zero(64);
    single(3) = 1.0;
    CHECK(to_db(papr(ofdm_modulate(single, 0))) == doctest::Approx(0.0).epsilon(1e-9));

    // All-ones spectrum is an impulse: PAPR = W.
    const ComplexVector ones = ComplexVector::Ones(64);
    const ComplexVector impulse = ofdm_modulate(ones, 0);
    CHECK(papr(impulse) == doctest::Approx(64.0).epsilon(1e-9));
    CHECK(impulse.squaredNorm() == doctest::Approx(64.0).epsilon(1e-12));

    // The cyclic prefix copies the tail.
    Rng rng(3);
    const ComplexVector sym = qam_symbols(32, 16, rng);
    const ComplexVector x = ofdm_modulate(sym, 8);
    REQUIRE(x.size() == 40);
    CHECK((x.head(8) - x.tail(8)).norm() < 1e-14);
    const ComplexVector x4 = ofdm_modulate(sym, 8, 4);
    REQUIRE(x4.size() == 160);
    CHECK((x4.head(32) - x4.tail(32)).norm() < 1e-13);
    for (Eigen::Index n = 0; n < 32; ++n)
        CHECK(std::abs(x4(32 + 4 * n) - x(8 + n)) < 1e-12);
}

TEST_CASE("interpolation keeps the samples it started with")
{
    Rng rng(4);
    ComplexVector block(16);
    for (auto& v : block)
        v = complex_normal(rng, 1.0);
    const ComplexVector up = interpolate(block, 4);
    REQUIRE(up.size() == 64);
    double err = 0.0;
    for (Eigen::Index n = 0; n < 16; ++n)
        err = std::max(err, std::abs(up(4 * n) - block(n)));
    CHECK(err < 1e-12);
    CHECK(interpolate(block, 1).isApprox(block, 1e-14));
}

TEST_CASE("QAM")
{
    Rng rng(5);
    for (std::size_t order : {4u, 16u, 64u}) {
        const ComplexVector s = qam_symbols(200000, order, rng);
        CHECK(s.squaredNorm() / 200000.0 == doctest::Approx(1.0).epsilon(0.01));
    }
    const ComplexVector q = qam_symbols(1000, 4, rng);
    for (auto v : q)
        CHECK(std::abs(std::norm(v) - 1.0) < 1e-12);
    CHECK_THROWS_AS(qam_symbols(4, 8, rng), std::invalid_argument);
    CHECK_THROWS_AS(qam_symbols(4, 32, rng), std::invalid_argument);
}

TEST_CASE("CCDF and tail quantile")
{
    const std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    const auto c = ccdf(v, {0.0, 5.0, 10.0});
    CHECK(c[0] == 1.0);
    CHECK(c[1] == 0.5);
    CHECK(c[2] == 0.0);
    CHECK(tail_quantile(v, 0.0) == 10.0);
    CHECK(tail_quantile(v, 1.0) == 1.0);
    CHECK(tail_quantile(v, 0.5) == doctest::Approx(5.5));

    std::vector<double> big(1001);
    std::iota(big.begin(), big.end(), 0.0);
    CHECK(tail_quantile(big, 0.01) == doctest::Approx(990.0));
}
