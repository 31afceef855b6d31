#include <doctest.h>

#include <cmath>

#include "dtisac/channel.hpp"
#include "dtisac/ddam.hpp"
#include "dtisac/random.hpp"
#include "fixtures.hpp"

using namespace dtisac;
using namespace dtisac::ddam;
using fixtures::kTs;
using fixtures::on_grid;

namespace {

// Perfect estimate of an on-grid path: h = conj(alpha) a(theta).
PathEstimate perfect(const PathState& p, std::size_t m)
{
    PathEstimate e;
    e.h = std::conj(p.gain) * channel::steering_vector(normalized_aod(p.aod), m);
    e.tap = static_cast<std::size_t>(std::lround(p.delay / kTs));
    e.doppler = p.doppler;
    return e;
}

// Integer taps, distinct angles; on-grid angles when `grid`, otherwise
// uniform in normalized angle.
PathStateInfo random_paths(std::size_t l, std::size_t m, std::size_t max_tap, Rng& rng, bool grid)
{
    PathStateInfo psi;
    std::vector<bool> used(m, false);
    while (psi.size() < l) {
        const std::size_t r = 1 + rng() % (m - 1);
        if (used[r])
            continue;
        used[r] = true;
        auto path = on_grid(r, rng() % max_tap, m, complex_normal(rng, 1.0), uniform(rng, -3000, 3000));
        if (!grid)
            path.aod = std::asin(2.0 * uniform(rng, -0.45, 0.45));
        psi.paths.push_back(path);
    }
    return psi;
}

std::vector<PathEstimate> perfect_all(const PathStateInfo& psi, std::size_t m)
{
    std::vector<PathEstimate> out;
    for (const auto& p : psi.paths)
        out.push_back(perfect(p, m));
    return out;
}

double cross_term(const std::vector<PathEstimate>& est, const BeamformerSet& bf)
{
    double worst = 0.0;
    for (std::size_t l = 0; l < est.size(); ++l)
        for (std::size_t q = 0; q < bf.size(); ++q)
            if (l != q)
                worst = std::max(worst, std::abs(est[l].h.dot(bf.f[q])) / (est[l].h.norm() * bf.f[q].norm()));
    return worst;
}

}  // namespace

TEST_CASE("MRT")
{
    const std::size_t m = 16;
    const PathState path = on_grid(3, 2, m, {0.3, 0.4});
    const auto est = perfect(path, m);
    const auto bf = mrt_beamformers({est}, 2.0);
    REQUIRE(bf.size() == 1);
    CHECK((bf.f[0] - std::sqrt(2.0) * est.h / est.h.norm()).norm() < 1e-14);
    CHECK(bf.total_power() == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(bf.kappa[0] == 0);

    // Single-path SNR P_d |alpha|^2 M / sigma^2.
    PathStateInfo psi;
    psi.paths = {path};
    const auto comps = channel_components(psi, m, kTs, 8, 8, 0, 0.0, 1e-9);
    const double sinr = min_sinr(delay_group_map(comps, bf, kTs), 1e-3);
    CHECK(sinr == doctest::Approx(2.0 * std::norm(path.gain) * 16.0 / 1e-3).epsilon(1e-12));

    Rng rng(1);
    const auto many = perfect_all(random_paths(5, 32, 10, rng, true), 32);
    CHECK(mrt_beamformers(many, 0.7).total_power() == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("ZF")
{
    const std::size_t m = 16;
    const auto a = perfect(on_grid(3, 2, m, {0.3, 0.4}), m);
    const auto b = perfect(on_grid(9, 5, m, {-0.1, 0.2}), m);
    const auto one = zf_beamformers(std::vector<PathEstimate>{a}, 1.0);
    CHECK(channel::correlation_ratio(one.f[0], a.h) == doctest::Approx(1.0).epsilon(1e-12));

    // Orthogonal DFT steering vectors: projection leaves them alone.
    const auto two = zf_beamformers(std::vector<PathEstimate>{a, b}, 1.0);
    CHECK(channel::correlation_ratio(two.f[0], a.h) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(channel::correlation_ratio(two.f[1], b.h) == doctest::Approx(1.0).epsilon(1e-12));

    // Off-grid angles at M = 64: cross terms still vanish.
    Rng rng(2);
    std::vector<PathEstimate> est;
    for (int l = 0; l < 5; ++l) {
        PathEstimate e;
        e.h = complex_normal(rng, 1.0) * channel::steering_vector(uniform(rng, -0.45, 0.45), 64);
        e.tap = static_cast<std::size_t>(l);
        est.push_back(e);
    }
    const auto zf = zf_beamformers(est, 3.0);
    CHECK(cross_term(est, zf) < 1e-10);
    CHECK(zf.total_power() == doctest::Approx(3.0).epsilon(1e-12));

    // Infeasible: more paths than antennas, or a repeated direction.
    std::vector<PathEstimate> crowd;
    for (std::size_t r = 0; r < 5; ++r)
        crowd.push_back(perfect(on_grid(r % 4, r, 4, {1, 0}), 4));
    CHECK_THROWS_AS(zf_beamformers(crowd, 1.0), ZfInfeasible);
    PathEstimate twin = a;
    twin.h *= Complex(0.0, 0.5);
    twin.tap = 7;
    CHECK_THROWS_AS(zf_beamformers(std::vector<PathEstimate>{a, twin}, 1.0), ZfInfeasible);
}

TEST_CASE("drop_collinear keeps the strongest of a direction")
{
    const std::size_t m = 8;
    const auto a = perfect(on_grid(2, 1, m, {0.3, 0.0}), m);
    auto weak = a;
    weak.h *= Complex(0.0, 0.1);
    weak.tap = 4;
    const auto b = perfect(on_grid(6, 3, m, {0.2, 0.0}), m);
    const auto kept = drop_collinear({weak, b, a});
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].tap == 3);
    CHECK(kept[1].tap == 1);
    CHECK(drop_collinear({a, a}).size() == 1);
    CHECK(drop_collinear({a, b}).size() == 2);
    CHECK_NOTHROW(zf_beamformers(drop_collinear({weak, b, a}), 1.0));
}

TEST_CASE("MMSE limits")
{
    Rng rng(3);
    const std::size_t m = 16;
    std::vector<PathEstimate> est;
    for (int l = 0; l < 4; ++l) {
        PathEstimate e;
        e.h = complex_normal(rng, 1.0) * channel::steering_vector(uniform(rng, -0.45, 0.45), m);
        e.tap = static_cast<std::size_t>(l);
        est.push_back(e);
    }
    const auto noisy = mmse_beamformers(est, 1.0, 1e9);
    const auto mrt = mrt_beamformers(est, 1.0);
    for (std::size_t l = 0; l < est.size(); ++l)
        CHECK(channel::correlation_ratio(noisy.f[l], mrt.f[l]) > 1.0 - 1e-6);
    const auto clean = mmse_beamformers(est, 1.0, 1e-12);
    CHECK(cross_term(est, clean) < 1e-5);
    CHECK(clean.total_power() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(make_beamformers(Criterion::MMSE, est, 1.0, 1e-3).criterion == Criterion::MMSE);
    CHECK(std::string(criterion_name(Criterion::ZF)) == "zf");
}

TEST_CASE("ddam_transmit")
{
    const std::size_t m = 4;
    Rng rng(4);
    ComplexVector s(50);
    for (auto& v : s)
        v = complex_normal(rng, 1.0);

    const auto one = mrt_beamformers({perfect(on_grid(1, 0, m, {1, 0}), m)}, 1.0);
    const ComplexMatrix x1 = ddam_transmit(s, one, 50, kTs);
    for (Eigen::Index n = 0; n < 50; ++n)
        CHECK((x1.col(n) - one.f[0] * s(n)).norm() < 1e-14);

    const auto two = mrt_beamformers({perfect(on_grid(1, 2, m, {1, 0}), m), perfect(on_grid(3, 5, m, {0, 1}), m)}, 1.0);
    CHECK(two.kappa == std::vector<std::size_t>{3, 0});
    CHECK(two.p_max == 5);
    const ComplexMatrix x2 = ddam_transmit(s, two, 50, kTs);
    CHECK((x2.col(0) - two.f[1] * s(0)).norm() < 1e-14);
    CHECK((x2.col(4) - two.f[0] * s(1) - two.f[1] * s(4)).norm() < 1e-14);

    // Average power P_d for unit-power symbols.
    Rng big(5);
    ComplexVector sym(100000);
    for (auto& v : sym)
        v = complex_normal(big, 1.0);
    const ComplexMatrix xs = ddam_transmit(sym, two, 100000, kTs);
    CHECK(xs.squaredNorm() / 100000.0 == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("delay grouping and worst-case SINR")
{
    const std::size_t m = 32, p = 12;
    Rng rng(6);
    const PathStateInfo psi = random_paths(5, m, p - 1, rng, false);
    const auto est = perfect_all(psi, m);
    const auto comps = channel_components(psi, m, kTs, p, 8, 0, 0.0, 1e-9);
    REQUIRE(comps.size() == 5);
    const auto zf = zf_beamformers(est, 1.0);
    const auto map = delay_group_map(comps, zf, kTs);
    CHECK(map.selected_delay() == zf.p_max);
    const auto& sel = map.groups[map.selected];
    std::size_t diagonal = 0;
    for (const auto& [c, l] : sel.pairs)
        diagonal += c == l ? 1 : 0;
    CHECK(diagonal == 5);

    Complex signal{0, 0};
    for (std::size_t l = 0; l < 5; ++l)
        signal += comps[l].h.dot(zf.f[l]) *
                  numerics::phasor(2.0 * kPi * zf.doppler[l] * static_cast<double>(comps[l].tap) * kTs);
    const double noise = 1e-6;
    const double gamma = min_sinr(map, noise);
    CHECK(gamma == doctest::Approx(std::norm(signal) / noise).epsilon(1e-9));

    // Realized SINR never drops below the worst case.
    const auto mrt = mrt_beamformers(est, 1.0);
    const auto mmap = delay_group_map(comps, mrt, kTs);
    const double floor = min_sinr(mmap, noise);
    std::size_t pairs = 0;
    for (std::size_t g = 0; g < mmap.groups.size(); ++g)
        if (g != mmap.selected)
            pairs += mmap.groups[g].pairs.size();
    for (int t = 0; t < 200; ++t) {
        std::vector<double> phases(pairs);
        for (auto& ph : phases)
            ph = uniform_phase(rng);
        CHECK(realized_sinr(mmap, noise, phases) >= floor * (1 - 1e-12));
    }
    CHECK(min_sinr(mmap, 1e300) < 1e-200);

    // High SNR with perfect PSI: ZF at least as good as MRT, MMSE at least ZF.
    const double sig = 1e-9;
    const double g_zf = min_sinr(delay_group_map(comps, zf, kTs), sig);
    const double g_mrt = min_sinr(mmap, sig);
    const double g_mmse = min_sinr(delay_group_map(comps, mmse_beamformers(est, 1.0, sig), kTs), sig);
    CHECK(g_zf >= g_mrt * (1 - 1e-9));
    CHECK(g_mmse >= g_zf * (1 - 1e-9));
}

TEST_CASE("brute-force delay groups with a tap error")
{
    const std::size_t m = 16;
    PathStateInfo psi;
    psi.paths = {on_grid(2, 3, m, {0.5, 0}), on_grid(10, 6, m, {0, 0.4})};
    auto est = perfect_all(psi, m);
    est[0].tap = 4;  // one path estimated a tap late
    const auto bf = mrt_beamformers(est, 1.0);
    const auto comps = channel_components(psi, m, kTs, 10, 8, 0, 0.0, 1e-9);
    const auto map = delay_group_map(comps, bf, kTs);
    std::size_t total = 0;
    for (const auto& g : map.groups) {
        for (const auto& [c, l] : g.pairs)
            CHECK(comps[c].tap + bf.kappa[l] == g.delay);
        total += g.pairs.size();
    }
    CHECK(total == comps.size() * bf.size());

    const auto exact = mrt_beamformers(perfect_all(psi, m), 1.0);
    const double good = min_sinr(delay_group_map(comps, exact, kTs), 1e-4);
    const double bad = min_sinr(map, 1e-4);
    CHECK(bad < good);

    PathStateInfo single;
    single.paths = {psi.paths[1]};
    const auto smap = delay_group_map(channel_components(single, m, kTs, 10, 8, 0, 0.0, 1e-9),
                                      mrt_beamformers(perfect_all(single, m), 1.0), kTs);
    CHECK(smap.groups.size() == 1);
    CHECK(smap.selected_delay() == 6);
}

TEST_CASE("Phase-I DAM on a static channel matches Phase II")
{
    const std::size_t m = 16;
    PathStateInfo psi;
    psi.paths = {on_grid(2, 1, m, {0.5, 0}), on_grid(7, 4, m, {0, 0.3}), on_grid(12, 6, m, {0.2, 0.2})};
    const auto est = perfect_all(psi, m);
    const auto comps = channel_components(psi, m, kTs, 10, 8, 0, 0.0, 1e-9);
    const double p1 = phase1_dam_sinr(comps, est, Criterion::ZF, 1.0, 1e-5, kTs);
    const double p2 = min_sinr(delay_group_map(comps, zf_beamformers(est, 1.0), kTs), 1e-5);
    CHECK(p1 == doctest::Approx(p2).epsilon(1e-12));
    PathStateInfo first;
    first.paths = {psi.paths[0]};
    const double single = phase1_dam_sinr(channel_components(first, m, kTs, 10, 8, 0, 0.0, 1e-9), {est[0]},
                                          Criterion::MRT, 1.0, 1e-5, kTs);
    CHECK(single == doctest::Approx(0.25 * 16.0 / 1e-5).epsilon(1e-12));
    auto wrong = est;
    wrong[1].tap = 5;
    CHECK(phase1_dam_sinr(comps, wrong, Criterion::ZF, 1.0, 1e-5, kTs) < p1);
}

TEST_CASE("spectral efficiency and frame rules")
{
    FrameConfig f;
    f.samples_per_block = 10000;
    f.pilot_length = 100;
    f.guard = 100;
    f.blocks = 500;
    f.phase1_blocks = 10;
    CHECK(f.data_length() == 9700);
    const double gamma = 100.0;
    const auto r = spectral_efficiency(f, std::vector<double>(10, gamma), gamma);
    CHECK(r.rate == doctest::Approx((9700.0 * 10 + 490.0 * 1e4) / 5e6 * std::log2(1 + gamma)).epsilon(1e-14));
    CHECK(r.overhead_saving == 490 * 300 - 100);
    CHECK(spectral_efficiency(f, {}, gamma).rate == doctest::Approx(std::log2(1 + gamma)).epsilon(1e-15));
    CHECK_THROWS_AS(spectral_efficiency(f, std::vector<double>(500, 1.0), 1.0), std::invalid_argument);

    CHECK_NOTHROW(f.validate(100));
    CHECK_THROWS_AS(f.validate(101), std::invalid_argument);
    f.phase1_blocks = 500;
    CHECK_THROWS_AS(f.validate(10), std::invalid_argument);

    FrameConfig v;
    v.blocks = 50;
    v.phase1_blocks = 10;
    v.coherence_time = 1e-4;
    const auto ok = phase2_validity(5.0, v, 0.1);
    CHECK(ok.value == doctest::Approx(5.0 * 40 * 1e-4));
    CHECK(ok.valid);
    CHECK_FALSE(phase2_validity(100.0, v, 0.1).valid);
}
