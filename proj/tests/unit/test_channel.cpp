#include <doctest.h>

#include <cmath>

#include "dtisac/channel.hpp"
#include "dtisac/numerics.hpp"
#include "dtisac/random.hpp"
#include "fixtures.hpp"

using namespace dtisac;
using namespace dtisac::channel;

namespace {

using fixtures::kTs;
using fixtures::on_grid;
constexpr double kB = 1.0 / kTs;

}  // namespace

TEST_CASE("steering_vector")
{
    const ComplexVector a0 = steering_vector(0.0, 8);
    CHECK((a0 - ComplexVector::Ones(8)).norm() < 1e-15);

    const std::size_t m = 16;
    const ComplexMatrix a = numerics::dft_matrix(m);
    for (std::size_t r = 0; r < m; ++r) {
        const double tb = (static_cast<double>(r) - 8.0) / 16.0;
        const ComplexVector v = steering_vector(tb, m);
        CHECK((v - std::sqrt(16.0) * a.col(static_cast<Eigen::Index>(r))).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((v.cwiseAbs() - RealVector::Ones(16)).cwiseAbs().maxCoeff() < 1e-14);
    }
    CHECK_THROWS_AS(steering_vector(0.5, 4), std::invalid_argument);
    CHECK_THROWS_AS(steering_vector(-0.6, 4), std::invalid_argument);
}

TEST_CASE("dirichlet kernel")
{
    for (std::size_t m : {1, 7, 64})
        CHECK(std::abs(dirichlet(0.0, m) - Complex(1.0, 0.0)) < 1e-12);
    for (int k = 1; k < 8; ++k) {
        CHECK(std::abs(dirichlet(k, 8)) < 1e-12);
        CHECK(std::abs(dirichlet(-k, 8)) < 1e-12);
    }
    CHECK(std::abs(dirichlet(0.5, 64)) == doctest::Approx(1.0 / (64.0 * std::sin(kPi / 128.0))).epsilon(1e-12));
    CHECK(std::abs(dirichlet(0.5, 64)) == doctest::Approx(0.6367).epsilon(1e-4));
    // Continuity across the removable singularity.
    CHECK(std::abs(dirichlet(1e-7, 32) - dirichlet(0.0, 32)) < 1e-6);
}

TEST_CASE("pulse is Nyquist within its support")
{
    const PulseShape pulse{PulseKind::TaperedSinc, 16};
    CHECK(pulse(0.0) == 1.0);
    for (int k = 1; k <= 16; ++k) {
        CHECK(std::abs(pulse(k)) < 1e-15);
        CHECK(std::abs(pulse(-k)) < 1e-15);
    }
    for (double x = -9; x <= 9; x += 0.137)
        CHECK(std::abs(pulse(x)) <= 1.0);
    CHECK(pulse(8.0) == 0.0);
}

TEST_CASE("single on-grid path CIR and virtual channel")
{
    const std::size_t m = 16, p = 12;
    const Complex alpha(0.3, -0.4);
    PathStateInfo psi;
    psi.paths.push_back(on_grid(5, 3, m, alpha, 1500.0));
    const PulseShape pulse{PulseKind::TaperedSinc, 8};
    const double tc = 1e-4;

    const CirBlock b0 = build_cir_block(psi, 0, tc, pulse, m, kB, p);
    for (Eigen::Index col = 0; col < b0.h.cols(); ++col)
        if (col != 3)
            CHECK(b0.h.col(col).norm() < 1e-15);
    const ComplexVector expect = std::conj(alpha) * steering_vector((5.0 - 8.0) / 16.0, m);
    CHECK((b0.h.col(3) - expect).norm() < 1e-12);

    const CirBlock b1 = build_cir_block(psi, 1, tc, pulse, m, kB, p);
    const Complex rot = numerics::phasor(-2.0 * kPi * 1500.0 * tc);
    CHECK((b1.h.col(3) - rot * b0.h.col(3)).norm() < 1e-12);

    const VirtualChannel v = virtual_channel(b0);
    REQUIRE(v.sparsity() == 1);
    CHECK(v.support[0] == std::make_pair(std::size_t{5}, std::size_t{3}));
    CHECK(std::abs(v.h(5, 3) - std::sqrt(16.0) * std::conj(alpha)) < 1e-12);
    CHECK(v.vec()(3 * 16 + 5) == v.h(5, 3));
    ComplexMatrix others = v.h;
    others(5, 3) = 0.0;
    CHECK(others.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("superposition and beamspace identities")
{
    const std::size_t m = 16, p = 20;
    const PulseShape pulse{PulseKind::TaperedSinc, 8};
    PathStateInfo a, b, both;
    a.paths.push_back(on_grid(2, 4, m, {1.0, 0.5}));
    b.paths.push_back(on_grid(11, 9, m, {-0.2, 0.7}));
    both.paths = {a.paths[0], b.paths[0]};
    const auto ha = build_cir_block(a, 0, 1e-4, pulse, m, kB, p).h;
    const auto hb = build_cir_block(b, 0, 1e-4, pulse, m, kB, p).h;
    const auto hab = build_cir_block(both, 0, 1e-4, pulse, m, kB, p).h;
    CHECK((hab - ha - hb).norm() < 1e-13);

    // Off-grid: closed form matches A^H H, energy preserved, round trip.
    PathStateInfo off;
    off.paths.push_back({{0.8, 0.1}, 700.0, 6.37 * kTs, 0.31});
    off.paths.push_back({{0.1, -0.5}, -300.0, 9.81 * kTs, -0.7});
    const CirBlock cir = build_cir_block(off, 2, 1e-4, pulse, m, kB, p);
    const VirtualChannel v = virtual_channel(cir);
    const ComplexMatrix closed = virtual_channel_closed_form(off, 2, 1e-4, pulse, m, kTs, p);
    CHECK((v.h - closed).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(v.h.norm() == doctest::Approx(cir.h.norm()).epsilon(1e-12));
    const ComplexMatrix dft = numerics::dft_matrix(m);
    CHECK((dft * v.h - cir.h).cwiseAbs().maxCoeff() < 1e-10);

    CirBlock zero = cir;
    zero.h.setZero();
    CHECK(virtual_channel(zero).h.norm() == 0.0);
    CHECK(virtual_channel(zero).sparsity() == 0);
}

TEST_CASE("main lobe outside the tap window is rejected")
{
    PathStateInfo psi;
    psi.paths.push_back(on_grid(0, 30, 8, {1, 0}));
    CHECK_THROWS_AS(build_cir_block(psi, 0, 1e-4, PulseShape{PulseKind::TaperedSinc, 8}, 8, kB, 16),
                    std::out_of_range);
    PathStateInfo edge;
    edge.paths.push_back({{1, 0}, 0.0, 14.5 * kTs, 0.0});
    const auto cir = build_cir_block(edge, 0, 1e-4, PulseShape{PulseKind::TaperedSinc, 8}, 8, kB, 16);
    CHECK(cir.tail_truncated);
    CHECK(required_taps(edge, kTs, PulseShape{PulseKind::TaperedSinc, 8}) == 19);
}

TEST_CASE("correlation_ratio")
{
    ComplexVector h1(3), h2(3);
    h1 << 1.0, Complex(0, 2), -1.0;
    CHECK(correlation_ratio(h1, Complex(0.5, -3) * h1) == doctest::Approx(1.0));
    h2 << 2.0, 0.0, 2.0;
    CHECK(correlation_ratio(h1, h2) == doctest::Approx(0.0));
    CHECK_THROWS_AS(correlation_ratio(h1, ComplexVector::Zero(3)), std::invalid_argument);

    // Random distinct on-grid bins at M = 64, B = 100 MHz.
    Rng rng(3);
    const std::size_t m = 64, p = 24;
    const PulseShape pulse{PulseKind::TaperedSinc, 8};
    double acc = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const std::size_t r1 = rng() % m, p1 = rng() % 16;
        std::size_t r2 = rng() % m, p2 = rng() % 16;
        if (r1 == r2 && p1 == p2)
            r2 = (r2 + 1) % m;
        PathStateInfo x, y;
        x.paths.push_back(on_grid(r1, p1, m, {1, 0}));
        y.paths.push_back(on_grid(r2, p2, m, {1, 0}));
        const ComplexVector vx = virtual_channel(build_cir_block(x, 0, 1e-4, pulse, m, kB, p)).vec();
        const ComplexVector vy = virtual_channel(build_cir_block(y, 0, 1e-4, pulse, m, kB, p)).vec();
        acc += correlation_ratio(vx, vy);
    }
    CHECK(acc / 1000.0 < 1e-2);
}

TEST_CASE("correlation falls as the array grows")
{
    Rng rng(4);
    const PulseShape pulse{PulseKind::TaperedSinc, 8};
    double prev = 2.0;
    for (std::size_t m : {8, 32, 64}) {
        double acc = 0.0;
        for (int t = 0; t < 300; ++t) {
            PathStateInfo x, y;
            x.paths.push_back({{1, 0}, 0.0, uniform(rng, 4, 8) * kTs, uniform(rng, -1.0, 1.0)});
            y.paths.push_back({{1, 0}, 0.0, uniform(rng, 4, 8) * kTs, uniform(rng, -1.0, 1.0)});
            const auto hx = virtual_channel(build_cir_block(x, 0, 1e-4, pulse, m, kB, 16)).vec();
            const auto hy = virtual_channel(build_cir_block(y, 0, 1e-4, pulse, m, kB, 16)).vec();
            acc += correlation_ratio(hx, hy);
        }
        CHECK(acc / 300.0 <= prev);
        prev = acc / 300.0;
    }
}

TEST_CASE("apply_block and apply_channel")
{
    const std::size_t m = 8, p = 10;
    const PulseShape pulse{PulseKind::TaperedSinc, 8};
    Rng rng(9);

    CirBlock zero;
    zero.h = ComplexMatrix::Zero(m, p);
    const ComplexVector noise = apply_block(zero, ComplexMatrix::Zero(m, 1), 20000, 0.25, rng);
    CHECK(noise.squaredNorm() / 20000.0 == doctest::Approx(0.25).epsilon(0.03));

    // Impulse on a(theta) through a static on-grid path echoes at p0.
    const Complex alpha(0.6, 0.2);
    PathStateInfo psi;
    psi.paths.push_back(on_grid(3, 4, m, alpha));
    const ComplexVector a = steering_vector((3.0 - 4.0) / 8.0, m);
    ComplexMatrix x = ComplexMatrix::Zero(m, 12);  // output spans the input horizon
    x.col(0) = a;
    const ComplexVector y = apply_channel(x, psi, pulse, kTs, p, 0.0, rng);
    for (Eigen::Index n = 0; n < y.size(); ++n) {
        if (n == 4)
            CHECK(std::abs(y(n) - alpha * a.squaredNorm()) < 1e-12);
        else
            CHECK(std::abs(y(n)) < 1e-12);
    }
    // Block model agrees with the time-varying model for a static path.
    const CirBlock cir = build_cir_block(psi, 0, 1e-4, pulse, m, kB, p);
    const ComplexVector yb = apply_block(cir, x, static_cast<std::size_t>(y.size()), 0.0, rng);
    CHECK((yb - y).norm() < 1e-12);

    // Linearity without noise.
    PathStateInfo off;
    off.paths.push_back({{0.3, 0.3}, 900.0, 3.4 * kTs, 0.2});
    ComplexMatrix x1(m, 30), x2(m, 30);
    for (Eigen::Index i = 0; i < x1.size(); ++i) {
        x1(i) = complex_normal(rng, 1.0);
        x2(i) = complex_normal(rng, 1.0);
    }
    const auto y1 = apply_channel(x1, off, pulse, kTs, p, 0.0, rng, 100);
    const auto y2 = apply_channel(x2, off, pulse, kTs, p, 0.0, rng, 100);
    const auto y12 = apply_channel(x1 + x2, off, pulse, kTs, p, 0.0, rng, 100);
    CHECK((y12 - y1 - y2).norm() < 1e-10);
}
