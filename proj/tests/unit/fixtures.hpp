// Shared constructors for on-grid test instances.
#pragma once

#include <cmath>
#include <vector>

#include "dtisac/channel.hpp"
#include "dtisac/random.hpp"
#include "dtisac/sensing.hpp"

namespace fixtures {

using namespace dtisac;

inline constexpr double kTs = 1e-8;
inline constexpr double kTc = 1e-4;

inline PathState on_grid(std::size_t r, std::size_t p, std::size_t m, Complex gain, double doppler = 0.0)
{
    const double tb = (static_cast<double>(r) - static_cast<double>(m) / 2.0) / static_cast<double>(m);
    return {gain, doppler, static_cast<double>(p) * kTs, std::asin(2.0 * tb)};
}

struct Instance {
    std::vector<sensing::SensingProblem> problems;
    std::vector<ComplexVector> truths;
};

// Blocks through the channel simulator (noiseless by default), so every
// stacking convention is exercised end to end.
inline Instance simulate(const PathStateInfo& psi, std::size_t m, std::size_t p, std::size_t np, std::size_t blocks,
                         std::uint64_t seed, double noise = 0.0)
{
    const channel::PulseShape pulse{channel::PulseKind::TaperedSinc, 8};
    Rng rng(seed);
    Instance out;
    for (std::size_t k = 0; k < blocks; ++k) {
        const auto cir = channel::build_cir_block(psi, k, kTc, pulse, m, 1.0 / kTs, p);
        const auto pilots = sensing::generate_pilots(np, m, 1.0, derive_seed(seed, k), k);
        sensing::SensingProblem prob;
        prob.phi = sensing::build_sensing_matrix(pilots, p);
        const ComplexVector rx = channel::apply_block(cir, pilots.samples, np + p - 1, noise, rng);
        prob.y = sensing::build_observation(rx, np, p);
        out.problems.push_back(prob);
        out.truths.push_back(channel::virtual_channel(cir).vec());
    }
    return out;
}

}  // namespace fixtures
