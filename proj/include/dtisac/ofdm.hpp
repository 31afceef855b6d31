#pragma once

#include <cstddef>
#include <vector>

#include "dtisac/channel.hpp"
#include "dtisac/ddam.hpp"
#include "dtisac/numerics.hpp"
#include "dtisac/random.hpp"

namespace dtisac::ofdm {

struct OfdmConfig {
    std::size_t subcarriers = 512;   // W
    std::size_t cyclic_prefix = 32;  // N_cp
    std::size_t qam_order = 16;

    /// Throws std::invalid_argument; `taps` is P.
    void validate(std::size_t taps) const;
};

/// h_w = sum_p h_k[p] exp(-i 2 pi w p / W); column w of the result.
/// Throws when P > W.
ComplexMatrix subcarrier_channels(const ComplexMatrix& cir, std::size_t subcarriers);

/// Water-filling p_w = max(0, mu - n / g_w) with sum p_w = budget.
/// Throws when every gain is zero or negative.
std::vector<double> waterfill(const std::vector<double>& gains, double budget, double noise);

/// Water level mu of the allocation above.
double water_level(const std::vector<double>& gains, double budget, double noise);

/// Symbols available for data after pilots, guards and cyclic prefixes:
/// N_OFDM = floor(N_d / (W + N_cp)).
std::size_t symbols_per_block(const ddam::FrameConfig& frame, const OfdmConfig& cfg);

/// (N_d - N_OFDM N_cp) / N. Throws when not even one symbol fits.
double overhead_factor(const ddam::FrameConfig& frame, const OfdmConfig& cfg);

/// Per-block rate with water-filling and per-subcarrier MRT designed on
/// `estimated` and evaluated on `truth` (both M x W, one column per
/// subcarrier), averaged over blocks.
double ofdm_rate(const ddam::FrameConfig& frame, const OfdmConfig& cfg,
                 const std::vector<ComplexMatrix>& truth, const std::vector<ComplexMatrix>& estimated,
                 double data_power, double noise_power);

/// Unitary inverse DFT of W symbols with the last N_cp samples prepended.
/// `oversampling` > 1 zero-pads the spectrum for envelope fidelity; the
/// prefix then spans N_cp * oversampling samples.
ComplexVector ofdm_modulate(const ComplexVector& symbols, std::size_t cyclic_prefix,
                            std::size_t oversampling = 1);

/// Band-limited interpolation of a block by spectral zero padding.
ComplexVector interpolate(const ComplexVector& block, std::size_t factor);

/// Unit-average-power square QAM symbols drawn uniformly; order must be a
/// perfect square of a power of two (4, 16, 64, ...).
ComplexVector qam_symbols(std::size_t count, std::size_t order, Rng& rng);

/// max |x|^2 / mean |x|^2 (linear). Throws for an all-zero block.
double papr(const ComplexVector& block);

inline double to_db(double linear) { return 10.0 * std::log10(linear); }

/// Fraction of values strictly above each threshold.
std::vector<double> ccdf(const std::vector<double>& values, const std::vector<double>& thresholds);

/// Value exceeded by a fraction `tail` of the data (e.g. 0.01 for the 99th
/// percentile), with linear interpolation between order statistics.
double tail_quantile(std::vector<double> values, double tail);

}  // namespace dtisac::ofdm
