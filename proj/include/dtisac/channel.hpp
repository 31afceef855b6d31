#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "dtisac/geometry.hpp"
#include "dtisac/numerics.hpp"
#include "dtisac/random.hpp"

namespace dtisac::channel {

enum class PulseKind { TaperedSinc };

/// Band-limited, Nyquist pulse evaluated in units of taps (tau / T_s).
/// `support` is the two-sided width in taps; the response is zero for
/// |x| >= support / 2 and the outer half of each tail carries a raised-cosine
/// taper.
struct PulseShape {
    PulseKind kind = PulseKind::TaperedSinc;
    std::size_t support = 16;

    double half_support() const { return static_cast<double>(support) / 2.0; }
    double operator()(double taps) const;
};

/// Sampled CIR of one coherence block: column p of `h` holds h_k[p], so that
/// the received sample is sum_p h.col(p)^H x[n - p].
struct CirBlock {
    std::size_t block = 0;
    ComplexMatrix h;  // M x P
    double sample_period = 0.0;
    bool tail_truncated = false;  // some pulse tail fell outside [0, P)

    std::size_t antennas() const { return static_cast<std::size_t>(h.rows()); }
    std::size_t taps() const { return static_cast<std::size_t>(h.cols()); }
};

struct VirtualChannel {
    ComplexMatrix h;  // M x P angular-delay coefficients
    std::vector<std::pair<std::size_t, std::size_t>> support;  // (r, p) bins

    std::size_t sparsity() const { return support.size(); }
    /// Vec(h): index g = p M + r.
    ComplexVector vec() const;
};

/// Unnormalized array response exp(i 2 pi theta_bar m), m = 0..M-1.
/// Throws for theta_bar outside [-1/2, 1/2).
ComplexVector steering_vector(double theta_bar, std::size_t antennas);

/// Dirichlet kernel sin(pi x) / (M sin(pi x / M)) * exp(i pi x (M - 1) / M);
/// the removable singularities take their limit values.
Complex dirichlet(double x, std::size_t antennas);

/// Smallest tap window that holds every pulse tail: ceil(max delay / T_s +
/// support / 2).
std::size_t required_taps(const PathStateInfo& psi, double sample_period, const PulseShape& pulse);

/// Column p = sum_l conj(alpha_l) exp(-i 2 pi nu_l k T_c) psi(p T_s - tau_l) a(theta_l).
/// Doppler phase is frozen at the block start. Throws std::out_of_range when
/// a path's main lobe lies outside [0, P).
CirBlock build_cir_block(const PathStateInfo& psi, std::size_t block, double coherence_time,
                         const PulseShape& pulse, std::size_t antennas, double bandwidth,
                         std::size_t taps);

/// A^H H_k, with the support taken as bins above `rel_threshold` times the
/// peak magnitude.
VirtualChannel virtual_channel(const CirBlock& cir, double rel_threshold = 1e-9);

/// Angular-delay coefficients from the Dirichlet closed form, without
/// forming H_k.
ComplexMatrix virtual_channel_closed_form(const PathStateInfo& psi, std::size_t block,
                                          double coherence_time, const PulseShape& pulse,
                                          std::size_t antennas, double sample_period,
                                          std::size_t taps);

/// |h1^H h2| / (|h1| |h2|). Throws for a zero vector.
double correlation_ratio(const ComplexVector& h1, const ComplexVector& h2);

/// Block-static channel: y[n] = sum_p h_k[p]^H x[n - p] + z[n] for
/// n = 0..out_len-1, where column n of `x` is x[n] and x is zero elsewhere.
ComplexVector apply_block(const CirBlock& cir, const ComplexMatrix& x, std::size_t out_len,
                          double noise_power, Rng& rng);

/// Time-varying channel with the Doppler phase rotating per sample:
/// y[n] = sum_l alpha_l exp(i 2 pi nu_l (n0 + n) T_s) sum_p psi(p T_s - tau_l)
///        a^H(theta_l) x[n - p] + z[n].
/// `first_sample` is n0, the absolute index of x.col(0) within the path
/// invariant block. Taps are limited to [0, taps).
ComplexVector apply_channel(const ComplexMatrix& x, const PathStateInfo& psi,
                            const PulseShape& pulse, double sample_period, std::size_t taps,
                            double noise_power, Rng& rng, std::size_t first_sample = 0);

}  // namespace dtisac::channel
