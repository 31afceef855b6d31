#pragma once

#include <cstddef>
#include <vector>

#include "dtisac/geometry.hpp"
#include "dtisac/numerics.hpp"
#include "dtisac/sensing.hpp"

namespace dtisac::doppler {

struct DopplerConfig {
    std::size_t oversampling = 100;  // N_o
    double coherence_time = 1e-4;    // T_c, s

    /// Fine grid step 1 / (N_o J T_c).
    double grid_step(std::size_t blocks) const;
    /// Half-width of the unambiguous range, 1 / (2 T_c).
    double unambiguous_half_width() const { return 0.5 / coherence_time; }
    void validate() const;
};

struct SensedPath {
    Complex bin_value;        // H_l[r, p] at block 0, about sqrt(M) conj(alpha)
    Complex gain;             // alpha estimate: conj(bin_value) / sqrt(M)
    double doppler = 0.0;     // Hz
    std::size_t tap = 0;      // p_hat
    std::size_t angle_bin = 0;  // r_hat
    double delay = 0.0;       // p_hat T_s
    double aod = 0.0;         // arcsin(2 (r_hat - M/2) / M)
    double processed_gain = 0.0;  // |u^T v(omega_hat)| / J, diagnostic only
};

struct SensedPsi {
    std::vector<SensedPath> paths;
    std::size_t antennas = 0;
    double sample_period = 0.0;

    std::size_t size() const { return paths.size(); }
};

/// Entry k is h_ref^H h_k. Throws for a zero reference.
ComplexVector doppler_correlate(const ComplexVector& reference, const std::vector<ComplexVector>& blocks);

/// Grid search over omega in {-N_o J/2, ..., N_o J/2 - 1} for the peak of
/// |sum_k u_k exp(i 2 pi omega k / (N_o J))|. Entries carry the phase
/// exp(-i 2 pi nu k T_c), so the peak sits at omega = nu N_o J T_c.
/// J is the length of u; ties go to the smallest omega.
double estimate_doppler(const ComplexVector& u, const DopplerConfig& cfg);

/// Per-path components h_check_{l,k}: the refined block estimate masked to
/// the path support.
std::vector<std::vector<ComplexVector>> path_components(const sensing::SupportRefinement& sr);

/// Angle bin to AoD. Asserts the bin lies on [0, M).
double bin_to_aod(std::size_t angle_bin, std::size_t antennas);

/// One entry per refined path. The peak-bin gain is de-rotated to block 0
/// with the supplied Doppler estimates.
SensedPsi assemble_psi(const sensing::RecoveryResult& recovery, const std::vector<double>& dopplers,
                       std::size_t antennas, double sample_period, double coherence_time);

/// Correlate, estimate and assemble in one pass.
SensedPsi sense_psi(const sensing::RecoveryResult& recovery, std::size_t antennas,
                    double sample_period, const DopplerConfig& cfg);

/// Truth path in bin coordinates, used for matching.
struct TruthBin {
    std::size_t tap = 0;
    std::size_t angle_bin = 0;
    double doppler = 0.0;
};

/// Nearest grid bin of a physical path, with delays measured in samples.
TruthBin truth_bin(const PathState& path, std::size_t antennas, double sample_period);

/// Mean |nu_hat - nu| over truths. Each truth, in order of increasing delay,
/// takes the nearest unused estimate in (tap, circular angle bin); truths left
/// without an estimate count as `unmatched_error`. The largest matched error
/// is written to `max_error` when given.
double doppler_error(const SensedPsi& estimates, const std::vector<TruthBin>& truths,
                     double unmatched_error, double* max_error = nullptr);

}  // namespace dtisac::doppler
