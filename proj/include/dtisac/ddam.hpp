#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "dtisac/doppler.hpp"
#include "dtisac/geometry.hpp"
#include "dtisac/numerics.hpp"

namespace dtisac::ddam {

enum class Criterion { MRT, ZF, MMSE };

const char* criterion_name(Criterion c);

/// Raised when zero-forcing cannot be formed: fewer antennas than paths, or a
/// path whose vector lies in the span of the others.
struct ZfInfeasible : std::domain_error {
    using std::domain_error::domain_error;
};

/// Path estimate used for transmit design: channel vector h_l (M), delay tap
/// and Doppler.
struct PathEstimate {
    ComplexVector h;
    std::size_t tap = 0;
    double doppler = 0.0;
};

/// h_l = bin_value * a_grid(r_hat), i.e. conj(alpha_hat) a(theta_hat).
std::vector<PathEstimate> path_estimates(const doppler::SensedPsi& psi);

/// Keeps the strongest estimate of every group of collinear channel vectors
/// (|h_a^H h_b| >= (1 - tol) |h_a| |h_b|), preserving input order. Paths in
/// one direction cannot be separated spatially.
std::vector<PathEstimate> drop_collinear(const std::vector<PathEstimate>& paths, double tol = 1e-6);

struct BeamformerSet {
    std::vector<ComplexVector> f;
    std::vector<std::size_t> taps;       // p_hat_l
    std::vector<std::size_t> kappa;      // p_max - p_hat_l
    std::vector<double> doppler;         // nu_hat_l
    std::vector<std::size_t> dropped;    // input paths removed for zero gain
    std::size_t p_max = 0;
    double power = 0.0;
    Criterion criterion = Criterion::MRT;

    std::size_t size() const { return f.size(); }
    double total_power() const;
};

BeamformerSet mrt_beamformers(const std::vector<PathEstimate>& paths, double data_power);
BeamformerSet zf_beamformers(const std::vector<PathEstimate>& paths, double data_power);
/// Regularized zero-forcing with diagonal loading L sigma^2 / P_d.
BeamformerSet mmse_beamformers(const std::vector<PathEstimate>& paths, double data_power,
                               double noise_power);
BeamformerSet make_beamformers(Criterion c, const std::vector<PathEstimate>& paths,
                               double data_power, double noise_power);

inline BeamformerSet mrt_beamformers(const doppler::SensedPsi& psi, double data_power)
{
    return mrt_beamformers(path_estimates(psi), data_power);
}
inline BeamformerSet zf_beamformers(const doppler::SensedPsi& psi, double data_power)
{
    return zf_beamformers(path_estimates(psi), data_power);
}
inline BeamformerSet mmse_beamformers(const doppler::SensedPsi& psi, double data_power, double noise_power)
{
    return mmse_beamformers(path_estimates(psi), data_power, noise_power);
}

/// x[n] = sum_l f_l s[n - kappa_l] exp(-i 2 pi nu_l (n0 + n) T_s) for
/// n = 0..horizon-1; s is zero outside its index range. Column n of the
/// result is x[n].
ComplexMatrix ddam_transmit(const ComplexVector& symbols, const BeamformerSet& bf,
                            std::size_t horizon, double sample_period, std::size_t first_sample = 0);

/// One tap of one true path: the received sample contains
/// h^H x[n - tap] rotated by the path Doppler.
struct ChannelComponent {
    std::size_t path = 0;
    std::size_t tap = 0;
    ComplexVector h;  // conj(alpha) psi(tap T_s - tau) a(theta), M entries
};

/// Components of every path on the taps where the pulse is nonzero; on-grid
/// paths give one component each. `block`/`coherence_time` freeze the
/// Doppler phase as in the block model.
std::vector<ChannelComponent> channel_components(const PathStateInfo& psi, std::size_t antennas,
                                                 double sample_period, std::size_t taps,
                                                 std::size_t support = 16, std::size_t block = 0,
                                                 double coherence_time = 0.0,
                                                 double rel_threshold = 0.0);

struct DelayGroup {
    std::size_t delay = 0;  // varrho
    std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (component, beamformer)
    std::vector<Complex> coefficients;
    Complex sum{0.0, 0.0};
    double magnitude_sum = 0.0;  // sum of |coefficient|
};

struct DelayGroupMap {
    std::vector<DelayGroup> groups;  // increasing delay
    std::size_t selected = 0;        // index into groups
    std::size_t n_components = 0;
    std::size_t n_beamformers = 0;

    std::size_t selected_delay() const { return groups.at(selected).delay; }
};

/// Pair (c, l') lands on delay tap_c + kappa_l' with coefficient
/// h_c^H f_l' exp(i 2 pi nu_l' tap_c T_s). The selected group has the largest
/// |sum|; ties go to the smaller delay.
DelayGroupMap delay_group_map(const std::vector<ChannelComponent>& components,
                              const BeamformerSet& bf, double sample_period);

/// Worst-case SINR: |sum over the selected group|^2 over noise plus, for each
/// other group, (sum of |coefficients|)^2.
double min_sinr(const DelayGroupMap& map, double noise_power);

/// SINR for given interference phases, one per pair of non-selected groups in
/// map order. Used to check that min_sinr is a lower bound.
double realized_sinr(const DelayGroupMap& map, double noise_power, const std::vector<double>& phases);

/// Phase-I DAM: per-block estimated paths, no Doppler pre-compensation,
/// against the block-frozen true channel.
double phase1_dam_sinr(const std::vector<ChannelComponent>& block_components,
                       const std::vector<PathEstimate>& block_estimates, Criterion criterion,
                       double data_power, double noise_power, double sample_period);

struct FrameConfig {
    std::size_t samples_per_block = 2000;  // N
    std::size_t pilot_length = 64;         // N_p
    std::size_t guard = 32;                // N_g
    std::size_t blocks = 50;               // K
    std::size_t phase1_blocks = 10;        // J
    double coherence_time = 1e-4;          // T_c
    double sample_period = 1e-8;           // T_s

    std::size_t data_length() const;  // N_d = N - N_p - 2 N_g
    /// Throws std::invalid_argument naming the violated rule.
    void validate(std::size_t taps) const;
};

struct RateReport {
    double rate = 0.0;                 // R_t
    double approximation = 0.0;        // log2(1 + gamma), J << K
    long overhead_saving = 0;          // (K - J)(N_p + 2 N_g) - N_g samples
};

/// J is taken as the number of Phase-I SINRs supplied.
RateReport spectral_efficiency(const FrameConfig& frame, const std::vector<double>& phase1_sinrs,
                               double phase2_sinr);

struct ValidityFlag {
    double value = 0.0;  // delta_nu_max (K - J) T_c
    bool valid = false;
};

ValidityFlag phase2_validity(double delta_nu_max, const FrameConfig& frame, double threshold = 0.1);

}  // namespace dtisac::ddam
