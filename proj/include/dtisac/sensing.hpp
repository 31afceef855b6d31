#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "dtisac/numerics.hpp"

namespace dtisac::sensing {

/// Training sequence of one coherence block. Column n of `samples` is
/// p_k[n]; every entry has magnitude sqrt(P_t / M).
struct PilotBlock {
    std::size_t block = 0;
    ComplexMatrix samples;  // M x N_p
    double power = 1.0;     // P_t

    std::size_t length() const { return static_cast<std::size_t>(samples.cols()); }
    std::size_t antennas() const { return static_cast<std::size_t>(samples.rows()); }
};

/// Observation y_k and sensing matrix Phi_k; column g = p M + r.
struct SensingProblem {
    ComplexVector y;
    ComplexMatrix phi;
};

struct RecoveryConfig {
    double eps_th = 0.05;            // inner residual-difference threshold
    std::size_t max_iterations = 0;  // 0: 4 * expected_sparsity
    std::size_t expected_sparsity = 8;
    std::size_t max_blocks = 16;     // J_max
    std::size_t v_r = 2;
    std::size_t v_p = 2;
    double sr_tolerance = 1e-3;      // minimum power-ratio gain for a new SR peak
    bool refit = true;               // least-squares refit after SR
    bool adaptive = true;            // false: always run to max_blocks
    double pinv_tol = 1e-10;
    double outer_rel_tol = 1e-6;     // "does not decrease" slack on vartheta
    double vartheta_floor = 1e-12;   // vartheta below this counts as converged

    std::size_t iteration_cap() const
    {
        return max_iterations > 0 ? max_iterations : 4 * expected_sparsity;
    }
    /// Throws std::invalid_argument on an inconsistent configuration.
    void validate() const;
};

/// Uniform-phase constant-modulus pilots, deterministic in (seed).
PilotBlock generate_pilots(std::size_t length, std::size_t antennas, double power,
                           std::uint64_t seed, std::size_t block = 0);

/// Conjugated stack of the N_p + P - 1 received pilot samples.
ComplexVector build_observation(const ComplexVector& rx, std::size_t pilot_length, std::size_t taps);

/// Phi_k = P_k^H (I_P kron A).
ComplexMatrix build_sensing_matrix(const PilotBlock& pilots, std::size_t taps);

struct SparseEstimate {
    std::vector<std::size_t> support;  // in selection order
    ComplexVector coefficients;        // length MP, zero off-support
    std::vector<double> residual_history;  // residual power after each selection
};

struct OmpOptions {
    std::size_t max_paths = 0;  // 0: unbounded (eps_th / max_iterations decide)
    double eps_th = 0.05;
    std::size_t max_iterations = 32;
    double pinv_tol = 1e-10;
};

SparseEstimate omp(const ComplexVector& y, const ComplexMatrix& phi, const OmpOptions& options);

struct JointEstimate {
    std::vector<std::size_t> support;
    std::vector<ComplexVector> estimates;   // one per block
    std::vector<double> residual_history;   // sum_k |r_k|^2 after each selection
    bool rank_deficient = false;
};

/// Simultaneous OMP across blocks sharing one support.
JointEstimate somp_joint(const std::vector<SensingProblem>& problems, const RecoveryConfig& cfg);

struct SupportRefinement {
    std::vector<ComplexVector> refined;             // masked to the union support
    std::vector<std::vector<std::size_t>> path_supports;  // Theta_l, sorted
    std::vector<std::pair<std::size_t, std::size_t>> peaks;  // (r_hat, p_hat) per path
    std::vector<std::size_t> union_support;         // sorted
    std::vector<double> power_ratio_history;        // accepted xi values
    std::size_t iterations = 0;

    std::size_t path_count() const { return path_supports.size(); }
};

/// Angular / delay neighbourhood mod_M{r - V/2, ..., r + (V-2)/2}.
std::vector<std::size_t> neighbourhood(std::size_t center, std::size_t width, std::size_t modulus);

/// Peak-cluster support refinement over per-block estimates of length M P.
SupportRefinement support_refine(const std::vector<ComplexVector>& estimates, std::size_t antennas,
                                 std::size_t taps, const RecoveryConfig& cfg);

struct RecoveryDiagnostics {
    std::size_t blocks_used = 0;  // J of the returned result
    std::size_t steps = 0;        // outer iterations executed
    std::vector<std::vector<double>> residual_history;  // per outer step
    std::vector<double> vartheta;  // per outer step; first entry is +inf
    bool rank_deficient = false;
    bool refit_applied = false;
    bool stream_exhausted = false;
};

struct RecoveryResult {
    std::vector<std::size_t> support;       // SOMP index set before refinement
    std::vector<ComplexVector> estimates;   // h_hat_k
    SupportRefinement refinement;           // h_check_k and per-path supports
    RecoveryDiagnostics diagnostics;

    std::size_t path_count() const { return refinement.path_count(); }
};

struct PhaseOneStep {
    std::size_t step = 0;    // u, 1-based
    std::size_t blocks = 0;  // J^(u); the current block is blocks - 1
    const JointEstimate& joint;
    const SupportRefinement& refinement;
};

using BlockSource = std::function<std::optional<SensingProblem>(std::size_t block)>;
using PhaseOneHook = std::function<void(const PhaseOneStep&)>;

/// Adaptive SOMP with support refinement. Pulls block k from `source` on
/// demand and calls `hook` after every outer step.
RecoveryResult asomp_sr(const BlockSource& source, std::size_t antennas, std::size_t taps,
                        const RecoveryConfig& cfg, const PhaseOneHook& hook = {});

/// Re-estimates every block in `problems` on the support fixed by an earlier
/// run: least squares over the SOMP support for `estimates`, and over the
/// refined columns (or the masked full fit without refit) for `refined`.
/// Blocks past the adaptive stop thereby share the chosen support.
RecoveryResult extend_recovery(const RecoveryResult& result, const std::vector<SensingProblem>& problems,
                               const RecoveryConfig& cfg);

/// Exhaustive least-squares search over every support of size L; ties go to
/// the lexicographically first support. Throws std::length_error when
/// C(MP, L) exceeds 1e6.
std::vector<std::size_t> l0_oracle(const ComplexVector& y, const ComplexMatrix& phi, std::size_t sparsity);

/// Residual power |y - Phi_S Phi_S^+ y|^2 of a support.
double support_residual(const ComplexVector& y, const ComplexMatrix& phi,
                        const std::vector<std::size_t>& support, double pinv_tol = 1e-10);

/// Mean over blocks of |h_hat_k - h_k|^2 / |h_k|^2.
double nmse(const std::vector<ComplexVector>& estimates, const std::vector<ComplexVector>& truths);

}  // namespace dtisac::sensing
