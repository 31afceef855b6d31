#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dtisac/config.hpp"
#include "dtisac/geometry.hpp"
#include "dtisac/output.hpp"
#include "dtisac/random.hpp"

namespace dtisac::harness {

/// Environment variable that overrides the worker-pool width.
inline constexpr const char* kWorkersEnv = "DTISAC_WORKERS";

/// Pool width: DTISAC_WORKERS when set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
std::size_t worker_count();

struct DrawnScene {
    Scene scene;
    PathStateInfo psi;  // delays aligned to the first arrival plus the offset
};

/// Random bi-static scene. Every path gets its own angle bin inside the AoD
/// range; off-grid draws jitter the angle within the bin and keep the delay
/// continuous. Scenes whose main lobes fall past tap P-1 are redrawn.
DrawnScene draw_scene(const ExperimentConfig& cfg, Rng& rng);

/// Per-trial metrics. NaN marks a metric that was not computed.
struct TrialResult {
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    std::size_t paths = 0;
    std::size_t paths_detected = 0;
    std::size_t blocks_used = 0;
    std::size_t phase1_blocks = 0;
    double sensing_noise = 0.0;
    double nmse_omp = 0.0;
    double nmse_somp = 0.0;
    double nmse_asomp = 0.0;
    double doppler_error = 0.0;
    double doppler_error_max = 0.0;
    double sinr_db[3] = {0.0, 0.0, 0.0};  // indexed by ddam::Criterion
    double rate[3] = {0.0, 0.0, 0.0};
    double rate_ofdm = 0.0;
    bool zf_feasible = true;
    bool phase2_valid = false;
    bool stream_exhausted = false;
    bool rank_deficient = false;
    std::string error;
};

/// One Monte-Carlo trial; the seed is derive_seed(master, index). Errors are
/// caught and reported in the record.
TrialResult run_trial(const ExperimentConfig& cfg, std::size_t index);

/// Trials 0..cfg.experiment.trials-1 on the worker pool, ordered by index.
std::vector<TrialResult> run_trials(const ExperimentConfig& cfg);

/// Column schema of the per-trial table, axis and value first.
const std::vector<std::string>& trial_columns();
void append_trials(Table& table, const std::string& axis, double value,
                   const std::vector<TrialResult>& trials);

const std::vector<std::string>& summary_columns();
/// Appends one aggregate row: NaN-skipping means of every metric, with the
/// NMSE means also reported in dB.
void append_summary(Table& summary, const std::string& axis, double value,
                    const std::vector<TrialResult>& trials);

struct RunOutput {
    Table trials;   // axis and value columns lead every row
    Table summary;  // one row per axis value
};

RunOutput run(const ExperimentConfig& cfg);

/// Sets an axis value on a copy of the config. Axes: snr, transmit_power, J,
/// N_o, N_p, M, B, L. Throws std::invalid_argument for unknown names.
ExperimentConfig apply_axis(const ExperimentConfig& cfg, const std::string& axis, double value);
const std::vector<std::string>& sweep_axes();

RunOutput sweep(const ExperimentConfig& cfg, const std::string& axis, const std::vector<double>& values);

struct PaprOutput {
    Table ccdf;     // threshold_db then one column per waveform
    Table summary;  // waveform, paths, blocks, p99_db, mean_db
};

/// OFDM against per-antenna DDAM with perfect PSI, one DDAM curve per entry
/// of papr.paths.
PaprOutput papr_experiment(const ExperimentConfig& cfg);

/// PAPR (linear) of `blocks` DDAM blocks for `paths` paths, first antenna.
std::vector<double> ddam_papr_samples(const ExperimentConfig& cfg, std::size_t paths,
                                      std::size_t blocks, std::uint64_t seed);
std::vector<double> ofdm_papr_samples(const ExperimentConfig& cfg, std::size_t blocks,
                                      std::uint64_t seed);

// Invariant checks shared by `validate` and the acceptance suite.

/// max |A^H A - I| of the DFT dictionary.
double dictionary_unitarity_error(std::size_t antennas);

/// |y - Phi h|/|y| for one noiseless on-grid draw.
double observation_residual(const ExperimentConfig& cfg, std::uint64_t seed);

/// Largest |h_l^H f_l'| / (|h_l| |f_l'|), l != l', of ZF on perfect on-grid PSI.
double zf_cross_term(const ExperimentConfig& cfg, std::uint64_t seed);

/// Max sample deviation between the simulated DDAM receive sequence (perfect
/// on-grid PSI, ZF, noiseless) and the single-tap analytic form, relative to
/// the largest analytic sample.
double aligned_receive_deviation(const ExperimentConfig& cfg, std::uint64_t seed,
                                 std::size_t symbols = 256);

struct OracleComparison {
    std::vector<std::size_t> asomp;   // SOMP support of ASOMP-SR, sorted
    std::vector<std::size_t> oracle;  // exhaustive l0 support of block 0
    bool match = false;
};

/// Noiseless on-grid draw: ASOMP-SR support over the Phase-I blocks against
/// the exhaustive search with sparsity scene.paths.
OracleComparison oracle_comparison(const ExperimentConfig& cfg, std::uint64_t seed);

struct InvariantTrialCounts {
    std::size_t scenes = 0;
    std::size_t violations = 0;
};

/// Random scenes and motions over random horizons; a violation is a delay or
/// normalized-AoD drift beyond the worst-case bound.
InvariantTrialCounts path_invariance_check(std::size_t scenes, std::uint64_t seed);

/// Scene PSI turned into an ideal sensing result (exact gains, Dopplers,
/// on-grid taps and angle bins).
doppler::SensedPsi perfect_psi(const PathStateInfo& psi, std::size_t antennas, double sample_period);

struct Check {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Config rules then the fast invariant suite. Never throws for a bad
/// config; the failure is reported as the first check.
std::vector<Check> validate(const ExperimentConfig& cfg);
Table check_table(const std::vector<Check>& checks);

struct ManifestInfo {
    std::string command;
    double wall_time = 0.0;  // s
    std::size_t workers = 1;
};

/// Sidecar manifest: config hash, seed, versions, wall time.
std::string manifest_json(const ExperimentConfig& cfg, const ManifestInfo& info);

const char* version();

}  // namespace dtisac::harness
