#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dtisac/ddam.hpp"
#include "dtisac/doppler.hpp"
#include "dtisac/geometry.hpp"
#include "dtisac/ofdm.hpp"
#include "dtisac/sensing.hpp"

namespace dtisac {

/// Raised for malformed config text, unknown keys and bad values.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SystemParams {
    std::size_t antennas = 32;
    double carrier_frequency = 30e9;
    double bandwidth = 100e6;
    std::size_t taps = 32;                // P
    std::size_t pulse_support = 16;       // V_psi
    double nu_max = 4000.0;
    CoherenceMode coherence_mode = CoherenceMode::Clarke;
    double xi = 1.0;
    double coherence_time = 0.0;          // > 0 overrides the nu_max rule
};

struct SceneParams {
    std::size_t paths = 5;
    bool on_grid = true;
    double rs_min = 10.0;
    double rs_max = 50.0;
    double ue_distance = 100.0;
    double aod_min_deg = -60.0;
    double aod_max_deg = 60.0;
    double scatterer_speed_max = 20.0;
    double ue_speed = 0.0;
    double rcs = 100.0;
    std::size_t min_bin_separation = 2;  // circular angle-bin distance between paths
    long delay_offset = -1;  // taps added to every aligned delay; -1: 0 on-grid, half the pulse support off-grid
};

struct PowerParams {
    double transmit_power_dbm = 30.0;   // P_d
    double pilot_power_dbm = 0.0;       // P_t, used when pilot_power_set
    bool pilot_power_set = false;
    double noise_dbm = -94.0;
    double snr_db = 0.0;                // sensing SNR, used when snr_set
    bool snr_set = false;
    bool noiseless = false;             // sensing observations without noise
};

struct DdamParams {
    ddam::Criterion criterion = ddam::Criterion::ZF;
    bool fallback_mmse = false;
    double validity_threshold = 0.1;
};

struct OfdmParams {
    std::size_t subcarriers = 512;
    std::size_t cyclic_prefix = 0;  // 0: P
    std::size_t qam_order = 16;
    bool perfect_csi = false;
};

struct PaprParams {
    std::size_t blocks = 10000;
    std::vector<std::size_t> paths{10, 20};
    std::size_t oversampling = 1;
    bool aggregate = false;  // DDAM power summed over antennas instead of antenna 0
    double threshold_min_db = 0.0;
    double threshold_max_db = 14.0;
    double threshold_step_db = 0.25;
};

struct ExperimentParams {
    std::size_t trials = 100;
    std::uint64_t seed = 1;
    bool baselines = true;       // OMP and SOMP
    bool asomp = true;           // ASOMP-SR, Doppler and everything downstream
    bool communication = true;   // beamforming, SINR, rates
    bool ofdm = true;
};

struct SweepParams {
    std::string axis;
    std::vector<double> values;
};

struct ExperimentConfig {
    SystemParams system;
    SceneParams scene;
    ddam::FrameConfig frame;  // sample period and T_c are derived, not read
    PowerParams power;
    sensing::RecoveryConfig recovery;
    std::size_t doppler_oversampling = 100;
    DdamParams ddam;
    OfdmParams ofdm;
    PaprParams papr;
    ExperimentParams experiment;
    SweepParams sweep;

    ExperimentConfig();

    double sample_period() const { return 1.0 / system.bandwidth; }
    double coherence_time() const;
    std::size_t guard() const { return frame.guard > 0 ? frame.guard : system.taps; }
    std::size_t cyclic_prefix() const { return ofdm.cyclic_prefix > 0 ? ofdm.cyclic_prefix : system.taps; }
    std::size_t delay_offset() const;
    /// Frame with the derived T_s, T_c and guard filled in.
    ddam::FrameConfig frame_config() const;
    ofdm::OfdmConfig ofdm_config() const;
    doppler::DopplerConfig doppler_config() const;

    /// Sets one value by dotted key ("system.antennas"). Throws ConfigError
    /// for unknown keys or unparsable values.
    void set(const std::string& key, const std::string& value);
    std::string get(const std::string& key) const;
    static const std::vector<std::string>& keys();

    /// key = value lines in registry order; the hash input.
    std::string canonical() const;
    std::uint64_t hash() const;

    /// Structural checks that do not depend on a scene draw. Throws
    /// std::invalid_argument naming the violated rule.
    void validate() const;
};

/// Parses a YAML document of nested sections. Unknown sections or keys are
/// rejected with a ConfigError naming the offending path.
ExperimentConfig load_config_string(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

/// FNV-1a, 64 bit.
std::uint64_t fnv1a64(const std::string& data);

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace dtisac
