#pragma once

#include <cstddef>
#include <vector>

#include "dtisac/numerics.hpp"

namespace dtisac {

// Propagation speed used throughout. The round value keeps the timescale
// worked examples (e.g. 10 kHz Doppler at 60 GHz and 50 m/s) exact.
inline constexpr double kSpeedOfLight = 3.0e8;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend bool operator==(Vec2 a, Vec2 b) = default;
};

double norm(Vec2 v);
double dot(Vec2 a, Vec2 b);

struct Scatterer {
    Vec2 position;   // m
    Vec2 velocity;   // m/s
    double rcs = 1.0;  // m^2
};

/// Planar bi-static scene. The BS array sits at the origin with broadside
/// along +x; angles are measured from broadside toward +y.
struct Scene {
    Vec2 ue_position{100.0, 0.0};
    Vec2 ue_velocity{};
    std::vector<Scatterer> scatterers;
    double carrier_frequency = 30e9;  // Hz
    double bandwidth = 100e6;         // Hz
    std::size_t antennas = 64;

    double wavelength() const { return kSpeedOfLight / carrier_frequency; }
    /// Throws std::invalid_argument when a scene invariant is violated.
    void validate() const;
};

struct PathState {
    Complex gain;          // alpha_l
    double doppler = 0.0;  // Hz
    double delay = 0.0;    // s
    double aod = 0.0;      // rad
};

struct PathStateInfo {
    std::vector<PathState> paths;

    std::size_t size() const { return paths.size(); }
};

/// Normalized AoD theta_bar = sin(theta) / 2.
inline double normalized_aod(double aod) { return 0.5 * std::sin(aod); }

/// One path per scatterer: cosine-law leg lengths, bi-static radar gain,
/// and Doppler from the analytic range rate -d/dt (R_s + R_su).
PathStateInfo derive_path_parameters(const Scene& scene);

/// Path invariant time. Uses the exact (M + 2) denominator for M < 32 and
/// the large-array form otherwise.
double path_invariant_time(double v_max, double bandwidth, std::size_t antennas,
                           double r_min);

/// Far-field lower bound min{c/(3 v B), lambda M / v} on the path invariant time.
double path_invariant_time_far_field_bound(double v_max, double bandwidth,
                                           std::size_t antennas, double wavelength);

enum class CoherenceMode { Clarke, Ratio };

/// Clarke mode returns sqrt(9 / (16 pi)) / nu_max and ignores xi; Ratio mode
/// returns xi / nu_max.
double coherence_time(double nu_max, CoherenceMode mode = CoherenceMode::Clarke,
                      double xi = 1.0);

struct VariationBounds {
    double delta_tau_max = 0.0;        // s
    double delta_theta_bar_max = 0.0;  // dimensionless
};

/// Worst-case delay and normalized-AoD drift over an interval of length T.
VariationBounds variation_bounds(double v_max, double r_min, double horizon);

/// Constant-velocity motion of UE and scatterers over t seconds.
Scene propagate_scene(const Scene& scene, double t);

struct TimescaleReport {
    double coherence_time = 0.0;
    double path_invariant_time = 0.0;
    double far_field_bound = 0.0;
    std::size_t blocks_per_invariant = 1;
    double xi = 1.0;
    bool near_field_warning = false;
};

/// Collects both timescales for a scene. xi is reported as T_c * nu_max.
TimescaleReport timescale_report(const Scene& scene, double nu_max,
                                 CoherenceMode mode = CoherenceMode::Clarke,
                                 double xi = 1.0);

}  // namespace dtisac
