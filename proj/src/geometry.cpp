#include "dtisac/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dtisac {

double norm(Vec2 v) { return std::hypot(v.x, v.y); }
double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

void Scene::validate() const
{
    if (antennas < 1)
        throw std::invalid_argument("scene: antennas must be >= 1");
    if (!(bandwidth > 0.0))
        throw std::invalid_argument("scene: bandwidth must be positive");
    if (!(carrier_frequency > bandwidth))
        throw std::invalid_argument("scene: carrier frequency must exceed bandwidth");
    if (!(norm(ue_position) > 0.0))
        throw std::invalid_argument("scene: UE co-located with BS");
    for (const auto& s : scatterers) {
        if (!(s.rcs > 0.0))
            throw std::invalid_argument("scene: scatterer rcs must be positive");
        if (!(norm(s.position) > 0.0))
            throw std::invalid_argument("scene: scatterer co-located with BS");
    }
}

PathStateInfo derive_path_parameters(const Scene& scene)
{
    scene.validate();
    const double lambda = scene.wavelength();
    const double radar_const = lambda * lambda / std::pow(4.0 * kPi, 3);

    PathStateInfo info;
    info.paths.reserve(scene.scatterers.size());
    for (const auto& s : scene.scatterers) {
        const Vec2 to_ue = s.position - scene.ue_position;
        const double r_s = norm(s.position);
        const double r_su = norm(to_ue);
        if (!(r_s > 0.0) || !(r_su > 0.0))
            throw std::invalid_argument("derive_path_parameters: zero-length leg");

        const double d = r_s + r_su;
        // Bi-static radar equation: beta_l / d_l = sqrt(lambda^2 zeta / ((4 pi)^3 R_s^2 R_su^2)).
        const double amplitude = std::sqrt(radar_const * s.rcs) / (r_s * r_su);
        const double cycles = std::fmod(d / lambda, 1.0);

        // Positive bi-static velocity shortens the path.
        const double range_rate = dot(s.position, s.velocity) / r_s +
                                  dot(to_ue, s.velocity - scene.ue_velocity) / r_su;

        PathState p;
        p.gain = amplitude * numerics::phasor(-2.0 * kPi * cycles);
        p.doppler = -range_rate / lambda;
        p.delay = d / kSpeedOfLight;
        p.aod = std::atan2(s.position.y, s.position.x);
        info.paths.push_back(p);
    }
    return info;
}

double path_invariant_time(double v_max, double bandwidth, std::size_t antennas, double r_min)
{
    if (!(v_max > 0.0) || !(bandwidth > 0.0) || antennas == 0 || !(r_min > 0.0))
        throw std::invalid_argument("path_invariant_time: arguments must be positive");

    const double m = static_cast<double>(antennas);
    const double delay_branch = kSpeedOfLight / (3.0 * v_max * bandwidth);
    const double angle_denominator = antennas < 32 ? m + 2.0 : m;
    const double angle_branch = 2.0 * r_min / (v_max * angle_denominator);
    return std::min(delay_branch, angle_branch);
}

double path_invariant_time_far_field_bound(double v_max, double bandwidth,
                                           std::size_t antennas, double wavelength)
{
    if (!(v_max > 0.0) || !(bandwidth > 0.0) || antennas == 0 || !(wavelength > 0.0))
        throw std::invalid_argument("path_invariant_time_far_field_bound: arguments must be positive");
    return std::min(kSpeedOfLight / (3.0 * v_max * bandwidth),
                    wavelength * static_cast<double>(antennas) / v_max);
}

double coherence_time(double nu_max, CoherenceMode mode, double xi)
{
    if (!(nu_max > 0.0))
        throw std::invalid_argument("coherence_time: nu_max must be positive");
    if (mode == CoherenceMode::Clarke)
        return std::sqrt(9.0 / (16.0 * kPi)) / nu_max;
    if (!(xi > 0.0) || xi > 1.0)
        throw std::invalid_argument("coherence_time: xi must lie in (0, 1]");
    return xi / nu_max;
}

VariationBounds variation_bounds(double v_max, double r_min, double horizon)
{
    if (v_max < 0.0 || horizon < 0.0 || !(r_min > 0.0))
        throw std::invalid_argument("variation_bounds: invalid arguments");
    const double travel = v_max * horizon;
    if (travel >= r_min)
        throw std::invalid_argument("variation_bounds: v_max * T must be below R_min");
    return {3.0 * travel / kSpeedOfLight, travel / (2.0 * (r_min - travel))};
}

Scene propagate_scene(const Scene& scene, double t)
{
    if (t < 0.0)
        throw std::invalid_argument("propagate_scene: t must be >= 0");
    Scene out = scene;
    out.ue_position = scene.ue_position + t * scene.ue_velocity;
    for (auto& s : out.scatterers)
        s.position = s.position + t * s.velocity;
    return out;
}

TimescaleReport timescale_report(const Scene& scene, double nu_max, CoherenceMode mode, double xi)
{
    TimescaleReport rep;
    rep.coherence_time = coherence_time(nu_max, mode, xi);
    rep.xi = rep.coherence_time * nu_max;

    double v_max = norm(scene.ue_velocity);
    double r_min = std::numeric_limits<double>::infinity();
    for (const auto& s : scene.scatterers) {
        v_max = std::max(v_max, norm(s.velocity));
        r_min = std::min(r_min, norm(s.position));
    }
    if (v_max > 0.0 && std::isfinite(r_min)) {
        rep.path_invariant_time = path_invariant_time(v_max, scene.bandwidth, scene.antennas, r_min);
        rep.far_field_bound = path_invariant_time_far_field_bound(v_max, scene.bandwidth,
                                                                  scene.antennas, scene.wavelength());
    } else {
        rep.path_invariant_time = std::numeric_limits<double>::infinity();
        rep.far_field_bound = std::numeric_limits<double>::infinity();
    }

    // Far-field requires R_min >= 2 D^2 / lambda with aperture D = lambda M / 2.
    const double aperture = scene.wavelength() * static_cast<double>(scene.antennas) / 2.0;
    rep.near_field_warning = std::isfinite(r_min) && r_min < 2.0 * aperture * aperture / scene.wavelength();

    const double ratio = rep.path_invariant_time / rep.coherence_time;
    rep.blocks_per_invariant = std::isfinite(ratio)
                                   ? std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(ratio)))
                                   : std::numeric_limits<std::size_t>::max();
    return rep;
}

}  // namespace dtisac
