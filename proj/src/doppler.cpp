#include "dtisac/doppler.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace dtisac::doppler {

double DopplerConfig::grid_step(std::size_t blocks) const
{
    return 1.0 / (static_cast<double>(oversampling) * static_cast<double>(blocks) * coherence_time);
}

void DopplerConfig::validate() const
{
    if (oversampling == 0)
        throw std::invalid_argument("doppler: oversampling factor must be >= 1");
    if (!(coherence_time > 0.0))
        throw std::invalid_argument("doppler: coherence time must be positive");
}

ComplexVector doppler_correlate(const ComplexVector& reference, const std::vector<ComplexVector>& blocks)
{
    if (reference.squaredNorm() == 0.0)
        throw std::invalid_argument("doppler_correlate: zero reference vector");
    ComplexVector u(static_cast<Eigen::Index>(blocks.size()));
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        if (blocks[k].size() != reference.size())
            throw std::invalid_argument("doppler_correlate: length mismatch");
        u(static_cast<Eigen::Index>(k)) = reference.dot(blocks[k]);
    }
    return u;
}

double estimate_doppler(const ComplexVector& u, const DopplerConfig& cfg)
{
    cfg.validate();
    const auto j = static_cast<std::size_t>(u.size());
    if (j == 0)
        throw std::invalid_argument("estimate_doppler: empty correlation vector");

    const long grid = static_cast<long>(cfg.oversampling * j);
    long best = -grid / 2;
    double best_mag = -1.0;
    for (long w = -grid / 2; w < grid - grid / 2; ++w) {
        Complex acc{0.0, 0.0};
        for (std::size_t k = 0; k < j; ++k) {
            // Reduce w k mod grid exactly in integers before forming the phase.
            const long cyc = (w * static_cast<long>(k)) % grid;
            acc += u(static_cast<Eigen::Index>(k)) *
                   numerics::phasor(2.0 * kPi * static_cast<double>(cyc) / static_cast<double>(grid));
        }
        const double mag = std::abs(acc);
        if (mag > best_mag * (1.0 + 1e-12)) {
            best_mag = mag;
            best = w;
        }
    }
    return static_cast<double>(best) * cfg.grid_step(j);
}

std::vector<std::vector<ComplexVector>> path_components(const sensing::SupportRefinement& sr)
{
    std::vector<std::vector<ComplexVector>> out;
    for (const auto& support : sr.path_supports) {
        std::vector<ComplexVector> blocks;
        for (const auto& refined : sr.refined) {
            ComplexVector v = ComplexVector::Zero(refined.size());
            for (std::size_t idx : support)
                v(static_cast<Eigen::Index>(idx)) = refined(static_cast<Eigen::Index>(idx));
            blocks.push_back(std::move(v));
        }
        out.push_back(std::move(blocks));
    }
    return out;
}

double bin_to_aod(std::size_t angle_bin, std::size_t antennas)
{
    assert(angle_bin < antennas);
    const double m = static_cast<double>(antennas);
    const double s = 2.0 * (static_cast<double>(angle_bin) - m / 2.0) / m;
    assert(std::abs(s) <= 1.0);
    return std::asin(s);
}

SensedPsi assemble_psi(const sensing::RecoveryResult& recovery, const std::vector<double>& dopplers,
                       std::size_t antennas, double sample_period, double coherence_time)
{
    const auto& sr = recovery.refinement;
    if (dopplers.size() != sr.path_count())
        throw std::invalid_argument("assemble_psi: one Doppler value per path required");

    SensedPsi psi;
    psi.antennas = antennas;
    psi.sample_period = sample_period;
    const double root_m = std::sqrt(static_cast<double>(antennas));
    for (std::size_t l = 0; l < sr.path_count(); ++l) {
        SensedPath path;
        path.angle_bin = sr.peaks[l].first;
        path.tap = sr.peaks[l].second;
        path.doppler = dopplers[l];
        path.delay = static_cast<double>(path.tap) * sample_period;
        path.aod = bin_to_aod(path.angle_bin, antennas);

        // Block k carries exp(-i 2 pi nu k T_c); undo it and average.
        const auto g = static_cast<Eigen::Index>(path.tap * antennas + path.angle_bin);
        Complex acc{0.0, 0.0};
        for (std::size_t k = 0; k < sr.refined.size(); ++k) {
            const double cycles = std::fmod(path.doppler * static_cast<double>(k) * coherence_time, 1.0);
            acc += sr.refined[k](g) * numerics::phasor(2.0 * kPi * cycles);
        }
        path.bin_value = sr.refined.empty() ? Complex{} : acc / static_cast<double>(sr.refined.size());
        path.gain = std::conj(path.bin_value) / root_m;
        psi.paths.push_back(path);
    }
    return psi;
}

SensedPsi sense_psi(const sensing::RecoveryResult& recovery, std::size_t antennas,
                    double sample_period, const DopplerConfig& cfg)
{
    const auto components = path_components(recovery.refinement);
    std::vector<double> dopplers;
    std::vector<double> processed;
    for (const auto& blocks : components) {
        if (blocks.empty() || blocks.front().squaredNorm() == 0.0) {
            dopplers.push_back(0.0);
            processed.push_back(0.0);
            continue;
        }
        const ComplexVector u = doppler_correlate(blocks.front(), blocks);
        const double nu = estimate_doppler(u, cfg);
        Complex acc{0.0, 0.0};
        for (Eigen::Index k = 0; k < u.size(); ++k)
            acc += u(k) * numerics::phasor(2.0 * kPi * std::fmod(nu * static_cast<double>(k) * cfg.coherence_time, 1.0));
        dopplers.push_back(nu);
        processed.push_back(std::abs(acc) / static_cast<double>(u.size()));
    }
    SensedPsi psi = assemble_psi(recovery, dopplers, antennas, sample_period, cfg.coherence_time);
    for (std::size_t l = 0; l < psi.paths.size(); ++l)
        psi.paths[l].processed_gain = processed[l];
    return psi;
}

TruthBin truth_bin(const PathState& path, std::size_t antennas, double sample_period)
{
    const double m = static_cast<double>(antennas);
    TruthBin tb;
    tb.tap = static_cast<std::size_t>(std::max(0.0, std::round(path.delay / sample_period)));
    const double bin = std::round(normalized_aod(path.aod) * m + m / 2.0);
    const long wrapped = (static_cast<long>(bin) % static_cast<long>(antennas) + static_cast<long>(antennas)) %
                         static_cast<long>(antennas);
    tb.angle_bin = static_cast<std::size_t>(wrapped);
    tb.doppler = path.doppler;
    return tb;
}

double doppler_error(const SensedPsi& estimates, const std::vector<TruthBin>& truths,
                     double unmatched_error, double* max_error)
{
    if (max_error != nullptr)
        *max_error = 0.0;
    if (truths.empty())
        return 0.0;
    std::vector<std::size_t> order(truths.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return truths[a].tap < truths[b].tap; });

    const long m = static_cast<long>(estimates.antennas);
    std::vector<bool> used(estimates.paths.size(), false);
    double total = 0.0;
    for (std::size_t t : order) {
        std::size_t best = estimates.paths.size();
        double best_dist = std::numeric_limits<double>::infinity();
        std::size_t best_tap = 0;
        for (std::size_t e = 0; e < estimates.paths.size(); ++e) {
            if (used[e])
                continue;
            const auto& est = estimates.paths[e];
            const double dp = static_cast<double>(est.tap) - static_cast<double>(truths[t].tap);
            long dr = std::labs(static_cast<long>(est.angle_bin) - static_cast<long>(truths[t].angle_bin));
            if (m > 0)
                dr = std::min(dr, m - dr);
            const double dist = dp * dp + static_cast<double>(dr * dr);
            if (dist < best_dist || (dist == best_dist && est.tap < best_tap)) {
                best = e;
                best_dist = dist;
                best_tap = est.tap;
            }
        }
        if (best == estimates.paths.size()) {
            total += unmatched_error;
            continue;
        }
        used[best] = true;
        const double err = std::abs(estimates.paths[best].doppler - truths[t].doppler);
        total += err;
        if (max_error != nullptr)
            *max_error = std::max(*max_error, err);
    }
    return total / static_cast<double>(truths.size());
}

}  // namespace dtisac::doppler
