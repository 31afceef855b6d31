#include "dtisac/ddam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dtisac/channel.hpp"

namespace dtisac::ddam {

namespace {

// Drop zero-gain paths and fill the delay bookkeeping shared by all criteria.
BeamformerSet prepare(const std::vector<PathEstimate>& paths, double data_power, Criterion c,
                      std::vector<const PathEstimate*>& kept)
{
    if (!(data_power > 0.0))
        throw std::invalid_argument("beamformers: data power must be positive");
    BeamformerSet bf;
    bf.criterion = c;
    bf.power = data_power;
    for (std::size_t l = 0; l < paths.size(); ++l) {
        if (paths[l].h.squaredNorm() == 0.0) {
            bf.dropped.push_back(l);
            continue;
        }
        kept.push_back(&paths[l]);
    }
    if (kept.empty())
        throw std::invalid_argument("beamformers: no path with nonzero gain");
    const auto m = kept.front()->h.size();
    for (const auto* p : kept)
        if (p->h.size() != m)
            throw std::invalid_argument("beamformers: channel vectors differ in length");

    for (const auto* p : kept)
        bf.p_max = std::max(bf.p_max, p->tap);
    for (const auto* p : kept) {
        bf.taps.push_back(p->tap);
        bf.kappa.push_back(bf.p_max - p->tap);
        bf.doppler.push_back(p->doppler);
    }
    return bf;
}

void normalize(BeamformerSet& bf, std::vector<ComplexVector> directions)
{
    double total = 0.0;
    for (const auto& d : directions)
        total += d.squaredNorm();
    if (!(total > 0.0))
        throw std::domain_error("beamformers: all directions vanished");
    const double scale = std::sqrt(bf.power / total);
    for (auto& d : directions)
        d *= scale;
    bf.f = std::move(directions);
}

}  // namespace

const char* criterion_name(Criterion c)
{
    switch (c) {
    case Criterion::MRT: return "mrt";
    case Criterion::ZF: return "zf";
    case Criterion::MMSE: return "mmse";
    }
    return "unknown";
}

double BeamformerSet::total_power() const
{
    double t = 0.0;
    for (const auto& v : f)
        t += v.squaredNorm();
    return t;
}

std::vector<PathEstimate> path_estimates(const doppler::SensedPsi& psi)
{
    const ComplexMatrix a = numerics::dft_matrix(psi.antennas);
    std::vector<PathEstimate> out;
    for (const auto& p : psi.paths) {
        PathEstimate e;
        e.h = p.bin_value * a.col(static_cast<Eigen::Index>(p.angle_bin));
        e.tap = p.tap;
        e.doppler = p.doppler;
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<PathEstimate> drop_collinear(const std::vector<PathEstimate>& paths, double tol)
{
    std::vector<bool> keep(paths.size(), true);
    for (std::size_t a = 0; a < paths.size(); ++a)
        for (std::size_t b = 0; b < paths.size(); ++b) {
            if (a == b || !keep[a] || !keep[b])
                continue;
            const double na = paths[a].h.norm();
            const double nb = paths[b].h.norm();
            if (na == 0.0 || nb == 0.0 || std::abs(paths[a].h.dot(paths[b].h)) < (1.0 - tol) * na * nb)
                continue;
            // Weaker one goes; equal norms keep the earlier path.
            if (nb < na || (nb == na && b > a))
                keep[b] = false;
            else
                keep[a] = false;
        }
    std::vector<PathEstimate> out;
    for (std::size_t i = 0; i < paths.size(); ++i)
        if (keep[i])
            out.push_back(paths[i]);
    return out;
}

BeamformerSet mrt_beamformers(const std::vector<PathEstimate>& paths, double data_power)
{
    std::vector<const PathEstimate*> kept;
    BeamformerSet bf = prepare(paths, data_power, Criterion::MRT, kept);
    std::vector<ComplexVector> dirs;
    for (const auto* p : kept)
        dirs.push_back(p->h);
    normalize(bf, std::move(dirs));
    return bf;
}

BeamformerSet zf_beamformers(const std::vector<PathEstimate>& paths, double data_power)
{
    std::vector<const PathEstimate*> kept;
    BeamformerSet bf = prepare(paths, data_power, Criterion::ZF, kept);
    const auto m = kept.front()->h.size();
    const auto l_count = static_cast<Eigen::Index>(kept.size());
    if (m < l_count)
        throw ZfInfeasible("zero-forcing infeasible: requires M >= L");

    std::vector<ComplexVector> dirs;
    for (Eigen::Index l = 0; l < l_count; ++l) {
        const ComplexVector& h = kept[static_cast<std::size_t>(l)]->h;
        if (l_count == 1) {
            dirs.push_back(h);
            continue;
        }
        ComplexMatrix u(m, l_count - 1);
        for (Eigen::Index j = 0, c = 0; j < l_count; ++j)
            if (j != l)
                u.col(c++) = kept[static_cast<std::size_t>(j)]->h;
        const ComplexVector q = h - u * (numerics::pseudo_inverse(u, 1e-10) * h);
        if (q.norm() <= 1e-8 * h.norm())
            throw ZfInfeasible("zero-forcing infeasible: path " + std::to_string(l) +
                               " lies in the span of the other paths (shared angle bin)");
        dirs.push_back(q);
    }
    normalize(bf, std::move(dirs));
    return bf;
}

BeamformerSet mmse_beamformers(const std::vector<PathEstimate>& paths, double data_power,
                               double noise_power)
{
    if (!(noise_power >= 0.0))
        throw std::invalid_argument("mmse: noise power must be non-negative");
    std::vector<const PathEstimate*> kept;
    BeamformerSet bf = prepare(paths, data_power, Criterion::MMSE, kept);
    const auto m = kept.front()->h.size();
    const double loading = static_cast<double>(kept.size()) * noise_power / data_power;

    ComplexMatrix gram = ComplexMatrix::Zero(m, m);
    for (const auto* p : kept)
        gram += p->h * p->h.adjoint();

    std::vector<ComplexVector> dirs;
    for (const auto* p : kept) {
        ComplexMatrix r = gram - p->h * p->h.adjoint();
        r.diagonal().array() += loading;
        // Loading can vanish; the pseudo-inverse then gives the projector limit.
        ComplexVector w;
        Eigen::LLT<ComplexMatrix> llt(r);
        if (loading > 0.0 && llt.info() == Eigen::Success)
            w = llt.solve(p->h);
        else
            w = numerics::pseudo_inverse(r, 1e-12) * p->h;
        dirs.push_back(std::move(w));
    }
    normalize(bf, std::move(dirs));
    return bf;
}

BeamformerSet make_beamformers(Criterion c, const std::vector<PathEstimate>& paths,
                               double data_power, double noise_power)
{
    switch (c) {
    case Criterion::MRT: return mrt_beamformers(paths, data_power);
    case Criterion::ZF: return zf_beamformers(paths, data_power);
    case Criterion::MMSE: return mmse_beamformers(paths, data_power, noise_power);
    }
    throw std::invalid_argument("make_beamformers: unknown criterion");
}

ComplexMatrix ddam_transmit(const ComplexVector& symbols, const BeamformerSet& bf,
                            std::size_t horizon, double sample_period, std::size_t first_sample)
{
    if (bf.size() == 0)
        throw std::invalid_argument("ddam_transmit: empty beamformer set");
    const auto m = bf.f.front().size();
    const auto len = static_cast<long>(symbols.size());
    ComplexMatrix x = ComplexMatrix::Zero(m, static_cast<Eigen::Index>(horizon));
    for (std::size_t l = 0; l < bf.size(); ++l) {
        const auto kappa = static_cast<long>(bf.kappa[l]);
        for (long n = 0; n < static_cast<long>(horizon); ++n) {
            const long src = n - kappa;
            if (src < 0 || src >= len)
                continue;
            const double t = static_cast<double>(first_sample + static_cast<std::size_t>(n)) * sample_period;
            const double cycles = std::fmod(bf.doppler[l] * t, 1.0);
            x.col(n) += (symbols(src) * numerics::phasor(-2.0 * kPi * cycles)) * bf.f[l];
        }
    }
    return x;
}

std::vector<ChannelComponent> channel_components(const PathStateInfo& psi, std::size_t antennas,
                                                 double sample_period, std::size_t taps,
                                                 std::size_t support, std::size_t block,
                                                 double coherence_time, double rel_threshold)
{
    channel::PulseShape pulse;
    pulse.support = support;
    std::vector<ChannelComponent> out;
    for (std::size_t l = 0; l < psi.paths.size(); ++l) {
        const auto& path = psi.paths[l];
        const double cycles = std::fmod(path.doppler * static_cast<double>(block) * coherence_time, 1.0);
        const Complex coeff = std::conj(path.gain * numerics::phasor(2.0 * kPi * cycles));
        const double theta_bar = normalized_aod(path.aod);
        ComplexVector a(static_cast<Eigen::Index>(antennas));
        for (std::size_t i = 0; i < antennas; ++i)
            a(static_cast<Eigen::Index>(i)) =
                numerics::phasor(2.0 * kPi * std::fmod(theta_bar * static_cast<double>(i), 1.0));

        const double center = path.delay / sample_period;
        double peak = 0.0;
        std::vector<std::pair<std::size_t, double>> weights;
        for (std::size_t p = 0; p < taps; ++p) {
            const double w = pulse(static_cast<double>(p) - center);
            if (w != 0.0) {
                weights.emplace_back(p, w);
                peak = std::max(peak, std::abs(w));
            }
        }
        for (const auto& [p, w] : weights) {
            if (std::abs(w) <= rel_threshold * peak)
                continue;
            out.push_back(ChannelComponent{l, p, (coeff * w) * a});
        }
    }
    return out;
}

DelayGroupMap delay_group_map(const std::vector<ChannelComponent>& components,
                              const BeamformerSet& bf, double sample_period)
{
    DelayGroupMap map;
    map.n_components = components.size();
    map.n_beamformers = bf.size();
    if (components.empty() || bf.size() == 0)
        throw std::invalid_argument("delay_group_map: empty channel or beamformer set");

    std::size_t max_delay = 0;
    for (const auto& c : components)
        for (std::size_t k : bf.kappa)
            max_delay = std::max(max_delay, c.tap + k);
    std::vector<DelayGroup> by_delay(max_delay + 1);
    for (std::size_t d = 0; d <= max_delay; ++d)
        by_delay[d].delay = d;

    for (std::size_t ci = 0; ci < components.size(); ++ci) {
        const auto& c = components[ci];
        for (std::size_t l = 0; l < bf.size(); ++l) {
            const double cycles = std::fmod(bf.doppler[l] * static_cast<double>(c.tap) * sample_period, 1.0);
            const Complex coeff = c.h.dot(bf.f[l]) * numerics::phasor(2.0 * kPi * cycles);
            auto& g = by_delay[c.tap + bf.kappa[l]];
            g.pairs.emplace_back(ci, l);
            g.coefficients.push_back(coeff);
            g.sum += coeff;
            g.magnitude_sum += std::abs(coeff);
        }
    }
    for (auto& g : by_delay)
        if (!g.pairs.empty())
            map.groups.push_back(std::move(g));

    double best = -1.0;
    for (std::size_t i = 0; i < map.groups.size(); ++i) {
        const double mag = std::abs(map.groups[i].sum);
        if (mag > best) {
            best = mag;
            map.selected = i;
        }
    }
    return map;
}

double min_sinr(const DelayGroupMap& map, double noise_power)
{
    double interference = 0.0;
    for (std::size_t i = 0; i < map.groups.size(); ++i)
        if (i != map.selected)
            interference += map.groups[i].magnitude_sum * map.groups[i].magnitude_sum;
    const double desired = std::norm(map.groups.at(map.selected).sum);
    const double den = interference + noise_power;
    if (den == 0.0)
        return desired > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    return desired / den;
}

double realized_sinr(const DelayGroupMap& map, double noise_power, const std::vector<double>& phases)
{
    std::size_t idx = 0;
    double interference = 0.0;
    for (std::size_t i = 0; i < map.groups.size(); ++i) {
        if (i == map.selected)
            continue;
        Complex acc{0.0, 0.0};
        for (const Complex& c : map.groups[i].coefficients) {
            if (idx >= phases.size())
                throw std::invalid_argument("realized_sinr: too few phases");
            acc += c * numerics::phasor(phases[idx++]);
        }
        interference += std::norm(acc);
    }
    const double desired = std::norm(map.groups.at(map.selected).sum);
    return desired / (interference + noise_power);
}

double phase1_dam_sinr(const std::vector<ChannelComponent>& block_components,
                       const std::vector<PathEstimate>& block_estimates, Criterion criterion,
                       double data_power, double noise_power, double sample_period)
{
    std::vector<PathEstimate> frozen = block_estimates;
    for (auto& e : frozen)
        e.doppler = 0.0;
    const BeamformerSet bf = make_beamformers(criterion, frozen, data_power, noise_power);
    return min_sinr(delay_group_map(block_components, bf, sample_period), noise_power);
}

std::size_t FrameConfig::data_length() const
{
    const std::size_t overhead = pilot_length + 2 * guard;
    return samples_per_block > overhead ? samples_per_block - overhead : 0;
}

void FrameConfig::validate(std::size_t taps) const
{
    if (samples_per_block == 0 || blocks == 0)
        throw std::invalid_argument("FrameConfig: N and K must be >= 1");
    if (guard < taps)
        throw std::invalid_argument("FrameConfig: guard interval N_g must be >= P");
    if (pilot_length + 2 * guard > samples_per_block)
        throw std::invalid_argument("FrameConfig: N_d = N - N_p - 2 N_g must be >= 0");
    if (phase1_blocks >= blocks)
        throw std::invalid_argument("FrameConfig: J must be < K");
    if (!(coherence_time > 0.0) || !(sample_period > 0.0))
        throw std::invalid_argument("FrameConfig: T_c and T_s must be positive");
}

RateReport spectral_efficiency(const FrameConfig& frame, const std::vector<double>& phase1_sinrs,
                               double phase2_sinr)
{
    const std::size_t j = phase1_sinrs.size();
    if (j >= frame.blocks)
        throw std::invalid_argument("spectral_efficiency: J must be < K");
    const double n = static_cast<double>(frame.samples_per_block);
    const double k = static_cast<double>(frame.blocks);
    double phase1 = 0.0;
    for (double g : phase1_sinrs)
        phase1 += std::log2(1.0 + g);

    RateReport r;
    r.approximation = std::log2(1.0 + phase2_sinr);
    r.rate = (static_cast<double>(frame.data_length()) * phase1 +
              (k - static_cast<double>(j)) * n * r.approximation) / (k * n);
    r.overhead_saving = static_cast<long>((frame.blocks - j) * (frame.pilot_length + 2 * frame.guard)) -
                        static_cast<long>(frame.guard);
    return r;
}

ValidityFlag phase2_validity(double delta_nu_max, const FrameConfig& frame, double threshold)
{
    ValidityFlag v;
    const double blocks = static_cast<double>(frame.blocks - std::min(frame.blocks, frame.phase1_blocks));
    v.value = std::abs(delta_nu_max) * blocks * frame.coherence_time;
    v.valid = v.value < threshold;
    return v;
}

}  // namespace dtisac::ddam
