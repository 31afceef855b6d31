#include "dtisac/channel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dtisac::channel {

namespace {

double sinc(double x)
{
    if (x == 0.0)
        return 1.0;
    const double px = kPi * x;
    return std::sin(px) / px;
}

// Map theta_bar onto the periodic range [-1/2, 1/2).
double wrap_theta_bar(double theta_bar)
{
    double w = theta_bar - std::floor(theta_bar + 0.5);
    if (w >= 0.5)
        w -= 1.0;
    return w;
}

// Steering vector without the range check; the response is 1-periodic in
// theta_bar.
ComplexVector array_response(double theta_bar, std::size_t antennas)
{
    ComplexVector a(static_cast<Eigen::Index>(antennas));
    for (std::size_t m = 0; m < antennas; ++m) {
        const double cycles = std::fmod(theta_bar * static_cast<double>(m), 1.0);
        a(static_cast<Eigen::Index>(m)) = numerics::phasor(2.0 * kPi * cycles);
    }
    return a;
}

}  // namespace

double PulseShape::operator()(double taps) const
{
    const double half = half_support();
    const double ax = std::abs(taps);
    if (ax >= half)
        return 0.0;
    const double knee = half / 2.0;
    double taper = 1.0;
    if (ax > knee)
        taper = 0.5 * (1.0 + std::cos(kPi * (ax - knee) / (half - knee)));
    return sinc(taps) * taper;
}

ComplexVector VirtualChannel::vec() const
{
    return Eigen::Map<const ComplexVector>(h.data(), h.size());
}

ComplexVector steering_vector(double theta_bar, std::size_t antennas)
{
    if (antennas == 0)
        throw std::invalid_argument("steering_vector: antennas must be >= 1");
    if (!(theta_bar >= -0.5 && theta_bar < 0.5))
        throw std::invalid_argument("steering_vector: theta_bar outside [-1/2, 1/2)");
    return array_response(theta_bar, antennas);
}

Complex dirichlet(double x, std::size_t antennas)
{
    if (antennas == 0)
        throw std::invalid_argument("dirichlet: antennas must be >= 1");
    const double m = static_cast<double>(antennas);
    const double den = std::sin(kPi * x / m);
    if (std::abs(den) < 1e-6) {
        // Near the removable singularity evaluate the defining geometric sum.
        Complex acc{0.0, 0.0};
        for (std::size_t i = 0; i < antennas; ++i)
            acc += numerics::phasor(2.0 * kPi * std::fmod(x * static_cast<double>(i) / m, 1.0));
        return acc / m;
    }
    const double mag = std::sin(kPi * x) / (m * den);
    return mag * numerics::phasor(kPi * x * (m - 1.0) / m);
}

std::size_t required_taps(const PathStateInfo& psi, double sample_period, const PulseShape& pulse)
{
    double max_tap = 0.0;
    for (const auto& p : psi.paths)
        max_tap = std::max(max_tap, p.delay / sample_period);
    return static_cast<std::size_t>(std::ceil(max_tap + pulse.half_support()));
}

CirBlock build_cir_block(const PathStateInfo& psi, std::size_t block, double coherence_time,
                         const PulseShape& pulse, std::size_t antennas, double bandwidth,
                         std::size_t taps)
{
    if (antennas == 0 || taps == 0)
        throw std::invalid_argument("build_cir_block: antennas and taps must be >= 1");
    if (!(bandwidth > 0.0))
        throw std::invalid_argument("build_cir_block: bandwidth must be positive");

    CirBlock cir;
    cir.block = block;
    cir.sample_period = 1.0 / bandwidth;
    cir.h = ComplexMatrix::Zero(static_cast<Eigen::Index>(antennas), static_cast<Eigen::Index>(taps));

    const double half = pulse.half_support();
    const double t_block = static_cast<double>(block) * coherence_time;
    for (const auto& path : psi.paths) {
        const double center = path.delay / cir.sample_period;
        const double main_lobe = std::round(center);
        if (main_lobe < 0.0 || main_lobe >= static_cast<double>(taps))
            throw std::out_of_range("build_cir_block: path delay outside the tap window");
        if (center - half < -1.0 || center + half > static_cast<double>(taps))
            cir.tail_truncated = true;

        const double doppler_cycles = std::fmod(path.doppler * t_block, 1.0);
        const Complex coeff = std::conj(path.gain) * numerics::phasor(-2.0 * kPi * doppler_cycles);
        const ComplexVector a = array_response(normalized_aod(path.aod), antennas);

        const auto p_lo = static_cast<long>(std::max(0.0, std::ceil(center - half)));
        const auto p_hi = static_cast<long>(std::min(static_cast<double>(taps) - 1.0, std::floor(center + half)));
        for (long p = p_lo; p <= p_hi; ++p) {
            const double w = pulse(static_cast<double>(p) - center);
            if (w != 0.0)
                cir.h.col(p) += (coeff * w) * a;
        }
    }
    return cir;
}

VirtualChannel virtual_channel(const CirBlock& cir, double rel_threshold)
{
    VirtualChannel vc;
    vc.h = numerics::dft_matrix(cir.antennas()).adjoint() * cir.h;
    const double peak = vc.h.cwiseAbs().maxCoeff();
    if (peak > 0.0) {
        for (Eigen::Index p = 0; p < vc.h.cols(); ++p)
            for (Eigen::Index r = 0; r < vc.h.rows(); ++r)
                if (std::abs(vc.h(r, p)) > rel_threshold * peak)
                    vc.support.emplace_back(static_cast<std::size_t>(r), static_cast<std::size_t>(p));
    }
    return vc;
}

ComplexMatrix virtual_channel_closed_form(const PathStateInfo& psi, std::size_t block,
                                          double coherence_time, const PulseShape& pulse,
                                          std::size_t antennas, double sample_period,
                                          std::size_t taps)
{
    const double m = static_cast<double>(antennas);
    const double t_block = static_cast<double>(block) * coherence_time;
    ComplexMatrix out = ComplexMatrix::Zero(static_cast<Eigen::Index>(antennas), static_cast<Eigen::Index>(taps));
    for (const auto& path : psi.paths) {
        const double cycles = std::fmod(path.doppler * t_block, 1.0);
        const Complex alpha_k = path.gain * numerics::phasor(2.0 * kPi * cycles);
        const double theta_bar = wrap_theta_bar(normalized_aod(path.aod));
        for (std::size_t p = 0; p < taps; ++p) {
            const double w = pulse(static_cast<double>(p) - path.delay / sample_period);
            if (w == 0.0)
                continue;
            for (std::size_t r = 0; r < antennas; ++r) {
                const double x = theta_bar * m - (static_cast<double>(r) - m / 2.0);
                out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(p)) +=
                    std::sqrt(m) * std::conj(alpha_k) * dirichlet(x, antennas) * w;
            }
        }
    }
    return out;
}

double correlation_ratio(const ComplexVector& h1, const ComplexVector& h2)
{
    if (h1.size() != h2.size())
        throw std::invalid_argument("correlation_ratio: length mismatch");
    const double n1 = h1.norm();
    const double n2 = h2.norm();
    if (n1 == 0.0 || n2 == 0.0)
        throw std::invalid_argument("correlation_ratio: zero vector");
    return std::min(1.0, std::abs(h1.dot(h2)) / (n1 * n2));
}

ComplexVector apply_block(const CirBlock& cir, const ComplexMatrix& x, std::size_t out_len,
                          double noise_power, Rng& rng)
{
    if (x.rows() != cir.h.rows())
        throw std::invalid_argument("apply_block: antenna count mismatch");

    const auto len = static_cast<long>(out_len);
    const auto taps = static_cast<long>(cir.taps());
    const auto x_len = static_cast<long>(x.cols());
    ComplexVector y = ComplexVector::Zero(len);
    for (long n = 0; n < len; ++n) {
        Complex acc{0.0, 0.0};
        for (long p = 0; p < taps; ++p) {
            const long src = n - p;
            if (src < 0 || src >= x_len)
                continue;
            acc += cir.h.col(p).dot(x.col(src));
        }
        y(n) = acc;
    }
    if (noise_power > 0.0)
        for (long n = 0; n < len; ++n)
            y(n) += complex_normal(rng, noise_power);
    return y;
}

ComplexVector apply_channel(const ComplexMatrix& x, const PathStateInfo& psi,
                            const PulseShape& pulse, double sample_period, std::size_t taps,
                            double noise_power, Rng& rng, std::size_t first_sample)
{
    const auto antennas = static_cast<std::size_t>(x.rows());
    const auto len = static_cast<long>(x.cols());
    ComplexVector y = ComplexVector::Zero(len);

    for (const auto& path : psi.paths) {
        // Row vector a^H(theta) applied to each transmitted sample.
        const ComplexVector a = array_response(normalized_aod(path.aod), antennas);
        const ComplexVector projected = x.transpose() * a.conjugate();  // a^H x[n]

        const double center = path.delay / sample_period;
        const double half = pulse.half_support();
        const long p_lo = static_cast<long>(std::max(0.0, std::ceil(center - half)));
        const long p_hi = static_cast<long>(std::min(static_cast<double>(taps) - 1.0, std::floor(center + half)));

        for (long n = 0; n < len; ++n) {
            Complex acc{0.0, 0.0};
            for (long p = p_lo; p <= p_hi; ++p) {
                const long src = n - p;
                if (src < 0)
                    break;
                if (src >= len)
                    continue;
                acc += pulse(static_cast<double>(p) - center) * projected(src);
            }
            const double t = static_cast<double>(first_sample + static_cast<std::size_t>(n)) * sample_period;
            const double cycles = std::fmod(path.doppler * t, 1.0);
            y(n) += path.gain * numerics::phasor(2.0 * kPi * cycles) * acc;
        }
    }
    if (noise_power > 0.0)
        for (long n = 0; n < len; ++n)
            y(n) += complex_normal(rng, noise_power);
    return y;
}

}  // namespace dtisac::channel
