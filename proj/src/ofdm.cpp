#include "dtisac/ofdm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <unsupported/Eigen/FFT>

namespace dtisac::ofdm {

namespace {

bool power_of_two(std::size_t v) { return v >= 2 && (v & (v - 1)) == 0; }

std::vector<Complex> to_std(const ComplexVector& v) { return {v.data(), v.data() + v.size()}; }

ComplexVector from_std(const std::vector<Complex>& v)
{
    return Eigen::Map<const ComplexVector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

void OfdmConfig::validate(std::size_t taps) const
{
    if (!power_of_two(subcarriers))
        throw std::invalid_argument("OfdmConfig: W must be a power of two >= 2");
    if (cyclic_prefix < taps)
        throw std::invalid_argument("OfdmConfig: cyclic prefix N_cp must be >= P");
    const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(qam_order))));
    if (side * side != qam_order || !power_of_two(side))
        throw std::invalid_argument("OfdmConfig: QAM order must be 4, 16, 64, ...");
}

ComplexMatrix subcarrier_channels(const ComplexMatrix& cir, std::size_t subcarriers)
{
    const auto p_count = static_cast<std::size_t>(cir.cols());
    if (subcarriers == 0 || p_count > subcarriers)
        throw std::invalid_argument("subcarrier_channels: requires P <= W");
    const auto w_count = static_cast<Eigen::Index>(subcarriers);
    ComplexMatrix twiddle(cir.cols(), w_count);
    for (Eigen::Index p = 0; p < cir.cols(); ++p)
        for (Eigen::Index w = 0; w < w_count; ++w) {
            const auto cyc = (static_cast<std::size_t>(w) * static_cast<std::size_t>(p)) % subcarriers;
            twiddle(p, w) = numerics::phasor(-2.0 * kPi * static_cast<double>(cyc) / static_cast<double>(subcarriers));
        }
    return cir * twiddle;
}

double water_level(const std::vector<double>& gains, double budget, double noise)
{
    if (!(budget > 0.0) || !(noise > 0.0))
        throw std::invalid_argument("waterfill: budget and noise must be positive");
    std::vector<double> floors;  // n / g for the usable subcarriers
    for (double g : gains) {
        if (g < 0.0 || !std::isfinite(g))
            throw std::invalid_argument("waterfill: gains must be finite and non-negative");
        if (g > 0.0)
            floors.push_back(noise / g);
    }
    if (floors.empty())
        throw std::invalid_argument("waterfill: all gains are zero");
    std::sort(floors.begin(), floors.end());

    // Fill the k lowest floors; the largest k whose level clears its own floor.
    double prefix = 0.0;
    double level = 0.0;
    for (std::size_t k = 0; k < floors.size(); ++k) {
        prefix += floors[k];
        const double mu = (budget + prefix) / static_cast<double>(k + 1);
        if (mu <= floors[k])
            break;
        level = mu;
    }
    return level;
}

std::vector<double> waterfill(const std::vector<double>& gains, double budget, double noise)
{
    const double mu = water_level(gains, budget, noise);
    std::vector<double> p(gains.size(), 0.0);
    for (std::size_t w = 0; w < gains.size(); ++w)
        if (gains[w] > 0.0)
            p[w] = std::max(0.0, mu - noise / gains[w]);
    return p;
}

std::size_t symbols_per_block(const ddam::FrameConfig& frame, const OfdmConfig& cfg)
{
    return frame.data_length() / (cfg.subcarriers + cfg.cyclic_prefix);
}

double overhead_factor(const ddam::FrameConfig& frame, const OfdmConfig& cfg)
{
    const std::size_t n_sym = symbols_per_block(frame, cfg);
    if (n_sym == 0)
        throw std::invalid_argument("ofdm: frame too short for one OFDM symbol");
    return static_cast<double>(frame.data_length() - n_sym * cfg.cyclic_prefix) /
           static_cast<double>(frame.samples_per_block);
}

double ofdm_rate(const ddam::FrameConfig& frame, const OfdmConfig& cfg,
                 const std::vector<ComplexMatrix>& truth, const std::vector<ComplexMatrix>& estimated,
                 double data_power, double noise_power)
{
    if (truth.empty() || truth.size() != estimated.size())
        throw std::invalid_argument("ofdm_rate: need matching, non-empty channel lists");
    const double factor = overhead_factor(frame, cfg);
    const double w = static_cast<double>(cfg.subcarriers);
    const double sub_noise = noise_power / w;

    double total = 0.0;
    for (std::size_t k = 0; k < truth.size(); ++k) {
        const ComplexMatrix& h = truth[k];
        const ComplexMatrix& he = estimated[k];
        if (h.cols() != static_cast<Eigen::Index>(cfg.subcarriers) || he.cols() != h.cols() || he.rows() != h.rows())
            throw std::invalid_argument("ofdm_rate: channel matrices must be M x W");
        std::vector<double> gains(cfg.subcarriers);
        for (Eigen::Index i = 0; i < he.cols(); ++i)
            gains[static_cast<std::size_t>(i)] = he.col(i).squaredNorm();
        const std::vector<double> p = waterfill(gains, data_power, sub_noise);
        double acc = 0.0;
        for (Eigen::Index i = 0; i < h.cols(); ++i) {
            const double pw = p[static_cast<std::size_t>(i)];
            if (pw <= 0.0)
                continue;
            const ComplexVector g = std::sqrt(pw) * he.col(i) / he.col(i).norm();
            acc += std::log2(1.0 + std::norm(h.col(i).dot(g)) / sub_noise);
        }
        total += factor * acc / w;
    }
    return total / static_cast<double>(truth.size());
}

ComplexVector ofdm_modulate(const ComplexVector& symbols, std::size_t cyclic_prefix,
                            std::size_t oversampling)
{
    const auto w = static_cast<std::size_t>(symbols.size());
    if (w == 0 || oversampling == 0)
        throw std::invalid_argument("ofdm_modulate: empty symbol block or zero oversampling");
    if (cyclic_prefix > w)
        throw std::invalid_argument("ofdm_modulate: cyclic prefix longer than the symbol");

    const std::size_t n = w * oversampling;
    std::vector<Complex> spectrum(n, Complex{0.0, 0.0});
    // Positive frequencies at the start, negative ones at the end.
    const std::size_t half = w / 2;
    for (std::size_t i = 0; i < w; ++i) {
        const std::size_t dst = i < half ? i : n - (w - i);
        spectrum[dst] = symbols(static_cast<Eigen::Index>(i));
    }
    Eigen::FFT<double> fft;
    std::vector<Complex> time;
    fft.inv(time, spectrum);  // includes the 1/n factor
    const double scale = static_cast<double>(n) / std::sqrt(static_cast<double>(w));

    const std::size_t cp = cyclic_prefix * oversampling;
    ComplexVector out(static_cast<Eigen::Index>(cp + n));
    for (std::size_t i = 0; i < cp; ++i)
        out(static_cast<Eigen::Index>(i)) = time[n - cp + i] * scale;
    for (std::size_t i = 0; i < n; ++i)
        out(static_cast<Eigen::Index>(cp + i)) = time[i] * scale;
    return out;
}

ComplexVector interpolate(const ComplexVector& block, std::size_t factor)
{
    if (factor <= 1)
        return block;
    const auto n = static_cast<std::size_t>(block.size());
    Eigen::FFT<double> fft;
    std::vector<Complex> spec;
    fft.fwd(spec, to_std(block));
    std::vector<Complex> padded(n * factor, Complex{0.0, 0.0});
    const std::size_t half = (n + 1) / 2;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t dst = i < half ? i : n * factor - (n - i);
        padded[dst] = spec[i];
    }
    std::vector<Complex> time;
    fft.inv(time, padded);
    ComplexVector out = from_std(time);
    out *= static_cast<double>(factor);
    return out;
}

ComplexVector qam_symbols(std::size_t count, std::size_t order, Rng& rng)
{
    const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(order))));
    if (side < 2 || side * side != order)
        throw std::invalid_argument("qam_symbols: order must be a square");
    // Levels -(side-1), ..., side-1 in steps of 2; mean power 2 (side^2 - 1) / 3.
    const double norm = std::sqrt(2.0 * (static_cast<double>(order) - 1.0) / 3.0);
    std::uniform_int_distribution<std::size_t> pick(0, side - 1);
    ComplexVector s(static_cast<Eigen::Index>(count));
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        const double re = 2.0 * static_cast<double>(pick(rng)) - static_cast<double>(side - 1);
        const double im = 2.0 * static_cast<double>(pick(rng)) - static_cast<double>(side - 1);
        s(i) = Complex{re, im} / norm;
    }
    return s;
}

double papr(const ComplexVector& block)
{
    if (block.size() == 0)
        throw std::invalid_argument("papr: empty block");
    const double mean = block.squaredNorm() / static_cast<double>(block.size());
    if (mean == 0.0)
        throw std::invalid_argument("papr: zero block");
    return block.cwiseAbs2().maxCoeff() / mean;
}

std::vector<double> ccdf(const std::vector<double>& values, const std::vector<double>& thresholds)
{
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> out;
    for (double t : thresholds) {
        const auto above = sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), t);
        out.push_back(sorted.empty() ? 0.0 : static_cast<double>(above) / static_cast<double>(sorted.size()));
    }
    return out;
}

double tail_quantile(std::vector<double> values, double tail)
{
    if (values.empty())
        throw std::invalid_argument("tail_quantile: no values");
    if (!(tail >= 0.0 && tail <= 1.0))
        throw std::invalid_argument("tail_quantile: tail must lie in [0, 1]");
    std::sort(values.begin(), values.end());
    const double pos = (1.0 - tail) * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
}

}  // namespace dtisac::ofdm
