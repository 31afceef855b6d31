#include "dtisac/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "dtisac/channel.hpp"
#include "dtisac/ddam.hpp"
#include "dtisac/doppler.hpp"
#include "dtisac/ofdm.hpp"
#include "dtisac/sensing.hpp"

#ifndef DTISAC_VERSION
#define DTISAC_VERSION "0.0.0"
#endif

namespace dtisac::harness {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr ddam::Criterion kCriteria[3] = {ddam::Criterion::MRT, ddam::Criterion::ZF, ddam::Criterion::MMSE};

double deg(double d) { return d * kPi / 180.0; }

std::size_t draw_index(Rng& rng, std::size_t n)
{
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

double pilot_power(const ExperimentConfig& cfg)
{
    return dbm_to_watts(cfg.power.pilot_power_set ? cfg.power.pilot_power_dbm : cfg.power.transmit_power_dbm);
}

double to_db_or_nan(double linear)
{
    return std::isfinite(linear) && linear > 0.0 ? 10.0 * std::log10(linear) : kNaN;
}

// Beamformers for one criterion; ZF falls back to MMSE when allowed.
std::optional<ddam::BeamformerSet> design(const ExperimentConfig& cfg, ddam::Criterion c,
                                          const std::vector<ddam::PathEstimate>& est, double p_d,
                                          double noise, bool& zf_ok)
{
    try {
        return ddam::make_beamformers(c, ddam::drop_collinear(est), p_d, noise);
    } catch (const ddam::ZfInfeasible&) {
        zf_ok = false;
        if (cfg.ddam.fallback_mmse)
            return ddam::make_beamformers(ddam::Criterion::MMSE, ddam::drop_collinear(est), p_d, noise);
        return std::nullopt;
    }
}

struct Block {
    channel::CirBlock cir;
    ComplexVector truth;
    sensing::SensingProblem problem;
};

Block make_block(const ExperimentConfig& cfg, const PathStateInfo& psi, std::size_t k,
                 std::uint64_t trial_seed, Rng& rng)
{
    const std::size_t m = cfg.system.antennas;
    const std::size_t p = cfg.system.taps;
    const std::size_t np = cfg.frame.pilot_length;
    const channel::PulseShape pulse{channel::PulseKind::TaperedSinc, cfg.system.pulse_support};
    Block b;
    b.cir = channel::build_cir_block(psi, k, cfg.coherence_time(), pulse, m, cfg.system.bandwidth, p);
    b.truth = channel::virtual_channel(b.cir).vec();
    const auto pilots = sensing::generate_pilots(np, m, pilot_power(cfg), derive_seed(trial_seed, 1000 + k), k);
    b.problem.phi = sensing::build_sensing_matrix(pilots, p);
    const ComplexVector rx = channel::apply_block(b.cir, pilots.samples, np + p - 1, 0.0, rng);
    b.problem.y = sensing::build_observation(rx, np, p);
    return b;
}

std::vector<ddam::PathEstimate> block_estimates(const sensing::SupportRefinement& sr, std::size_t block,
                                                std::size_t antennas)
{
    const ComplexMatrix a = numerics::dft_matrix(antennas);
    std::vector<ddam::PathEstimate> out;
    for (const auto& [r, p] : sr.peaks) {
        ddam::PathEstimate e;
        e.h = sr.refined[block](static_cast<Eigen::Index>(p * antennas + r)) * a.col(static_cast<Eigen::Index>(r));
        e.tap = p;
        out.push_back(std::move(e));
    }
    return out;
}

PathStateInfo sensed_to_psi(const doppler::SensedPsi& sensed)
{
    PathStateInfo out;
    for (const auto& s : sensed.paths)
        out.paths.push_back({s.gain, s.doppler, s.delay, s.aod});
    return out;
}

void run_trial_body(const ExperimentConfig& cfg, TrialResult& out)
{
    const std::uint64_t ts = out.seed;
    Rng scene_rng(derive_seed(ts, 0));
    Rng noise_rng(derive_seed(ts, 1));

    const DrawnScene drawn = draw_scene(cfg, scene_rng);
    const PathStateInfo& psi = drawn.psi;
    out.paths = psi.size();

    const std::size_t m = cfg.system.antennas;
    const std::size_t p = cfg.system.taps;
    const double ts_s = cfg.sample_period();
    const double tc = cfg.coherence_time();
    const ddam::FrameConfig frame = cfg.frame_config();
    const std::size_t j = frame.phase1_blocks;
    const std::size_t k_total = frame.blocks;
    const double p_d = dbm_to_watts(cfg.power.transmit_power_dbm);
    const double noise = dbm_to_watts(cfg.power.noise_dbm);

    // Phase I spans J blocks; every sensing method sees the same ones.
    const std::size_t n_sense = j;

    std::vector<Block> blocks;
    for (std::size_t k = 0; k < n_sense; ++k)
        blocks.push_back(make_block(cfg, psi, k, ts, noise_rng));

    double sigma2 = noise;
    if (cfg.power.snr_set && !blocks.empty()) {
        double signal = 0.0;
        for (const auto& b : blocks)
            signal += b.problem.y.squaredNorm();
        signal /= static_cast<double>(blocks.size());
        const double rows = static_cast<double>(blocks.front().problem.y.size());
        sigma2 = signal / (rows * db_to_linear(cfg.power.snr_db));
    }
    if (cfg.power.noiseless)
        sigma2 = 0.0;
    out.sensing_noise = sigma2;
    if (sigma2 > 0.0)
        for (auto& b : blocks)
            for (Eigen::Index i = 0; i < b.problem.y.size(); ++i)
                b.problem.y(i) += complex_normal(noise_rng, sigma2);

    std::vector<ComplexVector> truths;
    for (const auto& b : blocks)
        truths.push_back(b.truth);

    if (cfg.experiment.baselines && j <= blocks.size()) {
        sensing::OmpOptions opt;
        opt.eps_th = cfg.recovery.eps_th;
        opt.max_iterations = cfg.recovery.iteration_cap();
        opt.pinv_tol = cfg.recovery.pinv_tol;
        std::vector<ComplexVector> omp_est;
        std::vector<sensing::SensingProblem> problems;
        for (std::size_t k = 0; k < j; ++k) {
            omp_est.push_back(sensing::omp(blocks[k].problem.y, blocks[k].problem.phi, opt).coefficients);
            problems.push_back(blocks[k].problem);
        }
        const std::vector<ComplexVector> first(truths.begin(), truths.begin() + static_cast<long>(j));
        out.nmse_omp = sensing::nmse(omp_est, first);
        const auto joint = sensing::somp_joint(problems, cfg.recovery);
        out.nmse_somp = sensing::nmse(joint.estimates, first);
        out.rank_deficient = joint.rank_deficient;
    }

    if (!cfg.experiment.asomp)
        return;

    const channel::PulseShape pulse{channel::PulseKind::TaperedSinc, cfg.system.pulse_support};
    std::vector<double> phase1[3];
    bool zf_ok = true;
    sensing::PhaseOneHook hook;
    if (cfg.experiment.communication) {
        hook = [&](const sensing::PhaseOneStep& step) {
            const std::size_t block = step.blocks - 1;
            const auto comps = ddam::channel_components(psi, m, ts_s, p, pulse.support, block, tc);
            const auto est = block_estimates(step.refinement, block, m);
            for (int c = 0; c < 3; ++c) {
                if (est.empty()) {
                    phase1[c].push_back(0.0);
                    continue;
                }
                auto bf = design(cfg, kCriteria[c], est, p_d, noise, zf_ok);
                if (!bf) {
                    phase1[c].push_back(kNaN);
                    continue;
                }
                phase1[c].push_back(ddam::min_sinr(ddam::delay_group_map(comps, *bf, ts_s), noise));
            }
        };
    }

    sensing::RecoveryConfig rcfg = cfg.recovery;
    rcfg.max_blocks = std::min(rcfg.max_blocks, j);
    const sensing::BlockSource source = [&](std::size_t k) -> std::optional<sensing::SensingProblem> {
        if (k >= blocks.size())
            return std::nullopt;
        return blocks[k].problem;
    };
    const auto adaptive = sensing::asomp_sr(source, m, p, rcfg, hook);
    const auto& diag = adaptive.diagnostics;
    out.blocks_used = diag.blocks_used;
    out.phase1_blocks = j;
    out.stream_exhausted = diag.stream_exhausted;
    out.rank_deficient = out.rank_deficient || diag.rank_deficient;

    // Blocks after the adaptive stop keep sensing on the chosen support.
    std::vector<sensing::SensingProblem> all;
    for (const auto& b : blocks)
        all.push_back(b.problem);
    const auto recovery = sensing::extend_recovery(adaptive, all, rcfg);
    out.nmse_asomp = sensing::nmse(recovery.refinement.refined, truths);

    if (cfg.experiment.communication) {
        for (std::size_t k = phase1[0].size(); k < j; ++k) {
            const auto comps = ddam::channel_components(psi, m, ts_s, p, pulse.support, k, tc);
            const auto est = block_estimates(recovery.refinement, k, m);
            for (int c = 0; c < 3; ++c) {
                std::optional<ddam::BeamformerSet> bf;
                if (!est.empty())
                    bf = design(cfg, kCriteria[c], est, p_d, noise, zf_ok);
                phase1[c].push_back(est.empty() ? 0.0
                                    : bf       ? ddam::min_sinr(ddam::delay_group_map(comps, *bf, ts_s), noise)
                                               : kNaN);
            }
        }
    }

    const auto dcfg = cfg.doppler_config();
    const doppler::SensedPsi sensed = doppler::sense_psi(recovery, m, ts_s, dcfg);
    out.paths_detected = sensed.size();
    std::vector<doppler::TruthBin> tb;
    for (const auto& path : psi.paths)
        tb.push_back(doppler::truth_bin(path, m, ts_s));
    out.doppler_error = doppler::doppler_error(sensed, tb, dcfg.unambiguous_half_width(), &out.doppler_error_max);

    if (!cfg.experiment.communication)
        return;

    const auto comps = ddam::channel_components(psi, m, ts_s, p, pulse.support);
    const auto est = ddam::path_estimates(sensed);
    for (int c = 0; c < 3; ++c) {
        std::optional<ddam::BeamformerSet> bf;
        if (!est.empty())
            bf = design(cfg, kCriteria[c], est, p_d, noise, zf_ok);
        const double sinr = bf ? ddam::min_sinr(ddam::delay_group_map(comps, *bf, ts_s), noise) : kNaN;
        out.sinr_db[c] = to_db_or_nan(sinr);
        const bool usable = std::isfinite(sinr) &&
                            std::all_of(phase1[c].begin(), phase1[c].end(), [](double v) { return std::isfinite(v); });
        out.rate[c] = usable ? ddam::spectral_efficiency(frame, phase1[c], sinr).rate : kNaN;
    }
    out.zf_feasible = zf_ok;
    out.phase2_valid = ddam::phase2_validity(out.doppler_error_max, frame, cfg.ddam.validity_threshold).valid;

    if (!cfg.experiment.ofdm)
        return;
    const auto ocfg = cfg.ofdm_config();
    const PathStateInfo est_psi = sensed_to_psi(sensed);
    std::vector<ComplexMatrix> truth_f;
    std::vector<ComplexMatrix> est_f;
    for (std::size_t k = 0; k < k_total; ++k) {
        const auto cir = channel::build_cir_block(psi, k, tc, pulse, m, cfg.system.bandwidth, p);
        truth_f.push_back(ofdm::subcarrier_channels(cir.h, ocfg.subcarriers));
        if (cfg.ofdm.perfect_csi) {
            est_f.push_back(truth_f.back());
        } else {
            const auto ecir = channel::build_cir_block(est_psi, k, tc, pulse, m, cfg.system.bandwidth, p);
            est_f.push_back(ofdm::subcarrier_channels(ecir.h, ocfg.subcarriers));
        }
    }
    out.rate_ofdm = est_psi.size() > 0 ? ofdm::ofdm_rate(frame, ocfg, truth_f, est_f, p_d, noise) : 0.0;
}

TrialResult blank_trial(std::size_t index, std::uint64_t seed)
{
    TrialResult t;
    t.trial = index;
    t.seed = seed;
    t.sensing_noise = t.nmse_omp = t.nmse_somp = t.nmse_asomp = kNaN;
    t.doppler_error = t.doppler_error_max = t.rate_ofdm = kNaN;
    for (int c = 0; c < 3; ++c)
        t.sinr_db[c] = t.rate[c] = kNaN;
    return t;
}

double nan_mean(const std::vector<double>& v)
{
    double sum = 0.0;
    std::size_t n = 0;
    for (double x : v)
        if (std::isfinite(x)) {
            sum += x;
            ++n;
        }
    return n ? sum / static_cast<double>(n) : kNaN;
}

template <typename Fn>
void parallel_for(std::size_t count, Fn fn)
{
    const std::size_t width = std::min(worker_count(), std::max<std::size_t>(count, 1));
    if (width <= 1) {
        for (std::size_t i = 0; i < count; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < width; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++)
                fn(i);
        });
    for (auto& t : pool)
        t.join();
}

}  // namespace

std::size_t worker_count()
{
    if (const char* env = std::getenv(kWorkersEnv)) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end != env && *end == '\0' && v > 0)
            return static_cast<std::size_t>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

DrawnScene draw_scene(const ExperimentConfig& cfg, Rng& rng)
{
    const std::size_t m = cfg.system.antennas;
    const std::size_t l = cfg.scene.paths;
    const double md = static_cast<double>(m);
    const double ts = cfg.sample_period();
    const double p_last = static_cast<double>(cfg.system.taps) - 1.0;

    std::vector<std::size_t> eligible;
    for (std::size_t r = 0; r < m; ++r) {
        const double s = 2.0 * (static_cast<double>(r) - md / 2.0) / md;
        if (std::abs(s) >= 1.0)
            continue;
        const double aod = std::asin(s);
        if (aod >= deg(cfg.scene.aod_min_deg) - 1e-12 && aod <= deg(cfg.scene.aod_max_deg) + 1e-12)
            eligible.push_back(r);
    }
    const std::size_t sep = std::max<std::size_t>(1, cfg.scene.min_bin_separation);
    if ((eligible.size() + sep - 1) / sep < l)
        throw std::invalid_argument("draw_scene: the AoD range cannot hold L paths at the minimum bin separation");

    for (int attempt = 0; attempt < 1000; ++attempt) {
        DrawnScene d;
        d.scene.ue_position = {cfg.scene.ue_distance, 0.0};
        d.scene.carrier_frequency = cfg.system.carrier_frequency;
        d.scene.bandwidth = cfg.system.bandwidth;
        d.scene.antennas = m;
        const double ue_dir = uniform_phase(rng);
        d.scene.ue_velocity = cfg.scene.ue_speed * Vec2{std::cos(ue_dir), std::sin(ue_dir)};

        std::vector<std::size_t> chosen;
        std::vector<double> aods;
        bool placed = true;
        for (std::size_t i = 0; i < l && placed; ++i) {
            std::vector<std::size_t> open;
            for (std::size_t r : eligible) {
                bool clear = true;
                for (std::size_t q : chosen) {
                    const std::size_t gap = r > q ? r - q : q - r;
                    clear = clear && std::min(gap, m - gap) >= sep;
                }
                if (clear)
                    open.push_back(r);
            }
            if (open.empty()) {
                placed = false;
                break;
            }
            chosen.push_back(open[draw_index(rng, open.size())]);
            double theta_bar = (static_cast<double>(chosen.back()) - md / 2.0) / md;
            if (!cfg.scene.on_grid)
                theta_bar += uniform(rng, -0.5, 0.5) / md;
            const double aod = std::asin(2.0 * theta_bar);
            const double rs = uniform(rng, cfg.scene.rs_min, cfg.scene.rs_max);
            const double speed = uniform(rng, 0.0, cfg.scene.scatterer_speed_max);
            const double dir = uniform_phase(rng);
            Scatterer s;
            s.position = rs * Vec2{std::cos(aod), std::sin(aod)};
            s.velocity = speed * Vec2{std::cos(dir), std::sin(dir)};
            s.rcs = cfg.scene.rcs;
            d.scene.scatterers.push_back(s);
            aods.push_back(aod);
        }
        if (!placed)
            continue;

        d.psi = derive_path_parameters(d.scene);
        double first = std::numeric_limits<double>::infinity();
        for (const auto& path : d.psi.paths)
            first = std::min(first, path.delay);
        const double offset = static_cast<double>(cfg.delay_offset());
        bool fits = true;
        for (std::size_t i = 0; i < l; ++i) {
            auto& path = d.psi.paths[i];
            path.aod = aods[i];
            double taps = (path.delay - first) / ts + offset;
            if (cfg.scene.on_grid)
                taps = std::round(taps);
            path.delay = taps * ts;
            fits = fits && taps <= p_last;
        }
        if (fits)
            return d;
    }
    throw std::runtime_error("draw_scene: no scene fits the tap window after 1000 draws; raise system.taps");
}

TrialResult run_trial(const ExperimentConfig& cfg, std::size_t index)
{
    TrialResult out = blank_trial(index, derive_seed(cfg.experiment.seed, index));
    try {
        run_trial_body(cfg, out);
    } catch (const std::exception& e) {
        const std::string what = e.what();
        out = blank_trial(index, out.seed);
        out.error = what.empty() ? "error" : what;
    }
    return out;
}

std::vector<TrialResult> run_trials(const ExperimentConfig& cfg)
{
    std::vector<TrialResult> out(cfg.experiment.trials);
    parallel_for(out.size(), [&](std::size_t i) { out[i] = run_trial(cfg, i); });
    return out;
}

const std::vector<std::string>& trial_columns()
{
    static const std::vector<std::string> cols{
        "axis", "value", "trial", "seed", "paths", "paths_detected", "blocks_used", "phase1_blocks",
        "sensing_noise_w", "nmse_omp", "nmse_somp", "nmse_asomp", "doppler_error_hz", "doppler_error_max_hz",
        "sinr_mrt_db", "sinr_zf_db", "sinr_mmse_db", "rate_mrt", "rate_zf", "rate_mmse", "rate_ofdm",
        "zf_feasible", "phase2_valid", "stream_exhausted", "rank_deficient", "error"};
    return cols;
}

void append_trials(Table& table, const std::string& axis, double value, const std::vector<TrialResult>& trials)
{
    if (table.columns.empty())
        table.columns = trial_columns();
    auto i64 = [](auto v) { return Cell{static_cast<std::int64_t>(v)}; };
    for (const auto& t : trials) {
        table.rows.push_back({axis, value, i64(t.trial), std::to_string(t.seed), i64(t.paths),
                              i64(t.paths_detected), i64(t.blocks_used), i64(t.phase1_blocks), t.sensing_noise,
                              t.nmse_omp, t.nmse_somp, t.nmse_asomp, t.doppler_error, t.doppler_error_max,
                              t.sinr_db[0], t.sinr_db[1], t.sinr_db[2], t.rate[0], t.rate[1], t.rate[2],
                              t.rate_ofdm, i64(t.zf_feasible), i64(t.phase2_valid), i64(t.stream_exhausted),
                              i64(t.rank_deficient), t.error});
    }
}

const std::vector<std::string>& summary_columns()
{
    static const std::vector<std::string> cols{
        "axis", "value", "trials", "failed", "paths", "paths_detected", "blocks_used", "phase1_blocks",
        "nmse_omp", "nmse_omp_db", "nmse_somp", "nmse_somp_db", "nmse_asomp", "nmse_asomp_db",
        "doppler_error_hz", "doppler_error_max_hz", "sinr_mrt_db", "sinr_zf_db", "sinr_mmse_db",
        "rate_mrt", "rate_zf", "rate_mmse", "rate_ofdm", "zf_feasible", "phase2_valid"};
    return cols;
}

void append_summary(Table& summary, const std::string& axis, double value, const std::vector<TrialResult>& trials)
{
    if (summary.columns.empty())
        summary.columns = summary_columns();
    std::vector<const TrialResult*> ok;
    for (const auto& t : trials)
        if (t.error.empty())
            ok.push_back(&t);
    auto mean = [&](auto field) {
        std::vector<double> v;
        for (const auto* t : ok)
            v.push_back(static_cast<double>(field(*t)));
        return nan_mean(v);
    };
    const double omp = mean([](const TrialResult& t) { return t.nmse_omp; });
    const double somp = mean([](const TrialResult& t) { return t.nmse_somp; });
    const double asomp = mean([](const TrialResult& t) { return t.nmse_asomp; });
    summary.rows.push_back({
        axis, value, static_cast<std::int64_t>(trials.size()), static_cast<std::int64_t>(trials.size() - ok.size()),
        mean([](const TrialResult& t) { return t.paths; }),
        mean([](const TrialResult& t) { return t.paths_detected; }),
        mean([](const TrialResult& t) { return t.blocks_used; }),
        mean([](const TrialResult& t) { return t.phase1_blocks; }),
        omp, to_db_or_nan(omp), somp, to_db_or_nan(somp), asomp, to_db_or_nan(asomp),
        mean([](const TrialResult& t) { return t.doppler_error; }),
        mean([](const TrialResult& t) { return t.doppler_error_max; }),
        mean([](const TrialResult& t) { return t.sinr_db[0]; }),
        mean([](const TrialResult& t) { return t.sinr_db[1]; }),
        mean([](const TrialResult& t) { return t.sinr_db[2]; }),
        mean([](const TrialResult& t) { return t.rate[0]; }),
        mean([](const TrialResult& t) { return t.rate[1]; }),
        mean([](const TrialResult& t) { return t.rate[2]; }),
        mean([](const TrialResult& t) { return t.rate_ofdm; }),
        mean([](const TrialResult& t) { return t.zf_feasible; }),
        mean([](const TrialResult& t) { return t.phase2_valid; }),
    });
}

RunOutput run(const ExperimentConfig& cfg)
{
    cfg.validate();
    RunOutput out;
    const auto trials = run_trials(cfg);
    append_trials(out.trials, "none", kNaN, trials);
    append_summary(out.summary, "none", kNaN, trials);
    return out;
}

const std::vector<std::string>& sweep_axes()
{
    static const std::vector<std::string> axes{"snr", "transmit_power", "J", "N_o", "N_p", "M", "B", "L"};
    return axes;
}

ExperimentConfig apply_axis(const ExperimentConfig& cfg, const std::string& axis, double value)
{
    ExperimentConfig c = cfg;
    auto count = [&](const char* what) {
        if (!(value >= 1.0) || value != std::floor(value) || value > 1e9)
            throw std::invalid_argument(std::string("sweep: ") + what + " values must be positive integers");
        return static_cast<std::size_t>(value);
    };
    if (axis == "snr") {
        c.power.snr_db = value;
        c.power.snr_set = true;
    } else if (axis == "transmit_power") {
        c.power.transmit_power_dbm = value;
    } else if (axis == "J") {
        c.frame.phase1_blocks = count("J");
        c.recovery.max_blocks = count("J");
    } else if (axis == "N_o") {
        c.doppler_oversampling = count("N_o");
    } else if (axis == "N_p") {
        c.frame.pilot_length = count("N_p");
    } else if (axis == "M") {
        c.system.antennas = count("M");
    } else if (axis == "B") {
        if (!(value > 0.0))
            throw std::invalid_argument("sweep: B values must be positive");
        c.system.bandwidth = value;
    } else if (axis == "L") {
        c.scene.paths = count("L");
    } else {
        std::string names;
        for (const auto& a : sweep_axes())
            names += (names.empty() ? "" : ", ") + a;
        throw std::invalid_argument("sweep: unknown axis '" + axis + "' (expected one of " + names + ")");
    }
    return c;
}

RunOutput sweep(const ExperimentConfig& cfg, const std::string& axis, const std::vector<double>& values)
{
    if (values.empty())
        throw std::invalid_argument("sweep: axis values must be non-empty");
    std::vector<ExperimentConfig> cfgs;
    for (double v : values) {
        cfgs.push_back(apply_axis(cfg, axis, v));
        cfgs.back().validate();
    }
    RunOutput out;
    out.trials.columns = trial_columns();
    out.summary.columns = summary_columns();
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto trials = run_trials(cfgs[i]);
        append_trials(out.trials, axis, values[i], trials);
        append_summary(out.summary, axis, values[i], trials);
    }
    return out;
}

doppler::SensedPsi perfect_psi(const PathStateInfo& psi, std::size_t antennas, double sample_period)
{
    doppler::SensedPsi out;
    out.antennas = antennas;
    out.sample_period = sample_period;
    const double root_m = std::sqrt(static_cast<double>(antennas));
    for (const auto& path : psi.paths) {
        const auto tb = doppler::truth_bin(path, antennas, sample_period);
        doppler::SensedPath s;
        s.gain = path.gain;
        s.bin_value = std::conj(path.gain) * root_m;
        s.doppler = path.doppler;
        s.tap = tb.tap;
        s.angle_bin = tb.angle_bin;
        s.delay = static_cast<double>(tb.tap) * sample_period;
        s.aod = doppler::bin_to_aod(tb.angle_bin, antennas);
        out.paths.push_back(s);
    }
    return out;
}

namespace {

ddam::BeamformerSet papr_beamformers(const ExperimentConfig& cfg, const std::vector<ddam::PathEstimate>& est)
{
    const double p_d = dbm_to_watts(cfg.power.transmit_power_dbm);
    const double noise = dbm_to_watts(cfg.power.noise_dbm);
    try {
        return ddam::make_beamformers(cfg.ddam.criterion, est, p_d, noise);
    } catch (const ddam::ZfInfeasible&) {
        return ddam::make_beamformers(ddam::Criterion::MMSE, est, p_d, noise);
    }
}

ExperimentConfig on_grid(const ExperimentConfig& cfg)
{
    ExperimentConfig c = cfg;
    c.scene.on_grid = true;
    return c;
}

}  // namespace

std::vector<double> ddam_papr_samples(const ExperimentConfig& cfg, std::size_t paths, std::size_t blocks,
                                      std::uint64_t seed)
{
    ExperimentConfig c = on_grid(cfg);
    c.scene.paths = paths;
    // Perfect PSI needs no separation for sensing; distinct bins keep ZF feasible.
    c.scene.min_bin_separation = 1;
    const std::size_t horizon = cfg.ofdm.subcarriers + cfg.cyclic_prefix();
    std::vector<double> out(blocks);
    parallel_for(blocks, [&](std::size_t b) {
        Rng rng(derive_seed(seed, b));
        const DrawnScene d = draw_scene(c, rng);
        const auto sensed = perfect_psi(d.psi, c.system.antennas, c.sample_period());
        const auto bf = papr_beamformers(c, ddam::path_estimates(sensed));
        // Run past the largest delay pre-compensation so every path carries data.
        const std::size_t lead = bf.p_max;
        const ComplexVector s = ofdm::qam_symbols(horizon + lead, c.ofdm.qam_order, rng);
        const ComplexMatrix x = ddam::ddam_transmit(s, bf, horizon + lead, c.sample_period());
        const auto seg = x.middleCols(static_cast<Eigen::Index>(lead), static_cast<Eigen::Index>(horizon));
        if (!c.papr.aggregate) {
            ComplexVector row = seg.row(0).transpose();
            if (c.papr.oversampling > 1)
                row = ofdm::interpolate(row, c.papr.oversampling);
            out[b] = ofdm::papr(row);
            return;
        }
        // Total radiated power per sample, each antenna interpolated first.
        Eigen::VectorXd power = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(horizon * c.papr.oversampling));
        for (Eigen::Index m = 0; m < seg.rows(); ++m) {
            ComplexVector row = seg.row(m).transpose();
            if (c.papr.oversampling > 1)
                row = ofdm::interpolate(row, c.papr.oversampling);
            power += row.cwiseAbs2();
        }
        if (!(power.mean() > 0.0))
            throw std::runtime_error("ddam_papr_samples: zero block");
        out[b] = power.maxCoeff() / power.mean();
    });
    return out;
}

std::vector<double> ofdm_papr_samples(const ExperimentConfig& cfg, std::size_t blocks, std::uint64_t seed)
{
    std::vector<double> out(blocks);
    parallel_for(blocks, [&](std::size_t b) {
        Rng rng(derive_seed(seed, b));
        const ComplexVector s = ofdm::qam_symbols(cfg.ofdm.subcarriers, cfg.ofdm.qam_order, rng);
        out[b] = ofdm::papr(ofdm::ofdm_modulate(s, cfg.cyclic_prefix(), cfg.papr.oversampling));
    });
    return out;
}

PaprOutput papr_experiment(const ExperimentConfig& cfg)
{
    cfg.validate();
    const std::uint64_t seed = cfg.experiment.seed;
    const std::size_t blocks = cfg.papr.blocks;

    std::vector<std::string> names{"ofdm"};
    std::vector<std::size_t> path_counts{0};
    std::vector<std::vector<double>> samples_db;
    auto to_db_all = [](std::vector<double> v) {
        for (double& x : v)
            x = ofdm::to_db(x);
        return v;
    };
    samples_db.push_back(to_db_all(ofdm_papr_samples(cfg, blocks, derive_seed(seed, 0))));
    for (std::size_t i = 0; i < cfg.papr.paths.size(); ++i) {
        const std::size_t l = cfg.papr.paths[i];
        names.push_back("ddam_L" + std::to_string(l));
        path_counts.push_back(l);
        samples_db.push_back(to_db_all(ddam_papr_samples(cfg, l, blocks, derive_seed(seed, 1 + i))));
    }

    std::vector<double> thresholds;
    const auto steps = static_cast<long>(std::floor(
        (cfg.papr.threshold_max_db - cfg.papr.threshold_min_db) / cfg.papr.threshold_step_db + 1e-9));
    for (long i = 0; i <= steps; ++i)
        thresholds.push_back(cfg.papr.threshold_min_db + static_cast<double>(i) * cfg.papr.threshold_step_db);

    PaprOutput out;
    out.ccdf.columns = {"threshold_db"};
    for (const auto& n : names)
        out.ccdf.columns.push_back(n);
    std::vector<std::vector<double>> curves;
    for (const auto& s : samples_db)
        curves.push_back(ofdm::ccdf(s, thresholds));
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
        std::vector<Cell> row{thresholds[t]};
        for (const auto& c : curves)
            row.emplace_back(c[t]);
        out.ccdf.rows.push_back(std::move(row));
    }

    out.summary.columns = {"waveform", "paths", "blocks", "papr_p99_db", "papr_mean_db", "measure"};
    for (std::size_t i = 0; i < names.size(); ++i) {
        const double mean = std::accumulate(samples_db[i].begin(), samples_db[i].end(), 0.0) /
                            static_cast<double>(samples_db[i].size());
        out.summary.rows.push_back({names[i], static_cast<std::int64_t>(path_counts[i]),
                                    static_cast<std::int64_t>(blocks), ofdm::tail_quantile(samples_db[i], 0.01), mean,
                                    std::string(i == 0 ? "n/a" : cfg.papr.aggregate ? "aggregate" : "antenna 0")});
    }
    return out;
}

double dictionary_unitarity_error(std::size_t antennas)
{
    const ComplexMatrix a = numerics::dft_matrix(antennas);
    const ComplexMatrix g = a.adjoint() * a - ComplexMatrix::Identity(a.cols(), a.cols());
    return g.cwiseAbs().maxCoeff();
}

double observation_residual(const ExperimentConfig& cfg, std::uint64_t seed)
{
    const ExperimentConfig c = on_grid(cfg);
    Rng rng(derive_seed(seed, 0));
    const DrawnScene d = draw_scene(c, rng);
    Rng noise_rng(derive_seed(seed, 1));
    const Block b = make_block(c, d.psi, 0, seed, noise_rng);
    const double ny = b.problem.y.norm();
    if (ny == 0.0)
        throw std::runtime_error("observation_residual: zero observation");
    return (b.problem.y - b.problem.phi * b.truth).norm() / ny;
}

OracleComparison oracle_comparison(const ExperimentConfig& cfg, std::uint64_t seed)
{
    const ExperimentConfig c = on_grid(cfg);
    Rng rng(derive_seed(seed, 0));
    const DrawnScene d = draw_scene(c, rng);
    Rng noise_rng(derive_seed(seed, 1));
    std::vector<Block> blocks;
    for (std::size_t k = 0; k < c.frame.phase1_blocks; ++k)
        blocks.push_back(make_block(c, d.psi, k, seed, noise_rng));

    sensing::RecoveryConfig rcfg = c.recovery;
    rcfg.max_blocks = std::min(rcfg.max_blocks, blocks.size());
    const sensing::BlockSource source = [&](std::size_t k) -> std::optional<sensing::SensingProblem> {
        if (k >= blocks.size())
            return std::nullopt;
        return blocks[k].problem;
    };
    OracleComparison out;
    out.asomp = sensing::asomp_sr(source, c.system.antennas, c.system.taps, rcfg).support;
    std::sort(out.asomp.begin(), out.asomp.end());
    out.oracle = sensing::l0_oracle(blocks.front().problem.y, blocks.front().problem.phi, c.scene.paths);
    std::sort(out.oracle.begin(), out.oracle.end());
    out.match = out.asomp == out.oracle;
    return out;
}

double zf_cross_term(const ExperimentConfig& cfg, std::uint64_t seed)
{
    const ExperimentConfig c = on_grid(cfg);
    Rng rng(derive_seed(seed, 0));
    const DrawnScene d = draw_scene(c, rng);
    const auto est = ddam::path_estimates(perfect_psi(d.psi, c.system.antennas, c.sample_period()));
    const auto bf = ddam::zf_beamformers(est, dbm_to_watts(c.power.transmit_power_dbm));
    double worst = 0.0;
    for (std::size_t l = 0; l < est.size(); ++l)
        for (std::size_t q = 0; q < bf.size(); ++q)
            if (l != q)
                worst = std::max(worst, std::abs(est[l].h.dot(bf.f[q])) / (est[l].h.norm() * bf.f[q].norm()));
    return worst;
}

double aligned_receive_deviation(const ExperimentConfig& cfg, std::uint64_t seed, std::size_t symbols)
{
    const ExperimentConfig c = on_grid(cfg);
    Rng rng(derive_seed(seed, 0));
    const DrawnScene d = draw_scene(c, rng);
    const std::size_t m = c.system.antennas;
    const double ts = c.sample_period();
    const auto est = ddam::path_estimates(perfect_psi(d.psi, m, ts));
    const auto bf = ddam::zf_beamformers(est, dbm_to_watts(c.power.transmit_power_dbm));
    const ComplexVector s = ofdm::qam_symbols(symbols, c.ofdm.qam_order, rng);

    // Start deep inside the block so the absolute Doppler phase matters.
    const std::size_t n0 = 12345;
    const std::size_t horizon = symbols + bf.p_max;
    const ComplexMatrix x = ddam::ddam_transmit(s, bf, horizon, ts, n0);
    const channel::PulseShape pulse{channel::PulseKind::TaperedSinc, c.system.pulse_support};
    Rng silent(0);
    const ComplexVector y = channel::apply_channel(x, d.psi, pulse, ts, c.system.taps, 0.0, silent, n0);

    Complex g{0.0, 0.0};
    for (std::size_t l = 0; l < d.psi.size(); ++l) {
        const auto& path = d.psi.paths[l];
        const double taps = std::round(path.delay / ts);
        const ComplexVector steer = channel::steering_vector(normalized_aod(path.aod), m);
        g += path.gain * numerics::phasor(2.0 * kPi * std::fmod(path.doppler * taps * ts, 1.0)) * steer.dot(bf.f[l]);
    }
    double worst = 0.0;
    double peak = 0.0;
    for (std::size_t n = 0; n < horizon && n < static_cast<std::size_t>(y.size()); ++n) {
        const Complex expected = (n >= bf.p_max && n - bf.p_max < symbols)
                                     ? g * s(static_cast<Eigen::Index>(n - bf.p_max))
                                     : Complex{0.0, 0.0};
        worst = std::max(worst, std::abs(y(static_cast<Eigen::Index>(n)) - expected));
        peak = std::max(peak, std::abs(expected));
    }
    return peak > 0.0 ? worst / peak : worst;
}

InvariantTrialCounts path_invariance_check(std::size_t scenes, std::uint64_t seed)
{
    InvariantTrialCounts out;
    for (std::size_t i = 0; i < scenes; ++i) {
        Rng rng(derive_seed(seed, i));
        Scene s;
        const double v_max = uniform(rng, 1.0, 100.0);
        const double ue_angle = uniform(rng, -kPi / 2.0, kPi / 2.0);
        const double ue_range = uniform(rng, 20.0, 300.0);
        s.ue_position = ue_range * Vec2{std::cos(ue_angle), std::sin(ue_angle)};
        const double ue_dir = uniform_phase(rng);
        s.ue_velocity = uniform(rng, 0.0, v_max) * Vec2{std::cos(ue_dir), std::sin(ue_dir)};
        const std::size_t l = 1 + draw_index(rng, 8);
        double r_min = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < l; ++k) {
            Scatterer sc;
            const double ang = uniform(rng, -kPi / 2.0, kPi / 2.0);
            const double r = uniform(rng, 5.0, 200.0);
            sc.position = r * Vec2{std::cos(ang), std::sin(ang)};
            const double dir = uniform_phase(rng);
            sc.velocity = uniform(rng, 0.0, v_max) * Vec2{std::cos(dir), std::sin(dir)};
            s.scatterers.push_back(sc);
            r_min = std::min(r_min, r);
        }
        const double horizon = uniform(rng, 0.0, 0.99) * r_min / v_max;
        const auto bounds = variation_bounds(v_max, r_min, horizon);
        const auto before = derive_path_parameters(s);
        const auto after = derive_path_parameters(propagate_scene(s, horizon));
        bool bad = false;
        for (std::size_t k = 0; k < l; ++k) {
            const double dtau = std::abs(after.paths[k].delay - before.paths[k].delay);
            const double dtheta = std::abs(std::sin(after.paths[k].aod - before.paths[k].aod)) / 2.0;
            // Floating-point slack only; the bounds are otherwise exact.
            bad = bad || dtau > bounds.delta_tau_max * (1.0 + 1e-12) + 1e-18;
            bad = bad || dtheta > bounds.delta_theta_bar_max * (1.0 + 1e-12) + 1e-15;
        }
        ++out.scenes;
        if (bad)
            ++out.violations;
    }
    return out;
}

std::vector<Check> validate(const ExperimentConfig& cfg)
{
    std::vector<Check> checks;
    auto run_check = [&](const std::string& name, auto body) {
        Check c{name, false, ""};
        try {
            body(c);
        } catch (const std::exception& e) {
            c.passed = false;
            c.detail = e.what();
        }
        checks.push_back(std::move(c));
    };
    auto fmt = [](double v) { return format_double(v); };

    run_check("config", [&](Check& c) {
        cfg.validate();
        c.passed = true;
        c.detail = "hash " + std::to_string(cfg.hash());
    });
    run_check("dictionary_unitarity", [&](Check& c) {
        const double e = dictionary_unitarity_error(cfg.system.antennas);
        c.passed = e < 1e-12;
        c.detail = "max |A^H A - I| = " + fmt(e);
    });
    run_check("observation_consistency", [&](Check& c) {
        double worst = 0.0;
        for (std::uint64_t i = 0; i < 10; ++i)
            worst = std::max(worst, observation_residual(cfg, derive_seed(cfg.experiment.seed, i)));
        c.passed = worst < 1e-8;
        c.detail = "max |y - Phi h| / |y| = " + fmt(worst);
    });
    run_check("zf_orthogonality", [&](Check& c) {
        double worst = 0.0;
        for (std::uint64_t i = 0; i < 10; ++i)
            worst = std::max(worst, zf_cross_term(cfg, derive_seed(cfg.experiment.seed, i)));
        c.passed = worst < 1e-10;
        c.detail = "max relative cross term = " + fmt(worst);
    });
    run_check("aligned_receive", [&](Check& c) {
        double worst = 0.0;
        for (std::uint64_t i = 0; i < 5; ++i)
            worst = std::max(worst, aligned_receive_deviation(cfg, derive_seed(cfg.experiment.seed, i)));
        c.passed = worst < 1e-9;
        c.detail = "max relative sample deviation = " + fmt(worst);
    });
    run_check("path_invariance_bounds", [&](Check& c) {
        const auto r = path_invariance_check(1000, cfg.experiment.seed);
        c.passed = r.violations == 0;
        c.detail = std::to_string(r.violations) + " violations in " + std::to_string(r.scenes) + " scenes";
    });
    return checks;
}

Table check_table(const std::vector<Check>& checks)
{
    Table t;
    t.columns = {"check", "status", "detail"};
    for (const auto& c : checks)
        t.rows.push_back({c.name, std::string(c.passed ? "PASS" : "FAIL"), c.detail});
    return t;
}

const char* version() { return DTISAC_VERSION; }

std::string manifest_json(const ExperimentConfig& cfg, const ManifestInfo& info)
{
    char hash[17];
    std::snprintf(hash, sizeof(hash), "%016llx", static_cast<unsigned long long>(cfg.hash()));
    nlohmann::ordered_json j;
    j["config_hash"] = std::string("fnv1a64:") + hash;
    j["seed"] = cfg.experiment.seed;
    j["versions"] = {
        {"dtisac", version()},
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                      std::to_string(EIGEN_MINOR_VERSION)},
        {"compiler", __VERSION__},
    };
    j["wall_time_s"] = info.wall_time;
    j["command"] = info.command;
    j["workers"] = info.workers;
    j["trials"] = cfg.experiment.trials;
    return j.dump(2);
}

}  // namespace dtisac::harness
