#include "dtisac/sensing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "dtisac/random.hpp"

namespace dtisac::sensing {

namespace {

double power(const ComplexVector& v) { return v.squaredNorm(); }

ComplexMatrix select_columns(const ComplexMatrix& phi, const std::vector<std::size_t>& cols)
{
    ComplexMatrix out(phi.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j)
        out.col(static_cast<Eigen::Index>(j)) = phi.col(static_cast<Eigen::Index>(cols[j]));
    return out;
}

ComplexVector scatter(const std::vector<std::size_t>& cols, const ComplexVector& coeffs,
                      Eigen::Index length)
{
    ComplexVector out = ComplexVector::Zero(length);
    for (std::size_t j = 0; j < cols.size(); ++j)
        out(static_cast<Eigen::Index>(cols[j])) = coeffs(static_cast<Eigen::Index>(j));
    return out;
}

struct PursuitLimits {
    double eps_th = 0.05;
    bool use_eps = true;
    std::size_t max_selected = 0;
    double pinv_tol = 1e-10;
};

// Greedy pursuit shared by OMP (one problem) and SOMP (several problems with
// a common support).
JointEstimate pursue(const std::vector<SensingProblem>& problems, const PursuitLimits& lim)
{
    JointEstimate out;
    if (problems.empty())
        throw std::invalid_argument("somp: no sensing problems");

    const Eigen::Index rows = problems.front().phi.rows();
    const Eigen::Index cols = problems.front().phi.cols();
    if (cols == 0)
        throw std::invalid_argument("somp: sensing matrix has no columns");
    for (const auto& pr : problems) {
        if (pr.phi.rows() != rows || pr.phi.cols() != cols)
            throw std::invalid_argument("somp: sensing matrices differ in shape");
        if (pr.y.size() != rows)
            throw std::invalid_argument("somp: observation length mismatch");
    }

    std::vector<ComplexVector> residual;
    std::vector<ComplexVector> coeffs(problems.size());
    double initial = 0.0;
    for (const auto& pr : problems) {
        residual.push_back(pr.y);
        initial += power(pr.y);
    }
    out.estimates.assign(problems.size(), ComplexVector::Zero(cols));
    if (initial == 0.0)
        return out;

    std::vector<bool> taken(static_cast<std::size_t>(cols), false);
    const std::size_t hard_cap = std::min<std::size_t>(static_cast<std::size_t>(rows),
                                                       static_cast<std::size_t>(cols));
    const std::size_t cap = lim.max_selected > 0 ? std::min(lim.max_selected, hard_cap) : hard_cap;

    while (out.support.size() < cap) {
        RealVector score = RealVector::Zero(cols);
        for (std::size_t k = 0; k < problems.size(); ++k)
            score += (problems[k].phi.adjoint() * residual[k]).cwiseAbs();

        Eigen::Index best = -1;
        double best_score = 0.0;
        for (Eigen::Index g = 0; g < cols; ++g) {
            if (taken[static_cast<std::size_t>(g)])
                continue;
            if (best < 0 || score(g) > best_score) {
                best = g;
                best_score = score(g);
            }
        }
        if (best < 0 || !(best_score > 0.0))
            break;

        taken[static_cast<std::size_t>(best)] = true;
        out.support.push_back(static_cast<std::size_t>(best));

        double diff = 0.0;
        double remaining = 0.0;
        for (std::size_t k = 0; k < problems.size(); ++k) {
            const ComplexMatrix sub = select_columns(problems[k].phi, out.support);
            std::size_t rank = 0;
            coeffs[k] = numerics::pseudo_inverse(sub, lim.pinv_tol, &rank) * problems[k].y;
            if (rank < out.support.size())
                out.rank_deficient = true;
            const ComplexVector next = problems[k].y - sub * coeffs[k];
            diff += (residual[k] - next).squaredNorm();
            remaining += power(next);
            residual[k] = next;
        }
        out.residual_history.push_back(remaining);

        if (remaining <= 1e-20 * initial)
            break;
        if (lim.use_eps && diff / remaining <= lim.eps_th)
            break;
    }

    for (std::size_t k = 0; k < problems.size(); ++k)
        if (!out.support.empty())
            out.estimates[k] = scatter(out.support, coeffs[k], cols);
    return out;
}

// Binomial coefficient, saturating at `limit + 1`.
double bounded_binomial(std::size_t n, std::size_t k, double limit)
{
    if (k > n)
        return 0.0;
    k = std::min(k, n - k);
    double c = 1.0;
    for (std::size_t i = 1; i <= k; ++i) {
        c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
        if (c > limit)
            return limit + 1.0;
    }
    return std::round(c);
}

}  // namespace

void RecoveryConfig::validate() const
{
    if (!(eps_th > 0.0))
        throw std::invalid_argument("recovery: eps_th must be positive");
    if (v_r < 2 || v_r % 2 != 0 || v_p < 2 || v_p % 2 != 0)
        throw std::invalid_argument("recovery: V_r and V_p must be even and >= 2");
    if (max_blocks == 0)
        throw std::invalid_argument("recovery: max_blocks must be >= 1");
    if (iteration_cap() == 0)
        throw std::invalid_argument("recovery: iteration cap must be >= 1");
    if (!(sr_tolerance >= 0.0))
        throw std::invalid_argument("recovery: sr_tolerance must be non-negative");
    if (!(pinv_tol > 0.0))
        throw std::invalid_argument("recovery: pinv_tol must be positive");
}

PilotBlock generate_pilots(std::size_t length, std::size_t antennas, double power,
                           std::uint64_t seed, std::size_t block)
{
    if (length == 0 || antennas == 0)
        throw std::invalid_argument("generate_pilots: length and antennas must be >= 1");
    if (!(power > 0.0))
        throw std::invalid_argument("generate_pilots: power must be positive");

    PilotBlock pb;
    pb.block = block;
    pb.power = power;
    pb.samples.resize(static_cast<Eigen::Index>(antennas), static_cast<Eigen::Index>(length));
    Rng rng(seed);
    const double amp = std::sqrt(power / static_cast<double>(antennas));
    for (Eigen::Index n = 0; n < pb.samples.cols(); ++n)
        for (Eigen::Index m = 0; m < pb.samples.rows(); ++m)
            pb.samples(m, n) = std::polar(amp, uniform_phase(rng));
    return pb;
}

ComplexVector build_observation(const ComplexVector& rx, std::size_t pilot_length, std::size_t taps)
{
    const auto expected = static_cast<Eigen::Index>(pilot_length + taps - 1);
    if (rx.size() != expected)
        throw std::invalid_argument("build_observation: expected N_p + P - 1 samples");
    return rx.conjugate();
}

ComplexMatrix build_sensing_matrix(const PilotBlock& pilots, std::size_t taps)
{
    if (taps == 0)
        throw std::invalid_argument("build_sensing_matrix: taps must be >= 1");
    const auto m = static_cast<Eigen::Index>(pilots.antennas());
    const auto np = static_cast<Eigen::Index>(pilots.length());
    const auto p_count = static_cast<Eigen::Index>(taps);

    // Row n of G is p[n]^H A; lag p shifts G down by p rows.
    const ComplexMatrix g = pilots.samples.adjoint() * numerics::dft_matrix(pilots.antennas());
    ComplexMatrix phi = ComplexMatrix::Zero(np + p_count - 1, m * p_count);
    for (Eigen::Index p = 0; p < p_count; ++p)
        phi.block(p, p * m, np, m) = g;
    return phi;
}

SparseEstimate omp(const ComplexVector& y, const ComplexMatrix& phi, const OmpOptions& options)
{
    PursuitLimits lim;
    lim.eps_th = options.eps_th;
    lim.use_eps = options.max_paths == 0;
    lim.max_selected = options.max_paths > 0 ? options.max_paths : options.max_iterations;
    lim.pinv_tol = options.pinv_tol;

    const JointEstimate joint = pursue({SensingProblem{y, phi}}, lim);
    SparseEstimate out;
    out.support = joint.support;
    out.coefficients = joint.estimates.front();
    out.residual_history = joint.residual_history;
    return out;
}

JointEstimate somp_joint(const std::vector<SensingProblem>& problems, const RecoveryConfig& cfg)
{
    PursuitLimits lim;
    lim.eps_th = cfg.eps_th;
    lim.max_selected = cfg.iteration_cap();
    lim.pinv_tol = cfg.pinv_tol;
    return pursue(problems, lim);
}

std::vector<std::size_t> neighbourhood(std::size_t center, std::size_t width, std::size_t modulus)
{
    if (modulus == 0)
        throw std::invalid_argument("neighbourhood: modulus must be >= 1");
    std::vector<std::size_t> out;
    const long lo = static_cast<long>(center) - static_cast<long>(width / 2);
    const auto mod = static_cast<long>(modulus);
    for (std::size_t i = 0; i < width; ++i) {
        const long v = ((lo + static_cast<long>(i)) % mod + mod) % mod;
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

SupportRefinement support_refine(const std::vector<ComplexVector>& estimates, std::size_t antennas,
                                 std::size_t taps, const RecoveryConfig& cfg)
{
    SupportRefinement out;
    const auto length = static_cast<Eigen::Index>(antennas * taps);
    for (const auto& e : estimates)
        if (e.size() != length)
            throw std::invalid_argument("support_refine: estimate length != M P");

    out.refined.assign(estimates.size(), ComplexVector::Zero(length));
    double total = 0.0;
    for (const auto& e : estimates)
        total += power(e);
    if (estimates.empty() || total == 0.0)
        return out;

    ComplexVector target = estimates.front();
    std::vector<bool> in_union(static_cast<std::size_t>(length), false);
    const std::size_t cap = (antennas * taps + cfg.v_r * cfg.v_p - 1) / (cfg.v_r * cfg.v_p);
    double xi_prev = 0.0;

    while (out.iterations < cap) {
        Eigen::Index g = 0;
        const double peak = target.cwiseAbs().maxCoeff(&g);
        if (!(peak > 0.0))
            break;
        ++out.iterations;

        const std::size_t p_hat = static_cast<std::size_t>(g) / antennas;
        const std::size_t r_hat = static_cast<std::size_t>(g) - p_hat * antennas;
        // Bins claimed by an earlier path stay with that path.
        std::vector<std::size_t> cluster;
        for (std::size_t p : neighbourhood(p_hat, cfg.v_p, taps))
            for (std::size_t r : neighbourhood(r_hat, cfg.v_r, antennas))
                if (!in_union[p * antennas + r])
                    cluster.push_back(p * antennas + r);
        std::sort(cluster.begin(), cluster.end());
        cluster.erase(std::unique(cluster.begin(), cluster.end()), cluster.end());

        std::vector<bool> candidate = in_union;
        for (std::size_t idx : cluster)
            candidate[idx] = true;
        double kept = 0.0;
        for (const auto& e : estimates)
            for (Eigen::Index i = 0; i < length; ++i)
                if (candidate[static_cast<std::size_t>(i)])
                    kept += std::norm(e(i));
        const double xi = kept / total;

        if (out.path_count() > 0 && xi - xi_prev < cfg.sr_tolerance)
            break;

        in_union = std::move(candidate);
        xi_prev = xi;
        out.power_ratio_history.push_back(xi);
        out.peaks.emplace_back(r_hat, p_hat);
        for (std::size_t idx : cluster)
            target(static_cast<Eigen::Index>(idx)) = 0.0;
        out.path_supports.push_back(std::move(cluster));
    }

    for (Eigen::Index i = 0; i < length; ++i)
        if (in_union[static_cast<std::size_t>(i)])
            out.union_support.push_back(static_cast<std::size_t>(i));
    for (std::size_t k = 0; k < estimates.size(); ++k)
        for (std::size_t idx : out.union_support)
            out.refined[k](static_cast<Eigen::Index>(idx)) = estimates[k](static_cast<Eigen::Index>(idx));
    return out;
}

RecoveryResult asomp_sr(const BlockSource& source, std::size_t antennas, std::size_t taps,
                        const RecoveryConfig& cfg, const PhaseOneHook& hook)
{
    cfg.validate();
    if (!source)
        throw std::invalid_argument("asomp_sr: empty block source");

    std::vector<SensingProblem> problems;
    RecoveryResult best;
    bool have_best = false;
    double best_vartheta = std::numeric_limits<double>::infinity();
    RecoveryDiagnostics diag;
    std::vector<ComplexVector> previous;
    double vartheta_prev = std::numeric_limits<double>::infinity();

    for (std::size_t u = 1; u <= cfg.max_blocks; ++u) {
        while (problems.size() < u) {
            auto next = source(problems.size());
            if (!next)
                break;
            problems.push_back(std::move(*next));
        }
        if (problems.size() < u) {
            diag.stream_exhausted = true;
            break;
        }

        JointEstimate joint = somp_joint(problems, cfg);
        SupportRefinement sr = support_refine(joint.estimates, antennas, taps, cfg);

        bool refit = false;
        if (cfg.refit && !joint.support.empty()) {
            // Least squares over the selected columns that survive refinement;
            // the full refined support can exceed the observation length.
            std::vector<bool> in_union(antennas * taps, false);
            for (std::size_t idx : sr.union_support)
                in_union[idx] = true;
            std::vector<std::size_t> cols;
            for (std::size_t idx : joint.support)
                if (in_union[idx])
                    cols.push_back(idx);
            std::sort(cols.begin(), cols.end());
            for (std::size_t k = 0; k < problems.size(); ++k) {
                if (cols.empty()) {
                    sr.refined[k].setZero();
                    continue;
                }
                const ComplexMatrix sub = select_columns(problems[k].phi, cols);
                const ComplexVector c = numerics::pseudo_inverse(sub, cfg.pinv_tol) * problems[k].y;
                sr.refined[k] = scatter(cols, c, sr.refined[k].size());
            }
            refit = true;
        }

        if (hook)
            hook(PhaseOneStep{u, problems.size(), joint, sr});

        double vartheta = std::numeric_limits<double>::infinity();
        if (u >= 2) {
            double num = 0.0;
            double den = 0.0;
            for (std::size_t k = 0; k + 1 < u; ++k) {
                num += (joint.estimates[k] - previous[k]).squaredNorm();
                den += power(joint.estimates[k]);
            }
            vartheta = den > 0.0 ? num / den : (num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        }
        ++diag.steps;
        diag.vartheta.push_back(vartheta);
        diag.residual_history.push_back(joint.residual_history);
        diag.rank_deficient = diag.rank_deficient || joint.rank_deficient;

        // Non-adaptive runs keep the last step; adaptive runs keep the
        // smallest recovery difference.
        if (!have_best || !cfg.adaptive || vartheta < best_vartheta) {
            best.support = joint.support;
            best.estimates = joint.estimates;
            best.refinement = sr;
            best.diagnostics.blocks_used = problems.size();
            best.diagnostics.refit_applied = refit;
            best_vartheta = vartheta;
            have_best = true;
        }

        previous = std::move(joint.estimates);
        if (cfg.adaptive && u >= 2) {
            if (vartheta <= cfg.vartheta_floor)
                break;
            if (vartheta >= vartheta_prev * (1.0 - cfg.outer_rel_tol))
                break;
        }
        vartheta_prev = vartheta;
    }

    if (!have_best)
        throw std::runtime_error("asomp_sr: block source produced no blocks");
    const std::size_t used = best.diagnostics.blocks_used;
    const bool refit = best.diagnostics.refit_applied;
    best.diagnostics = std::move(diag);
    best.diagnostics.blocks_used = used;
    best.diagnostics.refit_applied = refit;
    return best;
}

std::vector<std::size_t> l0_oracle(const ComplexVector& y, const ComplexMatrix& phi, std::size_t sparsity)
{
    const auto n = static_cast<std::size_t>(phi.cols());
    if (y.size() != phi.rows())
        throw std::invalid_argument("l0_oracle: observation length mismatch");
    if (sparsity == 0 || sparsity > n)
        throw std::invalid_argument("l0_oracle: sparsity must be in [1, columns]");
    if (bounded_binomial(n, sparsity, 1e6) > 1e6)
        throw std::length_error("l0_oracle: combinatorial budget of 1e6 supports exceeded");

    std::vector<std::size_t> current(sparsity);
    std::iota(current.begin(), current.end(), 0);
    std::vector<std::size_t> best = current;
    double best_res = std::numeric_limits<double>::infinity();
    const double slack = 1e-12 * power(y);

    while (true) {
        const double res = support_residual(y, phi, current);
        if (res < best_res - slack) {
            best_res = res;
            best = current;
        }
        // Next combination in lexicographic order.
        std::size_t i = sparsity;
        while (i > 0 && current[i - 1] == n - sparsity + (i - 1))
            --i;
        if (i == 0)
            break;
        ++current[i - 1];
        for (std::size_t j = i; j < sparsity; ++j)
            current[j] = current[j - 1] + 1;
    }
    return best;
}

double support_residual(const ComplexVector& y, const ComplexMatrix& phi,
                        const std::vector<std::size_t>& support, double pinv_tol)
{
    if (support.empty())
        return power(y);
    const ComplexMatrix sub = select_columns(phi, support);
    const ComplexVector c = numerics::pseudo_inverse(sub, pinv_tol) * y;
    return power(y - sub * c);
}

double nmse(const std::vector<ComplexVector>& estimates, const std::vector<ComplexVector>& truths)
{
    if (estimates.size() != truths.size() || estimates.empty())
        throw std::invalid_argument("nmse: block counts differ or are zero");
    double acc = 0.0;
    for (std::size_t k = 0; k < truths.size(); ++k) {
        if (estimates[k].size() != truths[k].size())
            throw std::invalid_argument("nmse: vector lengths differ");
        const double t = power(truths[k]);
        if (t == 0.0)
            throw std::invalid_argument("nmse: zero-norm truth block");
        acc += (estimates[k] - truths[k]).squaredNorm() / t;
    }
    return acc / static_cast<double>(truths.size());
}

RecoveryResult extend_recovery(const RecoveryResult& result, const std::vector<SensingProblem>& problems,
                               const RecoveryConfig& cfg)
{
    RecoveryResult out = result;
    const auto& sr = result.refinement;
    const Eigen::Index length = result.estimates.empty() ? 0 : result.estimates.front().size();
    if (length == 0)
        return out;

    std::vector<std::size_t> support = result.support;
    std::sort(support.begin(), support.end());
    std::vector<bool> in_union(static_cast<std::size_t>(length), false);
    for (std::size_t idx : sr.union_support)
        in_union[idx] = true;
    std::vector<std::size_t> kept;
    for (std::size_t idx : support)
        if (in_union[idx])
            kept.push_back(idx);

    out.estimates.clear();
    out.refinement.refined.clear();
    for (const auto& prob : problems) {
        if (prob.phi.cols() != length)
            throw std::invalid_argument("extend_recovery: sensing matrix width != M P");
        ComplexVector full = ComplexVector::Zero(length);
        if (!support.empty())
            full = scatter(support, numerics::pseudo_inverse(select_columns(prob.phi, support), cfg.pinv_tol) * prob.y,
                           static_cast<std::size_t>(length));
        ComplexVector refined = ComplexVector::Zero(length);
        if (result.diagnostics.refit_applied) {
            if (!kept.empty())
                refined = scatter(kept, numerics::pseudo_inverse(select_columns(prob.phi, kept), cfg.pinv_tol) * prob.y,
                                  static_cast<std::size_t>(length));
        } else {
            for (std::size_t idx : sr.union_support)
                refined(static_cast<Eigen::Index>(idx)) = full(static_cast<Eigen::Index>(idx));
        }
        out.estimates.push_back(std::move(full));
        out.refinement.refined.push_back(std::move(refined));
    }
    out.diagnostics.blocks_used = problems.size();
    return out;
}

}  // namespace dtisac::sensing
