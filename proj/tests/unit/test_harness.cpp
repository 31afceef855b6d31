#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include <json.hpp>

#include "dtisac/harness.hpp"

using namespace dtisac;
namespace h = dtisac::harness;

namespace {

ExperimentConfig small()
{
    ExperimentConfig cfg;
    cfg.set("system.antennas", "8");
    cfg.set("system.taps", "8");
    cfg.set("system.pulse_support", "4");
    cfg.set("scene.paths", "2");
    cfg.set("scene.rs_max", "20");
    cfg.set("frame.pilot_length", "16");
    cfg.set("frame.samples_per_block", "512");
    cfg.set("frame.phase1_blocks", "4");
    cfg.set("frame.blocks", "20");
    cfg.set("ofdm.subcarriers", "64");
    cfg.set("experiment.trials", "3");
    cfg.set("papr.blocks", "50");
    return cfg;
}

}  // namespace

TEST_CASE("trials are deterministic and independent of the pool width")
{
    const auto cfg = small();
    setenv(h::kWorkersEnv, "1", 1);
    CHECK(h::worker_count() == 1);
    const auto a = h::run(cfg);
    setenv(h::kWorkersEnv, "3", 1);
    CHECK(h::worker_count() == 3);
    const auto b = h::run(cfg);
    unsetenv(h::kWorkersEnv);
    CHECK(h::worker_count() >= 1);
    CHECK(a.trials.to_csv() == b.trials.to_csv());
    CHECK(a.summary.to_csv() == b.summary.to_csv());
    CHECK(a.trials.rows.size() == 3);
    CHECK(a.summary.rows.size() == 1);

    // A trial depends only on its own index.
    const auto t1 = h::run_trial(cfg, 1);
    CHECK(t1.seed == derive_seed(cfg.experiment.seed, 1));
    CHECK(std::get<std::string>(a.trials.rows[1][a.trials.column("seed")]) == std::to_string(t1.seed));
    CHECK(t1.error.empty());
    CHECK(t1.paths == 2);
}

TEST_CASE("bad pool width falls back")
{
    setenv(h::kWorkersEnv, "zero", 1);
    CHECK(h::worker_count() >= 1);
    setenv(h::kWorkersEnv, "0", 1);
    CHECK(h::worker_count() >= 1);
    unsetenv(h::kWorkersEnv);
}

TEST_CASE("scene draws respect the configured ranges")
{
    auto cfg = small();
    cfg.set("scene.paths", "4");
    Rng rng(7);
    for (int i = 0; i < 20; ++i) {
        const auto d = h::draw_scene(cfg, rng);
        REQUIRE(d.psi.size() == 4);
        double first = 1e9;
        for (const auto& p : d.psi.paths) {
            CHECK(std::abs(p.aod) <= 60.0 * kPi / 180.0 + 1e-9);
            CHECK(p.delay / cfg.sample_period() <= cfg.system.taps - 1 + 1e-9);
            first = std::min(first, p.delay);
        }
        CHECK(first == doctest::Approx(0.0).epsilon(1e-9));
    }
}

TEST_CASE("sweep axes")
{
    const auto cfg = small();
    CHECK(h::apply_axis(cfg, "M", 16).system.antennas == 16);
    CHECK(h::apply_axis(cfg, "J", 6).frame.phase1_blocks == 6);
    CHECK(h::apply_axis(cfg, "N_p", 24).frame.pilot_length == 24);
    CHECK(h::apply_axis(cfg, "L", 3).scene.paths == 3);
    CHECK(h::apply_axis(cfg, "snr", 7).power.snr_db == 7.0);
    CHECK(h::apply_axis(cfg, "transmit_power", 20).power.transmit_power_dbm == 20.0);
    CHECK_THROWS_AS(h::apply_axis(cfg, "height", 1), std::invalid_argument);

    auto one = cfg;
    one.set("experiment.trials", "2");
    const auto out = h::sweep(one, "snr", {0.0, 10.0});
    CHECK(out.trials.rows.size() == 4);
    CHECK(out.summary.rows.size() == 2);
    CHECK(std::get<std::string>(out.summary.rows[0][out.summary.column("axis")]) == "snr");
    CHECK(out.summary.number(1, "value") == 10.0);
}

TEST_CASE("validate suite passes on a small config and reports bad configs")
{
    const auto checks = h::validate(small());
    REQUIRE_FALSE(checks.empty());
    for (const auto& c : checks)
        CHECK_MESSAGE(c.passed, c.name << ": " << c.detail);

    ExperimentConfig bad = small();
    bad.set("frame.phase1_blocks", "20");
    const auto failed = h::validate(bad);
    REQUIRE_FALSE(failed.empty());
    CHECK_FALSE(failed[0].passed);
    CHECK(h::check_table(failed).rows.size() == failed.size());
}

TEST_CASE("invariant helpers")
{
    const auto cfg = small();
    CHECK(h::dictionary_unitarity_error(16) < 1e-12);
    CHECK(h::observation_residual(cfg, 3) < 1e-10);
    CHECK(h::zf_cross_term(cfg, 3) < 1e-10);
    CHECK(h::aligned_receive_deviation(cfg, 3) < 1e-10);
    const auto inv = h::path_invariance_check(200, 5);
    CHECK(inv.scenes == 200);
    CHECK(inv.violations == 0);
}

TEST_CASE("PAPR experiment tables")
{
    auto cfg = small();
    cfg.set("papr.paths", "[2, 4]");
    const auto out = h::papr_experiment(cfg);
    CHECK(out.ccdf.columns.size() == 4);
    CHECK(out.summary.rows.size() == 3);
    CHECK(out.ccdf.number(0, out.ccdf.columns[1]) <= 1.0);
    const auto s = h::ddam_papr_samples(cfg, 2, 20, 1);
    CHECK(s.size() == 20);
    for (double v : s)
        CHECK(v >= 1.0);
}

TEST_CASE("manifest")
{
    const auto cfg = small();
    h::ManifestInfo info;
    info.command = "run";
    info.wall_time = 1.5;
    const auto j = nlohmann::json::parse(h::manifest_json(cfg, info));
    CHECK(j["seed"] == cfg.experiment.seed);
    CHECK(j["wall_time_s"] == 1.5);
    CHECK(j["versions"].contains("dtisac"));
    CHECK(j["versions"].contains("eigen"));
    CHECK(j["config_hash"].get<std::string>().size() == std::string("fnv1a64:").size() + 16);
}
