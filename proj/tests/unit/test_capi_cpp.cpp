// The C API exercised from C++: status codes, handles and strings.
#include <doctest.h>

#include <cmath>
#include <string>

#include "dtisac/dtisac.h"

namespace {

std::string take(char* s)
{
    std::string out = s != nullptr ? s : "";
    dtisac_string_free(s);
    return out;
}

}  // namespace

TEST_CASE("config handles")
{
    dtisac_config* cfg = nullptr;
    REQUIRE(dtisac_config_default(&cfg) == DTISAC_OK);
    CHECK(dtisac_config_set(cfg, "system.antennas", "8") == DTISAC_OK);
    char* v = nullptr;
    REQUIRE(dtisac_config_get(cfg, "system.antennas", &v) == DTISAC_OK);
    CHECK(take(v) == "8");
    CHECK(dtisac_config_set(cfg, "system.wings", "2") == DTISAC_ERR_CONFIG);
    CHECK(std::string(dtisac_last_error()).find("system.wings") != std::string::npos);
    CHECK(dtisac_config_get(cfg, "system.wings", &v) == DTISAC_ERR_NOT_FOUND);
    CHECK(dtisac_config_validate(cfg) == DTISAC_OK);
    CHECK(dtisac_config_set(cfg, "frame.phase1_blocks", "60") == DTISAC_OK);
    CHECK(dtisac_config_validate(cfg) == DTISAC_ERR_INVALID);
    CHECK(dtisac_config_hash(cfg) != 0);
    CHECK(dtisac_config_hash(nullptr) == 0);
    char* canon = nullptr;
    REQUIRE(dtisac_config_canonical(cfg, &canon) == DTISAC_OK);
    CHECK(take(canon).find("system.antennas = 8") != std::string::npos);
    dtisac_config_free(cfg);

    CHECK(dtisac_config_default(nullptr) == DTISAC_ERR_NULL);
    CHECK(dtisac_config_load_file("/nonexistent.yaml", &cfg) == DTISAC_ERR_IO);
    CHECK(cfg == nullptr);
    CHECK(dtisac_config_load_string("system:\n  bogus: 1\n", &cfg) == DTISAC_ERR_CONFIG);
    REQUIRE(dtisac_config_load_string("system:\n  antennas: 4\n", &cfg) == DTISAC_OK);
    dtisac_config_free(cfg);
    dtisac_config_free(nullptr);
    CHECK(std::string(dtisac_status_name(DTISAC_ERR_IO)) == "io error");
}

TEST_CASE("validate through the C API")
{
    dtisac_config* cfg = nullptr;
    REQUIRE(dtisac_config_load_string(R"(
system: {antennas: 8, taps: 8, pulse_support: 4}
scene: {paths: 2, rs_max: 20}
frame: {pilot_length: 16, samples_per_block: 512, phase1_blocks: 4, blocks: 20}
ofdm: {subcarriers: 64}
)", &cfg) == DTISAC_OK);
    dtisac_result* r = nullptr;
    int ok = 0;
    REQUIRE(dtisac_validate(cfg, &r, &ok) == DTISAC_OK);
    CHECK(ok == 1);
    REQUIRE(dtisac_result_table_count(r) == 1);
    CHECK(std::string(dtisac_result_table_name(r, 0)) == "checks");
    CHECK(dtisac_result_table_name(r, 1) == nullptr);
    char* csv = nullptr;
    REQUIRE(dtisac_result_to_csv(r, "checks", &csv) == DTISAC_OK);
    CHECK(take(csv).rfind("check,status,detail", 0) == 0);
    CHECK(dtisac_result_to_csv(r, "nope", &csv) == DTISAC_ERR_NOT_FOUND);
    char* json = nullptr;
    REQUIRE(dtisac_result_to_json(r, &json) == DTISAC_OK);
    CHECK(take(json).find("\"checks\"") != std::string::npos);
    char* manifest = nullptr;
    REQUIRE(dtisac_result_manifest(r, &manifest) == DTISAC_OK);
    CHECK(take(manifest).find("config_hash") != std::string::npos);
    CHECK(dtisac_result_wall_time(r) >= 0.0);
    dtisac_result_free(r);

    CHECK(dtisac_sweep(cfg, nullptr, nullptr, 0, &r) == DTISAC_ERR_INVALID);
    CHECK(r == nullptr);
    dtisac_config_free(cfg);
}

TEST_CASE("scalar helpers")
{
    CHECK(dtisac_coherence_time(4000.0, 1, 0.5) > 0.0);
    CHECK(std::isnan(dtisac_coherence_time(4000.0, 7, 1.0)));
    CHECK(std::isnan(dtisac_path_invariant_time(-1.0, 1e8, 32, 10.0)));
    CHECK(dtisac_path_invariant_time(20.0, 1e8, 32, 10.0) > 0.0);
    CHECK(dtisac_worker_count() >= 1);
    CHECK(std::string(dtisac_version()).size() > 0);
}
