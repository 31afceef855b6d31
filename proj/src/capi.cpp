#include "dtisac/dtisac.h"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <memory>
#include <new>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dtisac/config.hpp"
#include "dtisac/harness.hpp"

struct dtisac_config {
    dtisac::ExperimentConfig cfg;
};

struct dtisac_result {
    dtisac::ExperimentConfig cfg;
    std::string command;
    double wall_time = 0.0;
    std::vector<std::pair<std::string, dtisac::Table>> tables;
};

namespace {

thread_local std::string last_error;

dtisac_status fail(dtisac_status s, const std::string& msg)
{
    last_error = msg;
    return s;
}

char* dup(const std::string& s)
{
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out == nullptr)
        throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

// Runs body and maps exceptions onto status codes.
template <typename Fn>
dtisac_status guarded(Fn body)
{
    try {
        last_error.clear();
        return body();
    } catch (const dtisac::ConfigError& e) {
        return fail(DTISAC_ERR_CONFIG, e.what());
    } catch (const std::invalid_argument& e) {
        return fail(DTISAC_ERR_INVALID, e.what());
    } catch (const std::out_of_range& e) {
        return fail(DTISAC_ERR_INVALID, e.what());
    } catch (const std::exception& e) {
        return fail(DTISAC_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(DTISAC_ERR_INTERNAL, "unknown error");
    }
}

template <typename Fn>
dtisac_status timed_result(const dtisac_config* cfg, const char* command, dtisac_result** out, Fn body)
{
    if (cfg == nullptr || out == nullptr)
        return fail(DTISAC_ERR_NULL, "null argument");
    *out = nullptr;
    return guarded([&] {
        auto r = std::make_unique<dtisac_result>();
        r->cfg = cfg->cfg;
        r->command = command;
        const auto start = std::chrono::steady_clock::now();
        body(*r);
        r->wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        *out = r.release();
        return DTISAC_OK;
    });
}

}  // namespace

extern "C" {

const char* dtisac_last_error(void) { return last_error.c_str(); }

const char* dtisac_version(void) { return dtisac::harness::version(); }

const char* dtisac_status_name(dtisac_status status)
{
    switch (status) {
    case DTISAC_OK: return "ok";
    case DTISAC_ERR_NULL: return "null argument";
    case DTISAC_ERR_CONFIG: return "config error";
    case DTISAC_ERR_INVALID: return "invalid";
    case DTISAC_ERR_IO: return "io error";
    case DTISAC_ERR_NOT_FOUND: return "not found";
    case DTISAC_ERR_INTERNAL: return "internal error";
    }
    return "unknown";
}

dtisac_status dtisac_config_default(dtisac_config** out)
{
    if (out == nullptr)
        return fail(DTISAC_ERR_NULL, "null argument");
    return guarded([&] {
        *out = new dtisac_config{};
        return DTISAC_OK;
    });
}

dtisac_status dtisac_config_load_file(const char* path, dtisac_config** out)
{
    if (path == nullptr || out == nullptr)
        return fail(DTISAC_ERR_NULL, "null argument");
    *out = nullptr;
    return guarded([&] {
        dtisac::ExperimentConfig cfg;
        try {
            cfg = dtisac::load_config_file(path);
        } catch (const dtisac::ConfigError& e) {
            const std::string msg = e.what();
            if (msg.rfind("cannot open", 0) == 0)
                return fail(DTISAC_ERR_IO, msg);
            throw;
        }
        *out = new dtisac_config{std::move(cfg)};
        return DTISAC_OK;
    });
}

dtisac_status dtisac_config_load_string(const char* text, dtisac_config** out)
{
    if (text == nullptr || out == nullptr)
        return fail(DTISAC_ERR_NULL, "null argument");
    *out = nullptr;
    return guarded([&] {
        *out = new dtisac_config{dtisac::load_config_string(text)};
        return DTISAC_OK;
    });
}

dtisac_status dtisac_config_set(dtisac_config* cfg, const char* key, const char* value)
{
    if (cfg == nullptr || key == nullptr || value == nullptr)
        return fail(DTISAC_ERR_NULL, "null argument");
    return guarded([&] {
        cfg->cfg.set(key, value);
        return DTISAC_OK;
    });
}

dtisac_status dtisac_config_get(const dtisac_config* cfg, const char* key, char** value)
{
    if (cfg == nullptr || key == nullptr || value == nullptr)
        return fail(DTISAC_ERR_NULL, "null argument");
    return guarded([&] {
        try {
            *value = dup(cfg->cfg.get(key));
        } catch (const dtisac::ConfigError& e) {
            return fail(DTISAC_ERR_NOT_FOUND, e.what());
        }
        return DTISAC_OK;
    });
}

dtisac_status dtisac_config_canonical(const dtisac_config* cfg, char** out)
{
    if (cfg == nullptr || out == nullptr)
        return fail(DTISAC_ERR_NULL, "null argument");
    return guarded([&] {
        *out = dup(cfg->cfg.canonical());
        return DTISAC_OK;
    });
}

dtisac_status dtisac_config_validate(const dtisac_config* cfg)
{
    if (cfg == nullptr)
        return fail(DTISAC_ERR_NULL, "null argument");
    return guarded([&] {
        cfg->cfg.validate();
        return DTISAC_OK;
    });
}

uint64_t dtisac_config_hash(const dtisac_config* cfg) { return cfg != nullptr ? cfg->cfg.hash() : 0; }

void dtisac_config_free(dtisac_config* cfg) { delete cfg; }

dtisac_status dtisac_run(const dtisac_config* cfg, dtisac_result** out)
{
    return timed_result(cfg, "run", out, [](dtisac_result& r) {
        auto o = dtisac::harness::run(r.cfg);
        r.tables.emplace_back("trials", std::move(o.trials));
        r.tables.emplace_back("summary", std::move(o.summary));
    });
}

dtisac_status dtisac_sweep(const dtisac_config* cfg, const char* axis, const double* values, size_t count,
                           dtisac_result** out)
{
    return timed_result(cfg, "sweep", out, [&](dtisac_result& r) {
        if (axis != nullptr)
            r.cfg.sweep.axis = axis;
        if (values != nullptr)
            r.cfg.sweep.values.assign(values, values + count);
        if (r.cfg.sweep.axis.empty())
            throw std::invalid_argument("sweep: no axis given");
        auto o = dtisac::harness::sweep(r.cfg, r.cfg.sweep.axis, r.cfg.sweep.values);
        r.tables.emplace_back("trials", std::move(o.trials));
        r.tables.emplace_back("summary", std::move(o.summary));
    });
}

dtisac_status dtisac_papr(const dtisac_config* cfg, dtisac_result** out)
{
    return timed_result(cfg, "papr", out, [](dtisac_result& r) {
        auto o = dtisac::harness::papr_experiment(r.cfg);
        r.tables.emplace_back("ccdf", std::move(o.ccdf));
        r.tables.emplace_back("papr_summary", std::move(o.summary));
    });
}

dtisac_status dtisac_validate(const dtisac_config* cfg, dtisac_result** out, int* all_passed)
{
    return timed_result(cfg, "validate", out, [&](dtisac_result& r) {
        const auto checks = dtisac::harness::validate(r.cfg);
        bool ok = true;
        for (const auto& c : checks)
            ok = ok && c.passed;
        if (all_passed != nullptr)
            *all_passed = ok ? 1 : 0;
        r.tables.emplace_back("checks", dtisac::harness::check_table(checks));
    });
}

size_t dtisac_result_table_count(const dtisac_result* result) { return result ? result->tables.size() : 0; }

const char* dtisac_result_table_name(const dtisac_result* result, size_t index)
{
    if (result == nullptr || index >= result->tables.size())
        return nullptr;
    return result->tables[index].first.c_str();
}

dtisac_status dtisac_result_to_csv(const dtisac_result* result, const char* table, char** out)
{
    if (result == nullptr || table == nullptr || out == nullptr)
        return fail(DTISAC_ERR_NULL, "null argument");
    return guarded([&] {
        for (const auto& [name, t] : result->tables)
            if (name == table) {
                *out = dup(t.to_csv());
                return DTISAC_OK;
            }
        return fail(DTISAC_ERR_NOT_FOUND, std::string("no table '") + table + "'");
    });
}

dtisac_status dtisac_result_to_json(const dtisac_result* result, char** out)
{
    if (result == nullptr || out == nullptr)
        return fail(DTISAC_ERR_NULL, "null argument");
    return guarded([&] {
        nlohmann::ordered_json j = nlohmann::ordered_json::object();
        for (const auto& [name, t] : result->tables)
            j[name] = nlohmann::ordered_json::parse(t.to_json());
        *out = dup(j.dump(2) + "\n");
        return DTISAC_OK;
    });
}

dtisac_status dtisac_result_manifest(const dtisac_result* result, char** out)
{
    if (result == nullptr || out == nullptr)
        return fail(DTISAC_ERR_NULL, "null argument");
    return guarded([&] {
        dtisac::harness::ManifestInfo info;
        info.command = result->command;
        info.wall_time = result->wall_time;
        info.workers = dtisac::harness::worker_count();
        *out = dup(dtisac::harness::manifest_json(result->cfg, info) + "\n");
        return DTISAC_OK;
    });
}

double dtisac_result_wall_time(const dtisac_result* result) { return result ? result->wall_time : 0.0; }

void dtisac_result_free(dtisac_result* result) { delete result; }

void dtisac_string_free(char* s) { std::free(s); }

double dtisac_path_invariant_time(double v_max, double bandwidth, size_t antennas, double r_min)
{
    double v = std::numeric_limits<double>::quiet_NaN();
    guarded([&] {
        v = dtisac::path_invariant_time(v_max, bandwidth, antennas, r_min);
        return DTISAC_OK;
    });
    return v;
}

double dtisac_coherence_time(double nu_max, int mode, double xi)
{
    double v = std::numeric_limits<double>::quiet_NaN();
    guarded([&] {
        if (mode != 0 && mode != 1)
            throw std::invalid_argument("coherence_time: mode must be 0 (clarke) or 1 (ratio)");
        v = dtisac::coherence_time(nu_max, mode == 0 ? dtisac::CoherenceMode::Clarke : dtisac::CoherenceMode::Ratio, xi);
        return DTISAC_OK;
    });
    return v;
}

size_t dtisac_worker_count(void) { return dtisac::harness::worker_count(); }

}  // extern "C"
