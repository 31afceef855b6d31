// Command-line front end. Talks to the library only through dtisac.h.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dtisac/dtisac.h"

namespace {

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = ".";
    std::optional<std::size_t> trials;
    std::string axis;
    std::string values;
    std::string format = "csv";
};

void add_common(CLI::App* cmd, Options& o)
{
    cmd->add_option("--config", o.config, "Config file (YAML sections)")->check(CLI::ExistingFile);
    cmd->add_option("--seed", o.seed, "Master seed");
    cmd->add_option("--out", o.out, "Output directory")->capture_default_str();
    cmd->add_option("--trials", o.trials, "Monte-Carlo trials")->check(CLI::PositiveNumber);
    cmd->add_option("--format", o.format, "Table format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
}

[[noreturn]] void die(const std::string& what)
{
    std::cerr << "dtisac: " << what << "\n";
    std::exit(2);
}

void check(dtisac_status s, const std::string& context)
{
    if (s != DTISAC_OK)
        die(context + ": " + dtisac_last_error());
}

std::string take(char* s)
{
    std::string out = s != nullptr ? s : "";
    dtisac_string_free(s);
    return out;
}

void write_file(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary);
    if (!f)
        die("cannot write " + path.string());
    f << text;
    if (!f)
        die("write failed for " + path.string());
}

std::vector<double> parse_values(const std::string& list)
{
    std::vector<double> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.find_first_not_of(" \t") == std::string::npos)
            continue;
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (item.find_first_not_of(" \t", used) != std::string::npos)
                throw std::invalid_argument(item);
        } catch (const std::exception&) {
            die("--values: cannot parse '" + item + "'");
        }
    }
    if (out.empty())
        die("--values: empty list");
    return out;
}

dtisac_config* load(const Options& o)
{
    dtisac_config* cfg = nullptr;
    if (o.config.empty())
        check(dtisac_config_default(&cfg), "config");
    else
        check(dtisac_config_load_file(o.config.c_str(), &cfg), o.config);
    if (o.seed)
        check(dtisac_config_set(cfg, "experiment.seed", std::to_string(*o.seed).c_str()), "--seed");
    if (o.trials)
        check(dtisac_config_set(cfg, "experiment.trials", std::to_string(*o.trials).c_str()), "--trials");
    return cfg;
}

// Tables as CSV files (or one results.json) plus manifest.json.
void emit(const dtisac_result* r, const Options& o)
{
    const std::filesystem::path dir(o.out);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        die("cannot create " + dir.string() + ": " + ec.message());
    if (o.format == "json") {
        char* json = nullptr;
        check(dtisac_result_to_json(r, &json), "json");
        write_file(dir / "results.json", take(json));
        std::cout << (dir / "results.json").string() << "\n";
    } else {
        for (std::size_t i = 0; i < dtisac_result_table_count(r); ++i) {
            const std::string name = dtisac_result_table_name(r, i);
            char* csv = nullptr;
            check(dtisac_result_to_csv(r, name.c_str(), &csv), name);
            write_file(dir / (name + ".csv"), take(csv));
            std::cout << (dir / (name + ".csv")).string() << "\n";
        }
    }
    char* manifest = nullptr;
    check(dtisac_result_manifest(r, &manifest), "manifest");
    write_file(dir / "manifest.json", take(manifest));
    std::cout << (dir / "manifest.json").string() << "\n";
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Dual-timescale ISAC simulator"};
    app.set_version_flag("--version", std::string(dtisac_version()));
    app.require_subcommand(1);

    Options o;
    auto* run = app.add_subcommand("run", "Monte-Carlo trials at one operating point");
    auto* sweep = app.add_subcommand("sweep", "Trials over one swept axis");
    auto* papr = app.add_subcommand("papr", "PAPR CCDF of OFDM and DDAM");
    auto* validate = app.add_subcommand("validate", "Config rules and the fast invariant suite");
    for (auto* cmd : {run, sweep, papr, validate})
        add_common(cmd, o);
    sweep->add_option("--axis", o.axis, "snr, transmit_power, J, N_o, N_p, M, B or L");
    sweep->add_option("--values", o.values, "Comma-separated axis values");

    CLI11_PARSE(app, argc, argv);

    dtisac_config* cfg = load(o);
    dtisac_result* result = nullptr;
    int code = 0;

    if (*run) {
        check(dtisac_run(cfg, &result), "run");
    } else if (*sweep) {
        std::vector<double> values;
        if (!o.values.empty())
            values = parse_values(o.values);
        check(dtisac_sweep(cfg, o.axis.empty() ? nullptr : o.axis.c_str(), values.empty() ? nullptr : values.data(),
                           values.size(), &result),
              "sweep");
    } else if (*papr) {
        check(dtisac_papr(cfg, &result), "papr");
    } else if (*validate) {
        int ok = 0;
        check(dtisac_validate(cfg, &result, &ok), "validate");
        char* csv = nullptr;
        check(dtisac_result_to_csv(result, "checks", &csv), "checks");
        std::stringstream rows(take(csv));
        std::string line;
        std::getline(rows, line);  // header
        while (std::getline(rows, line)) {
            const auto a = line.find(',');
            const auto b = line.find(',', a + 1);
            std::cout << line.substr(a + 1, b - a - 1) << " " << line.substr(0, a) << ": "
                      << line.substr(b + 1) << "\n";
        }
        code = ok ? 0 : 1;
        if (app.got_subcommand(validate) && validate->count("--out") == 0) {
            dtisac_result_free(result);
            dtisac_config_free(cfg);
            return code;
        }
    }

    emit(result, o);
    dtisac_result_free(result);
    dtisac_config_free(cfg);
    return code;
}
