#include "dtisac/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "dtisac/output.hpp"

namespace dtisac {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::size_t parse_count(const std::string& key, const std::string& text)
{
    const std::string t = trim(text);
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
        throw ConfigError(key + ": expected a non-negative integer, got '" + text + "'");
    return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& text)
{
    const std::string t = trim(text);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
        throw ConfigError(key + ": expected an unsigned 64-bit integer, got '" + text + "'");
    return v;
}

long parse_long(const std::string& key, const std::string& text)
{
    const std::string t = trim(text);
    long v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
        throw ConfigError(key + ": expected an integer, got '" + text + "'");
    return v;
}

double parse_real(const std::string& key, const std::string& text)
{
    const std::string t = trim(text);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty() || !std::isfinite(v))
        throw ConfigError(key + ": expected a finite number, got '" + text + "'");
    return v;
}

bool parse_bool(const std::string& key, const std::string& text)
{
    const std::string t = trim(text);
    if (t == "true" || t == "yes" || t == "on" || t == "1")
        return true;
    if (t == "false" || t == "no" || t == "off" || t == "0")
        return false;
    throw ConfigError(key + ": expected a boolean, got '" + text + "'");
}

std::vector<std::string> split_list(const std::string& text)
{
    std::string t = trim(text);
    if (!t.empty() && t.front() == '[' && t.back() == ']')
        t = t.substr(1, t.size() - 2);
    std::vector<std::string> out;
    std::stringstream ss(t);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!trim(item).empty())
            out.push_back(trim(item));
    return out;
}

std::string join(const std::vector<std::string>& items)
{
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i)
        out += (i ? "," : "") + items[i];
    return out;
}

struct Entry {
    std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

using Registry = std::vector<std::pair<std::string, Entry>>;

template <typename Field>
Entry count_entry(Field field)
{
    return {[field](ExperimentConfig& c, const std::string& k, const std::string& v) { field(c) = parse_count(k, v); },
            [field](const ExperimentConfig& c) { return std::to_string(field(c)); }};
}

template <typename Field>
Entry real_entry(Field field)
{
    return {[field](ExperimentConfig& c, const std::string& k, const std::string& v) { field(c) = parse_real(k, v); },
            [field](const ExperimentConfig& c) { return format_double(field(c)); }};
}

template <typename Field>
Entry bool_entry(Field field)
{
    return {[field](ExperimentConfig& c, const std::string& k, const std::string& v) { field(c) = parse_bool(k, v); },
            [field](const ExperimentConfig& c) { return std::string(field(c) ? "true" : "false"); }};
}

// A real value with an "unset" state spelled "none".
template <typename Value, typename Flag>
Entry optional_real_entry(Value value, Flag flag)
{
    return {[value, flag](ExperimentConfig& c, const std::string& k, const std::string& v) {
                if (trim(v) == "none" || trim(v) == "null" || trim(v).empty()) {
                    flag(c) = false;
                    return;
                }
                value(c) = parse_real(k, v);
                flag(c) = true;
            },
            [value, flag](const ExperimentConfig& c) {
                return flag(c) ? format_double(value(c)) : std::string("none");
            }};
}

const Registry& registry()
{
    static const Registry reg = [] {
        Registry r;
        auto add = [&r](const std::string& k, Entry e) { r.emplace_back(k, std::move(e)); };
        using C = ExperimentConfig;

        add("system.antennas", count_entry([](auto& c) -> auto& { return c.system.antennas; }));
        add("system.carrier_frequency", real_entry([](auto& c) -> auto& { return c.system.carrier_frequency; }));
        add("system.bandwidth", real_entry([](auto& c) -> auto& { return c.system.bandwidth; }));
        add("system.taps", count_entry([](auto& c) -> auto& { return c.system.taps; }));
        add("system.pulse_support", count_entry([](auto& c) -> auto& { return c.system.pulse_support; }));
        add("system.nu_max", real_entry([](auto& c) -> auto& { return c.system.nu_max; }));
        add("system.coherence_mode",
            {[](C& c, const std::string& k, const std::string& v) {
                 const std::string t = trim(v);
                 if (t == "clarke")
                     c.system.coherence_mode = CoherenceMode::Clarke;
                 else if (t == "ratio")
                     c.system.coherence_mode = CoherenceMode::Ratio;
                 else
                     throw ConfigError(k + ": expected clarke or ratio, got '" + v + "'");
             },
             [](const C& c) { return std::string(c.system.coherence_mode == CoherenceMode::Clarke ? "clarke" : "ratio"); }});
        add("system.xi", real_entry([](auto& c) -> auto& { return c.system.xi; }));
        add("system.coherence_time", real_entry([](auto& c) -> auto& { return c.system.coherence_time; }));

        add("scene.paths", count_entry([](auto& c) -> auto& { return c.scene.paths; }));
        add("scene.grid",
            {[](C& c, const std::string& k, const std::string& v) {
                 const std::string t = trim(v);
                 if (t == "on")
                     c.scene.on_grid = true;
                 else if (t == "off")
                     c.scene.on_grid = false;
                 else
                     throw ConfigError(k + ": expected on or off, got '" + v + "'");
             },
             [](const C& c) { return std::string(c.scene.on_grid ? "on" : "off"); }});
        add("scene.rs_min", real_entry([](auto& c) -> auto& { return c.scene.rs_min; }));
        add("scene.rs_max", real_entry([](auto& c) -> auto& { return c.scene.rs_max; }));
        add("scene.ue_distance", real_entry([](auto& c) -> auto& { return c.scene.ue_distance; }));
        add("scene.aod_min_deg", real_entry([](auto& c) -> auto& { return c.scene.aod_min_deg; }));
        add("scene.aod_max_deg", real_entry([](auto& c) -> auto& { return c.scene.aod_max_deg; }));
        add("scene.scatterer_speed_max", real_entry([](auto& c) -> auto& { return c.scene.scatterer_speed_max; }));
        add("scene.ue_speed", real_entry([](auto& c) -> auto& { return c.scene.ue_speed; }));
        add("scene.rcs", real_entry([](auto& c) -> auto& { return c.scene.rcs; }));
        add("scene.min_bin_separation", count_entry([](auto& c) -> auto& { return c.scene.min_bin_separation; }));
        add("scene.delay_offset",
            {[](C& c, const std::string& k, const std::string& v) {
                 if (trim(v) == "auto") {
                     c.scene.delay_offset = -1;
                     return;
                 }
                 const long off = parse_long(k, v);
                 if (off < 0)
                     throw ConfigError(k + ": expected auto or a non-negative integer");
                 c.scene.delay_offset = off;
             },
             [](const C& c) { return c.scene.delay_offset < 0 ? std::string("auto") : std::to_string(c.scene.delay_offset); }});

        add("frame.samples_per_block", count_entry([](auto& c) -> auto& { return c.frame.samples_per_block; }));
        add("frame.pilot_length", count_entry([](auto& c) -> auto& { return c.frame.pilot_length; }));
        add("frame.guard", count_entry([](auto& c) -> auto& { return c.frame.guard; }));
        add("frame.blocks", count_entry([](auto& c) -> auto& { return c.frame.blocks; }));
        add("frame.phase1_blocks", count_entry([](auto& c) -> auto& { return c.frame.phase1_blocks; }));

        add("power.transmit_power_dbm", real_entry([](auto& c) -> auto& { return c.power.transmit_power_dbm; }));
        add("power.pilot_power_dbm", optional_real_entry([](auto& c) -> auto& { return c.power.pilot_power_dbm; },
                                                         [](auto& c) -> auto& { return c.power.pilot_power_set; }));
        add("power.noise_dbm", real_entry([](auto& c) -> auto& { return c.power.noise_dbm; }));
        add("power.snr_db", optional_real_entry([](auto& c) -> auto& { return c.power.snr_db; },
                                                [](auto& c) -> auto& { return c.power.snr_set; }));

        add("power.noiseless", bool_entry([](auto& c) -> auto& { return c.power.noiseless; }));

        add("recovery.eps_th", real_entry([](auto& c) -> auto& { return c.recovery.eps_th; }));
        add("recovery.max_iterations", count_entry([](auto& c) -> auto& { return c.recovery.max_iterations; }));
        add("recovery.expected_sparsity", count_entry([](auto& c) -> auto& { return c.recovery.expected_sparsity; }));
        add("recovery.max_blocks", count_entry([](auto& c) -> auto& { return c.recovery.max_blocks; }));
        add("recovery.v_r", count_entry([](auto& c) -> auto& { return c.recovery.v_r; }));
        add("recovery.v_p", count_entry([](auto& c) -> auto& { return c.recovery.v_p; }));
        add("recovery.sr_tolerance", real_entry([](auto& c) -> auto& { return c.recovery.sr_tolerance; }));
        add("recovery.refit", bool_entry([](auto& c) -> auto& { return c.recovery.refit; }));
        add("recovery.adaptive", bool_entry([](auto& c) -> auto& { return c.recovery.adaptive; }));
        add("recovery.pinv_tol", real_entry([](auto& c) -> auto& { return c.recovery.pinv_tol; }));

        add("doppler.oversampling", count_entry([](auto& c) -> auto& { return c.doppler_oversampling; }));

        add("ddam.criterion",
            {[](C& c, const std::string& k, const std::string& v) {
                 const std::string t = trim(v);
                 if (t == "mrt")
                     c.ddam.criterion = ddam::Criterion::MRT;
                 else if (t == "zf")
                     c.ddam.criterion = ddam::Criterion::ZF;
                 else if (t == "mmse")
                     c.ddam.criterion = ddam::Criterion::MMSE;
                 else
                     throw ConfigError(k + ": expected mrt, zf or mmse, got '" + v + "'");
             },
             [](const C& c) { return std::string(ddam::criterion_name(c.ddam.criterion)); }});
        add("ddam.fallback_mmse", bool_entry([](auto& c) -> auto& { return c.ddam.fallback_mmse; }));
        add("ddam.validity_threshold", real_entry([](auto& c) -> auto& { return c.ddam.validity_threshold; }));

        add("ofdm.subcarriers", count_entry([](auto& c) -> auto& { return c.ofdm.subcarriers; }));
        add("ofdm.cyclic_prefix", count_entry([](auto& c) -> auto& { return c.ofdm.cyclic_prefix; }));
        add("ofdm.qam_order", count_entry([](auto& c) -> auto& { return c.ofdm.qam_order; }));
        add("ofdm.perfect_csi", bool_entry([](auto& c) -> auto& { return c.ofdm.perfect_csi; }));

        add("papr.blocks", count_entry([](auto& c) -> auto& { return c.papr.blocks; }));
        add("papr.paths",
            {[](C& c, const std::string& k, const std::string& v) {
                 std::vector<std::size_t> out;
                 for (const auto& item : split_list(v))
                     out.push_back(parse_count(k, item));
                 if (out.empty())
                     throw ConfigError(k + ": expected a non-empty list");
                 c.papr.paths = out;
             },
             [](const C& c) {
                 std::vector<std::string> items;
                 for (auto p : c.papr.paths)
                     items.push_back(std::to_string(p));
                 return join(items);
             }});
        add("papr.oversampling", count_entry([](auto& c) -> auto& { return c.papr.oversampling; }));
        add("papr.measure",
            {[](C& c, const std::string& k, const std::string& v) {
                 const std::string t = trim(v);
                 if (t == "antenna")
                     c.papr.aggregate = false;
                 else if (t == "aggregate")
                     c.papr.aggregate = true;
                 else
                     throw ConfigError(k + ": expected antenna or aggregate, got '" + v + "'");
             },
             [](const C& c) { return std::string(c.papr.aggregate ? "aggregate" : "antenna"); }});
        add("papr.threshold_min_db", real_entry([](auto& c) -> auto& { return c.papr.threshold_min_db; }));
        add("papr.threshold_max_db", real_entry([](auto& c) -> auto& { return c.papr.threshold_max_db; }));
        add("papr.threshold_step_db", real_entry([](auto& c) -> auto& { return c.papr.threshold_step_db; }));

        add("experiment.trials", count_entry([](auto& c) -> auto& { return c.experiment.trials; }));
        add("experiment.seed",
            {[](C& c, const std::string& k, const std::string& v) { c.experiment.seed = parse_u64(k, v); },
             [](const C& c) { return std::to_string(c.experiment.seed); }});
        add("experiment.baselines", bool_entry([](auto& c) -> auto& { return c.experiment.baselines; }));
        add("experiment.asomp", bool_entry([](auto& c) -> auto& { return c.experiment.asomp; }));
        add("experiment.communication", bool_entry([](auto& c) -> auto& { return c.experiment.communication; }));
        add("experiment.ofdm", bool_entry([](auto& c) -> auto& { return c.experiment.ofdm; }));

        add("sweep.axis",
            {[](C& c, const std::string&, const std::string& v) { c.sweep.axis = trim(v); },
             [](const C& c) { return c.sweep.axis; }});
        add("sweep.values",
            {[](C& c, const std::string& k, const std::string& v) {
                 std::vector<double> out;
                 for (const auto& item : split_list(v))
                     out.push_back(parse_real(k, item));
                 c.sweep.values = out;
             },
             [](const C& c) {
                 std::vector<std::string> items;
                 for (double v : c.sweep.values)
                     items.push_back(format_double(v));
                 return join(items);
             }});
        return r;
    }();
    return reg;
}

const Entry& find_entry(const std::string& key)
{
    for (const auto& [k, e] : registry())
        if (k == key)
            return e;
    throw ConfigError("unknown config key '" + key + "'");
}

void apply_node(ExperimentConfig& cfg, const YAML::Node& node, const std::string& prefix)
{
    if (node.IsMap()) {
        for (const auto& kv : node) {
            const std::string name = kv.first.as<std::string>();
            const std::string key = prefix.empty() ? name : prefix + "." + name;
            apply_node(cfg, kv.second, key);
        }
        return;
    }
    if (prefix.empty())
        throw ConfigError("config document must be a mapping of sections");
    if (node.IsSequence()) {
        std::vector<std::string> items;
        for (const auto& item : node) {
            if (!item.IsScalar())
                throw ConfigError(prefix + ": list items must be scalars");
            items.push_back(item.Scalar());
        }
        cfg.set(prefix, join(items));
        return;
    }
    if (node.IsNull()) {
        cfg.set(prefix, "none");
        return;
    }
    cfg.set(prefix, node.Scalar());
}

}  // namespace

ExperimentConfig::ExperimentConfig()
{
    frame.guard = 0;
}

double ExperimentConfig::coherence_time() const
{
    if (system.coherence_time > 0.0)
        return system.coherence_time;
    return dtisac::coherence_time(system.nu_max, system.coherence_mode, system.xi);
}

std::size_t ExperimentConfig::delay_offset() const
{
    if (scene.delay_offset >= 0)
        return static_cast<std::size_t>(scene.delay_offset);
    return scene.on_grid ? 0 : system.pulse_support / 2;
}

ddam::FrameConfig ExperimentConfig::frame_config() const
{
    ddam::FrameConfig f = frame;
    f.guard = guard();
    f.sample_period = sample_period();
    f.coherence_time = coherence_time();
    return f;
}

ofdm::OfdmConfig ExperimentConfig::ofdm_config() const
{
    ofdm::OfdmConfig o;
    o.subcarriers = ofdm.subcarriers;
    o.cyclic_prefix = cyclic_prefix();
    o.qam_order = ofdm.qam_order;
    return o;
}

doppler::DopplerConfig ExperimentConfig::doppler_config() const
{
    doppler::DopplerConfig d;
    d.oversampling = doppler_oversampling;
    d.coherence_time = coherence_time();
    return d;
}

void ExperimentConfig::set(const std::string& key, const std::string& value)
{
    find_entry(key).set(*this, key, value);
}

std::string ExperimentConfig::get(const std::string& key) const
{
    return find_entry(key).get(*this);
}

const std::vector<std::string>& ExperimentConfig::keys()
{
    static const std::vector<std::string> k = [] {
        std::vector<std::string> out;
        for (const auto& [name, e] : registry())
            out.push_back(name);
        return out;
    }();
    return k;
}

std::string ExperimentConfig::canonical() const
{
    std::string out;
    for (const auto& [name, e] : registry())
        out += name + " = " + e.get(*this) + "\n";
    return out;
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a64(canonical()); }

void ExperimentConfig::validate() const
{
    if (system.antennas == 0)
        throw std::invalid_argument("Scene: M >= 1 required");
    if (!(system.bandwidth > 0.0) || !(system.carrier_frequency > system.bandwidth))
        throw std::invalid_argument("Scene: B > 0 and f_c > B required");
    if (system.taps == 0)
        throw std::invalid_argument("CirBlock: P >= 1 required");
    if (system.pulse_support < 2 || system.pulse_support % 2 != 0)
        throw std::invalid_argument("PulseShape: support must be even and >= 2");
    if (!(system.nu_max > 0.0))
        throw std::invalid_argument("TimescaleReport: nu_max must be positive");
    if (!(system.xi > 0.0 && system.xi <= 1.0))
        throw std::invalid_argument("TimescaleReport: 0 < xi <= 1 required");
    if (scene.paths == 0)
        throw std::invalid_argument("PathStateInfo: L >= 1 required");
    if (!(scene.rs_min > 0.0 && scene.rs_max >= scene.rs_min))
        throw std::invalid_argument("Scene: 0 < rs_min <= rs_max required");
    if (!(scene.ue_distance > 0.0))
        throw std::invalid_argument("Scene: UE must not be co-located with the BS");
    if (!(scene.aod_min_deg >= -90.0 && scene.aod_max_deg <= 90.0 && scene.aod_min_deg < scene.aod_max_deg))
        throw std::invalid_argument("Scene: AoD range must lie inside [-90, 90] degrees");
    if (!(scene.rcs > 0.0))
        throw std::invalid_argument("Scatterer: rcs > 0 required");
    if (scene.scatterer_speed_max < 0.0 || scene.ue_speed < 0.0)
        throw std::invalid_argument("Scene: speeds must be non-negative");
    if (scene.min_bin_separation == 0)
        throw std::invalid_argument("Scene: paths need distinct angle bins (min_bin_separation >= 1)");
    frame_config().validate(system.taps);
    recovery.validate();
    doppler_config().validate();
    ofdm_config().validate(system.taps);
    if (ddam.criterion == ddam::Criterion::ZF && system.antennas < scene.paths)
        throw std::invalid_argument("ZF feasibility: M >= L required");
    if (experiment.trials == 0)
        throw std::invalid_argument("ExperimentConfig: trials >= 1 required");
    if (papr.blocks == 0 || papr.oversampling == 0)
        throw std::invalid_argument("PaprParams: blocks and oversampling must be >= 1");
    if (!(papr.threshold_step_db > 0.0) || papr.threshold_max_db < papr.threshold_min_db)
        throw std::invalid_argument("PaprParams: threshold grid is empty");
}

ExperimentConfig load_config_string(const std::string& text)
{
    ExperimentConfig cfg;
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    if (!root || root.IsNull())
        return cfg;
    if (!root.IsMap())
        throw ConfigError("config document must be a mapping of sections");
    apply_node(cfg, root, "");
    return cfg;
}

ExperimentConfig load_config_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return load_config_string(ss.str());
}

std::uint64_t fnv1a64(const std::string& data)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace dtisac
