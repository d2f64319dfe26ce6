#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rssbound/crb.hpp"
#include "rssbound/csv.hpp"
#include "rssbound/dsp.hpp"
#include "rssbound/experiments.hpp"
#include "rssbound/types.hpp"

namespace rssbound {

// Configuration problems exit with their own status code, distinct from
// runtime failures.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace ini {

struct Entry {
    std::string value;
    int line = 0;
    mutable bool consumed = false;
};

struct Document {
    // section -> key -> entry
    std::map<std::string, std::map<std::string, Entry>> sections;
    std::string text;  // canonical text for hashing
};

inline std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
        return "";
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

// Flat sectioned key = value text. Comments start with '#' or ';'.
// Duplicate keys inside a section are rejected with the offending line.
inline Document parse(const std::string& text) {
    Document doc;
    doc.text = text;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') {
            continue;
        }
        if (t.front() == '[') {
            if (t.back() != ']') {
                throw ConfigError("line " + std::to_string(line_no) + ": unterminated section header");
            }
            section = trim(t.substr(1, t.size() - 2));
            if (section.empty()) {
                throw ConfigError("line " + std::to_string(line_no) + ": empty section name");
            }
            doc.sections[section];
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        const auto hash = value.find('#');
        if (hash != std::string::npos) {
            value = trim(value.substr(0, hash));
        }
        if (key.empty()) {
            throw ConfigError("line " + std::to_string(line_no) + ": empty key");
        }
        auto& sec = doc.sections[section];
        if (sec.count(key)) {
            throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" +
                              (section.empty() ? key : section + "." + key) +
                              "' (first defined at line " + std::to_string(sec[key].line) + ")");
        }
        sec[key] = Entry{value, line_no, false};
    }
    return doc;
}

}  // namespace ini

struct SweepBlock {
    SweepAxis axis = SweepAxis::NoiseSigma;
    std::vector<double> values;
    int trials = 0;
};

struct StaircaseBlock {
    std::vector<double> sigma_schedule;
    double segment_s = 151.0;
    double hop_s = 1.0;
    int realizations = 4;
    double min_abs_offset_db = -1.0;
};

struct MitigationBlock {
    MitigationKind kind = MitigationKind::NeverBoth;
    std::vector<OperatingPoint> offered{{4.0, 2.0}, {20.0, 8.0}};
    double low_rate_hz = 0.25;
    double switch_period_s = 10.0;
};

struct ContourBlock {
    std::vector<double> sample_rates_hz{1.0, 2.0, 4.0, 5.0, 10.0, 20.0, 50.0};
    std::vector<double> steps_db{0.5, 1.0, 2.0, 4.0, 8.0};
    std::vector<double> levels_bpm{2.0};
};

// Everything a subcommand needs, validated, with defaults at the reference
// operating point (A = 0.1 dB, 0.25 Hz, 10 Hz sampling, 30 s, 1 dB step).
struct RunConfig {
    FixedScenario scenario;
    std::optional<double> phase_rad;      // fixed phase where not averaged
    std::optional<double> dc_offset_db;   // fixed offset where not averaged
    FilterSpec filter;
    RateSearchSpec search;
    AveragingGrid grid;
    SweepBlock sweep;
    StaircaseBlock staircase;
    MitigationBlock mitigation;
    ContourBlock contour;
    std::uint64_t seed = 1;
    std::string output_dir = ".";
    std::uint64_t config_hash = 0;

    SinusoidParams sinusoid() const {
        SinusoidParams p;
        p.amplitude_db = scenario.amplitude_db;
        p.omega_rad_s = scenario.omega_rad_s();
        p.noise_sigma_db = scenario.noise_sigma_db;
        p.phase_rad = phase_rad.value_or(0.0);
        p.dc_offset_db = dc_offset_db.value_or(0.0);
        return p;
    }
};

namespace detail {

inline double to_double(const std::string& path, const std::string& raw) {
    try {
        return parse_double(raw);
    } catch (const std::exception&) {
        throw ConfigError(path + ": not a number: '" + raw + "'");
    }
}

inline std::vector<double> to_double_list(const std::string& path, const std::string& raw) {
    std::vector<double> out;
    std::istringstream in(raw);
    std::string item;
    while (std::getline(in, item, ',')) {
        out.push_back(to_double(path, ini::trim(item)));
    }
    if (out.empty()) {
        throw ConfigError(path + ": empty list");
    }
    return out;
}

class Reader {
public:
    explicit Reader(const ini::Document& doc) : doc_(doc) {}

    std::optional<std::string> raw(const std::string& section, const std::string& key) const {
        const auto sec = doc_.sections.find(section);
        if (sec == doc_.sections.end()) {
            return std::nullopt;
        }
        const auto it = sec->second.find(key);
        if (it == sec->second.end()) {
            return std::nullopt;
        }
        it->second.consumed = true;
        return it->second.value;
    }

    double number(const std::string& section, const std::string& key, double fallback) const {
        const auto v = raw(section, key);
        return v ? to_double(section + "." + key, *v) : fallback;
    }

    std::vector<double> number_list(const std::string& section, const std::string& key,
                                    std::vector<double> fallback) const {
        const auto v = raw(section, key);
        return v ? to_double_list(section + "." + key, *v) : std::move(fallback);
    }

    // After reading, anything not consumed is an unknown key.
    void reject_unknown() const {
        for (const auto& [section, keys] : doc_.sections) {
            for (const auto& [key, entry] : keys) {
                if (!entry.consumed) {
                    throw ConfigError("unknown key '" +
                                      (section.empty() ? key : section + "." + key) +
                                      "' at line " + std::to_string(entry.line));
                }
            }
        }
    }

private:
    const ini::Document& doc_;
};

inline void fail_range(const std::string& path, const std::string& why) {
    throw ConfigError(path + ": " + why);
}

}  // namespace detail

inline RunConfig parse_config_text(const std::string& text) {
    const ini::Document doc = ini::parse(text);
    const detail::Reader r(doc);
    RunConfig cfg;

    // [scenario]
    cfg.scenario.amplitude_db = r.number("scenario", "amplitude_db", 0.1);
    if (!(cfg.scenario.amplitude_db >= 0.0)) {
        detail::fail_range("scenario.amplitude_db", "must be >= 0");
    }
    int freq_keys = 0;
    if (const auto v = r.raw("scenario", "frequency_hz")) {
        cfg.scenario.frequency_hz = detail::to_double("scenario.frequency_hz", *v);
        ++freq_keys;
    }
    if (const auto v = r.raw("scenario", "rate_bpm")) {
        cfg.scenario.frequency_hz = detail::to_double("scenario.rate_bpm", *v) / 60.0;
        ++freq_keys;
    }
    if (const auto v = r.raw("scenario", "omega_rad_s")) {
        cfg.scenario.frequency_hz =
            rad_s_to_hz(detail::to_double("scenario.omega_rad_s", *v));
        ++freq_keys;
    }
    if (freq_keys > 1) {
        throw ConfigError("scenario: give at most one of frequency_hz, rate_bpm, omega_rad_s");
    }
    if (!(cfg.scenario.frequency_hz > 0.0)) {
        detail::fail_range("scenario.frequency_hz", "must be > 0");
    }
    cfg.scenario.noise_sigma_db = r.number("scenario", "noise_sigma_db", 0.25);
    if (!(cfg.scenario.noise_sigma_db >= 0.0)) {
        detail::fail_range("scenario.noise_sigma_db", "must be >= 0");
    }
    if (const auto v = r.raw("scenario", "phase_rad")) {
        cfg.phase_rad = normalize_phase(detail::to_double("scenario.phase_rad", *v));
    }
    if (const auto v = r.raw("scenario", "dc_offset_db")) {
        cfg.dc_offset_db = detail::to_double("scenario.dc_offset_db", *v);
    }

    // [acquisition]
    cfg.scenario.sample_rate_hz = r.number("acquisition", "sample_rate_hz", 10.0);
    if (!(cfg.scenario.sample_rate_hz > 0.0)) {
        detail::fail_range("acquisition.sample_rate_hz", "must be > 0");
    }
    cfg.scenario.duration_s = r.number("acquisition", "duration_s", 30.0);
    if (const auto v = r.raw("acquisition", "num_samples")) {
        const double n = detail::to_double("acquisition.num_samples", *v);
        if (!(n >= 2.0)) {
            detail::fail_range("acquisition.num_samples", "must be >= 2");
        }
        cfg.scenario.duration_s = n / cfg.scenario.sample_rate_hz;
    }
    if (!(cfg.scenario.duration_s > 0.0)) {
        detail::fail_range("acquisition.duration_s", "must be > 0");
    }

    // [quantizer]
    cfg.scenario.quantizer.step_db = r.number("quantizer", "step_db", 1.0);
    if (!(cfg.scenario.quantizer.step_db > 0.0)) {
        detail::fail_range("quantizer.step_db", "must be > 0");
    }
    cfg.scenario.quantizer.threshold_db = r.number("quantizer", "threshold_db", 0.0);
    if (const auto v = r.raw("quantizer", "mode")) {
        if (*v == "one-bit") {
            cfg.scenario.quantizer.mode = QuantizerMode::OneBit;
        } else if (*v == "uniform") {
            cfg.scenario.quantizer.mode = QuantizerMode::Uniform;
        } else {
            detail::fail_range("quantizer.mode", "must be one-bit or uniform");
        }
    }

    // [filter]
    cfg.filter.order = static_cast<int>(r.number("filter", "order", 4));
    if (cfg.filter.order < 2 || cfg.filter.order % 2 != 0) {
        detail::fail_range("filter.order", "must be even and >= 2");
    }
    cfg.filter.cutoff_hz = r.number("filter", "cutoff_hz", 0.5);
    if (!(cfg.filter.cutoff_hz > 0.0)) {
        detail::fail_range("filter.cutoff_hz", "must be > 0");
    }
    cfg.filter.dc_window_s = r.number("filter", "dc_window_s", 30.0);
    if (!(cfg.filter.dc_window_s > 0.0)) {
        detail::fail_range("filter.dc_window_s", "must be > 0");
    }

    // [search]
    cfg.search.f_min_hz = r.number("search", "f_min_hz", 0.1);
    cfg.search.f_max_hz = r.number("search", "f_max_hz", 0.67);
    cfg.search.grid_hz = r.number("search", "grid_hz", 0.001);
    if (!(cfg.search.f_min_hz > 0.0) || !(cfg.search.f_min_hz < cfg.search.f_max_hz)) {
        detail::fail_range("search.f_min_hz", "need 0 < f_min < f_max");
    }
    if (!(cfg.search.grid_hz > 0.0)) {
        detail::fail_range("search.grid_hz", "must be > 0");
    }

    // [crb]
    cfg.grid.phase_count = static_cast<int>(r.number("crb", "phase_grid", 16));
    cfg.grid.offset_count = static_cast<int>(r.number("crb", "offset_grid", 33));
    if (cfg.grid.phase_count < 1 || cfg.grid.offset_count < 1) {
        detail::fail_range("crb.phase_grid", "grid sizes must be >= 1");
    }

    // [sweep]
    if (const auto v = r.raw("sweep", "axis")) {
        if (*v == "noise_sigma" || *v == "noise") {
            cfg.sweep.axis = SweepAxis::NoiseSigma;
        } else if (*v == "step_delta" || *v == "step") {
            cfg.sweep.axis = SweepAxis::StepDelta;
        } else if (*v == "sample_rate" || *v == "rate") {
            cfg.sweep.axis = SweepAxis::SampleRate;
        } else {
            detail::fail_range("sweep.axis", "must be noise_sigma, step_delta or sample_rate");
        }
    }
    cfg.sweep.values = r.number_list("sweep", "values", {});
    cfg.sweep.trials = static_cast<int>(r.number("sweep", "trials", 0));
    if (cfg.sweep.trials < 0) {
        detail::fail_range("sweep.trials", "must be >= 0");
    }

    // [staircase]
    cfg.staircase.sigma_schedule =
        r.number_list("staircase", "sigma_schedule", {0.0, 0.25, 1.0});
    cfg.staircase.segment_s = r.number("staircase", "segment_s", 151.0);
    cfg.staircase.hop_s = r.number("staircase", "hop_s", 1.0);
    cfg.staircase.realizations = static_cast<int>(r.number("staircase", "realizations", 4));
    cfg.staircase.min_abs_offset_db = r.number("staircase", "min_abs_offset_db", -1.0);
    if (!(cfg.staircase.segment_s > 0.0) || !(cfg.staircase.hop_s > 0.0)) {
        detail::fail_range("staircase.segment_s", "segment and hop must be > 0");
    }
    if (cfg.staircase.realizations < 1) {
        detail::fail_range("staircase.realizations", "must be >= 1");
    }

    // [mitigation]
    if (const auto v = r.raw("mitigation", "kind")) {
        if (*v == "less-info") {
            cfg.mitigation.kind = MitigationKind::LessInfo;
        } else if (*v == "never-both") {
            cfg.mitigation.kind = MitigationKind::NeverBoth;
        } else if (*v == "adaptive-rate") {
            cfg.mitigation.kind = MitigationKind::AdaptiveRate;
        } else if (*v == "adaptive-quantization") {
            cfg.mitigation.kind = MitigationKind::AdaptiveQuantization;
        } else {
            detail::fail_range("mitigation.kind", "unknown mitigation kind '" + *v + "'");
        }
    }
    {
        const auto rates = r.number_list("mitigation", "offered_rates_hz", {4.0, 20.0});
        const auto steps = r.number_list("mitigation", "offered_steps_db", {2.0, 8.0});
        if (rates.size() != steps.size()) {
            detail::fail_range("mitigation.offered_rates_hz",
                               "offered rates and steps must pair up");
        }
        cfg.mitigation.offered.clear();
        for (std::size_t i = 0; i < rates.size(); ++i) {
            cfg.mitigation.offered.push_back({rates[i], steps[i]});
        }
    }
    cfg.mitigation.low_rate_hz = r.number("mitigation", "low_rate_hz", 0.25);
    cfg.mitigation.switch_period_s = r.number("mitigation", "switch_period_s", 10.0);

    // [contour]
    cfg.contour.sample_rates_hz = r.number_list("contour", "sample_rates_hz",
                                                {1.0, 2.0, 4.0, 5.0, 10.0, 20.0, 50.0});
    cfg.contour.steps_db = r.number_list("contour", "steps_db", {0.5, 1.0, 2.0, 4.0, 8.0});
    cfg.contour.levels_bpm = r.number_list("contour", "levels_bpm", {2.0});

    // [run]
    cfg.seed = static_cast<std::uint64_t>(r.number("run", "seed", 1.0));
    if (const auto v = r.raw("run", "output_dir")) {
        cfg.output_dir = *v;
    } else if (const char* env = std::getenv("RSSBOUND_OUT")) {
        cfg.output_dir = env;
    }

    r.reject_unknown();
    cfg.config_hash = fnv1a(doc.text);
    return cfg;
}

inline RunConfig parse_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open config file: " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

}  // namespace rssbound
