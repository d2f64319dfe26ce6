#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rssbound/csv.hpp"
#include "rssbound/types.hpp"

namespace rssbound {

inline constexpr int kTraceFileVersion = 1;

// Trace file: '#'-prefixed header (version, fs, count, kind, units, seed,
// noise sigma), then "index,value" rows with monotone indices. Extra
// metadata lines (e.g. the config hash) are preserved as comments and
// ignored on import.
inline void export_trace(
    const RssTrace& trace, const std::string& path,
    const std::vector<std::pair<std::string, std::string>>& extra = {}) {
    trace.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path);
    }
    out << "# rssbound-trace version: " << kTraceFileVersion << "\n";
    for (const auto& [key, value] : extra) {
        out << "# " << key << ": " << value << "\n";
    }
    out << "# sample_rate_hz: " << format_double(trace.acquisition.sample_rate_hz) << "\n";
    out << "# num_samples: " << trace.acquisition.num_samples << "\n";
    out << "# kind: " << to_string(trace.kind) << "\n";
    out << "# units: dB\n";
    out << "# seed: " << trace.rng_seed << "\n";
    out << "# noise_sigma_db: " << format_double(trace.noise_sigma_db) << "\n";
    out << "index,value\n";
    for (std::size_t k = 0; k < trace.samples.size(); ++k) {
        out << k << "," << format_double(trace.samples[k]) << "\n";
    }
    if (!out) {
        throw std::runtime_error("write failed: " + path);
    }
}

inline RssTrace import_trace(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open trace file: " + path);
    }
    RssTrace trace;
    std::size_t declared = 0;
    bool have_fs = false;
    bool have_n = false;
    bool have_kind = false;
    bool header_done = false;
    std::string line;
    int line_no = 0;
    std::size_t next_index = 0;

    auto header_value = [](const std::string& l) {
        const auto colon = l.find(':');
        if (colon == std::string::npos) {
            return std::string();
        }
        auto v = l.substr(colon + 1);
        const auto first = v.find_first_not_of(" \t");
        return first == std::string::npos ? std::string() : v.substr(first);
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        if (line[0] == '#') {
            if (line.find("sample_rate_hz") != std::string::npos) {
                trace.acquisition.sample_rate_hz = parse_double(header_value(line));
                have_fs = true;
            } else if (line.find("num_samples") != std::string::npos) {
                declared = static_cast<std::size_t>(parse_double(header_value(line)));
                have_n = true;
            } else if (line.find("kind") != std::string::npos) {
                const std::string k = header_value(line);
                if (k == "continuous-power") {
                    trace.kind = TraceKind::ContinuousPower;
                } else if (k == "one-bit") {
                    trace.kind = TraceKind::OneBit;
                } else if (k == "uniform-quantized") {
                    trace.kind = TraceKind::UniformQuantized;
                } else {
                    throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                             ": unknown trace kind '" + k + "'");
                }
                have_kind = true;
            } else if (line.find("seed") != std::string::npos) {
                trace.rng_seed = static_cast<std::uint64_t>(parse_double(header_value(line)));
            } else if (line.find("noise_sigma_db") != std::string::npos) {
                trace.noise_sigma_db = parse_double(header_value(line));
            }
            continue;
        }
        if (!header_done) {
            if (line != "index,value") {
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": expected 'index,value' column header");
            }
            header_done = true;
            continue;
        }
        const auto fields = split_csv_line(line);
        if (fields.size() != 2) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected 2 fields, got " + std::to_string(fields.size()));
        }
        std::size_t idx = 0;
        double value = 0.0;
        try {
            idx = static_cast<std::size_t>(std::stoull(fields[0]));
            value = parse_double(fields[1]);
        } catch (const std::exception&) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": non-numeric row");
        }
        if (idx != next_index) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": sample indices must be 0,1,2,... (got " +
                                     fields[0] + ")");
        }
        ++next_index;
        trace.samples.push_back(value);
    }

    if (!have_fs || !have_n || !have_kind) {
        throw std::runtime_error(path + ": missing header field (need sample_rate_hz, num_samples, kind)");
    }
    if (trace.samples.size() != declared) {
        throw std::runtime_error(path + ": header declares " + std::to_string(declared) +
                                 " samples but file holds " +
                                 std::to_string(trace.samples.size()));
    }
    trace.acquisition.num_samples = declared;
    trace.validate();  // also enforces the one-bit alphabet
    return trace;
}

}  // namespace rssbound
