#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace rssbound {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

inline double hz_to_rad_s(double hz) { return kTwoPi * hz; }
inline double rad_s_to_hz(double w) { return w / kTwoPi; }
inline double rad_s_to_bpm(double w) { return 60.0 * w / kTwoPi; }
inline double bpm_to_rad_s(double bpm) { return kTwoPi * bpm / 60.0; }

// Maps any finite angle into [0, 2*pi).
inline double normalize_phase(double phi) {
    double p = std::fmod(phi, kTwoPi);
    if (p < 0.0) {
        p += kTwoPi;
    }
    return p;
}

// Unknowns of the sinusoid-plus-offset signal model, all in the dB (log
// power) domain, plus the pre-quantization noise level.
struct SinusoidParams {
    double amplitude_db = 0.1;     // A, breathing-induced swing
    double dc_offset_db = 0.0;     // B, distance to the quantization threshold
    double omega_rad_s = kTwoPi * 0.25;
    double phase_rad = 0.0;        // in [0, 2*pi)
    double noise_sigma_db = 0.25;  // std of the white Gaussian noise

    void validate() const {
        if (!std::isfinite(amplitude_db) || !std::isfinite(dc_offset_db) ||
            !std::isfinite(omega_rad_s) || !std::isfinite(phase_rad) ||
            !std::isfinite(noise_sigma_db)) {
            throw std::invalid_argument("SinusoidParams: non-finite parameter");
        }
        if (amplitude_db < 0.0) {
            throw std::invalid_argument("SinusoidParams: amplitude must be >= 0");
        }
        if (noise_sigma_db < 0.0) {
            throw std::invalid_argument("SinusoidParams: noise sigma must be >= 0");
        }
        if (phase_rad < 0.0 || phase_rad >= kTwoPi) {
            throw std::invalid_argument("SinusoidParams: phase not in [0, 2*pi)");
        }
    }
};

struct AcquisitionSpec {
    double sample_rate_hz = 10.0;
    std::size_t num_samples = 300;

    static AcquisitionSpec from_duration(double sample_rate_hz, double seconds) {
        AcquisitionSpec a;
        a.sample_rate_hz = sample_rate_hz;
        a.num_samples = static_cast<std::size_t>(std::llround(sample_rate_hz * seconds));
        return a;
    }

    double sample_period_s() const { return 1.0 / sample_rate_hz; }
    double duration_s() const { return static_cast<double>(num_samples) / sample_rate_hz; }

    void validate() const {
        if (!std::isfinite(sample_rate_hz) || sample_rate_hz <= 0.0) {
            throw std::invalid_argument("AcquisitionSpec: sample rate must be > 0");
        }
        if (num_samples < 2) {
            throw std::invalid_argument("AcquisitionSpec: need at least 2 samples");
        }
    }
};

enum class QuantizerMode { OneBit, Uniform };

struct QuantizerSpec {
    double step_db = 1.0;       // Delta
    double threshold_db = 0.0;  // zeta
    QuantizerMode mode = QuantizerMode::OneBit;

    void validate() const {
        if (!std::isfinite(step_db) || !std::isfinite(threshold_db)) {
            throw std::invalid_argument("QuantizerSpec: non-finite parameter");
        }
        if (mode == QuantizerMode::Uniform && step_db <= 0.0) {
            throw std::invalid_argument("QuantizerSpec: uniform mode needs step > 0");
        }
    }
};

enum class TraceKind { ContinuousPower, OneBit, UniformQuantized };

inline std::string to_string(TraceKind k) {
    switch (k) {
        case TraceKind::ContinuousPower: return "continuous-power";
        case TraceKind::OneBit: return "one-bit";
        case TraceKind::UniformQuantized: return "uniform-quantized";
    }
    return "unknown";
}

// A sampled signal with its acquisition metadata. One-bit traces hold
// exactly the symbols -1 and +1; all other kinds hold dB values.
struct RssTrace {
    std::vector<double> samples;
    AcquisitionSpec acquisition;
    TraceKind kind = TraceKind::ContinuousPower;
    std::uint64_t rng_seed = 0;
    double noise_sigma_db = 0.0;  // total effective pre-quantization noise std

    void validate() const {
        acquisition.validate();
        if (samples.size() != acquisition.num_samples) {
            throw std::invalid_argument("RssTrace: sample count does not match acquisition");
        }
        if (kind == TraceKind::OneBit) {
            for (double s : samples) {
                if (s != 1.0 && s != -1.0) {
                    throw std::invalid_argument("RssTrace: one-bit trace holds a value outside {-1, +1}");
                }
            }
        }
    }
};

}  // namespace rssbound
