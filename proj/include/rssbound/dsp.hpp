#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "rssbound/types.hpp"

namespace rssbound {

struct FilterSpec {
    int order = 4;              // even, >= 2
    double cutoff_hz = 0.5;
    double dc_window_s = 30.0;  // DC removal window length
    // Samples inside the filter's startup transient (about 2/cutoff seconds)
    // are dropped before spectral estimation.
    bool trim_transient = true;

    double transient_s() const { return 2.0 / cutoff_hz; }

    void validate(double sample_rate_hz) const {
        if (order < 2 || order % 2 != 0) {
            throw std::invalid_argument("FilterSpec: order must be even and >= 2");
        }
        if (!(cutoff_hz > 0.0) || cutoff_hz >= sample_rate_hz / 2.0) {
            throw std::invalid_argument("FilterSpec: cutoff must be in (0, fs/2)");
        }
        if (!(dc_window_s > 0.0)) {
            throw std::invalid_argument("FilterSpec: dc window must be > 0");
        }
    }
};

struct RateSearchSpec {
    double f_min_hz = 0.1;
    double f_max_hz = 0.67;
    double grid_hz = 0.001;

    void validate(double sample_rate_hz) const {
        if (!(f_min_hz > 0.0) || !(f_min_hz < f_max_hz) ||
            !(f_max_hz < sample_rate_hz / 2.0)) {
            throw std::invalid_argument("RateSearchSpec: need 0 < f_min < f_max < fs/2");
        }
        if (!(grid_hz > 0.0)) {
            throw std::invalid_argument("RateSearchSpec: grid resolution must be > 0");
        }
    }
};

struct EstimateResult {
    double f_hat_hz = 0.0;
    double rate_bpm = 0.0;
    double amplitude_hat = 0.0;  // symbol units on quantized input, dB otherwise
    double psd_peak = 0.0;
    bool degenerate = false;     // constant input; f_hat reported as f_min
};

// Subtracts the mean of each non-overlapping window of dc_window_s seconds.
// A window longer than the trace degrades to one whole-trace window.
inline RssTrace remove_dc(const RssTrace& trace, const FilterSpec& spec) {
    trace.validate();
    RssTrace out = trace;
    const std::size_t n = out.samples.size();
    std::size_t win = static_cast<std::size_t>(
        std::llround(spec.dc_window_s * trace.acquisition.sample_rate_hz));
    if (win == 0 || win > n) {
        win = n;
    }
    for (std::size_t start = 0; start < n; start += win) {
        const std::size_t stop = std::min(start + win, n);
        double mean = 0.0;
        for (std::size_t i = start; i < stop; ++i) {
            mean += out.samples[i];
        }
        mean /= static_cast<double>(stop - start);
        for (std::size_t i = start; i < stop; ++i) {
            out.samples[i] -= mean;
        }
    }
    out.kind = TraceKind::ContinuousPower;
    return out;
}

// Butterworth lowpass as a cascade of second-order sections obtained from
// the bilinear transform; unity gain at DC by construction.
class ButterworthLowpass {
public:
    ButterworthLowpass(int order, double cutoff_hz, double sample_rate_hz) {
        if (order < 2 || order % 2 != 0) {
            throw std::invalid_argument("ButterworthLowpass: order must be even and >= 2");
        }
        if (!(cutoff_hz > 0.0) || cutoff_hz >= sample_rate_hz / 2.0) {
            throw std::invalid_argument("ButterworthLowpass: cutoff must be in (0, fs/2)");
        }
        const int n = order / 2;
        const double warp = std::tan(kPi * cutoff_hz / sample_rate_hz);
        const double w2 = warp * warp;
        sections_.reserve(n);
        for (int i = 0; i < n; ++i) {
            const double r = std::sin(kPi * (2.0 * i + 1.0) / (4.0 * n));
            const double s = w2 + 2.0 * warp * r + 1.0;
            sections_.push_back({w2 / s, 2.0 * (1.0 - w2) / s, -(w2 - 2.0 * warp * r + 1.0) / s});
        }
    }

    // Single forward pass from rest.
    std::vector<double> apply(std::span<const double> x) const {
        std::vector<double> y(x.begin(), x.end());
        for (const Section& sec : sections_) {
            double w1 = 0.0;
            double w2 = 0.0;
            for (double& v : y) {
                const double w0 = sec.d1 * w1 + sec.d2 * w2 + v;
                v = sec.gain * (w0 + 2.0 * w1 + w2);
                w2 = w1;
                w1 = w0;
            }
        }
        return y;
    }

private:
    struct Section {
        double gain, d1, d2;
    };
    std::vector<Section> sections_;
};

inline RssTrace lowpass(const RssTrace& trace, const FilterSpec& spec) {
    trace.validate();
    spec.validate(trace.acquisition.sample_rate_hz);
    const ButterworthLowpass filt(spec.order, spec.cutoff_hz,
                                  trace.acquisition.sample_rate_hz);
    RssTrace out = trace;
    out.samples = filt.apply(trace.samples);
    out.kind = TraceKind::ContinuousPower;
    return out;
}

struct Psd {
    std::vector<double> freq_hz;
    std::vector<double> power;
};

// Magnitude-squared DTFT scaled by 1/N, evaluated on the search grid.
inline Psd periodogram(const RssTrace& trace, const RateSearchSpec& search) {
    trace.validate();
    search.validate(trace.acquisition.sample_rate_hz);
    const std::size_t n = trace.samples.size();
    if (n < 2) {
        throw std::invalid_argument("periodogram: trace must hold at least 2 samples");
    }
    const std::size_t points = static_cast<std::size_t>(
        std::floor((search.f_max_hz - search.f_min_hz) / search.grid_hz + 1e-9)) + 1;
    if (points == 0) {
        throw std::invalid_argument("periodogram: empty frequency grid");
    }

    Psd psd;
    psd.freq_hz.resize(points);
    psd.power.resize(points);
    const double fs = trace.acquisition.sample_rate_hz;
    for (std::size_t i = 0; i < points; ++i) {
        const double f = search.f_min_hz + search.grid_hz * static_cast<double>(i);
        const double dth = kTwoPi * f / fs;
        // Recurrence for cos/sin of k*dth keeps the inner loop cheap.
        const double cd = std::cos(dth);
        const double sd = std::sin(dth);
        double c = 1.0;
        double s = 0.0;
        double re = 0.0;
        double im = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            re += trace.samples[k] * c;
            im -= trace.samples[k] * s;
            const double cn = c * cd - s * sd;
            s = s * cd + c * sd;
            c = cn;
        }
        psd.freq_hz[i] = f;
        psd.power[i] = (re * re + im * im) / static_cast<double>(n);
    }
    return psd;
}

namespace detail {

struct PreparedTrace {
    RssTrace trace;
    bool degenerate = false;
};

inline PreparedTrace prepare_for_spectrum(const RssTrace& trace,
                                          const FilterSpec& filt) {
    PreparedTrace out;
    out.trace = lowpass(remove_dc(trace, filt), filt);
    if (filt.trim_transient) {
        std::size_t trim = static_cast<std::size_t>(
            std::ceil(filt.transient_s() * trace.acquisition.sample_rate_hz));
        trim = std::min(trim, out.trace.samples.size() / 2);
        if (trim > 0) {
            out.trace.samples.erase(out.trace.samples.begin(),
                                    out.trace.samples.begin() + trim);
            out.trace.acquisition.num_samples = out.trace.samples.size();
        }
    }
    double peak = 0.0;
    for (double v : out.trace.samples) {
        peak = std::max(peak, std::abs(v));
    }
    out.degenerate = peak <= 1e-12;
    return out;
}

}  // namespace detail

// Peak-picking rate estimator: DC removal, lowpass, periodogram, argmax over
// the search band. A constant input has no spectral line to pick; it is
// flagged and reported at f_min by convention.
inline EstimateResult estimate_rate(const RssTrace& trace, const FilterSpec& filt,
                                    const RateSearchSpec& search) {
    search.validate(trace.acquisition.sample_rate_hz);
    const auto prepared = detail::prepare_for_spectrum(trace, filt);
    EstimateResult result;
    if (prepared.degenerate) {
        result.degenerate = true;
        result.f_hat_hz = search.f_min_hz;
        result.rate_bpm = 60.0 * search.f_min_hz;
        return result;
    }
    const Psd psd = periodogram(prepared.trace, search);
    std::size_t best = 0;
    for (std::size_t i = 1; i < psd.power.size(); ++i) {
        if (psd.power[i] > psd.power[best]) {
            best = i;
        }
    }
    result.f_hat_hz = psd.freq_hz[best];
    result.rate_bpm = 60.0 * result.f_hat_hz;
    result.psd_peak = psd.power[best];
    const double n = static_cast<double>(prepared.trace.samples.size());
    result.amplitude_hat = 2.0 * std::sqrt(result.psd_peak / n);
    return result;
}

// Single-tone periodogram inversion A_hat = 2*sqrt(PSD(f_hat)/N). On
// quantized input the value is in symbol units and is a biased estimate of
// the dB amplitude; no calibration is attempted.
inline EstimateResult estimate_amplitude(const RssTrace& trace,
                                         const FilterSpec& filt,
                                         const RateSearchSpec& search) {
    return estimate_rate(trace, filt, search);
}

inline double rmse_bpm(std::span<const double> estimates_bpm, double truth_bpm) {
    if (estimates_bpm.empty()) {
        throw std::invalid_argument("rmse_bpm: empty estimate sequence");
    }
    double acc = 0.0;
    for (double e : estimates_bpm) {
        const double d = e - truth_bpm;
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(estimates_bpm.size()));
}

}  // namespace rssbound
