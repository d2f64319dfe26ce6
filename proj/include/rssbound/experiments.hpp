#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rssbound/crb.hpp"
#include "rssbound/dsp.hpp"
#include "rssbound/parallel.hpp"
#include "rssbound/rng.hpp"
#include "rssbound/signal.hpp"
#include "rssbound/types.hpp"

namespace rssbound {

enum class SweepAxis { NoiseSigma, StepDelta, SampleRate, Amplitude };

inline std::string to_string(SweepAxis a) {
    switch (a) {
        case SweepAxis::NoiseSigma: return "noise_sigma";
        case SweepAxis::StepDelta: return "step_delta";
        case SweepAxis::SampleRate: return "sample_rate";
        case SweepAxis::Amplitude: return "amplitude";
    }
    return "unknown";
}

// Operating point held fixed while one axis is swept.
struct FixedScenario {
    double amplitude_db = 0.1;
    double frequency_hz = 0.25;
    double sample_rate_hz = 10.0;
    double duration_s = 30.0;
    double noise_sigma_db = 0.25;
    QuantizerSpec quantizer;

    double omega_rad_s() const { return hz_to_rad_s(frequency_hz); }
    AcquisitionSpec acquisition() const {
        return AcquisitionSpec::from_duration(sample_rate_hz, duration_s);
    }
    BoundScenario bound_scenario() const {
        BoundScenario b;
        b.amplitude_db = amplitude_db;
        b.omega_rad_s = omega_rad_s();
        b.noise_sigma_db = noise_sigma_db;
        b.acquisition = acquisition();
        return b;
    }
};

struct SweepSpec {
    SweepAxis axis = SweepAxis::NoiseSigma;
    std::vector<double> values;
    FixedScenario scenario;
    AveragingGrid grid;
    int trials = 0;  // 0 disables the Monte Carlo column
    std::uint64_t seed = 1;

    void validate() const {
        if (values.size() < 2) {
            throw std::invalid_argument("SweepSpec: need at least 2 axis values");
        }
        for (std::size_t i = 1; i < values.size(); ++i) {
            if (!(values[i] > values[i - 1])) {
                throw std::invalid_argument("SweepSpec: axis values must be strictly increasing");
            }
        }
    }
};

struct SweepResult {
    SweepAxis axis = SweepAxis::NoiseSigma;
    std::uint64_t seed = 1;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (columns[i] == name) {
                return i;
            }
        }
        throw std::out_of_range("SweepResult: no column named " + name);
    }
};

namespace detail {

// Monte Carlo RMSE of the rate estimator at one operating point, fresh
// (phase, offset, noise) per trial; degenerate trials score as a uniform
// guess inside the search band.
inline double mc_rate_rmse(const FixedScenario& sc, int trials, std::uint64_t seed,
                           const FilterSpec& filt, const RateSearchSpec& search) {
    const double truth_bpm = 60.0 * sc.frequency_hz;
    const AcquisitionSpec acq = sc.acquisition();
    std::vector<double> sq(static_cast<std::size_t>(trials));
    parallel_for(sq.size(), [&](std::size_t t) {
        Philox rng(seed, t);
        SinusoidParams p;
        p.amplitude_db = sc.amplitude_db;
        p.omega_rad_s = sc.omega_rad_s();
        p.phase_rad = rng.uniform(0.0, kTwoPi);
        p.dc_offset_db = rng.uniform(-sc.quantizer.step_db / 2.0, sc.quantizer.step_db / 2.0);
        p.noise_sigma_db = sc.noise_sigma_db;
        const std::uint64_t trace_seed = (seed << 20) ^ (t * 2654435761u + 1);
        RssTrace trace = synthesize_received_power(p, acq, trace_seed);
        trace = quantize(trace, sc.quantizer);
        const EstimateResult est = estimate_rate(trace, filt, search);
        double bpm = est.rate_bpm;
        if (est.degenerate) {
            bpm = 60.0 * rng.uniform(search.f_min_hz, search.f_max_hz);
        }
        sq[t] = (bpm - truth_bpm) * (bpm - truth_bpm);
    });
    double acc = 0.0;
    for (double v : sq) {
        acc += v;
    }
    return std::sqrt(acc / static_cast<double>(sq.size()));
}

}  // namespace detail

// Bounds as a function of pre-quantization noise, with the unquantized
// reference alongside. The quantized curve has an interior minimum; the
// reference grows monotonically with sigma.
inline SweepResult sweep_noise(const SweepSpec& spec) {
    spec.validate();
    if (spec.axis != SweepAxis::NoiseSigma) {
        throw std::invalid_argument("sweep_noise: axis must be noise_sigma");
    }
    SweepResult result;
    result.axis = spec.axis;
    result.seed = spec.seed;
    result.columns = {"noise_sigma_db", "crb_std_amplitude_db", "crb_std_frequency_bpm",
                      "unquantized_std_amplitude_db", "unquantized_std_frequency_bpm",
                      "mc_rmse_bpm", "trials", "seed"};
    const FilterSpec filt;
    const RateSearchSpec search;
    for (double sigma : spec.values) {
        BoundScenario b = spec.scenario.bound_scenario();
        b.noise_sigma_db = sigma;
        const CrbReport avg = averaged_crb(b, spec.scenario.quantizer, spec.grid);
        SinusoidParams ref;
        ref.amplitude_db = spec.scenario.amplitude_db;
        ref.omega_rad_s = spec.scenario.omega_rad_s();
        ref.noise_sigma_db = sigma;
        const CrbReport unq = unquantized_crb_reference(ref, b.acquisition);
        double mc = std::numeric_limits<double>::quiet_NaN();
        if (spec.trials > 0) {
            FixedScenario sc = spec.scenario;
            sc.noise_sigma_db = sigma;
            mc = detail::mc_rate_rmse(sc, spec.trials, spec.seed, filt, search);
        }
        result.rows.push_back({sigma, avg.std_amplitude_db, avg.std_frequency_bpm,
                               unq.std_amplitude_db, unq.std_frequency_bpm, mc,
                               static_cast<double>(spec.trials),
                               static_cast<double>(spec.seed)});
    }
    return result;
}

struct PolyFit {
    std::vector<double> coeffs;  // low order first
    double r2 = 0.0;
};

// Least-squares polynomial fit via the normal equations; fine at degree <= 2.
inline PolyFit polyfit(const std::vector<double>& xs, const std::vector<double>& ys,
                       int degree) {
    const int m = degree + 1;
    std::vector<std::vector<double>> a(m, std::vector<double>(m + 1, 0.0));
    for (std::size_t n = 0; n < xs.size(); ++n) {
        std::vector<double> pow(m);
        pow[0] = 1.0;
        for (int i = 1; i < m; ++i) {
            pow[i] = pow[i - 1] * xs[n];
        }
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < m; ++j) {
                a[i][j] += pow[i] * pow[j];
            }
            a[i][m] += pow[i] * ys[n];
        }
    }
    for (int col = 0; col < m; ++col) {
        int pivot = col;
        for (int r = col + 1; r < m; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) {
                pivot = r;
            }
        }
        std::swap(a[pivot], a[col]);
        for (int r = 0; r < m; ++r) {
            if (r == col || a[r][col] == 0.0) {
                continue;
            }
            const double f = a[r][col] / a[col][col];
            for (int j = col; j <= m; ++j) {
                a[r][j] -= f * a[col][j];
            }
        }
    }
    PolyFit fit;
    fit.coeffs.resize(m);
    for (int i = 0; i < m; ++i) {
        fit.coeffs[i] = a[i][m] / a[i][i];
    }
    double mean = 0.0;
    for (double y : ys) {
        mean += y;
    }
    mean /= static_cast<double>(ys.size());
    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (std::size_t n = 0; n < xs.size(); ++n) {
        double yhat = 0.0;
        double p = 1.0;
        for (int i = 0; i < m; ++i) {
            yhat += fit.coeffs[i] * p;
            p *= xs[n];
        }
        ss_res += (ys[n] - yhat) * (ys[n] - yhat);
        ss_tot += (ys[n] - mean) * (ys[n] - mean);
    }
    fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

struct StepSizeSweep {
    SweepResult table;
    PolyFit freq_linear;
    PolyFit amp_quadratic;
    double sigma_opt_slope = 0.0;        // least-squares line through the origin
    double sigma_opt_max_rel_dev = 0.0;  // worst deviation from that line
};

// Minimum-over-noise bounds per quantization step, each point evaluated at
// its own optimal noise level per objective.
inline StepSizeSweep sweep_step_size(const SweepSpec& spec,
                                     const NoiseSearch& search = {}) {
    spec.validate();
    if (spec.axis != SweepAxis::StepDelta) {
        throw std::invalid_argument("sweep_step_size: axis must be step_delta");
    }
    StepSizeSweep out;
    out.table.axis = spec.axis;
    out.table.seed = spec.seed;
    out.table.columns = {"step_db", "sigma_opt_db", "min_std_frequency_bpm",
                         "min_std_amplitude_db", "trials", "seed"};

    std::vector<double> sigma_opts, freq_stds, amp_stds;
    for (double step : spec.values) {
        QuantizerSpec q = spec.scenario.quantizer;
        q.step_db = step;
        BoundScenario b = spec.scenario.bound_scenario();
        const OptimalNoise freq_opt =
            find_optimal_noise(b, q, search, BoundObjective::Frequency, spec.grid);
        const OptimalNoise amp_opt =
            find_optimal_noise(b, q, search, BoundObjective::Amplitude, spec.grid);
        sigma_opts.push_back(freq_opt.sigma_opt);
        freq_stds.push_back(freq_opt.min_std);
        amp_stds.push_back(amp_opt.min_std);
        out.table.rows.push_back({step, freq_opt.sigma_opt, freq_opt.min_std,
                                  amp_opt.min_std, 0.0,
                                  static_cast<double>(spec.seed)});
    }
    out.freq_linear = polyfit(spec.values, freq_stds, 1);
    out.amp_quadratic = polyfit(spec.values, amp_stds, 2);

    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < spec.values.size(); ++i) {
        num += sigma_opts[i] * spec.values[i];
        den += spec.values[i] * spec.values[i];
    }
    out.sigma_opt_slope = num / den;
    for (std::size_t i = 0; i < spec.values.size(); ++i) {
        const double fitted = out.sigma_opt_slope * spec.values[i];
        out.sigma_opt_max_rel_dev =
            std::max(out.sigma_opt_max_rel_dev, std::abs(sigma_opts[i] - fitted) / fitted);
    }
    return out;
}

// Bounds vs sampling rate at fixed duration and noise level, so the sample
// count grows with the rate.
inline SweepResult sweep_sampling_rate(const SweepSpec& spec) {
    spec.validate();
    if (spec.axis != SweepAxis::SampleRate) {
        throw std::invalid_argument("sweep_sampling_rate: axis must be sample_rate");
    }
    SweepResult result;
    result.axis = spec.axis;
    result.seed = spec.seed;
    result.columns = {"sample_rate_hz", "crb_std_amplitude_db", "crb_std_frequency_bpm",
                      "trials", "seed"};
    for (double fs : spec.values) {
        BoundScenario b = spec.scenario.bound_scenario();
        b.acquisition = AcquisitionSpec::from_duration(fs, spec.scenario.duration_s);
        const CrbReport avg = averaged_crb(b, spec.scenario.quantizer, spec.grid);
        result.rows.push_back({fs, avg.std_amplitude_db, avg.std_frequency_bpm,
                               0.0, static_cast<double>(spec.seed)});
    }
    return result;
}

struct ContourSpec {
    std::vector<double> sample_rates_hz{1.0, 2.0, 4.0, 5.0, 10.0, 20.0, 50.0};
    std::vector<double> steps_db{0.5, 1.0, 2.0, 4.0, 8.0};
    FixedScenario base;
    AveragingGrid grid;
    NoiseSearch search;
    std::vector<double> levels_bpm{2.0};
};

struct ContourPolyline {
    double level = 0.0;
    std::vector<std::pair<double, double>> points;  // (sample rate, step)
};

struct ContourResult {
    std::vector<double> sample_rates_hz;
    std::vector<double> steps_db;
    // Indexed [rate][step].
    std::vector<std::vector<double>> min_std_freq_bpm;
    std::vector<std::vector<double>> min_std_amp_db;
    std::vector<std::vector<double>> sigma_opt_db;
    std::vector<ContourPolyline> freq_contours;
};

namespace detail {

// Marching squares with linear interpolation; emits segments and chains
// them into polylines by endpoint matching.
inline std::vector<ContourPolyline> extract_contours(
    const std::vector<double>& xs, const std::vector<double>& ys,
    const std::vector<std::vector<double>>& field, double level) {
    using Point = std::pair<double, double>;
    std::vector<std::pair<Point, Point>> segments;

    auto interp = [level](double a, double fa, double b, double fb) {
        const double t = (level - fa) / (fb - fa);
        return a + t * (b - a);
    };

    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
            const double f00 = field[i][j];
            const double f10 = field[i + 1][j];
            const double f01 = field[i][j + 1];
            const double f11 = field[i + 1][j + 1];
            if (!std::isfinite(f00) || !std::isfinite(f10) || !std::isfinite(f01) ||
                !std::isfinite(f11)) {
                continue;
            }
            std::vector<Point> hits;
            if ((f00 < level) != (f10 < level)) {
                hits.push_back({interp(xs[i], f00, xs[i + 1], f10), ys[j]});
            }
            if ((f01 < level) != (f11 < level)) {
                hits.push_back({interp(xs[i], f01, xs[i + 1], f11), ys[j + 1]});
            }
            if ((f00 < level) != (f01 < level)) {
                hits.push_back({xs[i], interp(ys[j], f00, ys[j + 1], f01)});
            }
            if ((f10 < level) != (f11 < level)) {
                hits.push_back({xs[i + 1], interp(ys[j], f10, ys[j + 1], f11)});
            }
            if (hits.size() == 2) {
                segments.push_back({hits[0], hits[1]});
            } else if (hits.size() == 4) {
                // Saddle cell; pair edges arbitrarily but consistently.
                segments.push_back({hits[0], hits[2]});
                segments.push_back({hits[1], hits[3]});
            }
        }
    }

    auto close_to = [](const Point& a, const Point& b) {
        return std::abs(a.first - b.first) < 1e-9 && std::abs(a.second - b.second) < 1e-9;
    };

    std::vector<ContourPolyline> lines;
    std::vector<bool> used(segments.size(), false);
    for (std::size_t s = 0; s < segments.size(); ++s) {
        if (used[s]) {
            continue;
        }
        used[s] = true;
        std::vector<Point> chain{segments[s].first, segments[s].second};
        bool grew = true;
        while (grew) {
            grew = false;
            for (std::size_t t = 0; t < segments.size(); ++t) {
                if (used[t]) {
                    continue;
                }
                if (close_to(chain.back(), segments[t].first)) {
                    chain.push_back(segments[t].second);
                } else if (close_to(chain.back(), segments[t].second)) {
                    chain.push_back(segments[t].first);
                } else if (close_to(chain.front(), segments[t].second)) {
                    chain.insert(chain.begin(), segments[t].first);
                } else if (close_to(chain.front(), segments[t].first)) {
                    chain.insert(chain.begin(), segments[t].second);
                } else {
                    continue;
                }
                used[t] = true;
                grew = true;
            }
        }
        lines.push_back({level, std::move(chain)});
    }
    return lines;
}

}  // namespace detail

// Minimum achievable bounds over the (sampling rate, step size) plane, each
// cell at its own optimal noise level, plus iso-contours of the frequency
// field.
inline ContourResult contour_grid(const ContourSpec& spec) {
    if (spec.sample_rates_hz.empty() || spec.steps_db.empty()) {
        throw std::invalid_argument("contour_grid: grid must be non-empty");
    }
    ContourResult out;
    out.sample_rates_hz = spec.sample_rates_hz;
    out.steps_db = spec.steps_db;
    const std::size_t nr = spec.sample_rates_hz.size();
    const std::size_t ns = spec.steps_db.size();
    out.min_std_freq_bpm.assign(nr, std::vector<double>(ns, kInf));
    out.min_std_amp_db.assign(nr, std::vector<double>(ns, kInf));
    out.sigma_opt_db.assign(nr, std::vector<double>(ns, 0.0));

    for (std::size_t i = 0; i < nr; ++i) {
        for (std::size_t j = 0; j < ns; ++j) {
            QuantizerSpec q = spec.base.quantizer;
            q.step_db = spec.steps_db[j];
            BoundScenario b = spec.base.bound_scenario();
            b.acquisition =
                AcquisitionSpec::from_duration(spec.sample_rates_hz[i], spec.base.duration_s);
            const OptimalNoise freq_opt =
                find_optimal_noise(b, q, spec.search, BoundObjective::Frequency, spec.grid);
            const OptimalNoise amp_opt =
                find_optimal_noise(b, q, spec.search, BoundObjective::Amplitude, spec.grid);
            out.min_std_freq_bpm[i][j] = freq_opt.min_std;
            out.min_std_amp_db[i][j] = amp_opt.min_std;
            out.sigma_opt_db[i][j] = freq_opt.sigma_opt;
        }
    }
    for (double level : spec.levels_bpm) {
        auto lines = detail::extract_contours(spec.sample_rates_hz, spec.steps_db,
                                              out.min_std_freq_bpm, level);
        out.freq_contours.insert(out.freq_contours.end(), lines.begin(), lines.end());
    }
    return out;
}

struct StaircaseSpec {
    std::vector<double> sigma_schedule{0.0, 0.25, 1.0};  // total noise per segment
    double segment_s = 151.0;
    double hop_s = 1.0;
    FixedScenario scenario;
    // Realizations draw |B| uniform above this floor (both signs); a negative
    // value selects the amplitude itself, matching the regime where the
    // quantized trace is constant without interference.
    double min_abs_offset_db = -1.0;
    int realizations = 4;
    std::uint64_t seed = 1;
    FilterSpec filter;
    RateSearchSpec search;
};

struct StaircaseSegment {
    double sigma_db = 0.0;
    std::size_t windows = 0;
    double rmse_bpm = 0.0;
    double degenerate_fraction = 0.0;
};

// Simulated version of the interference staircase: one continuous recording
// per realization, noise level stepped per segment, rate estimated on
// sliding windows. Degenerate windows score as a uniform guess inside the
// search band (the attacker must still output a rate).
inline std::vector<StaircaseSegment> hi_staircase_sim(const StaircaseSpec& spec) {
    if (spec.sigma_schedule.empty()) {
        throw std::invalid_argument("hi_staircase_sim: empty noise schedule");
    }
    if (spec.realizations < 1) {
        throw std::invalid_argument("hi_staircase_sim: need at least 1 realization");
    }
    const double fs = spec.scenario.sample_rate_hz;
    const std::size_t seg_n = static_cast<std::size_t>(std::llround(spec.segment_s * fs));
    std::size_t win = static_cast<std::size_t>(std::llround(spec.filter.dc_window_s * fs));
    if (win == 0 || win > seg_n) {
        win = seg_n;
    }
    const std::size_t hop = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(spec.hop_s * fs)));
    const double truth_bpm = 60.0 * spec.scenario.frequency_hz;
    const double half = spec.scenario.quantizer.step_db / 2.0;
    const double b_floor = spec.min_abs_offset_db < 0.0 ? spec.scenario.amplitude_db
                                                        : spec.min_abs_offset_db;
    if (b_floor >= half) {
        throw std::invalid_argument(
            "hi_staircase_sim: offset floor must stay below half the step size");
    }

    struct SegmentAccum {
        std::vector<double> sq;
        std::size_t degenerate = 0;
    };
    std::vector<std::vector<SegmentAccum>> per_real(
        static_cast<std::size_t>(spec.realizations),
        std::vector<SegmentAccum>(spec.sigma_schedule.size()));

    parallel_for(per_real.size(), [&](std::size_t r) {
        Philox rng(spec.seed, r);
        const double phi = rng.uniform(0.0, kTwoPi);
        double offset = 0.0;
        do {
            offset = rng.uniform(-half, half);
        } while (std::abs(offset) < b_floor);

        for (std::size_t si = 0; si < spec.sigma_schedule.size(); ++si) {
            const double sigma = spec.sigma_schedule[si];
            // Continuous signal: global sample index carries the phase across
            // segment boundaries.
            RssTrace seg;
            seg.acquisition = AcquisitionSpec{fs, seg_n};
            seg.kind = TraceKind::ContinuousPower;
            seg.noise_sigma_db = sigma;
            seg.samples.resize(seg_n);
            const double w = spec.scenario.omega_rad_s();
            for (std::size_t k = 0; k < seg_n; ++k) {
                const std::size_t gk = si * seg_n + k;
                double x = spec.scenario.amplitude_db * std::cos(w / fs * gk + phi) + offset;
                if (sigma > 0.0) {
                    x += rng.gaussian(0.0, sigma);
                }
                seg.samples[k] = x;
            }
            const RssTrace quantized = quantize(seg, spec.scenario.quantizer);

            SegmentAccum& acc = per_real[r][si];
            for (std::size_t start = 0; start + win <= seg_n; start += hop) {
                RssTrace window;
                window.acquisition = AcquisitionSpec{fs, win};
                window.kind = quantized.kind;
                window.samples.assign(quantized.samples.begin() + start,
                                      quantized.samples.begin() + start + win);
                const EstimateResult est =
                    estimate_rate(window, spec.filter, spec.search);
                double bpm = est.rate_bpm;
                if (est.degenerate) {
                    ++acc.degenerate;
                    bpm = 60.0 * rng.uniform(spec.search.f_min_hz, spec.search.f_max_hz);
                }
                acc.sq.push_back((bpm - truth_bpm) * (bpm - truth_bpm));
            }
        }
    });

    std::vector<StaircaseSegment> result(spec.sigma_schedule.size());
    for (std::size_t si = 0; si < spec.sigma_schedule.size(); ++si) {
        StaircaseSegment& seg = result[si];
        seg.sigma_db = spec.sigma_schedule[si];
        double acc = 0.0;
        std::size_t degenerate = 0;
        for (const auto& real : per_real) {
            for (double v : real[si].sq) {
                acc += v;
            }
            seg.windows += real[si].sq.size();
            degenerate += real[si].degenerate;
        }
        seg.rmse_bpm = seg.windows ? std::sqrt(acc / static_cast<double>(seg.windows)) : 0.0;
        seg.degenerate_fraction =
            seg.windows ? static_cast<double>(degenerate) / static_cast<double>(seg.windows) : 0.0;
    }
    return result;
}

struct BoundCheckScenario {
    FixedScenario scenario;
    bool quantized = true;  // false compares against the unquantized reference
    FilterSpec filter;
    RateSearchSpec search;
    AveragingGrid grid;
};

struct BoundCheckResult {
    double empirical_variance = 0.0;  // var of omega estimates, (rad/s)^2
    double averaged_crb = 0.0;        // (rad/s)^2
    double ratio = 0.0;
    double variance_se = 0.0;
    bool pass = false;
    bool inconclusive = false;
    std::size_t trials = 0;
    std::size_t degenerate_trials = 0;
};

// Empirical estimator variance against the averaged bound. Passes when the
// variance stays above the bound minus three standard errors of the variance
// estimate (moment-based, so heavy-tailed estimate distributions are priced
// in).
inline BoundCheckResult monte_carlo_bound_check(const BoundCheckScenario& check,
                                                int trials, std::uint64_t seed) {
    if (trials < 100) {
        throw std::invalid_argument("monte_carlo_bound_check: need at least 100 trials");
    }
    const AcquisitionSpec acq = check.scenario.acquisition();
    const double half = check.scenario.quantizer.step_db / 2.0;

    std::vector<double> omegas(static_cast<std::size_t>(trials),
                               std::numeric_limits<double>::quiet_NaN());
    parallel_for(omegas.size(), [&](std::size_t t) {
        Philox rng(seed, t);
        SinusoidParams p;
        p.amplitude_db = check.scenario.amplitude_db;
        p.omega_rad_s = check.scenario.omega_rad_s();
        p.phase_rad = rng.uniform(0.0, kTwoPi);
        p.dc_offset_db = rng.uniform(-half, half);
        p.noise_sigma_db = check.scenario.noise_sigma_db;
        const std::uint64_t trace_seed = (seed << 20) ^ (t * 2654435761u + 17);
        RssTrace trace = synthesize_received_power(p, acq, trace_seed);
        if (check.quantized) {
            trace = quantize(trace, check.scenario.quantizer);
        }
        const EstimateResult est = estimate_rate(trace, check.filter, check.search);
        if (!est.degenerate) {
            omegas[t] = hz_to_rad_s(est.f_hat_hz);
        }
    });

    BoundCheckResult result;
    result.trials = static_cast<std::size_t>(trials);
    std::vector<double> good;
    good.reserve(omegas.size());
    for (double w : omegas) {
        if (std::isnan(w)) {
            ++result.degenerate_trials;
        } else {
            good.push_back(w);
        }
    }
    if (result.degenerate_trials * 2 > result.trials || good.size() < 2) {
        result.inconclusive = true;
        return result;
    }

    double mean = 0.0;
    for (double w : good) {
        mean += w;
    }
    mean /= static_cast<double>(good.size());
    double m2 = 0.0;
    double m4 = 0.0;
    for (double w : good) {
        const double d = w - mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    const double n = static_cast<double>(good.size());
    result.empirical_variance = m2 / (n - 1.0);
    m2 /= n;
    m4 /= n;
    result.variance_se = std::sqrt(std::max(0.0, m4 - m2 * m2) / n);

    if (check.quantized) {
        result.averaged_crb =
            averaged_crb(check.scenario.bound_scenario(), check.scenario.quantizer,
                         check.grid)
                .crb_frequency;
    } else {
        SinusoidParams ref;
        ref.amplitude_db = check.scenario.amplitude_db;
        ref.omega_rad_s = check.scenario.omega_rad_s();
        ref.noise_sigma_db = check.scenario.noise_sigma_db;
        result.averaged_crb = unquantized_crb_reference(ref, acq).crb_frequency;
    }
    result.ratio = result.empirical_variance / result.averaged_crb;
    result.pass =
        result.empirical_variance >= result.averaged_crb - 3.0 * result.variance_se;
    return result;
}

enum class MitigationKind { LessInfo, NeverBoth, AdaptiveRate, AdaptiveQuantization };

inline std::string to_string(MitigationKind k) {
    switch (k) {
        case MitigationKind::LessInfo: return "less-info";
        case MitigationKind::NeverBoth: return "never-both";
        case MitigationKind::AdaptiveRate: return "adaptive-rate";
        case MitigationKind::AdaptiveQuantization: return "adaptive-quantization";
    }
    return "unknown";
}

struct OperatingPoint {
    double sample_rate_hz = 10.0;
    double step_db = 1.0;
};

struct MitigationPolicy {
    MitigationKind kind = MitigationKind::NeverBoth;
    std::vector<OperatingPoint> offered;  // never-both: 2 points, less-info: 1
    double low_rate_hz = 0.25;            // adaptive-rate fallback rate
    double switch_period_s = 10.0;        // adaptive-quantization re-selection period
    int reselect_draws = 200;             // simulated re-selection periods

    void validate() const {
        switch (kind) {
            case MitigationKind::LessInfo:
                if (offered.size() != 1) {
                    throw std::invalid_argument("less-info policy needs exactly 1 operating point");
                }
                break;
            case MitigationKind::NeverBoth:
                if (offered.size() != 2) {
                    throw std::invalid_argument("never-both policy needs exactly 2 operating points");
                }
                break;
            case MitigationKind::AdaptiveRate:
                if (!(low_rate_hz > 0.0)) {
                    throw std::invalid_argument("adaptive-rate policy needs a positive low rate");
                }
                break;
            case MitigationKind::AdaptiveQuantization:
                if (!(switch_period_s > 0.0) || reselect_draws < 1) {
                    throw std::invalid_argument("adaptive-quantization policy parameters incomplete");
                }
                break;
        }
    }
};

struct MitigationOptionReport {
    OperatingPoint point;
    double min_std_freq_bpm = kInf;
    double min_std_amp_db = kInf;
    double sigma_opt_db = 0.0;
};

struct MitigationReport {
    MitigationKind kind = MitigationKind::NeverBoth;
    std::vector<MitigationOptionReport> options;
    double attacker_min_std_freq_bpm = kInf;  // best the attacker can reach
    double attacker_min_std_amp_db = kInf;
    // Adaptive quantization only.
    double guaranteed_min_abs_offset_db = 0.0;
    double worst_sampled_offset_db = 0.0;
    double static_std_freq_bpm = kInf;  // same point without threshold re-selection
    std::vector<std::string> notes;
};

namespace detail {

inline MitigationOptionReport score_point(const OperatingPoint& pt,
                                          const FixedScenario& base,
                                          const AveragingGrid& grid,
                                          const NoiseSearch& search,
                                          double min_abs_offset = 0.0) {
    QuantizerSpec q = base.quantizer;
    q.step_db = pt.step_db;
    BoundScenario b = base.bound_scenario();
    b.acquisition = AcquisitionSpec::from_duration(pt.sample_rate_hz, base.duration_s);
    b.min_abs_offset_db = min_abs_offset;
    MitigationOptionReport rep;
    rep.point = pt;
    const OptimalNoise freq = find_optimal_noise(b, q, search, BoundObjective::Frequency, grid);
    const OptimalNoise amp = find_optimal_noise(b, q, search, BoundObjective::Amplitude, grid);
    rep.min_std_freq_bpm = freq.min_std;
    rep.min_std_amp_db = amp.min_std;
    rep.sigma_opt_db = freq.sigma_opt;
    return rep;
}

}  // namespace detail

// Scores a transceiver-side mitigation policy by the best estimation bound
// an attacker can still reach under it.
inline MitigationReport evaluate_mitigation(const MitigationPolicy& policy,
                                            const FixedScenario& base,
                                            const AveragingGrid& grid = {},
                                            const NoiseSearch& search = {},
                                            std::uint64_t seed = 1) {
    policy.validate();
    MitigationReport report;
    report.kind = policy.kind;

    switch (policy.kind) {
        case MitigationKind::LessInfo:
        case MitigationKind::NeverBoth: {
            for (const OperatingPoint& pt : policy.offered) {
                report.options.push_back(detail::score_point(pt, base, grid, search));
            }
            for (const auto& opt : report.options) {
                report.attacker_min_std_freq_bpm =
                    std::min(report.attacker_min_std_freq_bpm, opt.min_std_freq_bpm);
                report.attacker_min_std_amp_db =
                    std::min(report.attacker_min_std_amp_db, opt.min_std_amp_db);
            }
            if (policy.kind == MitigationKind::NeverBoth) {
                report.notes.push_back(
                    "attacker picks the more informative of the two offered settings");
            }
            break;
        }
        case MitigationKind::AdaptiveRate: {
            OperatingPoint pt{policy.low_rate_hz, base.quantizer.step_db};
            report.options.push_back(detail::score_point(pt, base, grid, search));
            report.attacker_min_std_freq_bpm = report.options[0].min_std_freq_bpm;
            report.attacker_min_std_amp_db = report.options[0].min_std_amp_db;
            report.notes.push_back(
                "bound at the low-rate setting; high-rate access assumed gated on channel activity");
            break;
        }
        case MitigationKind::AdaptiveQuantization: {
            // Two threshold grids offset by step/2; each period the one with
            // the larger distance from the mean power to its nearest
            // threshold is selected. The achievable distance never drops
            // below step/4.
            const double step = base.quantizer.step_db;
            Philox rng(seed);
            double worst = kInf;
            for (int d = 0; d < policy.reselect_draws; ++d) {
                const double p = rng.uniform(0.0, step);
                const double frac = std::min(p, step - p);        // grid 1 distance
                const double other = std::abs(step / 2.0 - frac); // grid 2 distance
                worst = std::min(worst, std::max(frac, other));
            }
            report.guaranteed_min_abs_offset_db = step / 4.0;
            report.worst_sampled_offset_db = worst;
            if (worst < step / 4.0 - 1e-12) {
                throw std::runtime_error(
                    "adaptive-quantization: re-selection failed the step/4 guarantee");
            }
            OperatingPoint pt{base.sample_rate_hz, step};
            report.options.push_back(
                detail::score_point(pt, base, grid, search, step / 4.0));
            report.attacker_min_std_freq_bpm = report.options[0].min_std_freq_bpm;
            report.attacker_min_std_amp_db = report.options[0].min_std_amp_db;
            report.static_std_freq_bpm =
                detail::score_point(pt, base, grid, search).min_std_freq_bpm;
            report.notes.push_back(
                "offset averaging restricted to |B| in [step/4, step/2] by threshold re-selection");
            break;
        }
    }
    return report;
}

}  // namespace rssbound
