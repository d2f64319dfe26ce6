#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "rssbound/linalg4.hpp"
#include "rssbound/parallel.hpp"
#include "rssbound/special.hpp"
#include "rssbound/types.hpp"

namespace rssbound {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Ill-conditioning cutoff for the 4x4 inversion: past this the extracted
// diagonal entries carry no trustworthy digits and the bound is reported as
// unbounded instead.
inline constexpr double kMaxFimCondition = 1e12;

// Per-sample cache of C_k = cos(omega*Ts*k + phi), S_k = sin(omega*Ts*k + phi).
struct PhaseBasis {
    std::vector<double> c;
    std::vector<double> s;

    static PhaseBasis make(double omega_rad_s, double sample_period_s,
                           double phase_rad, std::size_t n) {
        PhaseBasis b;
        b.c.resize(n);
        b.s.resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            const double th = omega_rad_s * sample_period_s * k + phase_rad;
            b.c[k] = std::cos(th);
            b.s[k] = std::sin(th);
        }
        return b;
    }
};

// 4x4 Fisher information over theta = [A, B, omega, phi]. Symmetric by
// construction (the upper triangle is accumulated and mirrored).
struct FisherMatrix {
    Mat4 m{};
    double condition_estimate = 0.0;  // inf when numerically singular

    bool is_symmetric(double rel_tol = 1e-10) const {
        const double scale = norm1(m);
        for (std::size_t i = 0; i < 4; ++i) {
            for (std::size_t j = i + 1; j < 4; ++j) {
                if (std::abs(m[i][j] - m[j][i]) > rel_tol * scale) {
                    return false;
                }
            }
        }
        return true;
    }
};

struct CrbReport {
    double crb_amplitude = kInf;        // {I^-1}_11, dB^2
    double crb_frequency = kInf;        // {I^-1}_33, (rad/s)^2
    double std_amplitude_db = kInf;
    double std_frequency_bpm = kInf;
    bool bounded = false;
    bool averaged = false;
    // Averaging metadata and diagnostics (averaged reports only).
    int phase_grid = 0;
    int offset_grid = 0;
    std::size_t unbounded_points = 0;
    double median_crb_amplitude = kInf;
    double median_crb_frequency = kInf;
};

namespace detail {

inline void require_positive_sigma(const SinusoidParams& p) {
    if (!(p.noise_sigma_db > 0.0)) {
        throw std::invalid_argument(
            "crb: noise sigma must be > 0 (the one-bit pmf degenerates at sigma = 0)");
    }
}

inline std::array<double, 4> model_gradient(double ck, double sk, double a,
                                            double k_ts) {
    return {ck, 1.0, -a * k_ts * sk, -a * sk};
}

}  // namespace detail

// P(y[k] = q) = 0.5 * erfc(-q * (A*C_k + B) / (sqrt(2)*sigma)), q in {-1, +1}.
inline double sample_pmf(int q, std::size_t k, const SinusoidParams& params,
                         const AcquisitionSpec& acq) {
    detail::require_positive_sigma(params);
    const double th = params.omega_rad_s * acq.sample_period_s() * k + params.phase_rad;
    const double m = params.amplitude_db * std::cos(th) + params.dc_offset_db;
    return 0.5 * std::erfc(-q * m / (1.4142135623730950488 * params.noise_sigma_db));
}

// Analytic gradient of the per-sample pmf over [A, B, omega, phi]:
//   d/dtheta = q/(sqrt(2*pi)*sigma) * exp(-(A*C_k+B)^2/(2*sigma^2)) * dm/dtheta
// with dm/dtheta = [C_k, 1, -A*Ts*k*S_k, -A*S_k].
inline std::array<double, 4> pmf_partials(int q, std::size_t k,
                                          const SinusoidParams& params,
                                          const AcquisitionSpec& acq) {
    detail::require_positive_sigma(params);
    const double ts = acq.sample_period_s();
    const double th = params.omega_rad_s * ts * k + params.phase_rad;
    const double ck = std::cos(th);
    const double sk = std::sin(th);
    const double sigma = params.noise_sigma_db;
    const double m = params.amplitude_db * ck + params.dc_offset_db;
    const double common =
        q * std::exp(-m * m / (2.0 * sigma * sigma)) /
        (2.5066282746310005024 * sigma);  // sqrt(2*pi)
    const auto g = detail::model_gradient(ck, sk, params.amplitude_db, k * ts);
    return {common * g[0], common * g[1], common * g[2], common * g[3]};
}

namespace detail {

inline FisherMatrix finish_fim(const std::array<double, 10>& upper, double scale) {
    FisherMatrix fim;
    std::size_t idx = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = i; j < 4; ++j) {
            fim.m[i][j] = scale * upper[idx];
            fim.m[j][i] = fim.m[i][j];
            ++idx;
        }
    }
    const Inverse4 inv = invert4(fim.m);
    fim.condition_estimate = inv.ok ? inv.condition : kInf;
    return fim;
}

}  // namespace detail

// Literal sum-over-outcomes Fisher information,
//   I_ij = sum_k sum_q (1/f) * df/dtheta_i * df/dtheta_j,
// kept as an independent route against the closed form below. Outcomes whose
// probability underflows to zero contribute nothing (their true contribution
// is below the underflow threshold as well).
inline FisherMatrix fim_generic(const SinusoidParams& params,
                                const AcquisitionSpec& acq) {
    params.validate();
    acq.validate();
    detail::require_positive_sigma(params);

    std::array<double, 10> upper{};
    for (std::size_t k = 0; k < acq.num_samples; ++k) {
        for (int q : {-1, +1}) {
            const double f = sample_pmf(q, k, params, acq);
            if (!(f > 0.0)) {
                continue;
            }
            const auto g = pmf_partials(q, k, params, acq);
            std::size_t idx = 0;
            for (std::size_t i = 0; i < 4; ++i) {
                for (std::size_t j = i; j < 4; ++j) {
                    upper[idx++] += g[i] * g[j] / f;
                }
            }
        }
    }
    return detail::finish_fim(upper, 1.0);
}

// Closed-form Fisher information
//   I = 2/(pi*sigma^2) * sum_k w(u_k) * g_k g_k^T,
//   u_k = (A*C_k + B)/sigma,  g_k = [C_k, 1, -A*Ts*k*S_k, -A*S_k],
// with the weight evaluated in the overflow-free erfcx form.
inline FisherMatrix fim_closed_form(const SinusoidParams& params,
                                    const AcquisitionSpec& acq) {
    params.validate();
    acq.validate();
    detail::require_positive_sigma(params);

    const double ts = acq.sample_period_s();
    const double sigma = params.noise_sigma_db;
    const double a = params.amplitude_db;
    const PhaseBasis basis =
        PhaseBasis::make(params.omega_rad_s, ts, params.phase_rad, acq.num_samples);

    std::array<double, 10> upper{};
    for (std::size_t k = 0; k < acq.num_samples; ++k) {
        const double u = (a * basis.c[k] + params.dc_offset_db) / sigma;
        const double w = one_bit_fisher_weight(u);
        if (w == 0.0) {
            continue;
        }
        const auto g = detail::model_gradient(basis.c[k], basis.s[k], a, k * ts);
        std::size_t idx = 0;
        for (std::size_t i = 0; i < 4; ++i) {
            for (std::size_t j = i; j < 4; ++j) {
                upper[idx++] += w * g[i] * g[j];
            }
        }
    }
    return detail::finish_fim(upper, 2.0 / (kPi * sigma * sigma));
}

// Extracts the amplitude and frequency bounds from an assembled Fisher
// matrix. A singular or ill-conditioned matrix yields an explicit unbounded
// report rather than an exception.
inline CrbReport crb_from_fim(const FisherMatrix& fim) {
    CrbReport report;
    const Inverse4 inv = invert4(fim.m);
    if (!inv.ok || inv.condition > kMaxFimCondition) {
        return report;
    }
    const double ca = inv.inverse[0][0];
    const double cw = inv.inverse[2][2];
    if (!(ca > 0.0) || !(cw > 0.0) || !std::isfinite(ca) || !std::isfinite(cw)) {
        return report;
    }
    report.crb_amplitude = ca;
    report.crb_frequency = cw;
    report.std_amplitude_db = std::sqrt(ca);
    report.std_frequency_bpm = 60.0 / kTwoPi * std::sqrt(cw);
    report.bounded = true;
    return report;
}

inline CrbReport crb_at(const SinusoidParams& params, const AcquisitionSpec& acq) {
    return crb_from_fim(fim_closed_form(params, acq));
}

struct AveragingGrid {
    int phase_count = 16;   // uniform on [0, 2*pi), endpoint excluded
    int offset_count = 33;  // midpoint rule on the offset interval
};

// Scenario for bounds that average out the nuisance parameters phi and B.
struct BoundScenario {
    double amplitude_db = 0.1;
    double omega_rad_s = kTwoPi * 0.25;
    double noise_sigma_db = 0.25;
    AcquisitionSpec acquisition;
    // Offsets are averaged over |B| in [min_abs_offset_db, step/2], both
    // signs; 0 means the full interval [-step/2, step/2].
    double min_abs_offset_db = 0.0;
};

namespace detail {

inline std::vector<double> offset_grid_points(double step_db, double min_abs,
                                              int count) {
    std::vector<double> out;
    const double half = step_db / 2.0;
    if (min_abs <= 0.0) {
        out.reserve(count);
        for (int j = 0; j < count; ++j) {
            out.push_back(-half + step_db * (j + 0.5) / count);
        }
        return out;
    }
    // Restricted magnitude range, mirrored over both signs.
    const int per_side = std::max(1, count / 2);
    out.reserve(2 * per_side);
    for (int j = per_side - 1; j >= 0; --j) {
        out.push_back(-(min_abs + (half - min_abs) * (j + 0.5) / per_side));
    }
    for (int j = 0; j < per_side; ++j) {
        out.push_back(min_abs + (half - min_abs) * (j + 0.5) / per_side);
    }
    return out;
}

inline double mean_allowing_inf(const std::vector<double>& v) {
    double sum = 0.0;
    for (double x : v) {
        if (!std::isfinite(x)) {
            return kInf;
        }
        sum += x;
    }
    return sum / static_cast<double>(v.size());
}

inline double median(std::vector<double> v) {
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    return v[mid];
}

}  // namespace detail

// Arithmetic mean of the pointwise CRB over a tensor grid of phase and DC
// offset. Grid points with a singular information matrix have an infinite
// CRB and make the mean unbounded; the median over the grid is kept as a
// diagnostic for that case.
inline CrbReport averaged_crb(const BoundScenario& scenario,
                              const QuantizerSpec& quant,
                              const AveragingGrid& grid = {}) {
    quant.validate();
    scenario.acquisition.validate();
    if (grid.phase_count < 1 || grid.offset_count < 1) {
        throw std::invalid_argument("averaged_crb: grid dimensions must be >= 1");
    }

    if (scenario.min_abs_offset_db >= quant.step_db / 2.0) {
        throw std::invalid_argument(
            "averaged_crb: offset restriction must stay below half the step size");
    }
    const std::vector<double> offsets = detail::offset_grid_points(
        quant.step_db, scenario.min_abs_offset_db, grid.offset_count);
    const std::size_t n_phi = static_cast<std::size_t>(grid.phase_count);
    const std::size_t n_cells = n_phi * offsets.size();

    std::vector<double> crb_a(n_cells);
    std::vector<double> crb_w(n_cells);
    parallel_for(n_cells, [&](std::size_t cell) {
        const std::size_t pi_idx = cell / offsets.size();
        const std::size_t b_idx = cell % offsets.size();
        SinusoidParams p;
        p.amplitude_db = scenario.amplitude_db;
        p.omega_rad_s = scenario.omega_rad_s;
        p.noise_sigma_db = scenario.noise_sigma_db;
        p.phase_rad = kTwoPi * static_cast<double>(pi_idx) / static_cast<double>(n_phi);
        p.dc_offset_db = offsets[b_idx];
        const CrbReport point = crb_at(p, scenario.acquisition);
        crb_a[cell] = point.crb_amplitude;
        crb_w[cell] = point.crb_frequency;
    });

    CrbReport report;
    report.averaged = true;
    report.phase_grid = grid.phase_count;
    report.offset_grid = static_cast<int>(offsets.size());
    report.unbounded_points = static_cast<std::size_t>(
        std::count_if(crb_a.begin(), crb_a.end(),
                      [](double x) { return !std::isfinite(x); }));
    report.crb_amplitude = detail::mean_allowing_inf(crb_a);
    report.crb_frequency = detail::mean_allowing_inf(crb_w);
    report.median_crb_amplitude = detail::median(crb_a);
    report.median_crb_frequency = detail::median(crb_w);
    report.bounded =
        std::isfinite(report.crb_amplitude) && std::isfinite(report.crb_frequency);
    if (report.bounded) {
        report.std_amplitude_db = std::sqrt(report.crb_amplitude);
        report.std_frequency_bpm = 60.0 / kTwoPi * std::sqrt(report.crb_frequency);
    }
    return report;
}

// Reference bounds for the unquantized signal: var(A_hat) >= 2*sigma^2/N,
// and the standard asymptotic single-tone frequency bound
//   var(omega_hat) >= 24*sigma^2 / (A^2 * Ts^2 * N * (N^2 - 1)).
inline CrbReport unquantized_crb_reference(const SinusoidParams& params,
                                           const AcquisitionSpec& acq) {
    params.validate();
    acq.validate();
    const double n = static_cast<double>(acq.num_samples);
    const double s2 = params.noise_sigma_db * params.noise_sigma_db;
    CrbReport report;
    report.crb_amplitude = 2.0 * s2 / n;
    const double a2 = params.amplitude_db * params.amplitude_db;
    if (a2 > 0.0) {
        const double ts = acq.sample_period_s();
        report.crb_frequency = 24.0 * s2 / (a2 * ts * ts * n * (n * n - 1.0));
    } else {
        report.crb_frequency = (s2 == 0.0) ? 0.0 : kInf;
    }
    report.std_amplitude_db = std::sqrt(report.crb_amplitude);
    report.std_frequency_bpm =
        std::isfinite(report.crb_frequency)
            ? 60.0 / kTwoPi * std::sqrt(report.crb_frequency)
            : kInf;
    report.bounded = std::isfinite(report.crb_frequency);
    return report;
}

enum class BoundObjective { Frequency, Amplitude };

struct NoiseSearch {
    double sigma_lo = 0.0;  // 0 selects the default step/50
    double sigma_hi = 0.0;  // 0 selects the default 2*step
    double rel_tol = 0.01;
};

struct OptimalNoise {
    double sigma_opt = 0.0;
    double min_std = kInf;        // bpm for frequency, dB for amplitude
    bool boundary_warning = false;
};

// Golden-section search on log(sigma) for the noise level minimizing the
// averaged bound. The objective is smooth and empirically unimodal over the
// default bracket; a minimum pinned to a bracket edge is flagged instead of
// trusted.
inline OptimalNoise find_optimal_noise(const BoundScenario& scenario,
                                       const QuantizerSpec& quant,
                                       const NoiseSearch& search = {},
                                       BoundObjective objective = BoundObjective::Frequency,
                                       const AveragingGrid& grid = {}) {
    const double lo = search.sigma_lo > 0.0 ? search.sigma_lo : quant.step_db / 50.0;
    const double hi = search.sigma_hi > 0.0 ? search.sigma_hi : 2.0 * quant.step_db;
    if (!(lo > 0.0) || !(hi > lo)) {
        throw std::invalid_argument("find_optimal_noise: need 0 < sigma_lo < sigma_hi");
    }

    auto eval = [&](double log_sigma) {
        BoundScenario s = scenario;
        s.noise_sigma_db = std::exp(log_sigma);
        const CrbReport r = averaged_crb(s, quant, grid);
        return objective == BoundObjective::Frequency ? r.std_frequency_bpm
                                                      : r.std_amplitude_db;
    };

    constexpr double kGolden = 0.6180339887498948482;
    double a = std::log(lo);
    double b = std::log(hi);
    double c = b - kGolden * (b - a);
    double d = a + kGolden * (b - a);
    double fc = eval(c);
    double fd = eval(d);
    while (b - a > search.rel_tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kGolden * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kGolden * (b - a);
            fd = eval(d);
        }
    }

    OptimalNoise result;
    result.sigma_opt = std::exp((a + b) / 2.0);
    result.min_std = eval(std::log(result.sigma_opt));
    const double edge = 2.0 * search.rel_tol;
    if (std::log(result.sigma_opt) - std::log(lo) < edge ||
        std::log(hi) - std::log(result.sigma_opt) < edge) {
        result.boundary_warning = true;
    }
    return result;
}

}  // namespace rssbound
