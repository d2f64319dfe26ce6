#pragma once

#include <cmath>
#include <stdexcept>

#include "rssbound/rng.hpp"
#include "rssbound/types.hpp"

namespace rssbound {

// x[k] = A*cos(omega*Ts*k + phi) + B + v[k], v[k] ~ N(0, sigma^2) i.i.d.
inline RssTrace synthesize_received_power(const SinusoidParams& params,
                                          const AcquisitionSpec& acq,
                                          std::uint64_t seed) {
    params.validate();
    acq.validate();

    RssTrace trace;
    trace.acquisition = acq;
    trace.kind = TraceKind::ContinuousPower;
    trace.rng_seed = seed;
    trace.noise_sigma_db = params.noise_sigma_db;
    trace.samples.resize(acq.num_samples);

    const double ts = acq.sample_period_s();
    Philox rng(seed);
    for (std::size_t k = 0; k < acq.num_samples; ++k) {
        double x = params.amplitude_db * std::cos(params.omega_rad_s * ts * k + params.phase_rad) +
                   params.dc_offset_db;
        if (params.noise_sigma_db > 0.0) {
            x += rng.gaussian(0.0, params.noise_sigma_db);
        }
        trace.samples[k] = x;
    }
    return trace;
}

// One-bit: +1 iff x >= zeta, else -1.
// Uniform: mid-rise bins of width Delta anchored at zeta, representative at
// the bin center, so the one-bit case is the two bins adjacent to zeta.
inline RssTrace quantize(const RssTrace& trace, const QuantizerSpec& quant) {
    quant.validate();
    if (trace.kind != TraceKind::ContinuousPower) {
        throw std::invalid_argument("quantize: input trace must be continuous-power");
    }

    RssTrace out = trace;
    if (quant.mode == QuantizerMode::OneBit) {
        out.kind = TraceKind::OneBit;
        for (double& s : out.samples) {
            s = (s >= quant.threshold_db) ? 1.0 : -1.0;
        }
    } else {
        out.kind = TraceKind::UniformQuantized;
        const double d = quant.step_db;
        const double z = quant.threshold_db;
        for (double& s : out.samples) {
            s = d * std::floor((s - z) / d) + z + d / 2.0;
        }
    }
    return out;
}

// Adds independent N(0, extra_sigma^2) to every sample; the reported total
// noise std becomes sqrt(sigma^2 + extra_sigma^2).
inline RssTrace add_interference(const RssTrace& trace, double extra_sigma_db,
                                 std::uint64_t seed) {
    if (!std::isfinite(extra_sigma_db) || extra_sigma_db < 0.0) {
        throw std::invalid_argument("add_interference: extra sigma must be finite and >= 0");
    }
    if (trace.kind != TraceKind::ContinuousPower) {
        throw std::invalid_argument("add_interference: input trace must be continuous-power");
    }

    RssTrace out = trace;
    if (extra_sigma_db == 0.0) {
        return out;
    }
    Philox rng(seed);
    for (double& s : out.samples) {
        s += rng.gaussian(0.0, extra_sigma_db);
    }
    out.noise_sigma_db = std::sqrt(trace.noise_sigma_db * trace.noise_sigma_db +
                                   extra_sigma_db * extra_sigma_db);
    return out;
}

}  // namespace rssbound
