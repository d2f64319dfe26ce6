#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <vector>

#include "rssbound/crb.hpp"
#include "rssbound/dsp.hpp"
#include "rssbound/rng.hpp"
#include "rssbound/signal.hpp"

using namespace rssbound;

namespace {

RssTrace make_trace(std::vector<double> samples, double fs = 10.0) {
    RssTrace t;
    t.samples = std::move(samples);
    t.acquisition = AcquisitionSpec{fs, t.samples.size()};
    return t;
}

RssTrace tone(double a, double f, double fs, double seconds, double phi = 0.0,
              double offset = 0.0) {
    const auto acq = AcquisitionSpec::from_duration(fs, seconds);
    std::vector<double> s(acq.num_samples);
    for (std::size_t k = 0; k < s.size(); ++k) {
        s[k] = a * std::cos(kTwoPi * f / fs * k + phi) + offset;
    }
    return make_trace(std::move(s), fs);
}

double rms(const std::vector<double>& v, std::size_t from = 0) {
    double acc = 0.0;
    for (std::size_t i = from; i < v.size(); ++i) {
        acc += v[i] * v[i];
    }
    return std::sqrt(acc / static_cast<double>(v.size() - from));
}

}  // namespace

TEST_CASE("dc removal") {
    FilterSpec spec;
    SECTION("constant trace becomes zero") {
        const auto out = remove_dc(make_trace(std::vector<double>(300, -54.0)), spec);
        for (double v : out.samples) {
            REQUIRE(v == 0.0);
        }
    }
    SECTION("zero-mean sinusoid with whole cycles per window is unchanged") {
        const auto in = tone(1.0, 0.2, 10.0, 30.0);  // 6 cycles in the window
        const auto out = remove_dc(in, spec);
        for (std::size_t k = 0; k < in.samples.size(); ++k) {
            REQUIRE(std::abs(out.samples[k] - in.samples[k]) < 1e-9);
        }
    }
    SECTION("offset is removed per window") {
        auto in = tone(1.0, 0.2, 10.0, 90.0, 0.3, 5.0);
        const auto out = remove_dc(in, spec);
        const std::size_t win = 300;
        for (std::size_t w = 0; w < 3; ++w) {
            const double mean = std::accumulate(out.samples.begin() + w * win,
                                                out.samples.begin() + (w + 1) * win, 0.0) /
                                win;
            REQUIRE(std::abs(mean) < 1e-9);
        }
    }
    SECTION("window longer than the trace degrades to one window") {
        spec.dc_window_s = 1000.0;
        const auto out = remove_dc(make_trace({1.0, 2.0, 3.0}), spec);
        CHECK(out.samples[0] == Catch::Approx(-1.0));
        CHECK(out.samples[2] == Catch::Approx(1.0));
    }
}

TEST_CASE("butterworth lowpass response") {
    FilterSpec spec;  // order 4, cutoff 0.5 Hz
    const double fs = 10.0;
    const std::size_t discard = 80;  // 2/cutoff seconds

    SECTION("unity gain at DC") {
        const auto out = lowpass(make_trace(std::vector<double>(600, 1.0), fs), spec);
        CHECK(out.samples.back() == Catch::Approx(1.0).epsilon(0.001));
    }
    SECTION("-3 dB at the cutoff") {
        const auto in = tone(1.0, 0.5, fs, 120.0);
        const auto out = lowpass(in, spec);
        std::vector<double> tail(out.samples.begin() + discard, out.samples.end());
        const double gain = rms(tail) / (1.0 / std::sqrt(2.0));  // input rms
        CHECK(gain == Catch::Approx(1.0 / std::sqrt(2.0)).epsilon(0.02));
    }
    SECTION("at ten times the cutoff the attenuation exceeds 75 dB") {
        const double fs_hi = 100.0;
        const auto in = tone(1.0, 5.0, fs_hi, 60.0);
        const auto out = lowpass(in, spec);
        const double gain = rms(out.samples, 800) / (1.0 / std::sqrt(2.0));
        CHECK(20.0 * std::log10(gain) < -75.0);
    }
    SECTION("invalid cutoff is rejected") {
        spec.cutoff_hz = 6.0;  // above Nyquist for fs = 10
        CHECK_THROWS_AS(lowpass(make_trace(std::vector<double>(100, 0.0), fs), spec),
                        std::invalid_argument);
        FilterSpec odd;
        odd.order = 3;
        CHECK_THROWS_AS(lowpass(make_trace(std::vector<double>(100, 0.0), fs), odd),
                        std::invalid_argument);
    }
}

TEST_CASE("periodogram") {
    RateSearchSpec search;
    SECTION("single tone peaks on its frequency") {
        const auto psd = periodogram(tone(1.0, 0.25, 10.0, 30.0), search);
        std::size_t best = 0;
        for (std::size_t i = 1; i < psd.power.size(); ++i) {
            if (psd.power[i] > psd.power[best]) {
                best = i;
            }
        }
        CHECK(psd.freq_hz[best] == Catch::Approx(0.25).margin(search.grid_hz));
        CHECK(psd.freq_hz[1] - psd.freq_hz[0] == Catch::Approx(search.grid_hz));
    }
    SECTION("all-zero trace has an all-zero spectrum") {
        const auto psd = periodogram(make_trace(std::vector<double>(300, 0.0)), search);
        for (double p : psd.power) {
            REQUIRE(p == 0.0);
        }
    }
    SECTION("two tones rank by amplitude, against a direct transform oracle") {
        const double fs = 10.0;
        const auto acq = AcquisitionSpec::from_duration(fs, 60.0);
        std::vector<double> s(acq.num_samples);
        for (std::size_t k = 0; k < s.size(); ++k) {
            s[k] = std::cos(kTwoPi * 0.2 / fs * k) + 0.3 * std::cos(kTwoPi * 0.4 / fs * k);
        }
        const auto trace = make_trace(std::move(s), fs);
        const auto psd = periodogram(trace, search);

        // independent oracle: straight complex-exponential sums at the tones
        auto dtft_power = [&](double f) {
            double re = 0.0, im = 0.0;
            for (std::size_t k = 0; k < trace.samples.size(); ++k) {
                re += trace.samples[k] * std::cos(kTwoPi * f / fs * k);
                im -= trace.samples[k] * std::sin(kTwoPi * f / fs * k);
            }
            return (re * re + im * im) / static_cast<double>(trace.samples.size());
        };
        const double p02 = dtft_power(0.2);
        const double p04 = dtft_power(0.4);
        REQUIRE(p02 > p04);

        auto grid_value = [&](double f) {
            const std::size_t i = static_cast<std::size_t>(
                std::llround((f - search.f_min_hz) / search.grid_hz));
            return psd.power[i];
        };
        CHECK(grid_value(0.2) == Catch::Approx(p02).epsilon(1e-12));
        CHECK(grid_value(0.4) == Catch::Approx(p04).epsilon(1e-12));

        std::size_t best = 0;
        for (std::size_t i = 1; i < psd.power.size(); ++i) {
            if (psd.power[i] > psd.power[best]) {
                best = i;
            }
        }
        CHECK(psd.freq_hz[best] == Catch::Approx(0.2).margin(2 * search.grid_hz));
        // local maximum near the weaker tone as well
        const std::size_t i04 = static_cast<std::size_t>(
            std::llround((0.4 - search.f_min_hz) / search.grid_hz));
        CHECK(psd.power[i04] > psd.power[i04 - 20]);
        CHECK(psd.power[i04] > psd.power[i04 + 20]);
    }
    SECTION("degenerate grids and tiny traces are rejected") {
        RateSearchSpec bad;
        bad.f_min_hz = 0.4;
        bad.f_max_hz = 0.2;
        CHECK_THROWS_AS(periodogram(make_trace(std::vector<double>(10, 0.0)), bad),
                        std::invalid_argument);
        CHECK_THROWS_AS(periodogram(make_trace({1.0}), RateSearchSpec{}),
                        std::invalid_argument);
    }
}

TEST_CASE("rate estimation") {
    FilterSpec filt;
    RateSearchSpec search;

    SECTION("clean tone at 15 bpm") {
        SinusoidParams p;
        p.amplitude_db = 0.1;
        p.omega_rad_s = hz_to_rad_s(0.25);
        p.noise_sigma_db = 0.0;
        const auto trace = synthesize_received_power(
            p, AcquisitionSpec::from_duration(10.0, 30.0), 1);
        const auto est = estimate_rate(trace, filt, search);
        CHECK_FALSE(est.degenerate);
        CHECK(est.rate_bpm == Catch::Approx(15.0).margin(0.5));
    }
    SECTION("a one-bit trace that never crosses the threshold is degenerate") {
        SinusoidParams p;
        p.amplitude_db = 0.1;
        p.dc_offset_db = 0.5;
        p.omega_rad_s = hz_to_rad_s(0.25);
        p.noise_sigma_db = 0.0;
        auto trace = synthesize_received_power(
            p, AcquisitionSpec::from_duration(10.0, 30.0), 1);
        trace = quantize(trace, QuantizerSpec{});
        const auto est = estimate_rate(trace, filt, search);
        CHECK(est.degenerate);
        CHECK(est.f_hat_hz == search.f_min_hz);
    }
    SECTION("phase does not move the spectral peak") {
        Philox rng(3);
        std::vector<double> peaks;
        for (int i = 0; i < 8; ++i) {
            const auto trace = tone(0.1, 0.25, 10.0, 30.0, rng.uniform(0.0, kTwoPi));
            const auto est = estimate_rate(trace, filt, search);
            REQUIRE_FALSE(est.degenerate);
            peaks.push_back(est.f_hat_hz);
        }
        for (double f : peaks) {
            CHECK(std::abs(f - peaks.front()) <= 3.0 * search.grid_hz);
        }
    }
}

TEST_CASE("amplitude estimation") {
    FilterSpec filt;
    RateSearchSpec search;

    SECTION("clean tone amplitude within 2%") {
        for (double phi : {0.0, 1.0, 2.5, 4.0, 5.5}) {
            const auto est = estimate_amplitude(tone(0.1, 0.25, 10.0, 30.0, phi), filt, search);
            REQUIRE_FALSE(est.degenerate);
            CHECK(est.amplitude_hat == Catch::Approx(0.1).epsilon(0.02));
        }
    }
    SECTION("all-zero trace is degenerate with zero amplitude") {
        const auto est =
            estimate_amplitude(make_trace(std::vector<double>(300, 0.0)), filt, search);
        CHECK(est.degenerate);
        CHECK(est.amplitude_hat == 0.0);
    }
    SECTION("amplitude estimator spread at low snr, with the factor recorded") {
        // Monte Carlo at A=0.1, sigma=0.7, N=300. The peak-picking estimator
        // is biased upward here and its spread sits *below* the unquantized
        // bound sqrt(2 sigma^2/N) = 0.0572; the honest band observed from the
        // oracle run is asserted instead of wishful efficiency.
        Philox seeder(88);
        std::vector<double> amps;
        for (int t = 0; t < 400; ++t) {
            SinusoidParams p;
            p.amplitude_db = 0.1;
            p.omega_rad_s = hz_to_rad_s(0.25);
            p.phase_rad = seeder.uniform(0.0, kTwoPi);
            p.noise_sigma_db = 0.7;
            const auto trace = synthesize_received_power(
                p, AcquisitionSpec::from_duration(10.0, 30.0), 30000 + t);
            const auto est = estimate_amplitude(trace, filt, search);
            if (!est.degenerate) {
                amps.push_back(est.amplitude_hat);
            }
        }
        REQUIRE(amps.size() > 390);
        double mean = 0.0;
        for (double a : amps) mean += a;
        mean /= amps.size();
        double var = 0.0;
        for (double a : amps) var += (a - mean) * (a - mean);
        var /= (amps.size() - 1);
        const double ratio = std::sqrt(var) / 0.057154760664940822;
        INFO("std ratio vs unquantized bound: " << ratio << ", mean " << mean);
        CHECK(std::sqrt(var) > 0.02);
        CHECK(std::sqrt(var) < 0.06);
        CHECK(mean > 0.1);  // upward bias of the peak statistic
    }
}

TEST_CASE("rmse in bpm") {
    CHECK(rmse_bpm(std::vector<double>{15.0, 15.0, 15.0}, 15.0) == 0.0);
    CHECK(rmse_bpm(std::vector<double>{13.0, 17.0}, 15.0) == Catch::Approx(2.0));
    CHECK(rmse_bpm(std::vector<double>{15.0, 15.0, 21.0}, 15.0) ==
          Catch::Approx(std::sqrt(12.0)).epsilon(1e-12));
    CHECK_THROWS_AS(rmse_bpm(std::vector<double>{}, 15.0), std::invalid_argument);
}

TEST_CASE("one-bit rate estimation error near the optimal noise level") {
    // Fresh (phase, offset, noise) per trial at sigma = step/4; the observed
    // error floor of this pipeline sits slightly above 3 bpm, dominated by
    // windows whose offset leaves the threshold barely reachable.
    FilterSpec filt;
    RateSearchSpec search;
    const auto acq = AcquisitionSpec::from_duration(10.0, 30.0);
    Philox mc(424242);
    std::vector<double> est_bpm;
    for (int t = 0; t < 300; ++t) {
        SinusoidParams p;
        p.amplitude_db = 0.1;
        p.omega_rad_s = hz_to_rad_s(0.25);
        p.phase_rad = mc.uniform(0.0, kTwoPi);
        p.dc_offset_db = mc.uniform(-0.5, 0.5);
        p.noise_sigma_db = 0.25;
        auto trace = synthesize_received_power(p, acq, 60000 + t);
        trace = quantize(trace, QuantizerSpec{});
        const auto est = estimate_rate(trace, filt, search);
        est_bpm.push_back(est.degenerate
                              ? 60.0 * mc.uniform(search.f_min_hz, search.f_max_hz)
                              : est.rate_bpm);
    }
    const double rmse = rmse_bpm(est_bpm, 15.0);
    INFO("one-bit RMSE at sigma = step/4: " << rmse << " bpm");
    CHECK(rmse < 4.5);
    CHECK(rmse > 1.0);
}

TEST_CASE("estimator variance respects the averaged bound") {
    // One-bit data near the optimal noise level: the peak picker is far from
    // efficient, so its variance clears the bound with a wide margin.
    FilterSpec filt;
    RateSearchSpec search;
    const auto acq = AcquisitionSpec::from_duration(10.0, 30.0);
    QuantizerSpec quant;
    Philox mc(11);
    std::vector<double> omegas;
    for (int t = 0; t < 200; ++t) {
        SinusoidParams p;
        p.amplitude_db = 0.1;
        p.omega_rad_s = hz_to_rad_s(0.25);
        p.phase_rad = mc.uniform(0.0, kTwoPi);
        p.dc_offset_db = mc.uniform(-0.5, 0.5);
        p.noise_sigma_db = 0.25;
        auto trace = synthesize_received_power(p, acq, 91000 + t);
        trace = quantize(trace, quant);
        const auto est = estimate_rate(trace, filt, search);
        if (!est.degenerate) {
            omegas.push_back(hz_to_rad_s(est.f_hat_hz));
        }
    }
    REQUIRE(omegas.size() > 150);
    double mean = 0.0;
    for (double w : omegas) mean += w;
    mean /= omegas.size();
    double m2 = 0.0, m4 = 0.0;
    for (double w : omegas) {
        const double d = w - mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    const double var = m2 / (omegas.size() - 1);
    m2 /= omegas.size();
    m4 /= omegas.size();
    const double se = std::sqrt((m4 - m2 * m2) / omegas.size());

    BoundScenario scenario;
    scenario.amplitude_db = 0.1;
    scenario.omega_rad_s = hz_to_rad_s(0.25);
    scenario.noise_sigma_db = 0.25;
    scenario.acquisition = acq;
    const auto bound = averaged_crb(scenario, quant, AveragingGrid{8, 17});
    REQUIRE(bound.bounded);
    CHECK(var >= bound.crb_frequency - 3.0 * se);
}
