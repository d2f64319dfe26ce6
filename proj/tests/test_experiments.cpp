#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "rssbound/experiments.hpp"

using namespace rssbound;

namespace {

FixedScenario reference_scenario() {
    FixedScenario sc;  // defaults are the reference operating point
    return sc;
}

const AveragingGrid kCoarse{8, 17};

}  // namespace

TEST_CASE("noise sweep shape") {
    SweepSpec spec;
    spec.axis = SweepAxis::NoiseSigma;
    spec.scenario = reference_scenario();
    spec.grid = kCoarse;
    spec.values = {0.02, 0.05, 0.1, 0.18, 0.25, 0.35, 0.5, 1.0, 2.0};
    const auto result = sweep_noise(spec);

    REQUIRE(result.rows.size() == spec.values.size());
    const auto f = result.column("crb_std_frequency_bpm");
    const auto ua = result.column("unquantized_std_amplitude_db");

    SECTION("quantized curve has an interior minimum near step/4") {
        std::size_t best = 0;
        for (std::size_t i = 1; i < result.rows.size(); ++i) {
            if (result.rows[i][f] < result.rows[best][f]) {
                best = i;
            }
        }
        CHECK(best > 0);
        CHECK(best + 1 < result.rows.size());
        CHECK(result.rows[best][0] == Catch::Approx(0.25).margin(0.11));
    }
    SECTION("unquantized amplitude reference is sqrt(2 sigma^2/N), increasing") {
        for (std::size_t i = 0; i < result.rows.size(); ++i) {
            const double sigma = result.rows[i][0];
            CHECK(result.rows[i][ua] ==
                  Catch::Approx(std::sqrt(2.0 * sigma * sigma / 300.0)).epsilon(1e-12));
            if (i > 0) {
                CHECK(result.rows[i][ua] > result.rows[i - 1][ua]);
            }
        }
    }
    SECTION("starved noise is at least 10x worse than the optimum") {
        double best = kInf;
        for (const auto& row : result.rows) {
            best = std::min(best, row[f]);
        }
        CHECK(result.rows[0][0] == Catch::Approx(0.02));  // step/50
        CHECK(result.rows[0][f] >= 10.0 * best);
    }
    SECTION("axis values must increase") {
        SweepSpec bad = spec;
        bad.values = {0.5, 0.2};
        CHECK_THROWS_AS(sweep_noise(bad), std::invalid_argument);
    }
}

TEST_CASE("step-size sweep fits") {
    SweepSpec spec;
    spec.axis = SweepAxis::StepDelta;
    spec.scenario = reference_scenario();
    spec.grid = kCoarse;
    spec.values = {0.5, 1.0, 2.0, 4.0, 8.0};
    const auto sweep = sweep_step_size(spec);

    CHECK(sweep.freq_linear.r2 >= 0.98);
    CHECK(sweep.amp_quadratic.r2 >= 0.98);
    CHECK(sweep.sigma_opt_max_rel_dev < 0.15);
    CHECK(sweep.sigma_opt_slope == Catch::Approx(0.25).margin(0.05));
    REQUIRE(sweep.table.rows.size() == 5);
    // larger steps starve the attacker
    const auto fcol = sweep.table.column("min_std_frequency_bpm");
    for (std::size_t i = 1; i < sweep.table.rows.size(); ++i) {
        CHECK(sweep.table.rows[i][fcol] > sweep.table.rows[i - 1][fcol]);
    }
}

TEST_CASE("sampling-rate sweep is monotone") {
    SweepSpec spec;
    spec.axis = SweepAxis::SampleRate;
    spec.scenario = reference_scenario();
    spec.scenario.noise_sigma_db = 0.7;
    spec.grid = kCoarse;
    spec.values = {1.0, 2.0, 5.0, 10.0, 20.0, 50.0};
    const auto result = sweep_sampling_rate(spec);
    const auto a = result.column("crb_std_amplitude_db");
    const auto f = result.column("crb_std_frequency_bpm");
    for (std::size_t i = 1; i < result.rows.size(); ++i) {
        CHECK(result.rows[i][a] < result.rows[i - 1][a]);
        CHECK(result.rows[i][f] < result.rows[i - 1][f]);
    }
    // doubling 10 -> 20 Hz: improvement factor recorded against the 1/sqrt(2)
    // rule of thumb, not asserted
    const double factor = result.rows[4][f] / result.rows[3][f];
    INFO("freq std factor for fs 10 -> 20 Hz: " << factor
         << " (1/sqrt(2) would be " << 1.0 / std::sqrt(2.0) << ")");
    CHECK(factor < 1.0);
}

TEST_CASE("contour grid") {
    SECTION("degenerate 1x1 grid equals a single optimal-noise evaluation") {
        ContourSpec spec;
        spec.base = reference_scenario();
        spec.grid = kCoarse;
        spec.sample_rates_hz = {10.0};
        spec.steps_db = {1.0};
        const auto result = contour_grid(spec);
        REQUIRE(result.min_std_freq_bpm.size() == 1);

        BoundScenario b = spec.base.bound_scenario();
        QuantizerSpec q = spec.base.quantizer;
        const auto direct =
            find_optimal_noise(b, q, {}, BoundObjective::Frequency, kCoarse);
        CHECK(result.min_std_freq_bpm[0][0] == Catch::Approx(direct.min_std).epsilon(1e-12));
        CHECK(result.sigma_opt_db[0][0] == Catch::Approx(direct.sigma_opt).epsilon(1e-12));
    }
    SECTION("corners order as expected and the field is monotone") {
        ContourSpec spec;
        spec.base = reference_scenario();
        spec.grid = AveragingGrid{4, 9};
        spec.sample_rates_hz = {2.0, 10.0, 20.0};
        spec.steps_db = {1.0, 4.0, 8.0};
        const auto result = contour_grid(spec);
        const auto& f = result.min_std_freq_bpm;
        // best corner (high rate, small step) beats worst corner (low rate, big step)
        CHECK(f[2][0] < f[0][2]);
        for (std::size_t i = 1; i < 3; ++i) {
            for (std::size_t j = 0; j < 3; ++j) {
                CHECK(f[i][j] <= f[i - 1][j] * 1.0001);  // better with more rate
            }
        }
        for (std::size_t i = 0; i < 3; ++i) {
            for (std::size_t j = 1; j < 3; ++j) {
                CHECK(f[i][j] >= f[i][j - 1] * 0.9999);  // worse with bigger steps
            }
        }
        // the 2 bpm contour separates the corners, so it must exist
        bool found = false;
        for (const auto& line : result.freq_contours) {
            if (line.level == 2.0 && line.points.size() >= 2) {
                found = true;
            }
        }
        CHECK(found);
    }
}

TEST_CASE("staircase simulation") {
    StaircaseSpec spec;
    spec.scenario = reference_scenario();
    spec.scenario.quantizer.mode = QuantizerMode::Uniform;
    spec.sigma_schedule = {0.0, 0.25, 1.0};
    spec.segment_s = 61.0;
    spec.realizations = 2;
    spec.seed = 5;
    const auto segments = hi_staircase_sim(spec);

    REQUIRE(segments.size() == 3);
    for (const auto& seg : segments) {
        CHECK(seg.windows >= 60);
    }
    // no interference: the quantized trace is constant, the estimator guesses
    CHECK(segments[0].degenerate_fraction == 1.0);
    CHECK(segments[0].rmse_bpm >= 10.0);
    // at the helpful level the rate is recovered
    CHECK(segments[1].rmse_bpm <= 3.5);
    CHECK(segments[1].degenerate_fraction < 0.05);
    // too much interference does not keep improving
    CHECK(segments[2].rmse_bpm >= segments[1].rmse_bpm);

    SECTION("empty schedule is rejected") {
        spec.sigma_schedule.clear();
        CHECK_THROWS_AS(hi_staircase_sim(spec), std::invalid_argument);
    }
    SECTION("an offset floor at or past half the step cannot be satisfied") {
        spec.min_abs_offset_db = 0.5;
        CHECK_THROWS_AS(hi_staircase_sim(spec), std::invalid_argument);
    }
}

TEST_CASE("monte carlo bound check") {
    BoundCheckScenario check;
    check.scenario = reference_scenario();
    check.grid = kCoarse;

    SECTION("too few trials are rejected") {
        CHECK_THROWS_AS(monte_carlo_bound_check(check, 0, 1), std::invalid_argument);
        CHECK_THROWS_AS(monte_carlo_bound_check(check, 50, 1), std::invalid_argument);
    }
    SECTION("quantized data near the optimal noise level passes") {
        const auto result = monte_carlo_bound_check(check, 150, 3);
        CHECK_FALSE(result.inconclusive);
        CHECK(result.pass);
        CHECK(result.ratio > 1.0);
    }
    SECTION("unquantized estimator stays above the reference bound; factor recorded") {
        check.quantized = false;
        check.scenario.noise_sigma_db = 0.7;
        const auto result = monte_carlo_bound_check(check, 150, 4);
        CHECK_FALSE(result.inconclusive);
        CHECK(result.pass);
        INFO("efficiency factor (variance / bound): " << result.ratio);
        CHECK(result.ratio >= 1.0);
    }
    SECTION("a silent scenario is inconclusive, not wrong") {
        check.scenario.noise_sigma_db = 1e-6;
        check.scenario.amplitude_db = 0.01;
        // offset drawn in [-0.5, 0.5] nearly always exceeds the amplitude, so
        // almost every trial is constant after quantization
        const auto result = monte_carlo_bound_check(check, 120, 5);
        CHECK(result.inconclusive);
    }
}

TEST_CASE("mitigation policies") {
    const FixedScenario base = reference_scenario();

    SECTION("never-both reports the attacker-best of the two points") {
        MitigationPolicy policy;
        policy.kind = MitigationKind::NeverBoth;
        policy.offered = {{4.0, 2.0}, {20.0, 8.0}};
        const auto report = evaluate_mitigation(policy, base, AveragingGrid{4, 9});
        REQUIRE(report.options.size() == 2);
        CHECK(report.attacker_min_std_freq_bpm ==
              Catch::Approx(std::min(report.options[0].min_std_freq_bpm,
                                     report.options[1].min_std_freq_bpm)));
    }
    SECTION("adaptive quantization guarantees a quarter-step offset") {
        MitigationPolicy policy;
        policy.kind = MitigationKind::AdaptiveQuantization;
        const auto report = evaluate_mitigation(policy, base, AveragingGrid{4, 9});
        CHECK(report.guaranteed_min_abs_offset_db == Catch::Approx(0.25));
        CHECK(report.worst_sampled_offset_db >= 0.25 - 1e-12);
        // restricting the offset strictly raises the bound
        CHECK(report.attacker_min_std_freq_bpm > report.static_std_freq_bpm);
    }
    SECTION("adaptive rate starves the estimator") {
        MitigationPolicy policy;
        policy.kind = MitigationKind::AdaptiveRate;
        policy.low_rate_hz = 0.25;
        const auto report = evaluate_mitigation(policy, base, AveragingGrid{4, 9});
        REQUIRE(report.options.size() == 1);
        // a 0.25 Hz tone sampled at 0.25 Hz aliases to DC: no rate information
        CHECK(report.attacker_min_std_freq_bpm > 100.0);
    }
    SECTION("malformed policies are rejected") {
        MitigationPolicy policy;
        policy.kind = MitigationKind::NeverBoth;
        policy.offered = {{4.0, 2.0}};
        CHECK_THROWS_AS(evaluate_mitigation(policy, base), std::invalid_argument);
        policy.kind = MitigationKind::LessInfo;
        policy.offered.clear();
        CHECK_THROWS_AS(evaluate_mitigation(policy, base), std::invalid_argument);
    }
}

TEST_CASE("sweeps are reproducible bit for bit") {
    SweepSpec spec;
    spec.axis = SweepAxis::NoiseSigma;
    spec.scenario = reference_scenario();
    spec.grid = AveragingGrid{4, 9};
    spec.values = {0.1, 0.25, 0.5};
    spec.trials = 40;  // exercise the Monte Carlo column too
    const auto a = sweep_noise(spec);
    const auto b = sweep_noise(spec);
    CHECK(a.rows == b.rows);

    // measured error never beats the bound
    const auto mc = a.column("mc_rmse_bpm");
    const auto f = a.column("crb_std_frequency_bpm");
    for (const auto& row : a.rows) {
        CHECK(row[mc] >= row[f]);
    }
}
