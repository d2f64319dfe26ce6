#pragma once

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "rssbound/config.hpp"
#include "rssbound/crb.hpp"
#include "rssbound/csv.hpp"
#include "rssbound/dsp.hpp"
#include "rssbound/experiments.hpp"
#include "rssbound/signal.hpp"
#include "rssbound/trace_io.hpp"
#include "rssbound/types.hpp"

namespace rssbound::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitValidation = 3;

namespace detail {

inline std::vector<std::pair<std::string, std::string>> provenance(const RunConfig& cfg) {
    return {{"config_hash", hash_string(cfg.config_hash)},
            {"seed", std::to_string(cfg.seed)}};
}

inline std::filesystem::path out_path(const RunConfig& cfg, const std::string& name) {
    std::filesystem::create_directories(cfg.output_dir);
    return std::filesystem::path(cfg.output_dir) / name;
}

inline int selftest(std::ostream& out) {
    bool all_ok = true;
    auto report = [&](const std::string& name, bool ok, const std::string& detail) {
        out << "selftest: " << name << " ... " << (ok ? "ok" : "FAIL");
        if (!detail.empty()) {
            out << " (" << detail << ")";
        }
        out << "\n";
        all_ok = all_ok && ok;
    };

    {
        // erfcx spot checks against high-precision reference values.
        struct Ref {
            double x, want;
        };
        const Ref refs[] = {
            {0.0, 1.0},
            {0.5, 0.6156903441929258749},
            {1.0, 0.4275835761558070044},
            {2.0, 0.2553956763105057439},
            {4.2426406871192851464, 0.1295586286488936987},
            {8.0, 0.06998516620088092772},
            {16.0, 0.03519337782493083757},
            {27.0, 0.02088160799042094067},
            {-1.0, 5.008980080762283466},
            {-3.0, 16205.98885399958663},
        };
        double worst = 0.0;
        for (const Ref& r2 : refs) {
            worst = std::max(worst, std::abs(erfcx(r2.x) / r2.want - 1.0));
        }
        report("erfcx reference values", worst < 1e-12,
               "max rel err " + format_double(worst));
    }
    {
        // pmf normalization and analytic gradient vs central differences.
        Philox rng(20240901);
        const AcquisitionSpec acq{10.0, 64};
        double worst_sum = 0.0;
        double worst_grad = 0.0;
        for (int draw = 0; draw < 1000; ++draw) {
            // Within four sigma of the threshold the gradient is visible to
            // finite differences; beyond that the pmf is exponentially flat.
            SinusoidParams p;
            std::size_t k = 0;
            for (;;) {
                p.amplitude_db = rng.uniform(0.02, 0.5);
                p.omega_rad_s = rng.uniform(0.6, 3.5);
                p.phase_rad = rng.uniform(0.0, kTwoPi);
                p.noise_sigma_db = rng.uniform(0.1, 1.0);
                p.dc_offset_db = rng.uniform(-1.0, 1.0) * 2.0 * p.noise_sigma_db;
                k = static_cast<std::size_t>(rng.uniform01() * acq.num_samples);
                const double th = p.omega_rad_s * acq.sample_period_s() * k + p.phase_rad;
                const double m = p.amplitude_db * std::cos(th) + p.dc_offset_db;
                if (std::abs(m) <= 4.0 * p.noise_sigma_db) {
                    break;
                }
            }
            const int q = rng.uniform01() < 0.5 ? -1 : +1;
            worst_sum = std::max(worst_sum,
                                 std::abs(sample_pmf(+1, k, p, acq) +
                                          sample_pmf(-1, k, p, acq) - 1.0));
            const auto grad = pmf_partials(q, k, p, acq);
            const double h = 1e-6;
            for (int axis = 0; axis < 4; ++axis) {
                auto bump = [&](double eps) {
                    SinusoidParams b = p;
                    switch (axis) {
                        case 0: b.amplitude_db += eps; break;
                        case 1: b.dc_offset_db += eps; break;
                        case 2: b.omega_rad_s += eps; break;
                        default: b.phase_rad += eps; break;
                    }
                    return sample_pmf(q, k, b, acq);
                };
                const double fd = (bump(h) - bump(-h)) / (2.0 * h);
                const double scale = std::max({std::abs(grad[axis]), std::abs(fd), 1e-12});
                worst_grad = std::max(worst_grad, std::abs(grad[axis] - fd) / scale);
            }
        }
        report("pmf normalization", worst_sum < 1e-14,
               "max |sum-1| " + format_double(worst_sum));
        report("pmf gradient vs central differences", worst_grad < 1e-5,
               "max rel err " + format_double(worst_grad));
    }
    {
        // Sum-over-outcomes and closed-form information matrices agree.
        Philox rng(20240902);
        double worst = 0.0;
        for (int draw = 0; draw < 500; ++draw) {
            SinusoidParams p;
            p.amplitude_db = rng.uniform(0.02, 0.5);
            p.omega_rad_s = rng.uniform(0.6, 3.5);
            p.phase_rad = rng.uniform(0.0, kTwoPi);
            p.noise_sigma_db = rng.uniform(0.1, 1.0);
            p.dc_offset_db = rng.uniform(-1.0, 1.0) * 2.0 * p.noise_sigma_db;
            const AcquisitionSpec acq{10.0, 40};
            const FisherMatrix a = fim_generic(p, acq);
            const FisherMatrix b = fim_closed_form(p, acq);
            const double scale = norm1(a.m);
            for (int i = 0; i < 4; ++i) {
                for (int j = 0; j < 4; ++j) {
                    worst = std::max(worst, std::abs(a.m[i][j] - b.m[i][j]) / scale);
                }
            }
        }
        report("information matrix cross-form", worst < 1e-10,
               "max rel err " + format_double(worst));
    }
    return all_ok ? kExitOk : kExitRuntime;
}

inline void emit_gnuplot_sweep(const RunConfig& cfg, const std::string& csv_name,
                               const std::string& script_name, const std::string& xlabel) {
    std::ofstream gp(out_path(cfg, script_name), std::ios::binary);
    gp << "set datafile separator ','\n"
       << "set logscale xy\n"
       << "set xlabel '" << xlabel << "'\n"
       << "set ylabel 'bound std'\n"
       << "plot '" << csv_name << "' using 1:2 with linespoints title 'amplitude (dB)', \\\n"
       << "     '" << csv_name << "' using 1:3 with linespoints title 'frequency (bpm)'\n";
}

inline int run_simulate(const RunConfig& cfg, const std::string& output,
                        bool continuous, std::ostream& out) {
    const SinusoidParams params = cfg.sinusoid();
    RssTrace trace =
        synthesize_received_power(params, cfg.scenario.acquisition(), cfg.seed);
    if (!continuous) {
        trace = quantize(trace, cfg.scenario.quantizer);
    }
    const auto path = output.empty() ? out_path(cfg, "trace.csv").string() : output;
    export_trace(trace, path, {{"config_hash", hash_string(cfg.config_hash)}});
    out << "wrote " << to_string(trace.kind) << " trace (" << trace.samples.size()
        << " samples at " << format_double(trace.acquisition.sample_rate_hz)
        << " Hz) to " << path << "\n";
    return kExitOk;
}

inline int run_estimate(const RunConfig& cfg, const std::string& trace_path,
                        std::ostream& out) {
    const RssTrace trace = import_trace(trace_path);
    const EstimateResult rate = estimate_rate(trace, cfg.filter, cfg.search);
    out << "f_hat_hz=" << format_double(rate.f_hat_hz)
        << " rate_bpm=" << format_double(rate.rate_bpm)
        << " amplitude_hat=" << format_double(rate.amplitude_hat)
        << " degenerate=" << (rate.degenerate ? 1 : 0) << "\n";
    if (rate.degenerate) {
        out << "note: trace is constant after filtering; no rate information\n";
    }
    return kExitOk;
}

inline int run_crb(const RunConfig& cfg, std::ostream& out) {
    BoundScenario scenario = cfg.scenario.bound_scenario();
    if (!(scenario.noise_sigma_db > 0.0)) {
        throw ConfigError("scenario.noise_sigma_db: must be > 0 for the quantized bound");
    }
    const CrbReport avg = averaged_crb(scenario, cfg.scenario.quantizer, cfg.grid);
    SinusoidParams ref;
    ref.amplitude_db = cfg.scenario.amplitude_db;
    ref.omega_rad_s = cfg.scenario.omega_rad_s();
    ref.noise_sigma_db = cfg.scenario.noise_sigma_db;
    const CrbReport unq = unquantized_crb_reference(ref, scenario.acquisition);

    out << "# config: " << hash_string(cfg.config_hash) << " seed: " << cfg.seed << "\n";
    if (!avg.bounded) {
        out << "averaged bound: unbounded (" << avg.unbounded_points
            << " singular grid points; median std over grid: amplitude "
            << format_double(std::sqrt(avg.median_crb_amplitude)) << " dB, frequency "
            << format_double(60.0 / kTwoPi * std::sqrt(avg.median_crb_frequency))
            << " bpm)\n";
    } else {
        out << "averaged std(A_hat): " << format_double(avg.std_amplitude_db) << " dB\n";
        out << "averaged std(f_hat): " << format_double(avg.std_frequency_bpm) << " bpm\n";
    }
    out << "unquantized reference std(A_hat): " << format_double(unq.std_amplitude_db)
        << " dB\n";
    out << "unquantized reference std(f_hat): " << format_double(unq.std_frequency_bpm)
        << " bpm\n";
    return kExitOk;
}

inline int run_sweep(const RunConfig& cfg, const std::string& axis_flag, bool plot,
                     std::ostream& out) {
    SweepSpec spec;
    spec.scenario = cfg.scenario;
    spec.grid = cfg.grid;
    spec.trials = cfg.sweep.trials;
    spec.seed = cfg.seed;
    spec.axis = cfg.sweep.axis;
    if (!axis_flag.empty()) {
        if (axis_flag == "noise") {
            spec.axis = SweepAxis::NoiseSigma;
        } else if (axis_flag == "step") {
            spec.axis = SweepAxis::StepDelta;
        } else if (axis_flag == "rate") {
            spec.axis = SweepAxis::SampleRate;
        } else {
            throw CLI::ValidationError("--axis", "must be noise, step or rate");
        }
    }
    spec.values = cfg.sweep.values;
    if (spec.values.empty()) {
        switch (spec.axis) {
            case SweepAxis::NoiseSigma: {
                const double step = cfg.scenario.quantizer.step_db;
                for (int i = 0; i < 25; ++i) {
                    spec.values.push_back(step / 50.0 *
                                          std::pow(100.0, i / 24.0));  // up to 2*step
                }
                break;
            }
            case SweepAxis::StepDelta:
                spec.values = {0.5, 1.0, 2.0, 4.0, 8.0};
                break;
            case SweepAxis::SampleRate:
                spec.values = {1.0, 2.0, 5.0, 10.0, 20.0, 50.0};
                break;
            case SweepAxis::Amplitude:
                spec.values = {0.05, 0.1, 0.2, 0.4};
                break;
        }
    }

    SweepResult result;
    std::string name;
    auto meta = provenance(cfg);
    if (spec.axis == SweepAxis::NoiseSigma) {
        result = sweep_noise(spec);
        name = "sweep_noise_sigma.csv";
        meta.push_back({"units",
                        "noise_sigma_db=dB, crb_std_amplitude_db=dB, "
                        "crb_std_frequency_bpm=bpm, unquantized_std_amplitude_db=dB, "
                        "unquantized_std_frequency_bpm=bpm, mc_rmse_bpm=bpm"});
    } else if (spec.axis == SweepAxis::StepDelta) {
        const StepSizeSweep sweep = sweep_step_size(spec);
        result = sweep.table;
        name = "sweep_step_delta.csv";
        meta.push_back({"units", "step_db=dB, sigma_opt_db=dB, "
                                 "min_std_frequency_bpm=bpm, min_std_amplitude_db=dB"});
        meta.push_back({"freq_linear_fit",
                        format_double(sweep.freq_linear.coeffs[0]) + " + " +
                            format_double(sweep.freq_linear.coeffs[1]) + "*step, R2=" +
                            format_double(sweep.freq_linear.r2)});
        meta.push_back({"amp_quadratic_fit",
                        format_double(sweep.amp_quadratic.coeffs[0]) + " + " +
                            format_double(sweep.amp_quadratic.coeffs[1]) + "*step + " +
                            format_double(sweep.amp_quadratic.coeffs[2]) + "*step^2, R2=" +
                            format_double(sweep.amp_quadratic.r2)});
    } else {
        result = sweep_sampling_rate(spec);
        name = "sweep_sample_rate.csv";
        meta.push_back({"units", "sample_rate_hz=Hz, crb_std_amplitude_db=dB, "
                                 "crb_std_frequency_bpm=bpm"});
    }
    meta.push_back({"axis", to_string(result.axis)});
    const auto path = out_path(cfg, name);
    write_csv(path.string(), meta, result.columns, result.rows);
    out << "wrote " << result.rows.size() << " rows to " << path.string() << "\n";
    if (plot) {
        emit_gnuplot_sweep(cfg, name, name.substr(0, name.size() - 4) + ".gp",
                           to_string(result.axis));
    }
    return kExitOk;
}

inline int run_contour(const RunConfig& cfg, bool plot, std::ostream& out) {
    ContourSpec spec;
    spec.base = cfg.scenario;
    spec.grid = cfg.grid;
    spec.sample_rates_hz = cfg.contour.sample_rates_hz;
    spec.steps_db = cfg.contour.steps_db;
    spec.levels_bpm = cfg.contour.levels_bpm;
    const ContourResult result = contour_grid(spec);

    auto meta = provenance(cfg);
    meta.push_back({"units", "sample_rate_hz=Hz, step_db=dB, min_std_frequency_bpm=bpm, "
                             "min_std_amplitude_db=dB, sigma_opt_db=dB"});
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < result.sample_rates_hz.size(); ++i) {
        for (std::size_t j = 0; j < result.steps_db.size(); ++j) {
            rows.push_back({result.sample_rates_hz[i], result.steps_db[j],
                            result.min_std_freq_bpm[i][j], result.min_std_amp_db[i][j],
                            result.sigma_opt_db[i][j]});
        }
    }
    const auto field_path = out_path(cfg, "contour_field.csv");
    write_csv(field_path.string(), meta,
              {"sample_rate_hz", "step_db", "min_std_frequency_bpm",
               "min_std_amplitude_db", "sigma_opt_db"},
              rows);

    std::vector<std::vector<double>> line_rows;
    for (std::size_t l = 0; l < result.freq_contours.size(); ++l) {
        for (const auto& [fs, step] : result.freq_contours[l].points) {
            line_rows.push_back({result.freq_contours[l].level,
                                 static_cast<double>(l), fs, step});
        }
    }
    const auto lines_path = out_path(cfg, "contour_lines.csv");
    write_csv(lines_path.string(), provenance(cfg),
              {"level_bpm", "polyline", "sample_rate_hz", "step_db"}, line_rows);

    out << "wrote field (" << rows.size() << " cells) to " << field_path.string()
        << " and " << result.freq_contours.size() << " polylines to "
        << lines_path.string() << "\n";
    if (plot) {
        std::ofstream gp(out_path(cfg, "contour.gp"), std::ios::binary);
        gp << "set datafile separator ','\n"
           << "set logscale xy\nset xlabel 'sample rate (Hz)'\nset ylabel 'step (dB)'\n"
           << "plot 'contour_lines.csv' using 3:4 with lines title 'iso-std (bpm)'\n";
    }
    return kExitOk;
}

inline int run_staircase(const RunConfig& cfg, std::ostream& out) {
    StaircaseSpec spec;
    spec.scenario = cfg.scenario;
    spec.sigma_schedule = cfg.staircase.sigma_schedule;
    spec.segment_s = cfg.staircase.segment_s;
    spec.hop_s = cfg.staircase.hop_s;
    spec.realizations = cfg.staircase.realizations;
    spec.min_abs_offset_db = cfg.staircase.min_abs_offset_db;
    spec.seed = cfg.seed;
    spec.filter = cfg.filter;
    spec.search = cfg.search;
    const auto segments = hi_staircase_sim(spec);

    std::vector<std::vector<double>> rows;
    for (const auto& seg : segments) {
        rows.push_back({seg.sigma_db, static_cast<double>(seg.windows), seg.rmse_bpm,
                        seg.degenerate_fraction});
        out << "sigma=" << format_double(seg.sigma_db) << " dB: rmse="
            << format_double(seg.rmse_bpm) << " bpm over " << seg.windows
            << " windows (degenerate fraction "
            << format_double(seg.degenerate_fraction) << ")\n";
    }
    const auto path = out_path(cfg, "staircase.csv");
    write_csv(path.string(), provenance(cfg),
              {"sigma_db", "windows", "rmse_bpm", "degenerate_fraction"}, rows);
    out << "wrote " << path.string() << "\n";
    return kExitOk;
}

inline int run_mitigate(const RunConfig& cfg, std::ostream& out) {
    MitigationPolicy policy;
    policy.kind = cfg.mitigation.kind;
    policy.offered = cfg.mitigation.offered;
    policy.low_rate_hz = cfg.mitigation.low_rate_hz;
    policy.switch_period_s = cfg.mitigation.switch_period_s;
    if (policy.kind == MitigationKind::LessInfo && policy.offered.size() > 1) {
        policy.offered.resize(1);
    }
    const MitigationReport report =
        evaluate_mitigation(policy, cfg.scenario, cfg.grid, {}, cfg.seed);

    out << "policy: " << to_string(report.kind) << "\n";
    std::vector<std::vector<double>> rows;
    for (const auto& opt : report.options) {
        out << "  option fs=" << format_double(opt.point.sample_rate_hz)
            << " Hz, step=" << format_double(opt.point.step_db)
            << " dB -> min std(f_hat)=" << format_double(opt.min_std_freq_bpm)
            << " bpm, min std(A_hat)=" << format_double(opt.min_std_amp_db)
            << " dB (sigma_opt=" << format_double(opt.sigma_opt_db) << ")\n";
        rows.push_back({opt.point.sample_rate_hz, opt.point.step_db,
                        opt.min_std_freq_bpm, opt.min_std_amp_db, opt.sigma_opt_db});
    }
    out << "attacker-best min std(f_hat): "
        << format_double(report.attacker_min_std_freq_bpm) << " bpm\n";
    out << "attacker-best min std(A_hat): "
        << format_double(report.attacker_min_std_amp_db) << " dB\n";
    if (report.kind == MitigationKind::AdaptiveQuantization) {
        out << "guaranteed |B| >= " << format_double(report.guaranteed_min_abs_offset_db)
            << " dB (worst sampled " << format_double(report.worst_sampled_offset_db)
            << " dB); static bound without re-selection: "
            << format_double(report.static_std_freq_bpm) << " bpm\n";
    }
    for (const auto& note : report.notes) {
        out << "note: " << note << "\n";
    }
    const auto path = out_path(cfg, "mitigation.csv");
    write_csv(path.string(), provenance(cfg),
              {"sample_rate_hz", "step_db", "min_std_frequency_bpm",
               "min_std_amplitude_db", "sigma_opt_db"},
              rows);
    return kExitOk;
}

}  // namespace detail

// Entry point shared by the binary and the tests. argv excludes the program
// name. Exit codes: 0 ok, 1 runtime failure, 2 usage error, 3 validation.
inline int run_subcommand(const std::vector<std::string>& argv,
                          std::ostream& out = std::cout,
                          std::ostream& err = std::cerr) {
    CLI::App app{"estimation-bound toolkit for quantized RSS breathing surveillance"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed_override;
    app.add_option("--config", config_path, "path to an INI-style run configuration");
    app.add_option("--out", out_dir, "output directory (overrides config)");
    app.add_option("--seed", seed_override, "seed (overrides config)");

    auto* simulate = app.add_subcommand("simulate", "synthesize a trace and write it out");
    std::string trace_out;
    bool continuous = false;
    simulate->add_option("--output", trace_out, "trace file path");
    simulate->add_flag("--continuous", continuous, "skip quantization");

    auto* estimate = app.add_subcommand("estimate", "estimate rate and amplitude from a trace file");
    std::string trace_in;
    estimate->add_option("--trace", trace_in, "trace file to analyze")->required();

    app.add_subcommand("crb", "averaged estimation bounds at the configured point");

    auto* sweep = app.add_subcommand("sweep", "bound sweeps over noise, step or rate");
    std::string axis;
    bool plot = false;
    sweep->add_option("--axis", axis, "noise | step | rate");
    sweep->add_flag("--plot", plot, "also write a gnuplot script");

    auto* contour = app.add_subcommand("contour", "min-bound field over (rate, step) with iso-lines");
    bool contour_plot = false;
    contour->add_flag("--plot", contour_plot, "also write a gnuplot script");

    app.add_subcommand("staircase", "simulated interference staircase with per-segment error");
    app.add_subcommand("mitigate", "score a mitigation policy");
    app.add_subcommand("selftest", "run the built-in numerical cross-checks");

    std::vector<const char*> cargs;
    cargs.push_back("rssbound");
    for (const auto& a : argv) {
        cargs.push_back(a.c_str());
    }
    try {
        app.parse(static_cast<int>(cargs.size()), cargs.data());
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n" << app.help();
        return kExitUsage;
    }

    try {
        RunConfig cfg =
            config_path.empty() ? parse_config_text("") : parse_config(config_path);
        if (!out_dir.empty()) {
            cfg.output_dir = out_dir;
        }
        if (seed_override) {
            cfg.seed = *seed_override;
        }

        if (app.got_subcommand("selftest")) {
            return detail::selftest(out);
        }
        if (app.got_subcommand(simulate)) {
            return detail::run_simulate(cfg, trace_out, continuous, out);
        }
        if (app.got_subcommand(estimate)) {
            return detail::run_estimate(cfg, trace_in, out);
        }
        if (app.got_subcommand("crb")) {
            return detail::run_crb(cfg, out);
        }
        if (app.got_subcommand(sweep)) {
            return detail::run_sweep(cfg, axis, plot, out);
        }
        if (app.got_subcommand(contour)) {
            return detail::run_contour(cfg, contour_plot, out);
        }
        if (app.got_subcommand("staircase")) {
            return detail::run_staircase(cfg, out);
        }
        if (app.got_subcommand("mitigate")) {
            return detail::run_mitigate(cfg, out);
        }
        err << "no subcommand selected\n" << app.help();
        return kExitUsage;
    } catch (const CLI::ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        err << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

}  // namespace rssbound::cli
