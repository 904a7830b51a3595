#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "uwbloc/batch.hpp"
#include "uwbloc/csv_io.hpp"
#include "uwbloc/error.hpp"
#include "uwbloc/run_config.hpp"
#include "uwbloc/scenario.hpp"

namespace uwbloc::cli {

namespace fs = std::filesystem;

namespace {

constexpr double kAssociationGap = 0.05;  // s

/// Runs `body`, mapping exceptions onto exit codes. `source` prefixes
/// line-anchored diagnostics.
template <typename Fn>
int guarded(std::ostream& err, const fs::path& source, Fn&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << source.string();
    if (e.line() > 0) err << ':' << e.line();
    err << ": error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
}

void write_summary(const fs::path& dir, const Summary& summary, std::ostream& out) {
  csv::write_file(dir / "summary.txt", [&](std::ostream& os) { csv::write_summary_table(os, summary); });
  csv::write_file(dir / "summary.kv", [&](std::ostream& os) { csv::write_summary_kv(os, summary); });
  csv::write_summary_table(out, summary);
}

void write_run_outputs(const fs::path& dir, const ExperimentResult& result, const AnchorConfiguration& anchors,
                       std::ostream& out) {
  fs::create_directories(dir);
  csv::write_file(dir / "simlog.csv", [&](std::ostream& os) { csv::write_simlog(os, result.log); });
  csv::write_file(dir / "measurements.csv",
                  [&](std::ostream& os) { csv::write_measurements(os, result.log.measurements()); });
  emit_plot_data(dir, result.log.truth(), result.trajectory, result.report);
  if (result.report.samples.empty()) throw Error("no accepted ranges; nothing to summarize");
  write_summary(dir, summarize(result.report, anchors), out);
}

}  // namespace

int cmd_simulate(const fs::path& config, const GlobalOptions& opts, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  if (int rc = guarded(err, config, [&] {
        cfg = load_run_config(config);
        return 0;
      })) {
    return rc;
  }
  if (opts.seed) cfg.seed = *opts.seed;
  const fs::path dir = opts.out.value_or(fs::path(cfg.output_dir));

  return guarded(err, config, [&] {
    if (opts.runs < 1) throw ConfigError("--runs must be >= 1");
    if (opts.runs == 1) {
      write_run_outputs(dir, run_experiment(cfg.to_experiment()), cfg.anchors, out);
      return static_cast<int>(kOk);
    }
    const auto results = run_batch_parallel(cfg, opts.runs);
    for (std::size_t i = 0; i < results.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof(name), "run_%03zu", i);
      std::ostringstream quiet;
      write_run_outputs(dir / name, results[i], cfg.anchors, quiet);
    }
    out << "merged over " << results.size() << " runs (seeds " << cfg.seed << ".."
        << cfg.seed + results.size() - 1 << ")\n";
    write_summary(dir, summarize(merge_reports(results), cfg.anchors), out);
    return static_cast<int>(kOk);
  });
}

int cmd_replay(const fs::path& measurements, const fs::path& config, const GlobalOptions& opts, std::ostream& out,
               std::ostream& err) {
  RunConfig cfg;
  if (int rc = guarded(err, config, [&] {
        cfg = load_run_config(config);
        return 0;
      })) {
    return rc;
  }
  std::vector<RangeMeasurement> ms;
  if (int rc = guarded(err, measurements, [&] {
        auto in = csv::open_input(measurements);
        ms = csv::read_measurements(in);
        if (ms.empty()) throw ConfigError("measurement log is empty");
        return 0;
      })) {
    return rc;
  }

  const fs::path dir = opts.out.value_or(fs::path(cfg.output_dir));
  return guarded(err, measurements, [&] {
    const Localizer localizer = run_localizer(ms, cfg.anchors, cfg.localizer);
    const ErrorReport report =
        build_error_report(localizer.records(), localizer.trajectory(), cfg.anchors, nullptr);
    fs::create_directories(dir);
    csv::write_file(dir / "estimated_trajectory.csv",
                    [&](std::ostream& os) { csv::write_estimates(os, localizer.trajectory()); });
    csv::write_file(dir / "range_errors.csv", [&](std::ostream& os) { csv::write_range_errors(os, report.samples); });
    if (report.samples.empty()) throw Error("no accepted ranges; nothing to summarize");
    write_summary(dir, summarize(report, cfg.anchors), out);
    return static_cast<int>(kOk);
  });
}

int cmd_eval(const fs::path& estimate, const fs::path& truth, const std::optional<fs::path>& config,
             const GlobalOptions& opts, std::ostream& out, std::ostream& err) {
  std::optional<RunConfig> cfg;
  if (config) {
    if (int rc = guarded(err, *config, [&] {
          cfg = load_run_config(*config);
          return 0;
        })) {
      return rc;
    }
  }
  std::vector<EstimateRow> estimates;
  if (int rc = guarded(err, estimate, [&] {
        auto in = csv::open_input(estimate);
        estimates = csv::read_estimates(in);
        return 0;
      })) {
    return rc;
  }
  std::vector<TruthSample> truth_samples;
  std::optional<SimLog> log;
  if (int rc = guarded(err, truth, [&] {
        const bool is_simlog = csv::peek_header(truth).rfind("time_s,kind,", 0) == 0;
        auto in = csv::open_input(truth);
        if (is_simlog) {
          log = csv::read_simlog(in);
          truth_samples = log->truth();
        } else {
          truth_samples = csv::read_truth(in);
        }
        return 0;
      })) {
    return rc;
  }

  const auto rmse = position_rmse(estimates, truth_samples, kAssociationGap);
  if (!rmse) {
    err << truth.string() << ": error: no overlapping time range between estimate and truth\n";
    return kUsageError;
  }

  const fs::path dir = opts.out.value_or(fs::path("eval_out"));
  return guarded(err, truth, [&] {
    ErrorReport report;
    report.position_rmse = rmse->rmse;
    report.rmse_samples = rmse->pairs;
    if (log && cfg) {
      // Range error of every received range against the nearest estimate.
      for (const auto& m : log->measurements()) {
        const auto anchor = cfg->anchors.position_of(m.anchor);
        if (!anchor) continue;
        ++report.measurements;
        auto it = std::lower_bound(estimates.begin(), estimates.end(), m.time,
                                   [](const EstimateRow& r, double t) { return r.time < t; });
        const EstimateRow* best = it != estimates.end() ? &*it : nullptr;
        if (it != estimates.begin() && (!best || m.time - std::prev(it)->time <= best->time - m.time)) {
          best = &*std::prev(it);
        }
        if (!best || std::abs(best->time - m.time) > kAssociationGap) {
          ++report.rejected;
          continue;
        }
        ++report.accepted;
        report.samples.push_back({m.anchor, m.time, range_error(*anchor, best->position, m.distance)});
      }
    }
    emit_plot_data(dir, truth_samples, estimates, report);
    out << "position RMSE: " << csv::format_double(rmse->rmse) << " m over " << rmse->pairs << " pairs\n";
    csv::write_file(dir / "metrics.kv", [&](std::ostream& os) {
      os << "position_rmse=" << csv::format_double(rmse->rmse) << '\n' << "pairs=" << rmse->pairs << '\n';
    });
    if (!report.samples.empty()) write_summary(dir, summarize(report, cfg->anchors), out);
    return static_cast<int>(kOk);
  });
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Range-only UWB localization: simulate, replay and evaluate"};
  app.require_subcommand(1);

  GlobalOptions opts;
  std::uint64_t seed = 0;
  std::string out_dir;
  auto* seed_opt = app.add_option("--seed", seed, "Override the configuration seed");
  auto* out_opt = app.add_option("--out", out_dir, "Output directory");
  app.add_option("--runs", opts.runs, "Independent seeded runs (simulate only)")->check(CLI::PositiveNumber);

  std::string sim_config;
  auto* simulate = app.add_subcommand("simulate", "Simulate the ranging network and run the estimator");
  simulate->add_option("config", sim_config, "Run configuration (YAML)")->required();
  simulate->fallthrough();

  std::string replay_log;
  std::string replay_config;
  auto* replay = app.add_subcommand("replay", "Run the estimator over a recorded measurement log");
  replay->add_option("measurements", replay_log, "Measurement CSV (time_s,anchor,seq,distance_m)")->required();
  replay->add_option("config", replay_config, "Configuration providing anchors and ekf settings")->required();
  replay->fallthrough();

  std::string eval_estimate;
  std::string eval_truth;
  std::string eval_config;
  auto* eval = app.add_subcommand("eval", "Compare an estimated trajectory with ground truth");
  eval->add_option("estimate", eval_estimate, "Estimated trajectory CSV")->required();
  eval->add_option("truth", eval_truth, "Truth CSV (time_s,x,y,z) or a simulation log")->required();
  eval->add_option("--config", eval_config, "Configuration with anchor positions (enables range errors)");
  eval->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kOk : kUsageError;
  }
  if (*seed_opt) opts.seed = seed;
  if (*out_opt) opts.out = fs::path(out_dir);

  if (*simulate) return cmd_simulate(sim_config, opts, out, err);
  if (*replay) return cmd_replay(replay_log, replay_config, opts, out, err);
  std::optional<fs::path> cfg;
  if (!eval_config.empty()) cfg = fs::path(eval_config);
  return cmd_eval(eval_estimate, eval_truth, cfg, opts, out, err);
}

}  // namespace uwbloc::cli
