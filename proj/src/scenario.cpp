#include "uwbloc/scenario.hpp"

#include <algorithm>
#include <cmath>

#include "uwbloc/csv_io.hpp"
#include "uwbloc/error.hpp"

namespace uwbloc {

// ---------------------------------------------------------------------------
// Trajectories

Trajectory Trajectory::polyline(std::vector<Point3> waypoints, double speed) {
  if (!(speed > 0.0) || !std::isfinite(speed)) throw ConfigError("trajectory speed must be > 0");
  if (waypoints.size() < 2) throw ConfigError("polyline needs at least 2 waypoints");
  for (const auto& w : waypoints) {
    if (!is_finite(w)) throw ConfigError("waypoint is not finite");
  }

  Trajectory t;
  t.waypoints_.push_back(waypoints.front());
  t.knot_times_.push_back(0.0);
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    const double segment = euclidean_distance(t.waypoints_.back(), waypoints[i]);
    if (segment == 0.0) continue;
    t.length_ += segment;
    t.waypoints_.push_back(waypoints[i]);
    t.knot_times_.push_back(t.length_ / speed);
  }
  if (t.waypoints_.size() < 2) throw ConfigError("polyline has zero length");
  return t;
}

Trajectory Trajectory::stationary(const Point3& position, double duration) {
  if (!(duration > 0.0)) throw ConfigError("stationary trajectory needs a positive duration");
  if (!is_finite(position)) throw ConfigError("position is not finite");
  Trajectory t;
  t.waypoints_ = {position, position};
  t.knot_times_ = {0.0, duration};
  return t;
}

Point3 Trajectory::at(double t) const {
  if (!(t > 0.0)) return waypoints_.front();
  if (t >= duration()) return waypoints_.back();
  const auto it = std::upper_bound(knot_times_.begin(), knot_times_.end(), t);
  const auto i = static_cast<std::size_t>(it - knot_times_.begin());  // knot_times_[i-1] <= t < knot_times_[i]
  const double span = knot_times_[i] - knot_times_[i - 1];
  const double alpha = span > 0.0 ? (t - knot_times_[i - 1]) / span : 0.0;
  return waypoints_[i - 1] + alpha * (waypoints_[i] - waypoints_[i - 1]);
}

TrajectoryFn Trajectory::as_function() const {
  return [copy = *this](double t) { return copy.at(t); };
}

Trajectory gen_square(double side, double height, double speed, const Point3& origin) {
  if (!(side > 0.0)) throw ConfigError("square side must be > 0");
  const Point3 o(origin.x(), origin.y(), height);
  return Trajectory::polyline({o, o + Point3(side, 0, 0), o + Point3(side, side, 0), o + Point3(0, side, 0), o},
                              speed);
}

Trajectory gen_polyline(std::vector<Point3> waypoints, double speed) {
  return Trajectory::polyline(std::move(waypoints), speed);
}

AnchorConfiguration replication_anchors() {
  return AnchorConfiguration({
      {DeviceId{1}, Point3(0.0, 0.0, 0.3)},
      {DeviceId{2}, Point3(4.5, 0.0, 2.0)},
      {DeviceId{3}, Point3(9.0, 0.0, 0.3)},
      {DeviceId{4}, Point3(9.0, 9.0, 2.0)},
      {DeviceId{5}, Point3(4.5, 9.0, 0.3)},
      {DeviceId{6}, Point3(0.0, 9.0, 2.0)},
  });
}

Trajectory replication_flight() {
  std::vector<Point3> waypoints{
      {2.0, 2.0, 1.0}, {7.0, 2.0, 1.4}, {7.0, 7.0, 1.6}, {2.0, 7.0, 1.2},
      {3.0, 3.5, 1.0}, {6.0, 4.5, 1.5}, {4.5, 6.0, 1.3}, {2.0, 2.0, 1.0},
  };
  double length = 0.0;
  for (std::size_t i = 1; i < waypoints.size(); ++i) length += euclidean_distance(waypoints[i - 1], waypoints[i]);
  return Trajectory::polyline(std::move(waypoints), length / 60.0);
}

double jitter_sigma_for_range_std(double range_std) {
  return range_std / (kSpeedOfLight * std::sqrt(3.0 / 8.0));
}

// ---------------------------------------------------------------------------
// Metrics

double range_error(const Point3& anchor_pos, const Point3& estimated_pos, double measured_distance) {
  return std::abs(euclidean_distance(estimated_pos, anchor_pos) - measured_distance);
}

SeriesStats series_stats(const std::vector<double>& values) {
  if (values.empty()) throw ContractViolation("statistics of an empty series");
  SeriesStats s;
  s.count = values.size();
  s.min = *std::min_element(values.begin(), values.end());
  s.max = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.count);
  double sq = 0.0;
  for (double v : values) sq += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(sq / static_cast<double>(s.count));
  return s;
}

Summary summarize(const ErrorReport& report, const AnchorConfiguration& anchors) {
  if (report.samples.empty()) throw ContractViolation("summary needs at least one accepted range");
  Summary s;
  std::vector<double> all;
  std::map<std::uint8_t, std::vector<double>> by_anchor;
  std::size_t below = 0;
  for (const auto& e : report.samples) {
    all.push_back(e.error);
    by_anchor[e.anchor.value].push_back(e.error);
    below += e.error < 1.0 ? 1 : 0;
  }
  s.overall = series_stats(all);
  for (const auto& [anchor, values] : by_anchor) s.per_anchor[anchor] = series_stats(values);
  for (const auto& a : anchors.entries()) {
    if (!by_anchor.contains(a.id.value)) s.anchors_without_samples.push_back(a.id);
  }
  s.fraction_below_1m = static_cast<double>(below) / static_cast<double>(all.size());
  s.position_rmse = report.position_rmse;
  s.measurements = report.measurements;
  s.accepted = report.accepted;
  s.rejected = report.rejected;
  return s;
}

std::optional<RmseResult> position_rmse(const std::vector<EstimateRow>& estimates,
                                        const std::vector<TruthSample>& truth, double max_gap, double from_time) {
  if (truth.empty()) return std::nullopt;
  std::vector<TruthSample> sorted = truth;
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.time < b.time; });

  double sum = 0.0;
  std::size_t pairs = 0;
  for (const auto& e : estimates) {
    if (e.time < from_time) continue;
    auto it = std::lower_bound(sorted.begin(), sorted.end(), e.time,
                               [](const TruthSample& s, double t) { return s.time < t; });
    const TruthSample* best = nullptr;
    if (it != sorted.end()) best = &*it;
    if (it != sorted.begin()) {
      const auto& prev = *std::prev(it);
      if (!best || e.time - prev.time <= best->time - e.time) best = &prev;
    }
    if (std::abs(best->time - e.time) > max_gap) continue;
    sum += (e.position - best->position).squaredNorm();
    ++pairs;
  }
  if (pairs == 0) return std::nullopt;
  return RmseResult{std::sqrt(sum / static_cast<double>(pairs)), pairs};
}

ErrorReport build_error_report(const std::vector<MeasurementRecord>& records,
                               const std::vector<EstimateRow>& trajectory, const AnchorConfiguration& anchors,
                               const std::vector<TruthSample>* truth) {
  ErrorReport report;
  report.measurements = records.size();
  for (const auto& r : records) {
    if (!is_accepted(r.disposition)) {
      ++report.rejected;
      continue;
    }
    ++report.accepted;
    const auto pos = anchors.position_of(r.measurement.anchor);
    report.samples.push_back(RangeErrorSample{r.measurement.anchor, r.measurement.time,
                                              range_error(*pos, *r.estimate, r.measurement.distance)});
  }
  if (truth != nullptr) {
    if (auto rmse = position_rmse(trajectory, *truth)) {
      report.position_rmse = rmse->rmse;
      report.rmse_samples = rmse->pairs;
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Experiments

Localizer run_localizer(const std::vector<RangeMeasurement>& measurements, const AnchorConfiguration& anchors,
                        const LocalizerConfig& config) {
  Localizer localizer(anchors, config);
  for (const auto& m : measurements) localizer.process(m);
  localizer.finish();
  return localizer;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  ExperimentResult result;
  result.log = run(config.sim);
  const Localizer localizer = run_localizer(result.log.measurements(), config.sim.anchors, config.localizer);
  result.records = localizer.records();
  result.trajectory = localizer.trajectory();
  const auto truth = result.log.truth();
  result.report = build_error_report(result.records, result.trajectory, config.sim.anchors, &truth);
  return result;
}

namespace {

constexpr const char* kPlotScript = R"(#!/usr/bin/env python3
"""Plots truth vs. estimated trajectory and per-anchor range errors."""
import csv
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))


def load(name):
    with open(os.path.join(HERE, name), newline="") as f:
        return list(csv.DictReader(f, skipinitialspace=True))


truth = load("truth_trajectory.csv")
est = load("estimated_trajectory.csv")
errors = load("range_errors.csv")

fig, ax = plt.subplots(1, 2, figsize=(12, 5))
ax[0].plot([float(r["x"]) for r in truth], [float(r["y"]) for r in truth], "k-", label="truth")
ax[0].plot([float(r["est_x"]) for r in est], [float(r["est_y"]) for r in est], "r.", ms=2, label="estimate")
ax[0].set_xlabel("x [m]")
ax[0].set_ylabel("y [m]")
ax[0].axis("equal")
ax[0].legend()

by_anchor = {}
for r in errors:
    by_anchor.setdefault(r["anchor_id"], []).append((float(r["time_s"]), float(r["range_error_m"])))
for anchor, series in sorted(by_anchor.items()):
    ax[1].plot([t for t, _ in series], [e for _, e in series], ".", ms=2, label="A" + anchor)
ax[1].set_xlabel("time [s]")
ax[1].set_ylabel("range error [m]")
ax[1].legend()

fig.tight_layout()
out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(HERE, "results.png")
fig.savefig(out, dpi=150)
)";

}  // namespace

std::vector<std::filesystem::path> emit_plot_data(const std::filesystem::path& dir,
                                                  const std::vector<TruthSample>& truth,
                                                  const std::vector<EstimateRow>& trajectory,
                                                  const ErrorReport& report) {
  std::filesystem::create_directories(dir);
  const std::vector<std::filesystem::path> paths{dir / "truth_trajectory.csv", dir / "estimated_trajectory.csv",
                                                 dir / "range_errors.csv", dir / "plot_results.py"};
  csv::write_file(paths[0], [&](std::ostream& out) { csv::write_truth(out, truth); });
  csv::write_file(paths[1], [&](std::ostream& out) { csv::write_estimates(out, trajectory); });
  csv::write_file(paths[2], [&](std::ostream& out) { csv::write_range_errors(out, report.samples); });
  csv::write_file(paths[3], [](std::ostream& out) { out << kPlotScript; });
  return paths;
}

}  // namespace uwbloc
