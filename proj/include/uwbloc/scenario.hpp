#ifndef UWBLOC_SCENARIO_HPP_
#define UWBLOC_SCENARIO_HPP_

#include <filesystem>
#include <map>
#include <optional>
#include <vector>

#include "uwbloc/core.hpp"
#include "uwbloc/localizer.hpp"
#include "uwbloc/radio_sim.hpp"

namespace uwbloc {

// ---------------------------------------------------------------------------
// Trajectories

/// Constant-speed piecewise-linear path. Holds the last point after `duration()`.
class Trajectory {
 public:
  /// Throws ConfigError for fewer than 2 waypoints, a zero-length path or a
  /// non-positive speed. Zero-length segments are dropped.
  static Trajectory polyline(std::vector<Point3> waypoints, double speed);
  /// Motionless tag.
  static Trajectory stationary(const Point3& position, double duration);

  Point3 at(double t) const;
  double duration() const noexcept { return knot_times_.back(); }
  double length() const noexcept { return length_; }
  const std::vector<Point3>& waypoints() const noexcept { return waypoints_; }
  TrajectoryFn as_function() const;

 private:
  Trajectory() = default;

  std::vector<Point3> waypoints_;
  std::vector<double> knot_times_;
  double length_{0.0};
};

/// Closed square of side `side` at height `height`, starting and ending at
/// corner `origin` and running counter-clockwise in the xy plane.
Trajectory gen_square(double side, double height, double speed, const Point3& origin = Point3::Zero());

Trajectory gen_polyline(std::vector<Point3> waypoints, double speed);

/// Six anchors on the perimeter of a 9 m x 9 m area, alternating 0.3 m / 2.0 m heights.
AnchorConfiguration replication_anchors();

/// Flight-like closed polyline inside the replication area, 60 s long.
Trajectory replication_flight();

/// Jitter sigma that makes the ranging protocol's distance noise have std
/// `range_std` (each exchange sees three jittered rx timestamps with weights
/// 1/4, 1/2, 1/4 in the time of flight).
double jitter_sigma_for_range_std(double range_std);

// ---------------------------------------------------------------------------
// Metrics

/// | |estimate - anchor| - measured |
double range_error(const Point3& anchor_pos, const Point3& estimated_pos, double measured_distance);

struct RangeErrorSample {
  DeviceId anchor;
  double time{0.0};
  double error{0.0};

  friend bool operator==(const RangeErrorSample&, const RangeErrorSample&) = default;
};

struct ErrorReport {
  std::vector<RangeErrorSample> samples;  // accepted ranges, in processing order
  std::optional<double> position_rmse;    // unset without ground truth
  std::size_t rmse_samples{0};
  std::size_t measurements{0};
  std::size_t accepted{0};
  std::size_t rejected{0};

  friend bool operator==(const ErrorReport&, const ErrorReport&) = default;
};

struct SeriesStats {
  std::size_t count{0};
  double mean{0.0};
  double std{0.0};  // population
  double min{0.0};
  double max{0.0};
};

/// Throws ContractViolation for an empty series.
SeriesStats series_stats(const std::vector<double>& values);

struct Summary {
  SeriesStats overall;
  std::map<std::uint8_t, SeriesStats> per_anchor;
  std::vector<DeviceId> anchors_without_samples;
  double fraction_below_1m{0.0};
  std::optional<double> position_rmse;
  std::size_t measurements{0};
  std::size_t accepted{0};
  std::size_t rejected{0};
};

/// Aggregate statistics. `anchors` lists every anchor expected to report; ones
/// with no samples are omitted from per_anchor and flagged instead.
/// Throws ContractViolation when the report has no samples at all.
Summary summarize(const ErrorReport& report, const AnchorConfiguration& anchors);

/// Nearest-in-time association of estimates to truth. Pairs further apart than
/// `max_gap` are ignored, as are estimates before `from_time`.
struct RmseResult {
  double rmse{0.0};
  std::size_t pairs{0};
};
std::optional<RmseResult> position_rmse(const std::vector<EstimateRow>& estimates,
                                        const std::vector<TruthSample>& truth, double max_gap = 0.05,
                                        double from_time = -1.0);

/// Range errors for the accepted records plus counters and, when truth is
/// given, position RMSE.
ErrorReport build_error_report(const std::vector<MeasurementRecord>& records,
                               const std::vector<EstimateRow>& trajectory, const AnchorConfiguration& anchors,
                               const std::vector<TruthSample>* truth);

// ---------------------------------------------------------------------------
// Experiments

struct ExperimentConfig {
  SimConfig sim;
  LocalizerConfig localizer;
};

struct ExperimentResult {
  SimLog log;
  std::vector<MeasurementRecord> records;
  std::vector<EstimateRow> trajectory;
  ErrorReport report;
};

/// Feeds measurements through a fresh Localizer in order.
Localizer run_localizer(const std::vector<RangeMeasurement>& measurements, const AnchorConfiguration& anchors,
                        const LocalizerConfig& config);

ExperimentResult run_experiment(const ExperimentConfig& config);

/// Writes truth_trajectory.csv, estimated_trajectory.csv, range_errors.csv and
/// plot_results.py into `dir`. Returns the written paths.
std::vector<std::filesystem::path> emit_plot_data(const std::filesystem::path& dir,
                                                  const std::vector<TruthSample>& truth,
                                                  const std::vector<EstimateRow>& trajectory,
                                                  const ErrorReport& report);

}  // namespace uwbloc

#endif  // UWBLOC_SCENARIO_HPP_
