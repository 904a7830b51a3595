#ifndef UWBLOC_LOCALIZER_HPP_
#define UWBLOC_LOCALIZER_HPP_

#include <functional>
#include <optional>
#include <vector>

#include "uwbloc/core.hpp"
#include "uwbloc/ekf.hpp"

namespace uwbloc {

struct LocalizerConfig {
  NoiseConfig noise;
  GateConfig gate;
  MeasurementModel model{MeasurementModel::kVelocitySubstitution};

  void validate() const {
    noise.validate();
    gate.validate();
  }
};

/// What happened to one incoming range.
enum class Disposition : std::uint8_t {
  kInitialization,  // part of the cycle that initialized the filter
  kUpdated,
  kSeeded,    // first range from this anchor after initialization, history only
  kSingular,  // estimate on top of the anchor, update skipped
  kRejectedBand,
  kRejectedCoherence,
  kRejectedOutOfOrder,
  kRejectedUnknownAnchor,
  kRejectedUninitialized,  // arrived in a cycle that could not initialize the filter
};

const char* to_string(Disposition d);
bool is_accepted(Disposition d);

struct MeasurementRecord {
  RangeMeasurement measurement;
  Disposition disposition{Disposition::kUpdated};
  /// Tag position estimate once the range was processed (accepted ranges only).
  std::optional<Point3> estimate;
};

/// One row of the estimated trajectory.
struct EstimateRow {
  double time{0.0};
  Point3 position;
  Vector3 velocity;
  double p_trace_pos{0.0};
  bool converged{false};

  friend bool operator==(const EstimateRow&, const EstimateRow&) = default;
};

/// Ground-station estimator: gates ranges, initializes from the first usable
/// polling cycle, then runs predict/update per range in arrival order.
class Localizer {
 public:
  Localizer(AnchorConfiguration anchors, LocalizerConfig config);
  /// Called with the filter state after initialization and after every applied update.
  void set_observer(std::function<void(const EkfState&)> observer) { observer_ = std::move(observer); }

  void process(const RangeMeasurement& m);
  /// Resolves any buffered pre-initialization cycle. Call once after the last range.
  void finish();

  const std::vector<MeasurementRecord>& records() const noexcept { return records_; }
  const std::vector<EstimateRow>& trajectory() const noexcept { return trajectory_; }
  const std::optional<EkfState>& state() const noexcept { return state_; }
  bool converged() const noexcept { return convergence_.converged(); }
  std::size_t accepted_count() const;
  std::size_t rejected_count() const;

 private:
  void try_initialize();
  void reject_pending();
  void push_row(const EkfState& s);

  AnchorConfiguration anchors_;
  LocalizerConfig config_;
  std::optional<EkfState> state_;
  PerAnchorHistory history_;
  ConvergenceMonitor convergence_;
  std::vector<RangeMeasurement> pending_;
  std::vector<MeasurementRecord> records_;
  std::vector<EstimateRow> trajectory_;
  std::function<void(const EkfState&)> observer_;
};

}  // namespace uwbloc

#endif  // UWBLOC_LOCALIZER_HPP_
