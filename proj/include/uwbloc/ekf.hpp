#ifndef UWBLOC_EKF_HPP_
#define UWBLOC_EKF_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <span>

#include <Eigen/Core>

#include "uwbloc/core.hpp"

namespace uwbloc {

using Vector3 = Eigen::Vector3d;
using StateVector = Eigen::Matrix<double, 6, 1>;
using Covariance = Eigen::Matrix<double, 6, 6>;
using MeasurementJacobian = Eigen::Matrix<double, 2, 6>;

/// Position/velocity filter state. Covariance order is [x y z vx vy vz].
struct EkfState {
  Point3 x{Point3::Zero()};
  Vector3 v{Vector3::Zero()};
  Covariance P{Covariance::Identity()};
  double last_update_time{0.0};
  Point3 prev_x{Point3::Zero()};  // posterior position after the previous update

  StateVector mean() const;
  double position_trace() const { return P.topLeftCorner<3, 3>().trace(); }
};

struct NoiseConfig {
  double sigma_accel{2.0};   // m/s^2, white-acceleration process noise
  double sigma_range{0.15};  // m, per range
  double p0_pos{25.0};       // m^2
  double p0_vel{4.0};        // (m/s)^2

  void validate() const;
};

/// Outlier gates. Coherence only applies once the filter has converged.
struct GateConfig {
  double min_range{0.1};
  double max_range{100.0};
  double coherence_threshold{2.0};
  double convergence_trace_threshold{0.75};  // m^2, trace of the position block
  int convergence_consecutive{10};

  void validate() const;
};

/// How the second measurement row models the anchor's previous range.
enum class MeasurementModel : std::uint8_t {
  /// Previous position is x - v * dt, so d_{k-1} informs velocity as well.
  kVelocitySubstitution,
  /// Previous position is the stored posterior prev_x, a constant with zero Jacobian row.
  kStoredPrevious,
};

/// Last accepted range per anchor (the d_{k-1} of the two-range measurement).
class PerAnchorHistory {
 public:
  struct Entry {
    double distance;
    double time;
  };

  std::optional<Entry> find(DeviceId anchor) const;
  void record(DeviceId anchor, double distance, double time);
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::uint8_t, Entry> entries_;
};

/// Constant-velocity prediction: x += v * dt, P = F P F^T + Q.
/// Throws ContractViolation for negative dt.
EkfState predict(const EkfState& state, double dt, const NoiseConfig& noise);

/// White-acceleration process noise for one step.
Covariance process_noise(double dt, double sigma_accel);

struct PredictedRanges {
  Eigen::Vector2d h;
  MeasurementJacobian H;
};

/// h = [|x - p|, |x_prev - p|] and its Jacobian in the 6D state, where the range
/// measured `dt_prev` seconds ago is modeled according to `model`.
/// nullopt when the tag estimate coincides with the anchor (singular geometry).
std::optional<PredictedRanges> predict_ranges(const EkfState& state, const Point3& anchor, double dt_prev,
                                              MeasurementModel model);

enum class UpdateStatus : std::uint8_t { kApplied, kSeeded, kSingular };

struct UpdateResult {
  EkfState state;
  UpdateStatus status;
};

/// Two-range update with z = [d_k, d_{k-1}]. `state` must already be predicted to
/// m.time. A first range from an anchor only seeds `history`; singular geometry
/// leaves the state unchanged. `history` is refreshed with m in every case.
UpdateResult update(const EkfState& state, const RangeMeasurement& m, const Point3& anchor_pos,
                    PerAnchorHistory& history, const NoiseConfig& noise,
                    MeasurementModel model = MeasurementModel::kVelocitySubstitution);

enum class GateVerdict : std::uint8_t { kAccept, kRejectBand, kRejectCoherence };

struct GateDecision {
  GateVerdict verdict{GateVerdict::kAccept};
  double error{0.0};  // |d - |x - p||, filled when the coherence check ran

  bool accepted() const { return verdict == GateVerdict::kAccept; }
};

GateDecision gate(const RangeMeasurement& m, const EkfState& state, const Point3& anchor_pos,
                  const GateConfig& cfg, bool converged);

/// Latching convergence detector over successive applied updates.
class ConvergenceMonitor {
 public:
  bool observe(const EkfState& state, const GateConfig& cfg);
  bool converged() const noexcept { return latched_; }
  int streak() const noexcept { return streak_; }

 private:
  int streak_{0};
  bool latched_{false};
};

/// Initial state from one polling cycle: position by least squares, zero velocity,
/// diagonal covariance, history seeded with the cycle's ranges.
/// Throws ContractViolation with fewer than 4 distinct anchors; propagates
/// trilateration errors.
EkfState initialize(std::span<const RangeMeasurement> cycle, const AnchorConfiguration& anchors,
                    const NoiseConfig& noise, PerAnchorHistory& history);

}  // namespace uwbloc

#endif  // UWBLOC_EKF_HPP_
