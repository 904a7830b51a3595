#include "uwbloc/ekf.hpp"

#include <cmath>
#include <set>

#include <Eigen/Dense>

#include "uwbloc/error.hpp"
#include "uwbloc/trilateration.hpp"

namespace uwbloc {

namespace {

constexpr double kSingularRange = 1e-9;  // m

void symmetrize(Covariance& P) { P = 0.5 * (P + P.transpose()).eval(); }

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

StateVector EkfState::mean() const {
  StateVector s;
  s << x, v;
  return s;
}

void NoiseConfig::validate() const {
  if (!positive(sigma_accel) || !positive(sigma_range) || !positive(p0_pos) || !positive(p0_vel)) {
    throw ConfigError("ekf noise parameters must be positive");
  }
}

void GateConfig::validate() const {
  if (!(min_range >= 0.0) || !(max_range > min_range) || !std::isfinite(max_range)) {
    throw ConfigError("gate requires 0 <= min_range < max_range");
  }
  if (!positive(coherence_threshold) || !positive(convergence_trace_threshold) || convergence_consecutive < 1) {
    throw ConfigError("gate thresholds must be positive");
  }
}

std::optional<PerAnchorHistory::Entry> PerAnchorHistory::find(DeviceId anchor) const {
  if (auto it = entries_.find(anchor.value); it != entries_.end()) return it->second;
  return std::nullopt;
}

void PerAnchorHistory::record(DeviceId anchor, double distance, double time) {
  entries_[anchor.value] = Entry{distance, time};
}

Covariance process_noise(double dt, double sigma_accel) {
  const double q = sigma_accel * sigma_accel;
  const double dt2 = dt * dt;
  const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
  Covariance Q;
  Q.topLeftCorner<3, 3>() = 0.25 * dt2 * dt2 * q * I;
  Q.topRightCorner<3, 3>() = 0.5 * dt2 * dt * q * I;
  Q.bottomLeftCorner<3, 3>() = 0.5 * dt2 * dt * q * I;
  Q.bottomRightCorner<3, 3>() = dt2 * q * I;
  return Q;
}

EkfState predict(const EkfState& state, double dt, const NoiseConfig& noise) {
  if (!(dt >= 0.0)) throw ContractViolation("predict: dt must be non-negative");

  Covariance F = Covariance::Identity();
  F.topRightCorner<3, 3>() = dt * Eigen::Matrix3d::Identity();

  EkfState out = state;
  out.x = state.x + state.v * dt;
  out.P = F * state.P * F.transpose() + process_noise(dt, noise.sigma_accel);
  symmetrize(out.P);
  out.last_update_time = state.last_update_time + dt;
  return out;
}

std::optional<PredictedRanges> predict_ranges(const EkfState& state, const Point3& anchor, double dt_prev,
                                              MeasurementModel model) {
  const Vector3 now_delta = state.x - anchor;
  const double now_range = now_delta.norm();
  if (now_range < kSingularRange) return std::nullopt;

  PredictedRanges out;
  out.H.setZero();
  out.h(0) = now_range;
  out.H.block<1, 3>(0, 0) = (now_delta / now_range).transpose();

  if (model == MeasurementModel::kStoredPrevious) {
    const double prev_range = (state.prev_x - anchor).norm();
    if (prev_range < kSingularRange) return std::nullopt;
    out.h(1) = prev_range;
    return out;
  }

  const Vector3 prev_delta = state.x - state.v * dt_prev - anchor;
  const double prev_range = prev_delta.norm();
  if (prev_range < kSingularRange) return std::nullopt;
  const Eigen::RowVector3d w = (prev_delta / prev_range).transpose();
  out.h(1) = prev_range;
  out.H.block<1, 3>(1, 0) = w;
  out.H.block<1, 3>(1, 3) = -dt_prev * w;
  return out;
}

UpdateResult update(const EkfState& state, const RangeMeasurement& m, const Point3& anchor_pos,
                    PerAnchorHistory& history, const NoiseConfig& noise, MeasurementModel model) {
  const auto previous = history.find(m.anchor);
  history.record(m.anchor, m.distance, m.time);
  if (!previous) return {state, UpdateStatus::kSeeded};

  const double dt_prev = m.time - previous->time;
  const auto ranges = predict_ranges(state, anchor_pos, dt_prev, model);
  if (!ranges) return {state, UpdateStatus::kSingular};

  const Eigen::Vector2d z(m.distance, previous->distance);
  const Eigen::Vector2d innovation = z - ranges->h;
  const Eigen::Matrix2d R = Eigen::Matrix2d::Identity() * noise.sigma_range * noise.sigma_range;
  const auto& H = ranges->H;

  const Eigen::Matrix2d S = H * state.P * H.transpose() + R;
  const Eigen::Matrix<double, 6, 2> K = state.P * H.transpose() * S.inverse();

  EkfState out = state;
  const StateVector mean = state.mean() + K * innovation;
  out.x = mean.head<3>();
  out.v = mean.tail<3>();
  // Joseph form keeps P positive semidefinite under round-off.
  const Covariance A = Covariance::Identity() - K * H;
  out.P = A * state.P * A.transpose() + K * R * K.transpose();
  symmetrize(out.P);
  out.prev_x = out.x;
  return {out, UpdateStatus::kApplied};
}

GateDecision gate(const RangeMeasurement& m, const EkfState& state, const Point3& anchor_pos,
                  const GateConfig& cfg, bool converged) {
  if (!(m.distance >= cfg.min_range && m.distance <= cfg.max_range)) {
    return {GateVerdict::kRejectBand, 0.0};
  }
  if (!converged) return {};
  const double error = std::abs(m.distance - euclidean_distance(state.x, anchor_pos));
  if (error >= cfg.coherence_threshold) return {GateVerdict::kRejectCoherence, error};
  return {GateVerdict::kAccept, error};
}

bool ConvergenceMonitor::observe(const EkfState& state, const GateConfig& cfg) {
  if (latched_) return true;
  streak_ = state.position_trace() < cfg.convergence_trace_threshold ? streak_ + 1 : 0;
  latched_ = streak_ >= cfg.convergence_consecutive;
  return latched_;
}

EkfState initialize(std::span<const RangeMeasurement> cycle, const AnchorConfiguration& anchors,
                    const NoiseConfig& noise, PerAnchorHistory& history) {
  std::set<std::uint8_t> distinct;
  for (const auto& m : cycle) distinct.insert(m.anchor.value);
  if (distinct.size() < kMinAnchorsFor3d) {
    throw ContractViolation("initialize: need one cycle with at least 4 distinct anchors");
  }

  EkfState s;
  s.x = trilaterate_ls(cycle, anchors);
  s.v = Vector3::Zero();
  s.P = Covariance::Zero();
  s.P.diagonal() << Vector3::Constant(noise.p0_pos), Vector3::Constant(noise.p0_vel);
  s.prev_x = s.x;
  s.last_update_time = 0.0;
  for (const auto& m : cycle) {
    s.last_update_time = std::max(s.last_update_time, m.time);
    history.record(m.anchor, m.distance, m.time);
  }
  return s;
}

}  // namespace uwbloc
