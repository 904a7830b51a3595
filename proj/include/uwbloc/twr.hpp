#ifndef UWBLOC_TWR_HPP_
#define UWBLOC_TWR_HPP_

// Two-way ranging between one tag and a set of anchors.
//
// Exchange with anchor A (tag T polls anchors one after the other):
//
//   T --POLL-->     A      t_SP (T tx)  t_RP (A rx)
//   T <--RESPONSE-- A      t_SR (A tx)  t_RR (T rx)
//   T --FINAL-->    A      t_SF (T tx)  t_RF (A rx), FINAL carries t_SP, t_RR, t_SF
//   * <--REPORT--   A      broadcast of the distance computed by A
//
// An anchor that does not answer within the response timeout (or whose REPORT
// never arrives) is skipped for this cycle and polled again on the next one.

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "uwbloc/core.hpp"

namespace uwbloc {

// ---------------------------------------------------------------------------
// Frames and wire format

enum class FrameKind : std::uint8_t { kPoll = 0x01, kResponse = 0x02, kFinal = 0x03, kReport = 0x04 };

const char* to_string(FrameKind kind);

struct FinalPayload {
  TickTimestamp poll_tx;      // t_SP
  TickTimestamp response_rx;  // t_RR
  TickTimestamp final_tx;     // t_SF

  friend bool operator==(const FinalPayload&, const FinalPayload&) = default;
};

struct ReportPayload {
  DeviceId tag;
  DeviceId anchor;
  std::uint32_t distance_mm{0};

  friend bool operator==(const ReportPayload&, const ReportPayload&) = default;
};

using FramePayload = std::variant<std::monostate, FinalPayload, ReportPayload>;

struct Frame {
  FrameKind kind{FrameKind::kPoll};
  std::uint8_t seq{0};
  DeviceId src;
  DeviceId dst;
  FramePayload payload;

  friend bool operator==(const Frame&, const Frame&) = default;
};

Frame make_poll(std::uint8_t seq, DeviceId tag, DeviceId anchor);
Frame make_response(std::uint8_t seq, DeviceId anchor, DeviceId tag);
Frame make_final(std::uint8_t seq, DeviceId tag, DeviceId anchor, const FinalPayload& times);
Frame make_report(std::uint8_t seq, DeviceId anchor, DeviceId tag, std::uint32_t distance_mm);

inline constexpr std::size_t kHeaderBytes = 4;
inline constexpr std::size_t kFinalPayloadBytes = 15;
inline constexpr std::size_t kReportPayloadBytes = 6;

/// Serializes a frame. Layout: kind, seq, src, dst, then the payload with all
/// multi-byte integers little-endian (40-bit timestamps as 5 bytes).
/// Throws MalformedFrame if the frame violates its own invariants
/// (payload type not matching kind, REPORT not broadcast, src 255).
std::vector<std::uint8_t> encode_frame(const Frame& frame);

/// Inverse of encode_frame. Throws MalformedFrame on unknown kind, wrong
/// length, or any invariant violation.
Frame decode_frame(std::span<const std::uint8_t> bytes);

// ---------------------------------------------------------------------------
// Distance from one completed exchange

/// Time of flight in ticks by asymmetric double-sided TWR:
///   R1 = t_RR - t_SP, D1 = t_SR - t_RP, R2 = t_RF - t_SR, D2 = t_SF - t_RR
///   tof = (R1*R2 - D1*D2) / (R1 + R2 + D1 + D2)
/// First-order clock frequency offsets between the two devices cancel.
/// Throws DegenerateExchange when all four intervals are zero.
double compute_tof_ticks(TickTimestamp t_sp, TickTimestamp t_rp, TickTimestamp t_sr,
                         TickTimestamp t_rr, TickTimestamp t_sf, TickTimestamp t_rf);

/// Distance in meters; negative time of flight clamps to 0.
double compute_distance(TickTimestamp t_sp, TickTimestamp t_rp, TickTimestamp t_sr,
                        TickTimestamp t_rr, TickTimestamp t_sf, TickTimestamp t_rf);

/// Rounds to whole millimeters, saturating at the 32-bit range.
std::uint32_t to_distance_mm(double meters);

// ---------------------------------------------------------------------------
// Protocol engines

struct ProtocolConfig {
  double response_timeout{5e-3};  // s, counted from POLL transmission
  double report_timeout{10e-3};   // s, counted from FINAL transmission
  double reply_delay{3e-3};       // s, fixed turnaround before every delayed transmission

  /// Throws ConfigError unless every field is positive and finite.
  void validate() const;

  /// Upper bound on the duration of one full polling cycle over `anchors` anchors.
  double cycle_bound(std::size_t anchors) const {
    return static_cast<double>(anchors) * (response_timeout + report_timeout + 2.0 * reply_delay);
  }

  friend bool operator==(const ProtocolConfig&, const ProtocolConfig&) = default;
};

// Events injected by the driver.
struct ClockTick {
  TickTimestamp now;
};
struct FrameReceived {
  Frame frame;
  TickTimestamp rx;
};
struct TimerExpired {
  std::uint32_t timer_id{0};
  TickTimestamp now;
};
struct SendComplete {
  TickTimestamp tx;
};

using TagEvent = std::variant<ClockTick, FrameReceived, TimerExpired>;
using AnchorEvent = std::variant<FrameReceived, SendComplete>;

// Actions requested from the driver.
struct SendFrame {
  Frame frame;
  /// Delayed transmission at this device-clock reading; nullopt sends immediately.
  std::optional<TickTimestamp> at;

  friend bool operator==(const SendFrame&, const SendFrame&) = default;
};
/// Arms the single device timer, replacing any pending one. Duration is in device seconds.
struct ArmTimer {
  std::uint32_t timer_id{0};
  double timeout{0.0};

  friend bool operator==(const ArmTimer&, const ArmTimer&) = default;
};
struct SkipAnchor {
  DeviceId anchor;
  std::uint8_t seq{0};

  friend bool operator==(const SkipAnchor&, const SkipAnchor&) = default;
};

using Action = std::variant<SendFrame, ArmTimer, SkipAnchor>;

/// Tag side: polls each anchor in turn, skipping the silent ones.
class TagEngine {
 public:
  enum class Phase : std::uint8_t { kIdle, kAwaitResponse, kAwaitReport };

  TagEngine(DeviceId self, std::vector<DeviceId> anchors, ProtocolConfig config);

  std::vector<Action> on_event(const TagEvent& event);

  DeviceId self() const noexcept { return self_; }
  Phase phase() const noexcept { return phase_; }
  std::size_t cursor() const noexcept { return cursor_; }
  std::uint8_t seq() const noexcept { return seq_; }
  DeviceId current_anchor() const { return anchors_[cursor_]; }
  std::uint32_t timer_id() const noexcept { return timer_id_; }

  friend bool operator==(const TagEngine&, const TagEngine&) = default;

 private:
  std::vector<Action> poll_current(TickTimestamp now);
  std::vector<Action> advance(TickTimestamp now);
  std::vector<Action> on_frame(const FrameReceived& rx);

  DeviceId self_;
  std::vector<DeviceId> anchors_;
  ProtocolConfig config_;
  std::uint64_t reply_delay_ticks_;
  std::size_t cursor_{0};
  std::uint8_t seq_{0};
  Phase phase_{Phase::kIdle};
  std::uint32_t timer_id_{0};
  TickTimestamp poll_tx_;
  TickTimestamp response_rx_;
  TickTimestamp final_tx_;
};

/// Anchor side: answers POLLs addressed to it and broadcasts the resulting distance.
class AnchorEngine {
 public:
  enum class Phase : std::uint8_t { kIdle, kAwaitFinal };

  AnchorEngine(DeviceId self, ProtocolConfig config);

  std::vector<Action> on_event(const AnchorEvent& event);

  DeviceId self() const noexcept { return self_; }
  Phase phase() const noexcept { return phase_; }
  /// Distance of the most recent completed exchange, if any.
  std::optional<double> last_distance() const noexcept { return last_distance_; }

  friend bool operator==(const AnchorEngine&, const AnchorEngine&) = default;

 private:
  std::vector<Action> on_frame(const FrameReceived& rx);

  DeviceId self_;
  ProtocolConfig config_;
  std::uint64_t reply_delay_ticks_;
  Phase phase_{Phase::kIdle};
  DeviceId peer_;
  std::uint8_t seq_{0};
  TickTimestamp poll_rx_;
  TickTimestamp response_tx_;
  std::optional<double> last_distance_;
};

}  // namespace uwbloc

#endif  // UWBLOC_TWR_HPP_
