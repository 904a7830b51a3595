#ifndef UWBLOC_RADIO_SIM_HPP_
#define UWBLOC_RADIO_SIM_HPP_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <vector>

#include "uwbloc/core.hpp"
#include "uwbloc/twr.hpp"

namespace uwbloc {

/// Oscillator of one device: reading(t) = (1 + drift) * t + offset, in seconds.
struct ClockModel {
  double offset{0.0};  // s
  double drift{0.0};   // fractional frequency error, e.g. 20e-6
  DeviceId owner;

  void validate() const;
};

inline constexpr double kMaxClockDrift = 100e-6;

/// floor(((1 + drift) * sim_time + offset) / tick) mod 2^40.
TickTimestamp device_now(const ClockModel& clock, double sim_time);

/// Simulation time at which `clock` reads `target`, taking the reading nearest
/// to the clock's value at `sim_now` (targets up to half a period in the past or future).
double sim_time_of(const ClockModel& clock, TickTimestamp target, double sim_now);

struct MediumModel {
  double loss_probability{0.0};        // per frame and receiver
  double timestamp_jitter_sigma{0.0};  // s, Gaussian noise on every rx timestamp
  std::map<std::uint8_t, double> range_bias;  // m, extra path on tag<->anchor links, by anchor id

  void validate() const;
  double bias_between(DeviceId a, DeviceId b) const;
};

/// Silences an anchor from `at` until `restore` (forever when unset).
struct AnchorOutage {
  DeviceId anchor;
  double at{0.0};
  std::optional<double> restore;

  bool active(double t) const { return t >= at && (!restore || t < *restore); }
};

using TrajectoryFn = std::function<Point3(double)>;

struct SimConfig {
  AnchorConfiguration anchors;
  DeviceId tag_id{0};
  /// Ground-station radio that listens for REPORT broadcasts.
  DeviceId listener_id{254};
  Point3 listener_position{Point3::Zero()};
  TrajectoryFn tag_trajectory;
  std::vector<ClockModel> clocks;  // devices without an entry have an ideal clock
  MediumModel medium;
  ProtocolConfig protocol;
  double duration{1.0};
  std::uint64_t rng_seed{0};
  std::vector<AnchorOutage> outages;

  /// Throws ConfigError on an unusable configuration.
  void validate() const;
  ClockModel clock_of(DeviceId id) const;
};

/// Schedules an outage; throws ConfigError for an unknown anchor.
void drop_anchor(SimConfig& config, DeviceId anchor, double at,
                 std::optional<double> restore = std::nullopt);

// ---------------------------------------------------------------------------
// Log

enum class LogKind : std::uint8_t { kPoll, kResponse, kFinal, kReport, kMeasurement, kSkip };

const char* to_string(LogKind kind);
std::optional<LogKind> parse_log_kind(std::string_view text);

/// One SimLog row.
///  POLL/RESPONSE/FINAL/REPORT: a transmission. REPORT rows carry the distance the
///    anchor computed before millimeter rounding.
///  MEAS: a REPORT received by the listener, i.e. a RangeMeasurement, with the
///    tag's true position at that instant.
///  SKIP: the tag gave up on `anchor` for this cycle.
struct SimLogEntry {
  double time{0.0};
  LogKind kind{LogKind::kPoll};
  DeviceId src;
  DeviceId dst;
  std::uint8_t seq{0};
  std::optional<DeviceId> anchor;
  std::optional<double> distance;
  std::optional<Point3> truth;

  friend bool operator==(const SimLogEntry&, const SimLogEntry&) = default;
};

struct TruthSample {
  double time{0.0};
  Point3 position;
};

struct SimLog {
  std::vector<SimLogEntry> entries;

  std::vector<RangeMeasurement> measurements() const;
  std::vector<TruthSample> truth() const;
  std::size_t count(LogKind kind) const;

  friend bool operator==(const SimLog&, const SimLog&) = default;
};

// ---------------------------------------------------------------------------
// Event queue

/// Min-queue on (time, insertion order).
template <typename Payload>
class EventQueue {
 public:
  struct Entry {
    double time;
    std::uint64_t order;
    Payload payload;
  };

  void push(double time, Payload payload) { heap_.push(Entry{time, next_order_++, std::move(payload)}); }
  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }
  double next_time() const { return heap_.top().time; }

  Entry pop() {
    Entry e = heap_.top();
    heap_.pop();
    return e;
  }

 private:
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.time != b.time) return a.time > b.time;
      return a.order > b.order;
    }
  };
  std::priority_queue<Entry, std::vector<Entry>, Later> heap_;
  std::uint64_t next_order_{0};
};

/// Runs the tag and anchor engines over the simulated medium for `duration`
/// seconds. Deterministic for a given config, including rng_seed.
///
/// Random draw order (single mt19937_64 stream): for every transmission, for each
/// receiving device in order tag, anchors (configuration order), listener, one
/// uniform draw for loss when loss_probability > 0, then one normal draw for the
/// rx timestamp when the frame survives and jitter is enabled.
SimLog run(const SimConfig& config);

}  // namespace uwbloc

#endif  // UWBLOC_RADIO_SIM_HPP_
