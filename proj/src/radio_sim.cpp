#include "uwbloc/radio_sim.hpp"

#include <cmath>
#include <set>
#include <string>
#include <variant>

#include "uwbloc/error.hpp"

namespace uwbloc {

void ClockModel::validate() const {
  if (!std::isfinite(drift) || std::abs(drift) > kMaxClockDrift) {
    throw ConfigError("clock drift of device " + std::to_string(owner.value) + " exceeds 100 ppm");
  }
  if (!std::isfinite(offset) || offset < 0.0) {
    throw ConfigError("clock offset of device " + std::to_string(owner.value) + " must be >= 0");
  }
}

TickTimestamp device_now(const ClockModel& clock, double sim_time) {
  const double reading = (1.0 + clock.drift) * sim_time + clock.offset;
  const double ticks = std::floor(reading / kTickSeconds);
  return TickTimestamp(static_cast<std::uint64_t>(ticks));
}

double sim_time_of(const ClockModel& clock, TickTimestamp target, double sim_now) {
  const double reading = (1.0 + clock.drift) * sim_now + clock.offset;
  const double now_ticks = std::floor(reading / kTickSeconds);
  auto delta = static_cast<std::int64_t>(
      tick_diff(target, TickTimestamp(static_cast<std::uint64_t>(now_ticks))));
  if (delta >= static_cast<std::int64_t>(kTimestampModulus / 2)) {
    delta -= static_cast<std::int64_t>(kTimestampModulus);
  }
  const double target_reading = (now_ticks + static_cast<double>(delta)) * kTickSeconds;
  return (target_reading - clock.offset) / (1.0 + clock.drift);
}

void MediumModel::validate() const {
  if (!(loss_probability >= 0.0 && loss_probability <= 1.0)) {
    throw ConfigError("loss_probability must be in [0, 1]");
  }
  if (!(timestamp_jitter_sigma >= 0.0) || !std::isfinite(timestamp_jitter_sigma)) {
    throw ConfigError("timestamp jitter sigma must be >= 0");
  }
  for (const auto& [id, bias] : range_bias) {
    if (!std::isfinite(bias)) throw ConfigError("range bias of anchor " + std::to_string(id) + " is not finite");
  }
}

double MediumModel::bias_between(DeviceId a, DeviceId b) const {
  double bias = 0.0;
  if (auto it = range_bias.find(a.value); it != range_bias.end()) bias += it->second;
  if (auto it = range_bias.find(b.value); it != range_bias.end()) bias += it->second;
  return bias;
}

void SimConfig::validate() const {
  anchors.validate_for_localization();
  std::set<std::uint8_t> ids;
  for (const auto& a : anchors.entries()) ids.insert(a.id.value);
  for (DeviceId d : {tag_id, listener_id}) {
    if (d.is_broadcast()) throw ConfigError("device id 255 is reserved for broadcast");
    if (!ids.insert(d.value).second) {
      throw ConfigError("device id " + std::to_string(d.value) + " is used twice");
    }
  }
  if (!is_finite(listener_position)) throw ConfigError("listener position must be finite");
  if (!tag_trajectory) throw ConfigError("tag trajectory is missing");
  for (const auto& c : clocks) c.validate();
  medium.validate();
  protocol.validate();
  if (!(duration > 0.0) || !std::isfinite(duration)) throw ConfigError("duration must be > 0");
  for (const auto& o : outages) {
    if (!anchors.index_of(o.anchor)) {
      throw ConfigError("outage for unknown anchor " + std::to_string(o.anchor.value));
    }
  }
}

ClockModel SimConfig::clock_of(DeviceId id) const {
  for (const auto& c : clocks) {
    if (c.owner == id) return c;
  }
  return ClockModel{0.0, 0.0, id};
}

void drop_anchor(SimConfig& config, DeviceId anchor, double at, std::optional<double> restore) {
  if (!config.anchors.index_of(anchor)) {
    throw ConfigError("cannot drop unknown anchor " + std::to_string(anchor.value));
  }
  if (restore && *restore <= at) throw ConfigError("anchor restore time must follow the drop time");
  config.outages.push_back(AnchorOutage{anchor, at, restore});
}

const char* to_string(LogKind kind) {
  switch (kind) {
    case LogKind::kPoll:
      return "POLL";
    case LogKind::kResponse:
      return "RESPONSE";
    case LogKind::kFinal:
      return "FINAL";
    case LogKind::kReport:
      return "REPORT";
    case LogKind::kMeasurement:
      return "MEAS";
    case LogKind::kSkip:
      return "SKIP";
  }
  return "?";
}

std::optional<LogKind> parse_log_kind(std::string_view text) {
  for (auto k : {LogKind::kPoll, LogKind::kResponse, LogKind::kFinal, LogKind::kReport,
                 LogKind::kMeasurement, LogKind::kSkip}) {
    if (text == to_string(k)) return k;
  }
  return std::nullopt;
}

std::vector<RangeMeasurement> SimLog::measurements() const {
  std::vector<RangeMeasurement> out;
  for (const auto& e : entries) {
    if (e.kind == LogKind::kMeasurement) out.push_back({*e.anchor, e.seq, *e.distance, e.time});
  }
  return out;
}

std::vector<TruthSample> SimLog::truth() const {
  std::vector<TruthSample> out;
  for (const auto& e : entries) {
    if (e.truth) out.push_back({e.time, *e.truth});
  }
  return out;
}

std::size_t SimLog::count(LogKind kind) const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.kind == kind ? 1 : 0;
  return n;
}

namespace {

LogKind log_kind_of(FrameKind kind) {
  switch (kind) {
    case FrameKind::kPoll:
      return LogKind::kPoll;
    case FrameKind::kResponse:
      return LogKind::kResponse;
    case FrameKind::kFinal:
      return LogKind::kFinal;
    case FrameKind::kReport:
      return LogKind::kReport;
  }
  return LogKind::kPoll;
}

struct StartTag {};
struct TxStart {
  std::size_t device;
  Frame frame;
  std::optional<TickTimestamp> programmed;
  std::optional<double> exact_distance;
};
struct Delivery {
  std::size_t device;
  Frame frame;
  TickTimestamp rx;
};
struct TimerFire {
  std::size_t device;
  std::uint32_t timer_id;
};

using SimEvent = std::variant<StartTag, TxStart, Delivery, TimerFire>;

// Device indices: 0 = tag, 1..N = anchors, N + 1 = listener.
class Simulation {
 public:
  explicit Simulation(const SimConfig& cfg) : cfg_(cfg), rng_(cfg.rng_seed), tag_(make_tag(cfg)) {
    ids_.push_back(cfg.tag_id);
    for (const auto& a : cfg.anchors.entries()) {
      ids_.push_back(a.id);
      anchors_.emplace_back(a.id, cfg.protocol);
    }
    ids_.push_back(cfg.listener_id);
    for (DeviceId id : ids_) clocks_.push_back(cfg.clock_of(id));
  }

  SimLog run() {
    queue_.push(0.0, StartTag{});
    while (!queue_.empty() && queue_.next_time() <= cfg_.duration) {
      auto e = queue_.pop();
      now_ = e.time;
      std::visit([this](auto& ev) { handle(ev); }, e.payload);
    }
    return std::move(log_);
  }

 private:
  static TagEngine make_tag(const SimConfig& cfg) {
    std::vector<DeviceId> ids;
    for (const auto& a : cfg.anchors.entries()) ids.push_back(a.id);
    return TagEngine(cfg.tag_id, std::move(ids), cfg.protocol);
  }

  std::size_t listener() const { return ids_.size() - 1; }
  bool is_anchor(std::size_t d) const { return d >= 1 && d < listener(); }

  bool silenced(std::size_t d, double t) const {
    if (!is_anchor(d)) return false;
    for (const auto& o : cfg_.outages) {
      if (o.anchor == ids_[d] && o.active(t)) return true;
    }
    return false;
  }

  Point3 position(std::size_t d, double t) const {
    if (d == 0) return cfg_.tag_trajectory(t);
    if (d == listener()) return cfg_.listener_position;
    return cfg_.anchors[d - 1].position;
  }

  void handle(const StartTag&) { apply(0, tag_.on_event(ClockTick{device_now(clocks_[0], now_)})); }

  void handle(const TimerFire& ev) {
    if (ev.device != 0) return;
    apply(0, tag_.on_event(TimerExpired{ev.timer_id, device_now(clocks_[0], now_)}));
  }

  void handle(const Delivery& ev) {
    if (silenced(ev.device, now_)) return;
    if (ev.device == 0) {
      apply(0, tag_.on_event(FrameReceived{ev.frame, ev.rx}));
    } else if (ev.device == listener()) {
      const auto& report = std::get<ReportPayload>(ev.frame.payload);
      log_.entries.push_back(SimLogEntry{now_, LogKind::kMeasurement, ev.frame.src, ev.frame.dst,
                                         ev.frame.seq, report.anchor, report.distance_mm / 1000.0,
                                         cfg_.tag_trajectory(now_)});
    } else {
      apply(ev.device, anchors_[ev.device - 1].on_event(FrameReceived{ev.frame, ev.rx}));
    }
  }

  void handle(const TxStart& ev) {
    if (silenced(ev.device, now_)) return;
    const Frame& f = ev.frame;
    SimLogEntry entry{now_, log_kind_of(f.kind), f.src, f.dst, f.seq, std::nullopt, std::nullopt,
                      std::nullopt};
    if (f.kind == FrameKind::kReport) {
      entry.anchor = f.src;
      entry.distance = ev.exact_distance;
    }
    log_.entries.push_back(entry);

    if (is_anchor(ev.device)) {
      const TickTimestamp tx = ev.programmed.value_or(device_now(clocks_[ev.device], now_));
      apply(ev.device, anchors_[ev.device - 1].on_event(SendComplete{tx}));
    }
    broadcast(ev.device, f);
  }

  void broadcast(std::size_t src, const Frame& f) {
    const Point3 src_pos = position(src, now_);
    const auto& medium = cfg_.medium;
    for (std::size_t r = 0; r < ids_.size(); ++r) {
      if (r == src) continue;
      if (r == listener() && f.kind != FrameKind::kReport) continue;
      if (medium.loss_probability > 0.0 && uniform_(rng_) < medium.loss_probability) continue;

      double jitter = 0.0;
      if (medium.timestamp_jitter_sigma > 0.0) jitter = normal_(rng_) * medium.timestamp_jitter_sigma;

      double path = euclidean_distance(src_pos, position(r, now_));
      if (src == 0 || r == 0) path += medium.bias_between(ids_[src], ids_[r]);
      const double arrival = now_ + std::max(path, 0.0) / kSpeedOfLight;

      const auto jitter_ticks = static_cast<std::int64_t>(std::llround(jitter / kTickSeconds));
      const TickTimestamp rx =
          device_now(clocks_[r], arrival).plus(static_cast<std::uint64_t>(jitter_ticks));
      queue_.push(arrival, Delivery{r, f, rx});
    }
  }

  void apply(std::size_t device, const std::vector<Action>& actions) {
    for (const auto& action : actions) {
      if (const auto* send = std::get_if<SendFrame>(&action)) {
        double t = now_;
        if (send->at) t = std::max(now_, sim_time_of(clocks_[device], *send->at, now_));
        std::optional<double> exact;
        if (send->frame.kind == FrameKind::kReport && is_anchor(device)) {
          exact = anchors_[device - 1].last_distance();
        }
        queue_.push(t, TxStart{device, send->frame, send->at, exact});
      } else if (const auto* arm = std::get_if<ArmTimer>(&action)) {
        queue_.push(now_ + arm->timeout / (1.0 + clocks_[device].drift), TimerFire{device, arm->timer_id});
      } else {
        const auto& skip = std::get<SkipAnchor>(action);
        log_.entries.push_back(SimLogEntry{now_, LogKind::kSkip, ids_[device], skip.anchor, skip.seq,
                                           skip.anchor, std::nullopt, std::nullopt});
      }
    }
  }

  const SimConfig& cfg_;
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
  TagEngine tag_;
  std::vector<AnchorEngine> anchors_;
  std::vector<DeviceId> ids_;
  std::vector<ClockModel> clocks_;
  EventQueue<SimEvent> queue_;
  SimLog log_;
  double now_{0.0};
};

}  // namespace

SimLog run(const SimConfig& config) {
  config.validate();
  return Simulation(config).run();
}

}  // namespace uwbloc
