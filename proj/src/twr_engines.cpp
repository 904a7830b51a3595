#include <algorithm>
#include <cmath>
#include <limits>

#include "uwbloc/error.hpp"
#include "uwbloc/twr.hpp"

namespace uwbloc {

double compute_tof_ticks(TickTimestamp t_sp, TickTimestamp t_rp, TickTimestamp t_sr,
                         TickTimestamp t_rr, TickTimestamp t_sf, TickTimestamp t_rf) {
  const __int128 round1 = tick_diff(t_rr, t_sp);
  const __int128 reply1 = tick_diff(t_sr, t_rp);
  const __int128 round2 = tick_diff(t_rf, t_sr);
  const __int128 reply2 = tick_diff(t_sf, t_rr);

  const __int128 denominator = round1 + round2 + reply1 + reply2;
  if (denominator == 0) throw DegenerateExchange();
  const __int128 numerator = round1 * round2 - reply1 * reply2;
  // Split into quotient and remainder so the division stays exact well past 2^53.
  const __int128 quotient = numerator / denominator;
  const __int128 remainder = numerator % denominator;
  return static_cast<double>(quotient) +
         static_cast<double>(remainder) / static_cast<double>(denominator);
}

double compute_distance(TickTimestamp t_sp, TickTimestamp t_rp, TickTimestamp t_sr,
                        TickTimestamp t_rr, TickTimestamp t_sf, TickTimestamp t_rf) {
  const double tof = compute_tof_ticks(t_sp, t_rp, t_sr, t_rr, t_sf, t_rf);
  return std::max(tof, 0.0) * kTickSeconds * kSpeedOfLight;
}

std::uint32_t to_distance_mm(double meters) {
  if (!(meters > 0.0)) return 0;
  const double mm = std::round(meters * 1000.0);
  if (mm >= static_cast<double>(std::numeric_limits<std::uint32_t>::max())) {
    return std::numeric_limits<std::uint32_t>::max();
  }
  return static_cast<std::uint32_t>(mm);
}

void ProtocolConfig::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(response_timeout) || !positive(report_timeout) || !positive(reply_delay)) {
    throw ConfigError("protocol timings must be positive");
  }
}

// ---------------------------------------------------------------------------
// TagEngine

TagEngine::TagEngine(DeviceId self, std::vector<DeviceId> anchors, ProtocolConfig config)
    : self_(self),
      anchors_(std::move(anchors)),
      config_(config),
      reply_delay_ticks_(seconds_to_ticks(config.reply_delay)) {
  if (anchors_.empty()) throw ConfigError("tag needs at least one anchor to poll");
  config_.validate();
}

std::vector<Action> TagEngine::on_event(const TagEvent& event) {
  if (const auto* tick = std::get_if<ClockTick>(&event)) {
    if (phase_ != Phase::kIdle) return {};
    return poll_current(tick->now);
  }
  if (const auto* rx = std::get_if<FrameReceived>(&event)) return on_frame(*rx);

  const auto& timer = std::get<TimerExpired>(event);
  if (phase_ == Phase::kIdle || timer.timer_id != timer_id_) return {};
  std::vector<Action> actions{SkipAnchor{anchors_[cursor_], seq_}};
  auto next = advance(timer.now);
  actions.insert(actions.end(), next.begin(), next.end());
  return actions;
}

std::vector<Action> TagEngine::poll_current(TickTimestamp now) {
  poll_tx_ = now.plus(reply_delay_ticks_);
  phase_ = Phase::kAwaitResponse;
  ++timer_id_;
  return {SendFrame{make_poll(seq_, self_, anchors_[cursor_]), poll_tx_},
          ArmTimer{timer_id_, config_.reply_delay + config_.response_timeout}};
}

std::vector<Action> TagEngine::advance(TickTimestamp now) {
  if (++cursor_ == anchors_.size()) {
    cursor_ = 0;
    ++seq_;
  }
  return poll_current(now);
}

std::vector<Action> TagEngine::on_frame(const FrameReceived& rx) {
  const Frame& f = rx.frame;
  if (f.seq != seq_ || f.src != anchors_[cursor_]) return {};

  if (phase_ == Phase::kAwaitResponse && f.kind == FrameKind::kResponse && f.dst == self_) {
    response_rx_ = rx.rx;
    final_tx_ = response_rx_.plus(reply_delay_ticks_);
    phase_ = Phase::kAwaitReport;
    ++timer_id_;
    return {SendFrame{make_final(seq_, self_, f.src, FinalPayload{poll_tx_, response_rx_, final_tx_}),
                      final_tx_},
            ArmTimer{timer_id_, config_.reply_delay + config_.report_timeout}};
  }

  if (phase_ == Phase::kAwaitReport && f.kind == FrameKind::kReport) {
    const auto* report = std::get_if<ReportPayload>(&f.payload);
    if (report == nullptr || report->tag != self_ || report->anchor != f.src) return {};
    return advance(rx.rx);
  }
  return {};
}

// ---------------------------------------------------------------------------
// AnchorEngine

AnchorEngine::AnchorEngine(DeviceId self, ProtocolConfig config)
    : self_(self), config_(config), reply_delay_ticks_(seconds_to_ticks(config.reply_delay)) {
  config_.validate();
}

std::vector<Action> AnchorEngine::on_event(const AnchorEvent& event) {
  if (const auto* rx = std::get_if<FrameReceived>(&event)) return on_frame(*rx);

  // Delayed transmission fires at the programmed instant; keep the radio's word for it.
  const auto& done = std::get<SendComplete>(event);
  if (phase_ == Phase::kAwaitFinal) response_tx_ = done.tx;
  return {};
}

std::vector<Action> AnchorEngine::on_frame(const FrameReceived& rx) {
  const Frame& f = rx.frame;
  if (f.dst != self_) return {};

  if (f.kind == FrameKind::kPoll) {
    peer_ = f.src;
    seq_ = f.seq;
    poll_rx_ = rx.rx;
    response_tx_ = poll_rx_.plus(reply_delay_ticks_);
    phase_ = Phase::kAwaitFinal;
    return {SendFrame{make_response(seq_, self_, peer_), response_tx_}};
  }

  if (f.kind != FrameKind::kFinal) return {};
  const bool in_exchange = phase_ == Phase::kAwaitFinal && f.seq == seq_ && f.src == peer_;
  phase_ = Phase::kIdle;
  if (!in_exchange) return {};

  const auto& times = std::get<FinalPayload>(f.payload);
  double distance = 0.0;
  try {
    distance = compute_distance(times.poll_tx, poll_rx_, response_tx_, times.response_rx,
                                times.final_tx, rx.rx);
  } catch (const DegenerateExchange&) {
    return {};
  }
  last_distance_ = distance;
  return {SendFrame{make_report(seq_, self_, peer_, to_distance_mm(distance)), std::nullopt}};
}

}  // namespace uwbloc
