#include "uwbloc/localizer.hpp"

#include <set>

#include "uwbloc/error.hpp"

namespace uwbloc {

const char* to_string(Disposition d) {
  switch (d) {
    case Disposition::kInitialization:
      return "initialization";
    case Disposition::kUpdated:
      return "updated";
    case Disposition::kSeeded:
      return "seeded";
    case Disposition::kSingular:
      return "singular";
    case Disposition::kRejectedBand:
      return "rejected_band";
    case Disposition::kRejectedCoherence:
      return "rejected_coherence";
    case Disposition::kRejectedOutOfOrder:
      return "rejected_out_of_order";
    case Disposition::kRejectedUnknownAnchor:
      return "rejected_unknown_anchor";
    case Disposition::kRejectedUninitialized:
      return "rejected_uninitialized";
  }
  return "?";
}

bool is_accepted(Disposition d) {
  switch (d) {
    case Disposition::kInitialization:
    case Disposition::kUpdated:
    case Disposition::kSeeded:
    case Disposition::kSingular:
      return true;
    default:
      return false;
  }
}

Localizer::Localizer(AnchorConfiguration anchors, LocalizerConfig config)
    : anchors_(std::move(anchors)), config_(config) {
  anchors_.validate_for_localization();
  config_.validate();
}

std::size_t Localizer::accepted_count() const {
  std::size_t n = 0;
  for (const auto& r : records_) n += is_accepted(r.disposition) ? 1 : 0;
  return n;
}

std::size_t Localizer::rejected_count() const { return records_.size() - accepted_count(); }

void Localizer::push_row(const EkfState& s) {
  trajectory_.push_back(EstimateRow{s.last_update_time, s.x, s.v, s.position_trace(), converged()});
}

void Localizer::process(const RangeMeasurement& m) {
  const auto anchor_pos = anchors_.position_of(m.anchor);
  if (!anchor_pos) {
    records_.push_back({m, Disposition::kRejectedUnknownAnchor, std::nullopt});
    return;
  }

  if (!state_) {
    if (gate(m, EkfState{}, *anchor_pos, config_.gate, false).verdict == GateVerdict::kRejectBand) {
      records_.push_back({m, Disposition::kRejectedBand, std::nullopt});
      return;
    }
    if (!pending_.empty() && (pending_.front().seq != m.seq || m.time < pending_.back().time)) {
      try_initialize();
    }
    if (state_) {
      process(m);
      return;
    }
    pending_.push_back(m);
    std::set<std::uint8_t> distinct;
    for (const auto& p : pending_) distinct.insert(p.anchor.value);
    if (distinct.size() == anchors_.size()) try_initialize();
    return;
  }

  if (m.time < state_->last_update_time) {
    records_.push_back({m, Disposition::kRejectedOutOfOrder, std::nullopt});
    return;
  }
  const EkfState predicted = predict(*state_, m.time - state_->last_update_time, config_.noise);

  const GateDecision decision = gate(m, predicted, *anchor_pos, config_.gate, converged());
  if (!decision.accepted()) {
    const auto d = decision.verdict == GateVerdict::kRejectBand ? Disposition::kRejectedBand
                                                                : Disposition::kRejectedCoherence;
    records_.push_back({m, d, std::nullopt});
    return;
  }

  const UpdateResult result = update(predicted, m, *anchor_pos, history_, config_.noise, config_.model);
  switch (result.status) {
    case UpdateStatus::kApplied:
      state_ = result.state;
      convergence_.observe(*state_, config_.gate);
      if (observer_) observer_(*state_);
      push_row(*state_);
      records_.push_back({m, Disposition::kUpdated, state_->x});
      break;
    case UpdateStatus::kSeeded:
    case UpdateStatus::kSingular:
      push_row(predicted);
      records_.push_back({m, result.status == UpdateStatus::kSeeded ? Disposition::kSeeded : Disposition::kSingular,
                          predicted.x});
      break;
  }
}

void Localizer::finish() {
  if (!state_ && !pending_.empty()) try_initialize();
  if (!state_) reject_pending();
}

void Localizer::try_initialize() {
  std::set<std::uint8_t> distinct;
  for (const auto& p : pending_) distinct.insert(p.anchor.value);
  if (distinct.size() < kMinAnchorsFor3d) {
    reject_pending();
    return;
  }
  try {
    PerAnchorHistory seeded;
    EkfState s = initialize(pending_, anchors_, config_.noise, seeded);
    state_ = s;
    history_ = seeded;
  } catch (const IllConditioned&) {
    reject_pending();
    return;
  } catch (const NotConverged&) {
    reject_pending();
    return;
  }
  for (const auto& p : pending_) records_.push_back({p, Disposition::kInitialization, state_->x});
  pending_.clear();
  push_row(*state_);
  if (observer_) observer_(*state_);
}

void Localizer::reject_pending() {
  for (const auto& p : pending_) records_.push_back({p, Disposition::kRejectedUninitialized, std::nullopt});
  pending_.clear();
}

}  // namespace uwbloc
