#include "uwbloc/core.hpp"

#include <cmath>
#include <set>
#include <string>

#include "uwbloc/error.hpp"

namespace uwbloc {

std::uint64_t seconds_to_ticks(double seconds) {
  if (!(seconds >= 0.0) || !std::isfinite(seconds)) {
    throw ContractViolation("seconds_to_ticks: duration must be finite and non-negative");
  }
  return static_cast<std::uint64_t>(std::llround(seconds / kTickSeconds));
}

double euclidean_distance(const Point3& a, const Point3& b) { return (a - b).norm(); }

bool is_finite(const Point3& p) { return p.allFinite(); }

AnchorConfiguration::AnchorConfiguration(std::vector<Anchor> entries)
    : entries_(std::move(entries)) {}

std::optional<std::size_t> AnchorConfiguration::index_of(DeviceId id) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].id == id) return i;
  }
  return std::nullopt;
}

std::optional<Point3> AnchorConfiguration::position_of(DeviceId id) const {
  if (auto i = index_of(id)) return entries_[*i].position;
  return std::nullopt;
}

void AnchorConfiguration::validate_for_localization() const {
  if (entries_.size() < kMinAnchorsFor3d) {
    throw ConfigError("at least 4 anchors are required for 3D localization (got " +
                      std::to_string(entries_.size()) + ")");
  }
  std::set<std::uint8_t> seen;
  for (const auto& a : entries_) {
    if (a.id.is_broadcast()) throw ConfigError("anchor id 255 is reserved for broadcast");
    if (!seen.insert(a.id.value).second) {
      throw ConfigError("duplicate anchor id " + std::to_string(a.id.value));
    }
    if (!is_finite(a.position)) {
      throw ConfigError("anchor " + std::to_string(a.id.value) + " has a non-finite position");
    }
  }
}

}  // namespace uwbloc
