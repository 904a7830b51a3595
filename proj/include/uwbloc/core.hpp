#ifndef UWBLOC_CORE_HPP_
#define UWBLOC_CORE_HPP_

#include <compare>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

namespace uwbloc {

// ---------------------------------------------------------------------------
// Constants

/// Device clock resolution: 1 / (128 * 499.2 MHz), about 15.65 ps.
inline constexpr double kTickSeconds = 1.0 / (128.0 * 499.2e6);
inline constexpr int kTimestampBits = 40;
inline constexpr std::uint64_t kTimestampModulus = std::uint64_t{1} << kTimestampBits;
inline constexpr std::uint64_t kTimestampMask = kTimestampModulus - 1;
inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

// ---------------------------------------------------------------------------
// Identities

/// Radio address of a tag, anchor or listener. 255 is the broadcast address.
struct DeviceId {
  std::uint8_t value{0};

  constexpr bool is_broadcast() const noexcept { return value == 255; }
  friend constexpr auto operator<=>(DeviceId, DeviceId) = default;
};

inline constexpr DeviceId kBroadcast{255};

// ---------------------------------------------------------------------------
// Time

/// 40-bit free-running device clock reading. Construction masks to 40 bits.
class TickTimestamp {
 public:
  constexpr TickTimestamp() = default;
  constexpr explicit TickTimestamp(std::uint64_t ticks) : ticks_(ticks & kTimestampMask) {}

  constexpr std::uint64_t ticks() const noexcept { return ticks_; }

  /// Reading `delta` ticks later, wrapping modulo 2^40.
  constexpr TickTimestamp plus(std::uint64_t delta) const noexcept {
    return TickTimestamp(ticks_ + (delta & kTimestampMask));
  }

  friend constexpr bool operator==(TickTimestamp, TickTimestamp) = default;

 private:
  std::uint64_t ticks_{0};
};

/// (later - earlier) mod 2^40. Correct across a single wraparound of the counter.
constexpr std::uint64_t tick_diff(TickTimestamp later, TickTimestamp earlier) noexcept {
  return (later.ticks() - earlier.ticks()) & kTimestampMask;
}

constexpr double ticks_to_seconds(std::uint64_t ticks) noexcept {
  return static_cast<double>(ticks) * kTickSeconds;
}

/// Nearest whole tick count for a non-negative duration.
std::uint64_t seconds_to_ticks(double seconds);

// ---------------------------------------------------------------------------
// Geometry

using Point3 = Eigen::Vector3d;

double euclidean_distance(const Point3& a, const Point3& b);

bool is_finite(const Point3& p);

// ---------------------------------------------------------------------------
// Deployment

struct Anchor {
  DeviceId id;
  Point3 position;
};

/// Anchors at known positions. Entry order is the tag's polling order.
class AnchorConfiguration {
 public:
  AnchorConfiguration() = default;
  explicit AnchorConfiguration(std::vector<Anchor> entries);

  const std::vector<Anchor>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const Anchor& operator[](std::size_t i) const { return entries_[i]; }

  std::optional<std::size_t> index_of(DeviceId id) const;
  std::optional<Point3> position_of(DeviceId id) const;

  /// Throws ConfigError unless the set is usable for a 3D localization run:
  /// at least 4 anchors, distinct ids, no broadcast id, finite positions.
  void validate_for_localization() const;

 private:
  std::vector<Anchor> entries_;
};

inline constexpr std::size_t kMinAnchorsFor3d = 4;

/// One tag-anchor distance sample as seen by the estimator.
struct RangeMeasurement {
  DeviceId anchor;
  std::uint8_t seq{0};
  double distance{0.0};  // m
  double time{0.0};      // s, estimator clock

  friend bool operator==(const RangeMeasurement&, const RangeMeasurement&) = default;
};

}  // namespace uwbloc

#endif  // UWBLOC_CORE_HPP_
