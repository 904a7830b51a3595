#ifndef UWBLOC_RUN_CONFIG_HPP_
#define UWBLOC_RUN_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "uwbloc/scenario.hpp"

namespace uwbloc {

/// Explicit clock for one device; unset fields fall back to random draws.
struct ClockOverride {
  DeviceId id;
  std::optional<double> drift_ppm;
  std::optional<double> offset_s;
};

struct ClockSpec {
  double max_drift_ppm{0.0};
  double max_offset_s{0.0};
  std::vector<ClockOverride> devices;
};

/// Everything one `simulate` run needs. Loaded from YAML with strict keys.
struct RunConfig {
  AnchorConfiguration anchors;
  Trajectory trajectory = Trajectory::stationary(Point3::Zero(), 1.0);
  ProtocolConfig protocol;
  MediumModel medium;
  ClockSpec clocks;
  LocalizerConfig localizer;
  double duration{0.0};
  std::uint64_t seed{0};
  std::string output_dir{"out"};
  DeviceId tag_id{0};
  DeviceId listener_id{254};
  Point3 listener_position{Point3::Zero()};
  std::vector<AnchorOutage> outages;

  /// Clock models for tag, anchors and listener, drawn from a stream derived
  /// from `seed` (independent of the radio simulation's stream).
  std::vector<ClockModel> draw_clocks() const;
  ExperimentConfig to_experiment() const;
};

/// Parses YAML text. Relative file references resolve against `base_dir`.
/// Throws ConfigError with the offending line.
RunConfig parse_run_config(std::string_view yaml, const std::filesystem::path& base_dir = ".");
RunConfig load_run_config(const std::filesystem::path& path);

/// Reads a waypoint CSV with header `x,y,z`.
std::vector<Point3> load_waypoints(const std::filesystem::path& path);

}  // namespace uwbloc

#endif  // UWBLOC_RUN_CONFIG_HPP_
