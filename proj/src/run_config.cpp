#include "uwbloc/run_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "uwbloc/error.hpp"

namespace uwbloc {

namespace {

int line_of(const YAML::Node& node) { return node.Mark().is_null() ? 0 : node.Mark().line + 1; }

[[noreturn]] void fail(const YAML::Node& node, const std::string& what) { throw ConfigError(what, line_of(node)); }

void check_map(const YAML::Node& node, const std::string& where, const std::set<std::string>& allowed) {
  if (!node.IsMap()) fail(node, where + " must be a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.contains(key)) fail(kv.first, "unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T scalar(const YAML::Node& node, const std::string& what) {
  if (!node.IsScalar()) fail(node, what + " must be a scalar");
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    fail(node, "invalid value for " + what);
  }
}

double number(const YAML::Node& map, const std::string& key, double fallback, const std::string& where) {
  const auto n = map[key];
  if (!n) return fallback;
  const double v = scalar<double>(n, where + "." + key);
  if (!std::isfinite(v)) fail(n, where + "." + key + " must be finite");
  return v;
}

std::optional<double> maybe_number(const YAML::Node& map, const std::string& key, const std::string& where) {
  if (!map[key]) return std::nullopt;
  return number(map, key, 0.0, where);
}

DeviceId device_id(const YAML::Node& node, const std::string& what) {
  const int v = scalar<int>(node, what);
  if (v < 0 || v > 254) fail(node, what + " must be in [0, 254]");
  return DeviceId{static_cast<std::uint8_t>(v)};
}

Point3 point(const YAML::Node& node, std::size_t dims, const std::string& what) {
  if (!node.IsSequence() || node.size() != dims) {
    fail(node, what + " must be a list of " + std::to_string(dims) + " numbers");
  }
  Point3 p = Point3::Zero();
  for (std::size_t i = 0; i < dims; ++i) p[static_cast<int>(i)] = scalar<double>(node[i], what);
  return p;
}

AnchorConfiguration parse_anchors(const YAML::Node& node) {
  if (!node || !node.IsSequence()) fail(node, "anchors must be a list");
  std::vector<Anchor> anchors;
  std::set<std::uint8_t> ids;
  for (const auto& a : node) {
    check_map(a, "anchor entry", {"id", "x", "y", "z"});
    if (!a["id"] || !a["x"] || !a["y"] || !a["z"]) fail(a, "anchor entry needs id, x, y, z");
    const DeviceId id = device_id(a["id"], "anchor id");
    if (!ids.insert(id.value).second) fail(a["id"], "duplicate anchor id " + std::to_string(id.value));
    anchors.push_back({id, Point3(scalar<double>(a["x"], "x"), scalar<double>(a["y"], "y"),
                                  scalar<double>(a["z"], "z"))});
  }
  if (anchors.size() < kMinAnchorsFor3d) {
    fail(node, "at least 4 anchors are required (got " + std::to_string(anchors.size()) + ")");
  }
  return AnchorConfiguration(std::move(anchors));
}

Trajectory parse_trajectory(const YAML::Node& node, const std::filesystem::path& base_dir) {
  if (!node) throw ConfigError("missing section 'trajectory'");
  check_map(node, "trajectory",
            {"kind", "side", "height", "speed", "origin", "waypoints", "waypoint_file", "duration", "position"});
  if (!node["kind"]) fail(node, "trajectory.kind is required");
  const auto kind = scalar<std::string>(node["kind"], "trajectory.kind");

  try {
    if (kind == "square") {
      const Point3 origin = node["origin"] ? point(node["origin"], 2, "trajectory.origin") : Point3::Zero();
      return gen_square(number(node, "side", 4.5, "trajectory"), number(node, "height", 1.0, "trajectory"),
                        number(node, "speed", 0.5, "trajectory"), origin);
    }
    if (kind == "polyline") {
      std::vector<Point3> waypoints;
      if (node["waypoints"] && node["waypoint_file"]) fail(node, "give either waypoints or waypoint_file");
      if (node["waypoints"]) {
        if (!node["waypoints"].IsSequence()) fail(node["waypoints"], "trajectory.waypoints must be a list");
        for (const auto& w : node["waypoints"]) waypoints.push_back(point(w, 3, "waypoint"));
      } else if (node["waypoint_file"]) {
        std::filesystem::path file = scalar<std::string>(node["waypoint_file"], "trajectory.waypoint_file");
        if (file.is_relative()) file = base_dir / file;
        if (!std::filesystem::exists(file)) fail(node["waypoint_file"], "waypoint file not found: " + file.string());
        waypoints = load_waypoints(file);
      } else {
        fail(node, "polyline trajectory needs waypoints or waypoint_file");
      }
      if (node["speed"] && node["duration"]) fail(node, "give either speed or duration");
      if (node["duration"]) {
        const double duration = number(node, "duration", 0.0, "trajectory");
        if (!(duration > 0.0)) fail(node["duration"], "trajectory.duration must be > 0");
        double length = 0.0;
        for (std::size_t i = 1; i < waypoints.size(); ++i) length += euclidean_distance(waypoints[i - 1], waypoints[i]);
        if (length == 0.0) fail(node, "polyline has zero length");
        return gen_polyline(std::move(waypoints), length / duration);
      }
      return gen_polyline(std::move(waypoints), number(node, "speed", 0.5, "trajectory"));
    }
    if (kind == "static") {
      if (!node["position"]) fail(node, "static trajectory needs a position");
      return Trajectory::stationary(point(node["position"], 3, "trajectory.position"),
                                    number(node, "duration", 10.0, "trajectory"));
    }
  } catch (const ConfigError& e) {
    if (e.line() != 0) throw;
    fail(node, e.what());
  }
  fail(node["kind"], "unknown trajectory kind '" + kind + "' (square, polyline, static)");
}

}  // namespace

std::vector<Point3> load_waypoints(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open waypoint file " + path.string());
  std::vector<Point3> out;
  std::string line;
  int line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[line.find_first_not_of(" \t")] == '#') continue;
    if (!header) {
      header = true;
      if (line.find('x') != std::string::npos) continue;
    }
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> values;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw ConfigError(path.string() + ": bad number '" + cell + "'", line_no);
      }
    }
    if (values.size() != 3) throw ConfigError(path.string() + ": expected x,y,z", line_no);
    out.emplace_back(values[0], values[1], values[2]);
  }
  return out;
}

RunConfig parse_run_config(std::string_view yaml, const std::filesystem::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml));
  } catch (const YAML::ParserException& e) {
    throw ConfigError("YAML syntax error: " + e.msg, e.mark.line + 1);
  }
  if (!root.IsMap()) throw ConfigError("configuration must be a mapping", 1);
  check_map(root, "configuration", {"anchors", "trajectory", "protocol", "medium", "clocks", "ekf", "run"});

  RunConfig cfg;
  cfg.anchors = parse_anchors(root["anchors"]);
  cfg.trajectory = parse_trajectory(root["trajectory"], base_dir);

  if (const auto p = root["protocol"]) {
    check_map(p, "protocol", {"response_timeout", "report_timeout", "reply_delay"});
    cfg.protocol.response_timeout = number(p, "response_timeout", cfg.protocol.response_timeout, "protocol");
    cfg.protocol.report_timeout = number(p, "report_timeout", cfg.protocol.report_timeout, "protocol");
    cfg.protocol.reply_delay = number(p, "reply_delay", cfg.protocol.reply_delay, "protocol");
    try {
      cfg.protocol.validate();
    } catch (const ConfigError& e) {
      fail(p, e.what());
    }
  }

  if (const auto m = root["medium"]) {
    check_map(m, "medium", {"loss_probability", "jitter_sigma", "range_noise_std", "range_bias"});
    cfg.medium.loss_probability = number(m, "loss_probability", 0.0, "medium");
    if (m["jitter_sigma"] && m["range_noise_std"]) fail(m, "give either jitter_sigma or range_noise_std");
    cfg.medium.timestamp_jitter_sigma = number(m, "jitter_sigma", 0.0, "medium");
    if (m["range_noise_std"]) {
      cfg.medium.timestamp_jitter_sigma = jitter_sigma_for_range_std(number(m, "range_noise_std", 0.0, "medium"));
    }
    if (const auto b = m["range_bias"]) {
      if (!b.IsMap()) fail(b, "medium.range_bias must map anchor id to meters");
      for (const auto& kv : b) {
        const DeviceId id = device_id(kv.first, "range_bias anchor id");
        if (!cfg.anchors.index_of(id)) fail(kv.first, "range_bias for unknown anchor " + std::to_string(id.value));
        cfg.medium.range_bias[id.value] = scalar<double>(kv.second, "range_bias");
      }
    }
    try {
      cfg.medium.validate();
    } catch (const ConfigError& e) {
      fail(m, e.what());
    }
  }

  if (const auto c = root["clocks"]) {
    check_map(c, "clocks", {"max_drift_ppm", "max_offset_s", "devices"});
    cfg.clocks.max_drift_ppm = number(c, "max_drift_ppm", 0.0, "clocks");
    cfg.clocks.max_offset_s = number(c, "max_offset_s", 0.0, "clocks");
    if (std::abs(cfg.clocks.max_drift_ppm) > kMaxClockDrift * 1e6) fail(c, "clocks.max_drift_ppm exceeds 100");
    if (cfg.clocks.max_offset_s < 0.0) fail(c, "clocks.max_offset_s must be >= 0");
    if (const auto devices = c["devices"]) {
      if (!devices.IsSequence()) fail(devices, "clocks.devices must be a list");
      for (const auto& d : devices) {
        check_map(d, "clock entry", {"id", "drift_ppm", "offset_s"});
        if (!d["id"]) fail(d, "clock entry needs an id");
        ClockOverride o{device_id(d["id"], "clock id"), maybe_number(d, "drift_ppm", "clock entry"),
                        maybe_number(d, "offset_s", "clock entry")};
        if (o.drift_ppm && std::abs(*o.drift_ppm) > kMaxClockDrift * 1e6) fail(d, "drift_ppm exceeds 100");
        if (o.offset_s && *o.offset_s < 0.0) fail(d, "offset_s must be >= 0");
        cfg.clocks.devices.push_back(o);
      }
    }
  }

  if (const auto e = root["ekf"]) {
    check_map(e, "ekf",
              {"sigma_accel", "sigma_range", "p0_pos", "p0_vel", "min_range", "max_range", "coherence_threshold",
               "convergence_trace_threshold", "convergence_consecutive", "measurement_model"});
    auto& n = cfg.localizer.noise;
    auto& g = cfg.localizer.gate;
    n.sigma_accel = number(e, "sigma_accel", n.sigma_accel, "ekf");
    n.sigma_range = number(e, "sigma_range", n.sigma_range, "ekf");
    n.p0_pos = number(e, "p0_pos", n.p0_pos, "ekf");
    n.p0_vel = number(e, "p0_vel", n.p0_vel, "ekf");
    g.min_range = number(e, "min_range", g.min_range, "ekf");
    g.max_range = number(e, "max_range", g.max_range, "ekf");
    g.coherence_threshold = number(e, "coherence_threshold", g.coherence_threshold, "ekf");
    g.convergence_trace_threshold = number(e, "convergence_trace_threshold", g.convergence_trace_threshold, "ekf");
    if (e["convergence_consecutive"]) g.convergence_consecutive = scalar<int>(e["convergence_consecutive"], "ekf.convergence_consecutive");
    if (e["measurement_model"]) {
      const auto model = scalar<std::string>(e["measurement_model"], "ekf.measurement_model");
      if (model == "velocity_substitution") {
        cfg.localizer.model = MeasurementModel::kVelocitySubstitution;
      } else if (model == "stored_previous") {
        cfg.localizer.model = MeasurementModel::kStoredPrevious;
      } else {
        fail(e["measurement_model"], "measurement_model must be velocity_substitution or stored_previous");
      }
    }
    try {
      cfg.localizer.validate();
    } catch (const ConfigError& err) {
      fail(e, err.what());
    }
  }

  cfg.duration = cfg.trajectory.duration();
  if (const auto r = root["run"]) {
    check_map(r, "run",
              {"duration", "seed", "output_dir", "tag_id", "listener_id", "listener_position", "anchor_drops"});
    cfg.duration = number(r, "duration", cfg.duration, "run");
    if (!(cfg.duration > 0.0)) fail(r, "run.duration must be > 0");
    if (r["seed"]) cfg.seed = scalar<std::uint64_t>(r["seed"], "run.seed");
    if (r["output_dir"]) cfg.output_dir = scalar<std::string>(r["output_dir"], "run.output_dir");
    if (r["tag_id"]) cfg.tag_id = device_id(r["tag_id"], "run.tag_id");
    if (r["listener_id"]) cfg.listener_id = device_id(r["listener_id"], "run.listener_id");
    if (r["listener_position"]) cfg.listener_position = point(r["listener_position"], 3, "run.listener_position");
    if (const auto drops = r["anchor_drops"]) {
      if (!drops.IsSequence()) fail(drops, "run.anchor_drops must be a list");
      for (const auto& d : drops) {
        check_map(d, "anchor drop", {"anchor", "at", "restore"});
        if (!d["anchor"] || !d["at"]) fail(d, "anchor drop needs anchor and at");
        const DeviceId id = device_id(d["anchor"], "anchor drop id");
        if (!cfg.anchors.index_of(id)) fail(d["anchor"], "cannot drop unknown anchor " + std::to_string(id.value));
        AnchorOutage o{id, number(d, "at", 0.0, "anchor drop"), maybe_number(d, "restore", "anchor drop")};
        if (o.restore && *o.restore <= o.at) fail(d, "restore must come after at");
        cfg.outages.push_back(o);
      }
    }
  }
  for (const auto& a : cfg.anchors.entries()) {
    if (a.id == cfg.tag_id || a.id == cfg.listener_id) {
      throw ConfigError("anchor id " + std::to_string(a.id.value) + " collides with the tag or listener id");
    }
  }
  if (cfg.tag_id == cfg.listener_id) throw ConfigError("tag and listener ids must differ");
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str(), path.parent_path());
}

std::vector<ClockModel> RunConfig::draw_clocks() const {
  std::vector<DeviceId> devices{tag_id};
  for (const auto& a : anchors.entries()) devices.push_back(a.id);
  devices.push_back(listener_id);

  std::mt19937_64 rng(seed ^ 0xC10CC10CC10CC10CULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<ClockModel> out;
  for (DeviceId id : devices) {
    const double u_drift = unit(rng);
    const double u_offset = unit(rng);
    ClockModel c{u_offset * clocks.max_offset_s, (2.0 * u_drift - 1.0) * clocks.max_drift_ppm * 1e-6, id};
    for (const auto& o : clocks.devices) {
      if (o.id != id) continue;
      if (o.drift_ppm) c.drift = *o.drift_ppm * 1e-6;
      if (o.offset_s) c.offset = *o.offset_s;
    }
    out.push_back(c);
  }
  return out;
}

ExperimentConfig RunConfig::to_experiment() const {
  ExperimentConfig e;
  e.sim.anchors = anchors;
  e.sim.tag_id = tag_id;
  e.sim.listener_id = listener_id;
  e.sim.listener_position = listener_position;
  e.sim.tag_trajectory = trajectory.as_function();
  e.sim.clocks = draw_clocks();
  e.sim.medium = medium;
  e.sim.protocol = protocol;
  e.sim.duration = duration;
  e.sim.rng_seed = seed;
  e.sim.outages = outages;
  e.localizer = localizer;
  return e;
}

}  // namespace uwbloc
