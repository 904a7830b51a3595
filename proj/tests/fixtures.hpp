#ifndef UWBLOC_TESTS_FIXTURES_HPP_
#define UWBLOC_TESTS_FIXTURES_HPP_

#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>

#include "uwbloc/radio_sim.hpp"
#include "uwbloc/scenario.hpp"

namespace fixtures {

inline uwbloc::SimConfig static_sim(const uwbloc::Point3& tag, double duration, std::uint64_t seed = 1) {
  uwbloc::SimConfig cfg;
  cfg.anchors = uwbloc::replication_anchors();
  cfg.listener_position = uwbloc::Point3(4.5, 4.5, 1.0);
  cfg.tag_trajectory = [tag](double) { return tag; };
  cfg.duration = duration;
  cfg.rng_seed = seed;
  return cfg;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("uwbloc_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::filesystem::path config_path(const std::string& name) {
  return std::filesystem::path(UWBLOC_CONFIG_DIR) / name;
}

}  // namespace fixtures

#endif  // UWBLOC_TESTS_FIXTURES_HPP_
