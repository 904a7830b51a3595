#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "uwbloc/csv_io.hpp"
#include "uwbloc/error.hpp"
#include "uwbloc/radio_sim.hpp"

using namespace uwbloc;

namespace {

const double kTickMeters = static_cast<double>(oracle::tick_seconds() * oracle::kLight);

std::vector<const SimLogEntry*> rows(const SimLog& log, LogKind kind) {
  std::vector<const SimLogEntry*> out;
  for (const auto& e : log.entries) {
    if (e.kind == kind) out.push_back(&e);
  }
  return out;
}

std::string to_csv(const SimLog& log) {
  std::ostringstream os;
  csv::write_simlog(os, log);
  return os.str();
}

// Times at which the tag starts a polling cycle (POLL to the first anchor).
std::vector<double> cycle_starts(const SimLog& log, DeviceId first) {
  std::vector<double> out;
  for (const auto* e : rows(log, LogKind::kPoll)) {
    if (e->dst == first) out.push_back(e->time);
  }
  return out;
}

}  // namespace

TEST(DeviceNow, Examples) {
  EXPECT_EQ(device_now(ClockModel{0.0, 0.0, {}}, 0.0).ticks(), 0u);
  EXPECT_EQ(device_now(ClockModel{kTickSeconds, 0.0, {}}, 0.0).ticks(), 1u);
  const auto expected = static_cast<std::uint64_t>(std::floor(1.000020L / oracle::tick_seconds()));
  const auto got = device_now(ClockModel{0.0, 20e-6, {}}, 1.0).ticks();
  EXPECT_LE(got > expected ? got - expected : expected - got, 1u);
}

TEST(DeviceNow, WrapsAfterFullPeriod) {
  const ClockModel c{0.0, 0.0, {}};
  const double period = ticks_to_seconds(kTimestampModulus);
  EXPECT_LT(device_now(c, period + 1e-6).ticks(), 100'000u);
}

TEST(SimTimeOf, InvertsDeviceNow) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> drift(-100e-6, 100e-6), offset(0.0, 30.0), t(0.0, 100.0), ahead(-1.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const ClockModel c{offset(rng), drift(rng), {}};
    const double now = t(rng);
    const double target_time = now + ahead(rng);
    const TickTimestamp target = device_now(c, target_time);
    const double back = sim_time_of(c, target, now);
    ASSERT_NEAR(back, target_time, 2.0 * kTickSeconds);
    ASSERT_EQ(device_now(c, back + 1e-13).ticks(), target.ticks());
  }
}

TEST(EventQueue, OrdersByTimeThenInsertion) {
  EventQueue<int> q;
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> slot(0, 20);
  for (int i = 0; i < 5000; ++i) q.push(slot(rng) * 0.5, i);
  double last_time = -1.0;
  int last_payload = -1;
  while (!q.empty()) {
    const auto e = q.pop();
    ASSERT_GE(e.time, last_time);
    if (e.time == last_time) ASSERT_GT(e.payload, last_payload);
    last_time = e.time;
    last_payload = e.payload;
  }
}

TEST(RadioSim, DeliveryTakesRangeOverC) {
  SimConfig cfg = fixtures::static_sim(Point3::Zero(), 0.2);
  cfg.anchors = AnchorConfiguration({{DeviceId{1}, Point3(299.792458, 0, 0)},
                                     {DeviceId{2}, Point3(0, 5, 0)},
                                     {DeviceId{3}, Point3(0, 0, 5)},
                                     {DeviceId{4}, Point3(5, 5, 5)}});
  const SimLog log = run(cfg);
  const auto finals = rows(log, LogKind::kFinal);
  const auto reports = rows(log, LogKind::kReport);
  ASSERT_FALSE(finals.empty());
  ASSERT_EQ(finals[0]->dst, DeviceId{1});
  ASSERT_EQ(reports[0]->src, DeviceId{1});
  // The anchor broadcasts REPORT the instant FINAL arrives.
  EXPECT_NEAR(reports[0]->time - finals[0]->time, 1e-6, 1e-12);
  EXPECT_NEAR(*reports[0]->distance, 299.792458, kTickMeters);
}

TEST(RadioSim, TotalLossMeansNoDeliveries) {
  SimConfig cfg = fixtures::static_sim(Point3(4, 4, 1), 1.0);
  cfg.medium.loss_probability = 1.0;
  const SimLog log = run(cfg);
  EXPECT_GT(log.count(LogKind::kPoll), 0u);
  EXPECT_EQ(log.count(LogKind::kResponse), 0u);
  EXPECT_EQ(log.count(LogKind::kFinal), 0u);
  EXPECT_EQ(log.count(LogKind::kMeasurement), 0u);
  EXPECT_EQ(log.count(LogKind::kSkip), log.count(LogKind::kPoll) - 1);  // last poll still pending at the end
}

TEST(RadioSim, ZeroNoiseStaticRangesWithinOneTick) {
  const Point3 tag(3.1, 5.7, 1.2);
  SimConfig cfg = fixtures::static_sim(tag, 2.0);
  const SimLog log = run(cfg);
  ASSERT_GT(log.count(LogKind::kMeasurement), 100u);
  for (const auto* e : rows(log, LogKind::kReport)) {
    const double truth = euclidean_distance(tag, *cfg.anchors.position_of(e->src));
    ASSERT_NEAR(*e->distance, truth, kTickMeters) << "anchor " << int(e->src.value);
  }
  for (const auto& m : log.measurements()) {
    const double truth = euclidean_distance(tag, *cfg.anchors.position_of(m.anchor));
    ASSERT_NEAR(m.distance, truth, kTickMeters + 0.5e-3);
  }
}

TEST(RadioSim, JitterInducedRangeStd) {
  const double sigma = 0.33e-9;
  SimConfig cfg = fixtures::static_sim(Point3(4.0, 3.0, 1.1), 95.0, 77);
  cfg.medium.timestamp_jitter_sigma = sigma;
  const SimLog log = run(cfg);
  std::map<std::uint8_t, std::vector<double>> by_anchor;
  for (const auto* e : rows(log, LogKind::kReport)) by_anchor[e->src.value].push_back(*e->distance);
  double ss = 0.0;
  std::size_t n = 0;
  for (const auto& [id, ds] : by_anchor) {
    double mean = 0.0;
    for (double d : ds) mean += d;
    mean /= static_cast<double>(ds.size());
    for (double d : ds) ss += (d - mean) * (d - mean);
    n += ds.size();
  }
  ASSERT_GE(n, 10000u);
  const double measured = std::sqrt(ss / static_cast<double>(n - by_anchor.size()));
  const double expected = oracle::jitter_range_std(sigma);
  EXPECT_NEAR(measured, expected, 0.05 * expected);
  EXPECT_NEAR(jitter_sigma_for_range_std(expected), sigma, 1e-15);
}

TEST(RadioSim, LossFractionMatchesFourFrames) {
  SimConfig cfg = fixtures::static_sim(Point3(4.0, 3.0, 1.1), 300.0, 5);
  cfg.medium.loss_probability = 0.05;
  const SimLog log = run(cfg);
  const double attempts = static_cast<double>(log.count(LogKind::kPoll));
  const double fraction = static_cast<double>(log.count(LogKind::kMeasurement)) / attempts;
  const double expected = std::pow(0.95, 4);
  EXPECT_NEAR(fraction, expected, 0.05 * expected) << attempts << " attempts";
}

TEST(RadioSim, SameSeedSameLog) {
  SimConfig cfg = fixtures::static_sim(Point3(4.0, 3.0, 1.1), 5.0, 42);
  cfg.medium.loss_probability = 0.1;
  cfg.medium.timestamp_jitter_sigma = 0.5e-9;
  cfg.clocks = {{1.5, 12e-6, DeviceId{0}}, {7.25, -18e-6, DeviceId{3}}};
  const SimLog a = run(cfg);
  const SimLog b = run(cfg);
  EXPECT_EQ(a, b);
  EXPECT_EQ(to_csv(a), to_csv(b));
  cfg.rng_seed = 43;
  EXPECT_NE(to_csv(run(cfg)), to_csv(a));
}

TEST(RadioSim, LogIsTimeOrdered) {
  SimConfig cfg = fixtures::static_sim(Point3(2.0, 7.0, 0.5), 10.0, 9);
  cfg.medium.loss_probability = 0.2;
  cfg.medium.timestamp_jitter_sigma = 1e-9;
  cfg.clocks = {{3.0, 80e-6, DeviceId{0}}, {0.5, -90e-6, DeviceId{2}}};
  const SimLog log = run(cfg);
  for (std::size_t i = 1; i < log.entries.size(); ++i) ASSERT_LE(log.entries[i - 1].time, log.entries[i].time);
}

TEST(RadioSim, CyclePeriodWithinBound) {
  for (double loss : {0.0, 0.3, 1.0}) {
    SimConfig cfg = fixtures::static_sim(Point3(4.0, 3.0, 1.1), 20.0, 3);
    cfg.medium.loss_probability = loss;
    cfg.clocks = {{0.0, 100e-6, DeviceId{0}}};
    const SimLog log = run(cfg);
    const auto starts = cycle_starts(log, cfg.anchors[0].id);
    ASSERT_GT(starts.size(), 5u);
    const double bound = cfg.protocol.cycle_bound(cfg.anchors.size());
    for (std::size_t i = 1; i < starts.size(); ++i) {
      ASSERT_LE(starts[i] - starts[i - 1], bound) << "loss " << loss;
    }
  }
}

TEST(DropAnchor, TwoOfSixKeepsOthersEveryCycle) {
  SimConfig cfg = fixtures::static_sim(Point3(4.0, 3.0, 1.1), 10.0);
  drop_anchor(cfg, DeviceId{2}, 4.0);
  drop_anchor(cfg, DeviceId{5}, 4.0);
  const SimLog log = run(cfg);
  // Cycles that start after the drop and finish before the end of the run.
  std::vector<const SimLogEntry*> starts;
  for (const auto* e : rows(log, LogKind::kPoll)) {
    if (e->dst == DeviceId{1}) starts.push_back(e);
  }
  std::size_t checked = 0;
  const double bound = cfg.protocol.cycle_bound(6);
  for (std::size_t i = 0; i + 1 < starts.size(); ++i) {
    EXPECT_LE(starts[i + 1]->time - starts[i]->time, bound);
    if (starts[i]->time < 4.0) continue;
    std::set<std::uint8_t> ids;
    for (const auto* m : rows(log, LogKind::kMeasurement)) {
      if (m->time > starts[i]->time && m->time < starts[i + 1]->time) {
        EXPECT_EQ(m->seq, starts[i]->seq);
        ids.insert(m->anchor->value);
      }
    }
    EXPECT_EQ(ids, (std::set<std::uint8_t>{1, 3, 4, 6})) << "seq " << int(starts[i]->seq);
    ++checked;
  }
  EXPECT_GT(checked, 50u);
}

TEST(DropAnchor, AllAnchorsSilenced) {
  SimConfig cfg = fixtures::static_sim(Point3(4.0, 3.0, 1.1), 6.0);
  for (const auto& a : cfg.anchors.entries()) drop_anchor(cfg, a.id, 2.0);
  const SimLog log = run(cfg);
  std::size_t before = 0;
  for (const auto* e : rows(log, LogKind::kMeasurement)) {
    EXPECT_LT(e->time, 2.0 + 1e-6);
    ++before;
  }
  EXPECT_GT(before, 0u);
  for (const auto* e : rows(log, LogKind::kReport)) EXPECT_LT(e->time, 2.0);
  EXPECT_GT(rows(log, LogKind::kSkip).back()->time, 5.0);  // the tag keeps polling
}

TEST(DropAnchor, RestoreBringsAnchorBack) {
  SimConfig cfg = fixtures::static_sim(Point3(4.0, 3.0, 1.1), 6.0);
  drop_anchor(cfg, DeviceId{4}, 1.0, 3.0);
  const SimLog log = run(cfg);
  std::size_t during = 0, after = 0;
  for (const auto* e : rows(log, LogKind::kMeasurement)) {
    if (*e->anchor != DeviceId{4}) continue;
    if (e->time > 1.0 + 1e-6 && e->time < 3.0) ++during;
    if (e->time >= 3.0) ++after;
  }
  EXPECT_EQ(during, 0u);
  EXPECT_GT(after, 20u);
}

TEST(DropAnchor, UnknownAnchorIsConfigError) {
  SimConfig cfg = fixtures::static_sim(Point3(4.0, 3.0, 1.1), 1.0);
  EXPECT_THROW(drop_anchor(cfg, DeviceId{42}, 1.0), ConfigError);
  EXPECT_THROW(drop_anchor(cfg, DeviceId{1}, 2.0, 1.0), ConfigError);
}

TEST(SimConfig, Validation) {
  SimConfig cfg = fixtures::static_sim(Point3(4.0, 3.0, 1.1), 1.0);
  EXPECT_NO_THROW(cfg.validate());
  auto bad = cfg;
  bad.duration = 0.0;
  EXPECT_THROW(run(bad), ConfigError);
  bad = cfg;
  bad.clocks = {{0.0, 150e-6, DeviceId{1}}};
  EXPECT_THROW(run(bad), ConfigError);
  bad = cfg;
  bad.medium.loss_probability = 1.5;
  EXPECT_THROW(run(bad), ConfigError);
  bad = cfg;
  bad.medium.timestamp_jitter_sigma = -1.0;
  EXPECT_THROW(run(bad), ConfigError);
  bad = cfg;
  bad.listener_id = DeviceId{3};
  EXPECT_THROW(run(bad), ConfigError);
}
