#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "uwbloc/error.hpp"
#include "uwbloc/twr.hpp"

using namespace uwbloc;

namespace {

// Timestamps realizing the given intervals, starting at `base`.
std::array<TickTimestamp, 6> from_intervals(std::uint64_t base, std::uint64_t r1, std::uint64_t d1,
                                            std::uint64_t r2, std::uint64_t d2, std::uint64_t tof) {
  const std::uint64_t sp = base;
  const std::uint64_t rp = sp + tof;
  const std::uint64_t sr = rp + d1;
  const std::uint64_t rr = sp + r1;
  const std::uint64_t sf = rr + d2;
  const std::uint64_t rf = sr + r2;
  return {TickTimestamp(sp), TickTimestamp(rp), TickTimestamp(sr),
          TickTimestamp(rr), TickTimestamp(sf), TickTimestamp(rf)};
}

double distance_of(const std::array<TickTimestamp, 6>& t) { return compute_distance(t[0], t[1], t[2], t[3], t[4], t[5]); }

double distance_of(const oracle::Exchange& e) {
  return compute_distance(TickTimestamp(e.stamps[0]), TickTimestamp(e.stamps[1]), TickTimestamp(e.stamps[2]),
                          TickTimestamp(e.stamps[3]), TickTimestamp(e.stamps[4]), TickTimestamp(e.stamps[5]));
}

const double kTickMeters = static_cast<double>(oracle::tick_seconds() * oracle::kLight);

}  // namespace

TEST(ComputeDistance, EqualIntervalsGiveZero) {
  EXPECT_EQ(distance_of(from_intervals(77, 1000, 1000, 1000, 1000, 0)), 0.0);
}

TEST(ComputeDistance, FiveHundredTicks) {
  const double expected =
      static_cast<double>(oracle::ads_twr_tof(2000, 1000, 2000, 1000) * oracle::tick_seconds() * oracle::kLight);
  EXPECT_NEAR(expected, 2.346, 5e-4);
  EXPECT_NEAR(distance_of(from_intervals(0, 2000, 1000, 2000, 1000, 500)), expected, 1e-12);
}

TEST(ComputeDistance, DegenerateExchange) {
  const TickTimestamp t(42);
  EXPECT_THROW(compute_distance(t, t, t, t, t, t), DegenerateExchange);
}

TEST(ComputeDistance, NegativeTofClampsToZero) {
  // Replies longer than the round trips.
  EXPECT_EQ(distance_of(from_intervals(0, 1000, 1500, 1000, 1500, 0)), 0.0);
}

TEST(ComputeDistance, AcrossCounterWrap) {
  const auto plain = from_intervals(1000, 400'000'000, 190'000'000, 400'000'000, 190'000'000, 3000);
  const auto wrapped =
      from_intervals(kTimestampModulus - 250'000'000, 400'000'000, 190'000'000, 400'000'000, 190'000'000, 3000);
  EXPECT_EQ(distance_of(plain), distance_of(wrapped));
}

TEST(ComputeDistance, MatchesOracleOnRandomIntervals) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::uint64_t> reply(100'000'000, 300'000'000);
  std::uniform_int_distribution<std::uint64_t> flight(0, 20'000);
  for (int i = 0; i < 2000; ++i) {
    const std::uint64_t d1 = reply(rng), d2 = reply(rng), tof = flight(rng);
    const std::uint64_t r1 = d1 + 2 * tof, r2 = d2 + 2 * tof;
    const long double expected =
        oracle::ads_twr_tof(r1, d1, r2, d2) * oracle::tick_seconds() * oracle::kLight;
    ASSERT_NEAR(distance_of(from_intervals(rng() & kTimestampMask, r1, d1, r2, d2, tof)),
                static_cast<double>(expected), 1e-9);
  }
}

// A 5 m exchange with the anchor clock 40 ppm fast. The individual exchange is
// quantized to whole ticks, so the ideal-rounding oracle pins the mean over
// random clock phases to < 1 mm and every sample to within about one tick.
TEST(ComputeDistance, DriftCancelsAtFiveMeters) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> phase(0.0, 1e-3);
  const auto round_q = [](long double x) { return std::round(x); };
  double sum = 0.0;
  double worst = 0.0;
  const int n = 4000;
  for (int i = 0; i < n; ++i) {
    const auto e = oracle::simulate_exchange(5.0, 0.0, 40e-6, phase(rng), phase(rng), 3e-3, round_q);
    const double err = distance_of(e) - 5.0;
    sum += err;
    worst = std::max(worst, std::abs(err));
  }
  EXPECT_LT(std::abs(sum / n), 1e-3);
  EXPECT_LT(worst, 1e-3 + kTickMeters);
}

TEST(ComputeDistance, DriftSweepAtTenMeters) {
  const auto floor_q = [](long double x) { return std::floor(x); };
  double lo = INFINITY, hi = -INFINITY;
  for (double tag_ppm = -20; tag_ppm <= 20; tag_ppm += 2.5) {
    for (double anchor_ppm = -20; anchor_ppm <= 20; anchor_ppm += 2.5) {
      const auto e = oracle::simulate_exchange(10.0, tag_ppm * 1e-6, anchor_ppm * 1e-6, 0.0123, 4.567, 3e-3, floor_q);
      const double d = distance_of(e);
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
  }
  EXPECT_LT(hi - lo, 0.01);
  EXPECT_LT(std::abs(lo - 10.0), 0.01);
}

TEST(ComputeDistance, SingleSidedWouldNotCancel) {
  // Sanity check on the oracle itself: with 20 ppm the single-sided estimate is off by meters.
  const auto e = oracle::simulate_exchange(10.0, 0.0, 20e-6, 0.0, 0.0, 3e-3, [](long double x) { return std::round(x); });
  const long double r1 = e.stamps[3] - e.stamps[0];
  const long double d1 = e.stamps[2] - e.stamps[1];
  const double single = static_cast<double>((r1 - d1) / 2 * oracle::tick_seconds() * oracle::kLight);
  EXPECT_GT(std::abs(single - 10.0), 1.0);
}

TEST(ToDistanceMm, Rounds) {
  EXPECT_EQ(to_distance_mm(0.0), 0u);
  EXPECT_EQ(to_distance_mm(-1.0), 0u);
  EXPECT_EQ(to_distance_mm(2.3456), 2346u);
  EXPECT_EQ(to_distance_mm(1e12), 4294967295u);
}
