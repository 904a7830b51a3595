#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "uwbloc/error.hpp"
#include "uwbloc/trilateration.hpp"

using namespace uwbloc;

namespace {

AnchorConfiguration spread_anchors() {
  return AnchorConfiguration({{DeviceId{1}, Point3(0, 0, 0)},
                              {DeviceId{2}, Point3(6, 0, 3)},
                              {DeviceId{3}, Point3(0, 6, 3)},
                              {DeviceId{4}, Point3(6, 6, 0)},
                              {DeviceId{5}, Point3(3, -1, 4)}});
}

std::vector<RangeMeasurement> ranges_to(const AnchorConfiguration& anchors, const Point3& x, double bias = 0.0) {
  std::vector<RangeMeasurement> out;
  for (const auto& a : anchors.entries()) out.push_back({a.id, 0, (x - a.position).norm() + bias, 0.0});
  return out;
}

}  // namespace

TEST(Trilaterate, ExactRangesRecoverTruth) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.5, 5.5);
  const auto anchors = spread_anchors();
  for (int i = 0; i < 500; ++i) {
    const Point3 truth(u(rng), u(rng), u(rng) * 0.5);
    const auto ms = ranges_to(anchors, truth);
    const auto r = trilaterate(std::span<const RangeMeasurement>(ms.data(), 4), anchors);
    ASSERT_LT((r.position - truth).norm(), 1e-6) << truth.transpose();
    ASSERT_LT(r.rms_residual, 1e-6);
    ASSERT_LT((trilaterate_ls(ms, anchors) - truth).norm(), 1e-6);
  }
}

TEST(Trilaterate, CommonBiasMatchesGridOracle) {
  const auto anchors = spread_anchors();
  const Point3 truth(2.5, 3.2, 1.4);
  const auto ms = ranges_to(anchors, truth, 0.1);
  const Point3 got = trilaterate_ls(ms, anchors);
  EXPECT_LT((got - truth).norm(), 0.2);

  std::vector<std::array<double, 3>> ap;
  std::vector<double> d;
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    ap.push_back({anchors[i].position.x(), anchors[i].position.y(), anchors[i].position.z()});
    d.push_back(ms[i].distance);
  }
  const auto best = oracle::grid_trilaterate(ap, d, {truth.x() - 0.4, truth.y() - 0.4, truth.z() - 0.4},
                                             {truth.x() + 0.4, truth.y() + 0.4, truth.z() + 0.4}, 0.01);
  EXPECT_LT((got - Point3(best[0], best[1], best[2])).norm(), 0.01 * std::sqrt(3.0));
}

TEST(Trilaterate, CoplanarAnchorsIllConditioned) {
  const AnchorConfiguration flat({{DeviceId{1}, Point3(0, 0, 0)},
                                  {DeviceId{2}, Point3(5, 0, 0)},
                                  {DeviceId{3}, Point3(0, 5, 0)},
                                  {DeviceId{4}, Point3(5, 5, 0)}});
  const auto ms = ranges_to(flat, Point3(2, 2, 1.5));
  try {
    trilaterate(ms, flat);
    FAIL() << "coplanar geometry accepted";
  } catch (const IllConditioned& e) {
    EXPECT_NE(std::string(e.what()).find("ill-conditioned"), std::string::npos);
  }
}

TEST(Trilaterate, TooFewAnchors) {
  const auto anchors = spread_anchors();
  auto ms = ranges_to(anchors, Point3(1, 1, 1));
  ms.resize(3);
  ms.push_back(ms[0]);  // repeated anchor does not count twice
  EXPECT_THROW(trilaterate(ms, anchors), IllConditioned);
}

TEST(Trilaterate, NonConvergenceReportsResidual) {
  const auto anchors = spread_anchors();
  const auto ms = ranges_to(anchors, Point3(2, 2, 1), 0.5);
  TrilaterationOptions opts;
  opts.max_iterations = 1;
  try {
    trilaterate(ms, anchors, opts);
    FAIL() << "expected NotConverged";
  } catch (const NotConverged& e) {
    EXPECT_GT(e.residual(), 0.0);
  }
}
