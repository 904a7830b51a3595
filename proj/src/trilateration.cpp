#include "uwbloc/trilateration.hpp"

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "uwbloc/error.hpp"

namespace uwbloc {

namespace {

struct Ray {
  Point3 anchor;
  double distance;
};

double rms(const std::vector<Ray>& rays, const Point3& x) {
  double sum = 0.0;
  for (const auto& r : rays) {
    const double e = (x - r.anchor).norm() - r.distance;
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(rays.size()));
}

}  // namespace

TrilaterationResult trilaterate(std::span<const RangeMeasurement> measurements,
                                const AnchorConfiguration& anchors, const TrilaterationOptions& options) {
  std::vector<Ray> rays;
  std::vector<Point3> distinct;
  std::set<std::uint8_t> seen;
  for (const auto& m : measurements) {
    auto pos = anchors.position_of(m.anchor);
    if (!pos) throw ContractViolation("range from unknown anchor " + std::to_string(m.anchor.value));
    rays.push_back({*pos, m.distance});
    if (seen.insert(m.anchor.value).second) distinct.push_back(*pos);
  }
  if (distinct.size() < kMinAnchorsFor3d) {
    throw IllConditioned("need ranges to at least 4 distinct anchors, got " + std::to_string(distinct.size()));
  }

  Point3 centroid = Point3::Zero();
  for (const auto& p : distinct) centroid += p;
  centroid /= static_cast<double>(distinct.size());

  Eigen::MatrixXd spread(distinct.size(), 3);
  for (std::size_t i = 0; i < distinct.size(); ++i) spread.row(i) = (distinct[i] - centroid).transpose();
  const Eigen::Vector3d sv = Eigen::JacobiSVD<Eigen::MatrixXd>(spread).singularValues();
  if (sv(0) <= 0.0 || sv(2) < options.min_spread_ratio * sv(0)) {
    throw IllConditioned("anchors are coplanar or collinear");
  }

  // Start from the linearized solution: differencing |x - p_i|^2 = d_i^2 against the
  // first anchor gives a linear system that is exact for exact ranges.
  Eigen::MatrixXd A(rays.size() - 1, 3);
  Eigen::VectorXd b(rays.size() - 1);
  for (std::size_t i = 1; i < rays.size(); ++i) {
    const Point3& p0 = rays[0].anchor;
    const Point3& pi = rays[i].anchor;
    A.row(i - 1) = 2.0 * (pi - p0).transpose();
    b(i - 1) = rays[0].distance * rays[0].distance - rays[i].distance * rays[i].distance + pi.squaredNorm() -
               p0.squaredNorm();
  }
  const auto lin = A.colPivHouseholderQr();
  Point3 x = lin.rank() == 3 ? Point3(lin.solve(b)) : centroid;
  if (!is_finite(x)) x = centroid;

  Eigen::MatrixXd J(rays.size(), 3);
  Eigen::VectorXd r(rays.size());
  for (int it = 1; it <= options.max_iterations; ++it) {
    for (std::size_t i = 0; i < rays.size(); ++i) {
      const Point3 delta = x - rays[i].anchor;
      const double range = delta.norm();
      if (range < 1e-12) throw IllConditioned("iterate coincides with an anchor");
      J.row(i) = (delta / range).transpose();
      r(i) = range - rays[i].distance;
    }
    const auto qr = J.colPivHouseholderQr();
    if (qr.rank() < 3) throw IllConditioned("rank-deficient range Jacobian");
    const Eigen::Vector3d step = qr.solve(-r);
    x += step;
    if (step.norm() < options.step_tolerance) return {x, it, rms(rays, x)};
  }
  throw NotConverged(rms(rays, x));
}

}  // namespace uwbloc
