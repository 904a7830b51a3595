#ifndef UWBLOC_TRILATERATION_HPP_
#define UWBLOC_TRILATERATION_HPP_

#include <span>

#include "uwbloc/core.hpp"

namespace uwbloc {

struct TrilaterationOptions {
  int max_iterations{50};
  double step_tolerance{1e-9};  // m
  /// Smallest/largest singular value of the centered anchor cloud below which
  /// the geometry counts as coplanar.
  double min_spread_ratio{1e-6};
};

struct TrilaterationResult {
  Point3 position;
  int iterations{0};
  double rms_residual{0.0};  // m
};

/// Gauss-Newton minimizer of sum (|x - p_i| - d_i)^2 started from the linearized
/// squared-range-difference solution (anchor centroid if that is rank deficient).
/// Measurements must reference at least 4 distinct, non-coplanar anchors.
/// Throws IllConditioned on degenerate geometry and NotConverged when the step
/// never drops below tolerance.
TrilaterationResult trilaterate(std::span<const RangeMeasurement> measurements,
                                const AnchorConfiguration& anchors, const TrilaterationOptions& options = {});

inline Point3 trilaterate_ls(std::span<const RangeMeasurement> measurements,
                             const AnchorConfiguration& anchors) {
  return trilaterate(measurements, anchors).position;
}

}  // namespace uwbloc

#endif  // UWBLOC_TRILATERATION_HPP_
