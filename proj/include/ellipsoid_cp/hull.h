#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ellipsoid_cp/ellipsoid.h"

namespace ellipsoid_cp {

// Facet tolerance used by containment checks.
inline constexpr double kHullTolerance = 1e-9;
inline constexpr int kMaxHullDim = 4;

// Supporting half-space normal . x <= offset (unit outward normal).
struct HalfSpace {
  Eigen::VectorXd normal;
  double offset = 0.0;
};

// A full-dimensional convex polytope. Facets are simplices (d vertices each);
// coplanar simplices of one geometric face are kept separately.
struct HullRegion {
  std::vector<Eigen::VectorXd> vertices;
  std::vector<HalfSpace> facets;
  std::vector<std::vector<int>> facet_vertices;  // indices into `vertices`
  double volume = 0.0;

  int dim() const {
    return vertices.empty() ? 0 : static_cast<int>(vertices.front().size());
  }
};

// Quickhull for 2 <= d <= 4. Throws kDegenerateHull when the points do not
// span d dimensions and kDimensionTooHigh for d > 4.
HullRegion ConvexHull(std::span<const Eigen::VectorXd> points);

// Hull of the points p (offsets from the region center) for which
// center + p lies in `spec`.
HullRegion HullFromCovered(std::span<const Eigen::VectorXd> points,
                           const EllipsoidSpec& spec);

bool HullContains(const HullRegion& region, const Eigen::VectorXd& y);

}  // namespace ellipsoid_cp
