#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ellipsoid_cp {

// A time-ordered multivariate series: row t is the response vector Y_t.
struct MultiSeries {
  Eigen::MatrixXd values;
  std::vector<std::string> names;

  Eigen::Index length() const { return values.rows(); }
  Eigen::Index dim() const { return values.cols(); }
};

}  // namespace ellipsoid_cp
