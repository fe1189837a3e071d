#pragma once

#include <Eigen/Dense>

#include <functional>

namespace osfde {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using ComplexVector = Eigen::VectorXcd;

/// A linear map x -> y on R^n, applied matrix-free.
using LinearMap = std::function<Vector(const Vector&)>;

inline LinearMap identity_map() {
  return [](const Vector& x) { return x; };
}

}  // namespace osfde
