#pragma once

#include "osfde/types.hpp"

#include <algorithm>
#include <cmath>

namespace osfde::detail {

// Tracks the discrete energy estimate
//   ||u^n||_W^2 <= e^{2T} ||u^0||_W^2 + (e^{2T} - 1) max_{k<=n} ||f^{k-1/2}||_W^2
// with ||v||_W^2 = sum_i weight_i v_i^2.
class EnergyMonitor {
 public:
  EnergyMonitor(Vector weights, double horizon, double slack)
      : weights_(std::move(weights)), growth_(std::exp(2.0 * horizon)), slack_(slack) {}

  double norm2(const Vector& v) const { return (weights_.array() * v.array().square()).sum(); }

  void start(const Vector& u0) { initial_ = norm2(u0); }

  // Returns true when the estimate holds at this step.
  bool step(const Vector& un, const Vector& f_half) {
    max_forcing_ = std::max(max_forcing_, norm2(f_half));
    const double bound = growth_ * initial_ + (growth_ - 1.0) * max_forcing_;
    const double energy = norm2(un);
    if (bound > 0.0) worst_ratio_ = std::max(worst_ratio_, energy / bound);
    const bool ok = energy <= bound * (1.0 + slack_) + 1e-300;
    if (!ok) ++violations_;
    return ok;
  }

  std::size_t violations() const noexcept { return violations_; }
  double worst_ratio() const noexcept { return worst_ratio_; }

 private:
  Vector weights_;
  double growth_;
  double slack_;
  double initial_ = 0.0;
  double max_forcing_ = 0.0;
  double worst_ratio_ = 0.0;
  std::size_t violations_ = 0;
};

}  // namespace osfde::detail
