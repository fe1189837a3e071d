#include "osfde/kernel_wsgd.hpp"

#include "osfde/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace osfde {

FractionalOrder::FractionalOrder(double alpha) : alpha_(alpha) {
  if (!(alpha > 1.0 && alpha < 2.0)) {
    throw InvalidArgument("fractional order must lie strictly in (1, 2), got " +
                          std::to_string(alpha));
  }
}

std::vector<double> gl_weights(FractionalOrder alpha, std::size_t n) {
  std::vector<double> g(n + 1);
  g[0] = 1.0;
  const double a1 = alpha.value() + 1.0;
  for (std::size_t k = 1; k <= n; ++k) {
    g[k] = (1.0 - a1 / static_cast<double>(k)) * g[k - 1];
  }
  return g;
}

WsgdKernel wsgd_weights(FractionalOrder alpha, std::size_t n) {
  if (n < 1) throw InvalidArgument("wsgd_weights: n must be >= 1");
  WsgdKernel kernel{alpha, gl_weights(alpha, n), {}};
  const double a = alpha.value();
  kernel.w.resize(n + 1);
  kernel.w[0] = 0.5 * a * kernel.g[0];
  for (std::size_t k = 1; k <= n; ++k) {
    kernel.w[k] = 0.5 * a * kernel.g[k] + 0.5 * (2.0 - a) * kernel.g[k - 1];
  }
  return kernel;
}

std::complex<double> symbol(FractionalOrder alpha, double theta) {
  using cd = std::complex<double>;
  const double a = alpha.value();
  const cd z = std::polar(1.0, theta);
  const cd one_minus = 1.0 - z;
  // Re(1 - z) >= 0, so the principal branch is continuous on [-pi, pi].
  const cd power = std::abs(one_minus) == 0.0 ? cd{0.0, 0.0} : std::pow(one_minus, a);
  return std::conj(z) * power * (0.5 * a + 0.5 * (2.0 - a) * z);
}

double symbol_ratio_min(FractionalOrder alpha, std::size_t grid_points) {
  if (grid_points < 2) throw InvalidArgument("symbol_ratio_min: need at least 2 grid points");
  constexpr double pi = std::numbers::pi;
  double best = std::numeric_limits<double>::infinity();
  const double step = 2.0 * pi / static_cast<double>(grid_points - 1);
  for (std::size_t j = 0; j < grid_points; ++j) {
    const double theta = -pi + step * static_cast<double>(j);
    const auto value = symbol(alpha, theta);
    const double magnitude = std::abs(value);
    if (magnitude < 1e-14) continue;
    best = std::min(best, -value.real() / magnitude);
  }
  return best;
}

double symbol_ratio_exact(FractionalOrder alpha) {
  return std::abs(std::cos(0.5 * alpha.value() * std::numbers::pi));
}

}  // namespace osfde
