#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace osfde {

/// Order of the left-sided Riemann-Liouville derivative, strictly inside (1, 2).
class FractionalOrder {
 public:
  /// Throws InvalidArgument unless 1 < alpha < 2.
  explicit FractionalOrder(double alpha);

  double value() const noexcept { return alpha_; }
  operator double() const noexcept { return alpha_; }

 private:
  double alpha_;
};

/// Grunwald-Letnikov coefficients g_k and the shifted-weighted combination
/// w_k = (alpha/2) g_k + ((2-alpha)/2) g_{k-1}, both of length n+1.
struct WsgdKernel {
  FractionalOrder alpha;
  std::vector<double> g;
  std::vector<double> w;

  std::size_t size() const noexcept { return w.size(); }
};

/// Coefficients of the power series of (1-z)^alpha, g_0..g_n.
std::vector<double> gl_weights(FractionalOrder alpha, std::size_t n);

/// Both coefficient families up to index n (n >= 1).
WsgdKernel wsgd_weights(FractionalOrder alpha, std::size_t n);

/// Generating function of the WSGD Toeplitz matrix,
///   g(alpha, theta) = sum_k w_k e^{i(k-1)theta}
///                   = e^{-i theta} (1 - e^{i theta})^alpha (alpha/2 + (2-alpha)/2 e^{i theta}).
std::complex<double> symbol(FractionalOrder alpha, double theta);

/// Minimum over an equispaced grid on [-pi, pi] of Re[-g]/|g|. Points where
/// |g| < 1e-14 (theta = 0) are skipped.
double symbol_ratio_min(FractionalOrder alpha, std::size_t grid_points);

/// |cos(alpha pi / 2)|, the exact value of the ratio minimum.
double symbol_ratio_exact(FractionalOrder alpha);

}  // namespace osfde
