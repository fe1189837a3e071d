#pragma once

#include "osfde/kernel_wsgd.hpp"
#include "osfde/types.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace osfde {

/// Largest number of unknowns the dense oracles will assemble.
inline constexpr std::size_t kDenseLimit = 4096;

/// Shape of sampled coefficient data, judged by second differences.
enum class Shape { convex, concave, neither };
std::string to_string(Shape shape);

/// Classifies equispaced samples. Data whose second differences vanish to
/// within tol * max|s| (e.g. constants, lines) count as concave.
Shape classify_shape(const std::vector<double>& samples, double tol = 1e-12);

// ------------------------------------------------------------ dense oracles

/// A = I - eta D G_alpha. Throws SizeGuardExceeded above kDenseLimit.
Matrix dense_assemble_1d(FractionalOrder alpha, const std::vector<double>& d, double eta);

/// A = I - eta_x D (I (x) G_alpha) - eta_y E (G_beta (x) I), y-major ordering.
Matrix dense_assemble_2d(FractionalOrder alpha, FractionalOrder beta, const Vector& d, const Vector& e,
                         std::size_t m1, std::size_t m2, double eta_x, double eta_y);

/// Eigenpairs are accepted only if max ||S v - lambda v|| stays below this.
inline constexpr double kEigenResidualTol = 1e-8;

struct SymmetricSpectrum {
  Vector eigenvalues;  ///< ascending
  double max_residual = 0.0;
};

/// Eigenvalues of a symmetric matrix with the residual self-check.
SymmetricSpectrum symmetric_spectrum(const Matrix& s);

/// lambda_max(G_alpha + G_alpha^T) for the M x M WSGD matrix (M <= 1024).
double check_negative_definite(FractionalOrder alpha, std::size_t m);
/// lambda_max(G + G^T) of an arbitrary square matrix.
double check_negative_definite(const Matrix& g);

// --------------------------------------------------- field of values (1D)

struct FieldOfValuesRecord {
  Shape shape = Shape::neither;
  double kappa_min = 0.0;
  double kappa_max = 0.0;
  double kappa = 0.0;  ///< kappa_max (concave) or kappa_min (convex)
  double nu_alpha = 0.0;
  double lower = 0.0;  ///< kappa - nu_alpha
  double upper = 0.0;  ///< kappa + nu_alpha
  /// Extreme generalized eigenvalues of (-D G_alpha - G_alpha^T D, -G_alpha - G_alpha^T).
  double pencil_min = 0.0;
  double pencil_max = 0.0;
  std::size_t random_trials = 0;
  /// Largest violation of lower <= u^T S u / u^T G u <= upper over the trials.
  double worst_random_violation = 0.0;
  double max_residual = 0.0;

  bool pencil_within(double slack) const {
    return pencil_min >= lower - slack && pencil_max <= upper + slack;
  }
};

/// Checks the two-sided Rayleigh-quotient bound of -D G_alpha - G_alpha^T D
/// against G = -G_alpha - G_alpha^T. If `declared` is given and contradicts the
/// samples, throws AssumptionViolated; samples that are neither convex nor
/// concave also throw.
FieldOfValuesRecord field_of_values_bounds(const std::vector<double>& d, FractionalOrder alpha,
                                           std::optional<Shape> declared = std::nullopt,
                                           std::size_t trials = 1000, std::uint64_t seed = 1);

// ------------------------------------------------ condition-number bounds

struct AssumptionFlags {
  bool positive = false;  ///< coefficients bounded below by a positive constant
  bool shape = false;     ///< every required slice is convex or concave
  bool margin = false;    ///< the lower spectral constant is positive

  bool all() const noexcept { return positive && shape && margin; }
  /// Names of the failing hypotheses, comma separated; empty when all hold.
  std::string failures() const;
};

struct BoundsReport {
  Shape shape = Shape::neither;
  double kappa_min = 0.0;
  double kappa_max = 0.0;
  double kappa = 0.0;
  double nu_alpha = 0.0;
  double s_check = 0.0;
  double s_hat = 0.0;
  AssumptionFlags flags;
};

/// Interval [s_check, s_hat] containing the squared singular values of
/// A P^{-1} in 1D when the flags hold. Failing hypotheses are reported in
/// the flags, not thrown.
BoundsReport theoretical_bounds(const std::vector<double>& d, FractionalOrder alpha,
                                std::optional<Shape> declared = std::nullopt);

struct BoundsReport2D {
  double a_min = 0.0;
  double a_max = 0.0;
  double c1_check = 0.0;
  double c1_hat = 0.0;
  double c2_check = 0.0;
  double c2_hat = 0.0;
  double s_check = 0.0;
  double s_hat = 0.0;
  AssumptionFlags flags;
};

/// Same for d = nu1 a, e = nu2 a in 2D. `a` holds a(x_i, y_j) at row i,
/// column j. Slices that are neither convex nor concave clear the shape flag
/// and use the widest choice for the reference value.
BoundsReport2D theoretical_bounds(const Matrix& a, FractionalOrder alpha, FractionalOrder beta);

// --------------------------------------------------- preconditioned spectra

/// Singular values of A P^{-1}, A = I - eta D G_alpha, P = I - eta mean(d) G_alpha.
Vector precond_spectrum(FractionalOrder alpha, const std::vector<double>& d, double eta);

/// Singular values of A P^{-1} in 2D with P = I + mean(D) Bx + mean(E) By.
Vector precond_spectrum(FractionalOrder alpha, FractionalOrder beta, const Vector& d, const Vector& e,
                        std::size_t m1, std::size_t m2, double eta_x, double eta_y);

// ------------------------------------------------------- membership in D

struct MembershipCertificate {
  std::string q_name;
  Vector q;  ///< diagonal of Q
  double lambda_max = 0.0;  ///< of H(Q A) = (QA + (QA)^T) / 2
  double cond_q = 0.0;      ///< max(q) / min(q)
  bool q_positive = false;
  bool in_set = false;
  double max_residual = 0.0;
};

inline constexpr double kMembershipTol = 1e-10;

/// Spatial 2D operator A = D (I (x) G_alpha) / (2 h1^alpha) + E (G_beta (x) I) / (2 h2^beta)
/// and a candidate diagonal Q; in_set <=> Q > 0 and lambda_max(H(QA)) <= kMembershipTol.
MembershipCertificate certify_Q(FractionalOrder alpha, FractionalOrder beta, const Vector& d, const Vector& e,
                                std::size_t m1, std::size_t m2, double h1, double h2, const Vector& q,
                                std::string q_name = "custom");

Vector q_identity(std::size_t n);
/// Diagonal of C^{-1} for a positive diagonal C (D^{-1} or E^{-1}).
Vector q_inverse(const Vector& c);
/// Diagonal of E_hat^{-1} (x) D_tilde^{-1} from e_hat(y_j) and d_tilde(x_i).
Vector q_separable(const Vector& e_hat, const Vector& d_tilde);

}  // namespace osfde
