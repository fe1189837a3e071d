#include "osfde/analysis.hpp"

#include "osfde/error.hpp"
#include "osfde/scheme1d.hpp"
#include "osfde/scheme2d.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace osfde {
namespace {

void guard(const char* what, std::size_t n, std::size_t limit = kDenseLimit) {
  if (n > limit) throw SizeGuardExceeded(what, n, limit);
}

double max_abs(const std::vector<double>& s) {
  double m = 0.0;
  for (double v : s) m = std::max(m, std::abs(v));
  return m;
}

double mean(const std::vector<double>& s) {
  return std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
}

Vector to_vector(const std::vector<double>& s) {
  return Eigen::Map<const Vector>(s.data(), static_cast<Eigen::Index>(s.size()));
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Shape resolve_shape(const std::vector<double>& d, std::optional<Shape> declared) {
  const Shape inferred = classify_shape(d);
  if (!declared) return inferred;
  if (*declared == Shape::neither) return inferred;
  // Flat data satisfies both declarations.
  const bool flat = classify_shape(d) == Shape::concave &&
                    classify_shape(to_std(-to_vector(d))) == Shape::concave;
  if (flat || inferred == *declared) return *declared;
  return Shape::neither;
}

struct SliceBounds {
  double lower;
  double upper;
  bool shape_ok;
};

// Reference value and spread for one coordinate slice of a.
SliceBounds slice_bounds(const std::vector<double>& slice, double ratio) {
  const auto [lo, hi] = std::minmax_element(slice.begin(), slice.end());
  const double spread = std::sqrt(2.0) * (*hi - *lo) / ratio;
  switch (classify_shape(slice)) {
    case Shape::convex:
      return {*lo - spread, *lo + spread, true};
    case Shape::concave:
      return {*hi - spread, *hi + spread, true};
    case Shape::neither:
      break;
  }
  return {*lo - spread, *hi + spread, false};
}

struct TopEigenpair {
  double lambda;
  double residual;
};

// Largest eigenpair of a symmetric matrix without forming the full spectrum.
TopEigenpair largest_eigenpair(const Matrix& s) {
  const auto n = static_cast<lapack_int>(s.rows());
  Matrix work = s;
  Vector z(n);
  double w = 0.0;
  lapack_int found = 0;
  std::vector<lapack_int> support(2);
  const lapack_int info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'I', 'U', n, work.data(), n, 0.0, 0.0, n, n, 0.0,
                                         &found, &w, z.data(), n, support.data());
  if (info != 0 || found != 1) throw SingularMatrix("dsyevr failed with info " + std::to_string(info));
  const double residual = (s * z - w * z).norm();
  if (residual > kEigenResidualTol * std::max(1.0, s.norm()))
    throw SingularMatrix("eigenpair residual " + std::to_string(residual));
  return {w, residual};
}

Matrix spatial_dense_2d(FractionalOrder alpha, FractionalOrder beta, const Vector& d, const Vector& e,
                        std::size_t m1, std::size_t m2, double eta_x, double eta_y) {
  const SystemOperator2D op(assemble_galpha(alpha, m1), assemble_galpha(beta, m2), d, e, eta_x, eta_y);
  return op.dense(1.0);
}

Vector singular_values_of_ratio(const Matrix& a, const Matrix& p) {
  // A P^{-1} = (P^{-T} A^T)^T
  const Matrix ap = p.transpose().partialPivLu().solve(a.transpose()).transpose();
  return Eigen::BDCSVD<Matrix>(ap).singularValues();
}

}  // namespace

std::string to_string(Shape shape) {
  switch (shape) {
    case Shape::convex:
      return "convex";
    case Shape::concave:
      return "concave";
    case Shape::neither:
      return "neither";
  }
  return "neither";
}

Shape classify_shape(const std::vector<double>& samples, double tol) {
  if (samples.size() < 3) return Shape::concave;
  const double slack = tol * std::max(1.0, max_abs(samples));
  bool convex = true;
  bool concave = true;
  for (std::size_t i = 1; i + 1 < samples.size(); ++i) {
    const double second = samples[i - 1] - 2.0 * samples[i] + samples[i + 1];
    if (second < -slack) convex = false;
    if (second > slack) concave = false;
  }
  if (concave) return Shape::concave;
  if (convex) return Shape::convex;
  return Shape::neither;
}

Matrix dense_assemble_1d(FractionalOrder alpha, const std::vector<double>& d, double eta) {
  const std::size_t m = d.size();
  guard("dense_assemble_1d", m);
  const Matrix g = assemble_galpha(alpha, m).dense();
  return Matrix::Identity(m, m) - eta * to_vector(d).asDiagonal() * g;
}

Matrix dense_assemble_2d(FractionalOrder alpha, FractionalOrder beta, const Vector& d, const Vector& e,
                         std::size_t m1, std::size_t m2, double eta_x, double eta_y) {
  guard("dense_assemble_2d", m1 * m2);
  return spatial_dense_2d(alpha, beta, d, e, m1, m2, eta_x, eta_y);
}

SymmetricSpectrum symmetric_spectrum(const Matrix& s) {
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(s);
  if (eig.info() != Eigen::Success) throw SingularMatrix("symmetric eigensolver failed");
  SymmetricSpectrum out{eig.eigenvalues(), 0.0};
  const Matrix& v = eig.eigenvectors();
  out.max_residual = (s * v - v * out.eigenvalues.asDiagonal()).colwise().norm().maxCoeff();
  if (out.max_residual > kEigenResidualTol * std::max(1.0, s.norm()))
    throw SingularMatrix("eigen decomposition residual " + std::to_string(out.max_residual));
  return out;
}

double check_negative_definite(const Matrix& g) { return largest_eigenpair(g + g.transpose()).lambda; }

double check_negative_definite(FractionalOrder alpha, std::size_t m) {
  guard("check_negative_definite", m, 1024);
  return check_negative_definite(assemble_galpha(alpha, m).dense());
}

FieldOfValuesRecord field_of_values_bounds(const std::vector<double>& d, FractionalOrder alpha,
                                           std::optional<Shape> declared, std::size_t trials,
                                           std::uint64_t seed) {
  const std::size_t m = d.size();
  guard("field_of_values_bounds", m, 512);
  const Shape shape = resolve_shape(d, declared);
  if (shape == Shape::neither) {
    throw AssumptionViolated(declared ? "coefficient samples are not " + to_string(*declared)
                                      : "coefficient samples are neither convex nor concave");
  }

  FieldOfValuesRecord rec;
  rec.shape = shape;
  const auto [lo, hi] = std::minmax_element(d.begin(), d.end());
  rec.kappa_min = *lo;
  rec.kappa_max = *hi;
  rec.kappa = shape == Shape::convex ? rec.kappa_min : rec.kappa_max;
  rec.nu_alpha = std::sqrt(2.0) * (rec.kappa_max - rec.kappa_min) / symbol_ratio_exact(alpha);
  rec.lower = rec.kappa - rec.nu_alpha;
  rec.upper = rec.kappa + rec.nu_alpha;

  const Matrix ga = assemble_galpha(alpha, m).dense();
  const Matrix dg = to_vector(d).asDiagonal() * ga;
  const Matrix weighted = -dg - dg.transpose();
  const Matrix plain = -ga - ga.transpose();

  const Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> pencil(weighted, plain);
  if (pencil.info() != Eigen::Success) throw SingularMatrix("pencil eigensolver failed");
  const Vector& lambda = pencil.eigenvalues();
  const Matrix& v = pencil.eigenvectors();
  rec.pencil_min = lambda.minCoeff();
  rec.pencil_max = lambda.maxCoeff();
  rec.max_residual = (weighted * v - plain * v * lambda.asDiagonal()).colwise().norm().maxCoeff();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Vector u(static_cast<Eigen::Index>(m));
  for (std::size_t t = 0; t < trials; ++t) {
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = normal(rng);
    const double base = u.dot(plain * u);
    const double val = u.dot(weighted * u);
    const double below = (rec.lower * base - val) / base;
    const double above = (val - rec.upper * base) / base;
    rec.worst_random_violation = std::max({rec.worst_random_violation, below, above});
  }
  rec.random_trials = trials;
  return rec;
}

std::string AssumptionFlags::failures() const {
  std::string out;
  auto add = [&out](bool ok, const char* name) {
    if (ok) return;
    if (!out.empty()) out += ",";
    out += name;
  };
  add(positive, "positive");
  add(shape, "shape");
  add(margin, "margin");
  return out;
}

BoundsReport theoretical_bounds(const std::vector<double>& d, FractionalOrder alpha,
                                std::optional<Shape> declared) {
  if (d.empty()) throw InvalidArgument("theoretical_bounds: no samples");
  BoundsReport r;
  r.shape = resolve_shape(d, declared);
  const auto [lo, hi] = std::minmax_element(d.begin(), d.end());
  r.kappa_min = *lo;
  r.kappa_max = *hi;
  r.nu_alpha = std::sqrt(2.0) * (r.kappa_max - r.kappa_min) / symbol_ratio_exact(alpha);
  r.flags.positive = r.kappa_min > 0.0;
  r.flags.shape = r.shape != Shape::neither;

  const bool convex = r.shape == Shape::convex;
  r.kappa = convex ? r.kappa_min : r.kappa_max;
  const double lower = r.kappa - r.nu_alpha;
  r.flags.margin = lower > 0.0;

  const double ratio = r.kappa_min / r.kappa_max;
  r.s_check = std::min(lower / r.kappa_max, ratio * ratio);
  r.s_hat = std::max((r.kappa + r.nu_alpha) / r.kappa_min, 1.0 / (ratio * ratio));
  return r;
}

BoundsReport2D theoretical_bounds(const Matrix& a, FractionalOrder alpha, FractionalOrder beta) {
  if (a.size() == 0) throw InvalidArgument("theoretical_bounds: no samples");
  BoundsReport2D r;
  r.a_min = a.minCoeff();
  r.a_max = a.maxCoeff();
  r.flags.positive = r.a_min > 0.0;
  r.flags.shape = true;

  const double ratio_x = symbol_ratio_exact(alpha);
  const double ratio_y = symbol_ratio_exact(beta);
  r.c1_check = r.c2_check = std::numeric_limits<double>::infinity();
  r.c1_hat = r.c2_hat = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    const SliceBounds s = slice_bounds(to_std(a.col(j)), ratio_x);
    r.c1_check = std::min(r.c1_check, s.lower);
    r.c1_hat = std::max(r.c1_hat, s.upper);
    r.flags.shape = r.flags.shape && s.shape_ok;
  }
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const SliceBounds s = slice_bounds(to_std(a.row(i).transpose()), ratio_y);
    r.c2_check = std::min(r.c2_check, s.lower);
    r.c2_hat = std::max(r.c2_hat, s.upper);
    r.flags.shape = r.flags.shape && s.shape_ok;
  }
  r.flags.margin = r.c1_check > 0.0 && r.c2_check > 0.0;

  const double ratio = r.a_min / r.a_max;
  r.s_check = std::min({r.c1_check / r.a_max, r.c2_check / r.a_max, ratio * ratio});
  r.s_hat = std::max({r.c1_hat / r.a_min, r.c2_hat / r.a_min, 1.0 / (ratio * ratio)});
  return r;
}

Vector precond_spectrum(FractionalOrder alpha, const std::vector<double>& d, double eta) {
  const std::size_t m = d.size();
  guard("precond_spectrum", m);
  const Matrix a = dense_assemble_1d(alpha, d, eta);
  const Matrix p = dense_assemble_1d(alpha, std::vector<double>(m, mean(d)), eta);
  return singular_values_of_ratio(a, p);
}

Vector precond_spectrum(FractionalOrder alpha, FractionalOrder beta, const Vector& d, const Vector& e,
                        std::size_t m1, std::size_t m2, double eta_x, double eta_y) {
  const std::size_t n = m1 * m2;
  guard("precond_spectrum", n);
  if (static_cast<std::size_t>(d.size()) != n) throw DimensionMismatch("precond_spectrum", n, d.size());
  if (static_cast<std::size_t>(e.size()) != n) throw DimensionMismatch("precond_spectrum", n, e.size());
  const Matrix a = spatial_dense_2d(alpha, beta, d, e, m1, m2, eta_x, eta_y);
  const Vector d_bar = Vector::Constant(static_cast<Eigen::Index>(n), d.mean());
  const Vector e_bar = Vector::Constant(static_cast<Eigen::Index>(n), e.mean());
  const Matrix p = spatial_dense_2d(alpha, beta, d_bar, e_bar, m1, m2, eta_x, eta_y);
  return singular_values_of_ratio(a, p);
}

MembershipCertificate certify_Q(FractionalOrder alpha, FractionalOrder beta, const Vector& d, const Vector& e,
                                std::size_t m1, std::size_t m2, double h1, double h2, const Vector& q,
                                std::string q_name) {
  const std::size_t n = m1 * m2;
  guard("certify_Q", n);
  if (static_cast<std::size_t>(q.size()) != n) throw DimensionMismatch("certify_Q", n, q.size());

  const double eta_x = 1.0 / (2.0 * std::pow(h1, alpha.value()));
  const double eta_y = 1.0 / (2.0 * std::pow(h2, beta.value()));
  // dense(-1) = I - (D Bx + E By) = I + spatial operator
  const SystemOperator2D op(assemble_galpha(alpha, m1), assemble_galpha(beta, m2), d, e, eta_x, eta_y);
  const Matrix spatial = op.dense(-1.0) - Matrix::Identity(n, n);
  const Matrix qa = q.asDiagonal() * spatial;

  MembershipCertificate cert;
  cert.q_name = std::move(q_name);
  cert.q = q;
  const TopEigenpair top = largest_eigenpair(0.5 * (qa + qa.transpose()));
  cert.lambda_max = top.lambda;
  cert.max_residual = top.residual;
  cert.q_positive = q.minCoeff() > 0.0;
  cert.cond_q = cert.q_positive ? q.maxCoeff() / q.minCoeff() : std::numeric_limits<double>::infinity();
  cert.in_set = cert.q_positive && cert.lambda_max <= kMembershipTol;
  return cert;
}

Vector q_identity(std::size_t n) { return Vector::Ones(static_cast<Eigen::Index>(n)); }

Vector q_inverse(const Vector& c) {
  if (c.size() > 0 && c.minCoeff() <= 0.0) throw InvalidArgument("q_inverse: diagonal must be positive");
  return c.cwiseInverse();
}

Vector q_separable(const Vector& e_hat, const Vector& d_tilde) {
  const Eigen::Index m1 = d_tilde.size();
  const Eigen::Index m2 = e_hat.size();
  Vector q(m1 * m2);
  for (Eigen::Index j = 0; j < m2; ++j)
    for (Eigen::Index i = 0; i < m1; ++i) q[i + j * m1] = 1.0 / (e_hat[j] * d_tilde[i]);
  return q;
}

}  // namespace osfde
