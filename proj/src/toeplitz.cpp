#include "osfde/toeplitz.hpp"

#include "osfde/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace osfde {
namespace {

using fft::Complex;

std::vector<Complex> to_complex(const Vector& x) {
  std::vector<Complex> buf(static_cast<std::size_t>(x.size()));
  for (Eigen::Index i = 0; i < x.size(); ++i) buf[static_cast<std::size_t>(i)] = x[i];
  return buf;
}

std::vector<Complex> to_complex(const Vector& re, const Vector& im) {
  std::vector<Complex> buf(static_cast<std::size_t>(re.size()));
  for (Eigen::Index i = 0; i < re.size(); ++i) buf[static_cast<std::size_t>(i)] = Complex(re[i], im[i]);
  return buf;
}

std::pair<Vector, Vector> split_pair(const std::vector<Complex>& buf) {
  const auto n = static_cast<Eigen::Index>(buf.size());
  std::pair<Vector, Vector> out{Vector(n), Vector(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    out.first[i] = buf[static_cast<std::size_t>(i)].real();
    out.second[i] = buf[static_cast<std::size_t>(i)].imag();
  }
  return out;
}

std::vector<Complex> spectrum_of(const std::vector<double>& col) {
  std::vector<Complex> buf(col.begin(), col.end());
  fft::forward(buf);
  return buf;
}

double max_abs(const std::vector<Complex>& values) {
  double m = 0.0;
  for (const auto& v : values) m = std::max(m, std::abs(v));
  return m;
}

// The imaginary residue of a real product must be roundoff; a larger value
// means the diagonalization (usually the skew twiddles) is wrong.
Vector checked_real(const std::vector<Complex>& buf, std::size_t count, double scale,
                    const char* where) {
  Vector out(static_cast<Eigen::Index>(count));
  double worst = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    out[static_cast<Eigen::Index>(i)] = buf[i].real();
    worst = std::max(worst, std::abs(buf[i].imag()));
  }
  if (worst > 1e-12 * std::max(scale, 1e-300)) {
    throw std::logic_error(std::string(where) + ": imaginary residue " + std::to_string(worst) +
                           " exceeds roundoff level");
  }
  return out;
}

void require_size(const char* where, std::size_t expected, Eigen::Index got) {
  if (static_cast<std::size_t>(got) != expected) {
    throw DimensionMismatch(where, expected, static_cast<std::size_t>(got));
  }
}

}  // namespace

// ---------------------------------------------------------------- circulant

CirculantOperator::CirculantOperator(std::vector<double> first_col)
    : first_col_(std::move(first_col)) {
  if (first_col_.empty()) throw InvalidArgument("circulant: empty first column");
  eigenvalues_ = spectrum_of(first_col_);
  radius_ = max_abs(eigenvalues_);
}

Vector CirculantOperator::apply(const Vector& x) const {
  require_size("circulant apply", size(), x.size());
  auto buf = to_complex(x);
  fft::forward(buf);
  for (std::size_t k = 0; k < buf.size(); ++k) buf[k] *= eigenvalues_[k];
  fft::inverse(buf);
  return checked_real(buf, size(), x.lpNorm<Eigen::Infinity>() * radius_ * std::sqrt(double(size())),
                      "circulant apply");
}

Vector CirculantOperator::solve(const Vector& x) const {
  require_size("circulant solve", size(), x.size());
  const double big = radius_;
  double smallest = big;
  for (const auto& e : eigenvalues_) smallest = std::min(smallest, std::abs(e));
  if (!(smallest > 1e-14 * big)) throw SingularMatrix("circulant has a vanishing eigenvalue");
  auto buf = to_complex(x);
  fft::forward(buf);
  for (std::size_t k = 0; k < buf.size(); ++k) buf[k] /= eigenvalues_[k];
  fft::inverse(buf);
  return checked_real(buf, size(), x.lpNorm<Eigen::Infinity>() / smallest * std::sqrt(double(size())),
                      "circulant solve");
}

Matrix CirculantOperator::dense() const {
  const auto m = static_cast<Eigen::Index>(size());
  Matrix c(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) c(i, j) = first_col_[static_cast<std::size_t>((i - j + m) % m)];
  }
  return c;
}

// ----------------------------------------------------------- skew-circulant

SkewCirculantOperator::SkewCirculantOperator(std::vector<double> first_col)
    : first_col_(std::move(first_col)) {
  const std::size_t m = first_col_.size();
  if (m == 0) throw InvalidArgument("skew-circulant: empty first column");
  twiddle_.resize(m);
  eigenvalues_.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    twiddle_[k] = std::polar(1.0, std::numbers::pi * static_cast<double>(k) / static_cast<double>(m));
    eigenvalues_[k] = twiddle_[k] * first_col_[k];
  }
  fft::forward(eigenvalues_);
  radius_ = max_abs(eigenvalues_);
}

Vector SkewCirculantOperator::apply(const Vector& x) const {
  require_size("skew-circulant apply", size(), x.size());
  std::vector<Complex> buf(size());
  for (std::size_t k = 0; k < size(); ++k) buf[k] = twiddle_[k] * x[static_cast<Eigen::Index>(k)];
  fft::forward(buf);
  for (std::size_t k = 0; k < size(); ++k) buf[k] *= eigenvalues_[k];
  fft::inverse(buf);
  for (std::size_t k = 0; k < size(); ++k) buf[k] *= std::conj(twiddle_[k]);
  return checked_real(buf, size(), x.lpNorm<Eigen::Infinity>() * radius_ * std::sqrt(double(size())),
                      "skew-circulant apply");
}

Matrix SkewCirculantOperator::dense() const {
  const auto m = static_cast<Eigen::Index>(size());
  Matrix s(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      s(i, j) = i >= j ? first_col_[static_cast<std::size_t>(i - j)]
                       : -first_col_[static_cast<std::size_t>(m + i - j)];
    }
  }
  return s;
}

// ------------------------------------------------------------------ toeplitz

ToeplitzOperator::ToeplitzOperator(std::vector<double> first_col, std::vector<double> first_row)
    : first_col_(std::move(first_col)), first_row_(std::move(first_row)) {
  const std::size_t m = first_col_.size();
  if (m == 0) throw InvalidArgument("toeplitz: empty first column");
  if (first_row_.size() != m) throw DimensionMismatch("toeplitz first row", m, first_row_.size());
  if (first_row_[0] != first_col_[0]) {
    throw InvalidArgument("toeplitz: first_row[0] must equal first_col[0]");
  }
  const std::size_t len = std::bit_ceil(2 * m - 1);
  std::vector<double> embed(len, 0.0);
  for (std::size_t k = 0; k < m; ++k) embed[k] = first_col_[k];
  for (std::size_t k = 1; k < m; ++k) embed[len - k] = first_row_[k];
  embedding_eigenvalues_ = spectrum_of(embed);
  embedding_radius_ = max_abs(embedding_eigenvalues_);
}

ToeplitzOperator ToeplitzOperator::identity(std::size_t m) {
  std::vector<double> e(m, 0.0);
  if (m > 0) e[0] = 1.0;
  return ToeplitzOperator(e, e);
}

ToeplitzOperator ToeplitzOperator::affine(double shift, double scale) const {
  std::vector<double> col(first_col_), row(first_row_);
  for (auto& c : col) c *= scale;
  for (auto& r : row) r *= scale;
  col[0] += shift;
  row[0] = col[0];
  return ToeplitzOperator(std::move(col), std::move(row));
}

std::vector<Complex> ToeplitzOperator::apply_complex(std::vector<Complex> buf) const {
  const std::size_t m = size();
  buf.resize(embedding_eigenvalues_.size(), Complex{0.0, 0.0});
  fft::forward(buf);
  for (std::size_t k = 0; k < buf.size(); ++k) buf[k] *= embedding_eigenvalues_[k];
  fft::inverse(buf);
  buf.resize(m);
  return buf;
}

Vector ToeplitzOperator::apply(const Vector& x) const {
  require_size("toeplitz apply", size(), x.size());
  const auto buf = apply_complex(to_complex(x));
  return checked_real(buf, size(),
                      x.lpNorm<Eigen::Infinity>() * embedding_radius_ * std::sqrt(double(size())),
                      "toeplitz apply");
}

std::pair<Vector, Vector> ToeplitzOperator::apply_pair(const Vector& x, const Vector& y) const {
  require_size("toeplitz apply", size(), x.size());
  require_size("toeplitz apply", size(), y.size());
  return split_pair(apply_complex(to_complex(x, y)));
}

Matrix ToeplitzOperator::dense() const {
  const auto m = static_cast<Eigen::Index>(size());
  Matrix t(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      t(i, j) = i >= j ? first_col_[static_cast<std::size_t>(i - j)]
                       : first_row_[static_cast<std::size_t>(j - i)];
    }
  }
  return t;
}

CirculantOperator ToeplitzOperator::strang_circulant() const {
  const std::size_t m = size();
  std::vector<double> s(m);
  for (std::size_t k = 0; k < m; ++k) s[k] = k <= m / 2 ? first_col_[k] : first_row_[m - k];
  return CirculantOperator(std::move(s));
}

// ------------------------------------------------------- Gohberg-Semencul

namespace {

std::vector<double> rotate_last_first(const std::vector<double>& vt, double sign) {
  std::vector<double> out(vt.size());
  out[0] = sign * vt.back();
  for (std::size_t k = 1; k < vt.size(); ++k) out[k] = vt[k - 1];
  return out;
}

}  // namespace

GsInverse::GsInverse(std::vector<double> v, std::vector<double> v_tilde)
    : v_(std::move(v)),
      v_tilde_(std::move(v_tilde)),
      s1_(v_.empty() ? std::vector<double>{1.0} : v_),
      s2_(v_tilde_.empty() ? std::vector<double>{1.0} : rotate_last_first(v_tilde_, -1.0)),
      c1_(v_tilde_.empty() ? std::vector<double>{1.0} : rotate_last_first(v_tilde_, 1.0)),
      c2_(v_.empty() ? std::vector<double>{1.0} : v_) {
  if (v_.empty()) throw InvalidArgument("GsInverse: empty columns");
  if (v_tilde_.size() != v_.size()) throw DimensionMismatch("GsInverse v_tilde", v_.size(), v_tilde_.size());
  if (!(v_.front() > 0.0)) throw NonPositivePivot(v_.front());
}

std::vector<Complex> GsInverse::apply_complex(std::vector<Complex> y) const {
  const std::size_t m = size();
  // Both circulant factors share the transform of y, and the two skew-circulant
  // products share one inverse transform.
  fft::forward(y);
  std::vector<Complex> a(m), b(m);
  const auto& lc1 = c1_.eigenvalues();
  const auto& lc2 = c2_.eigenvalues();
  for (std::size_t k = 0; k < m; ++k) {
    a[k] = lc1[k] * y[k];
    b[k] = lc2[k] * y[k];
  }
  fft::inverse(a);
  fft::inverse(b);
  const auto& tw = s1_.twiddles();
  for (std::size_t k = 0; k < m; ++k) {
    a[k] *= tw[k];
    b[k] *= tw[k];
  }
  fft::forward(a);
  fft::forward(b);
  const auto& ls1 = s1_.eigenvalues();
  const auto& ls2 = s2_.eigenvalues();
  for (std::size_t k = 0; k < m; ++k) a[k] = ls1[k] * a[k] - ls2[k] * b[k];
  fft::inverse(a);
  const double inv = 1.0 / (2.0 * v1());
  for (std::size_t k = 0; k < m; ++k) a[k] *= std::conj(tw[k]) * inv;
  return a;
}

Vector GsInverse::apply(const Vector& y) const {
  require_size("gs_apply", size(), y.size());
  const double radius = std::max(c1_.spectral_radius() * s1_.spectral_radius(),
                                 c2_.spectral_radius() * s2_.spectral_radius());
  return checked_real(apply_complex(to_complex(y)), size(),
                      y.lpNorm<Eigen::Infinity>() * radius / (2.0 * v1()) * double(size()), "gs_apply");
}

std::pair<Vector, Vector> GsInverse::apply_pair(const Vector& x, const Vector& y) const {
  require_size("gs_apply", size(), x.size());
  require_size("gs_apply", size(), y.size());
  return split_pair(apply_complex(to_complex(x, y)));
}

// --------------------------------------------------------------- solvers

GmresResult toeplitz_solve_report(const ToeplitzOperator& t, const Vector& b, double tol,
                                  std::size_t max_iter) {
  require_size("toeplitz_solve", t.size(), b.size());
  LinearMap precond = identity_map();
  const auto strang = t.strang_circulant();
  try {
    (void)strang.solve(Vector::Zero(static_cast<Eigen::Index>(t.size())));
    precond = [&strang](const Vector& x) { return strang.solve(x); };
  } catch (const SingularMatrix&) {
    // Unpreconditioned fallback.
  }
  GmresOptions opts;
  opts.rel_tol = tol;
  opts.max_iter = max_iter;
  auto result = gmres([&t](const Vector& x) { return t.apply(x); }, precond, b,
                      Vector::Zero(b.size()), opts);
  if (!result.converged) {
    throw InnerSolverDivergence("toeplitz_solve: relative residual " +
                                std::to_string(result.true_rel_residual) + " after " +
                                std::to_string(result.iterations) + " iterations (tol " +
                                std::to_string(tol) + ")");
  }
  return result;
}

Vector toeplitz_solve(const ToeplitzOperator& t, const Vector& b, double tol, std::size_t max_iter) {
  return toeplitz_solve_report(t, b, tol, max_iter).solution;
}

GsInverse gs_build(const ToeplitzOperator& p, double tol) {
  const auto m = static_cast<Eigen::Index>(p.size());
  Vector e1 = Vector::Zero(m);
  Vector em = Vector::Zero(m);
  e1[0] = 1.0;
  em[m - 1] = 1.0;
  const Vector v = toeplitz_solve(p, e1, tol);
  const Vector vt = toeplitz_solve(p, em, tol);
  return GsInverse(std::vector<double>(v.begin(), v.end()), std::vector<double>(vt.begin(), vt.end()));
}

}  // namespace osfde
