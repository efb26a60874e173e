#pragma once

// Gaussian-measure algebra on R^n: factorizations, densities, sampling and the
// closed-form Gaussian integrals of exp(quadratic + linear) against N(0, Q).

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>

#include "lapcert/errors.hpp"
#include "lapcert/random.hpp"

namespace lapcert {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

namespace detail {

inline void require_dim(const std::string& what, Eigen::Index expected, Eigen::Index got) {
  if (expected != got) throw DimensionMismatch(what, static_cast<long>(expected), static_cast<long>(got));
}

inline void require_square(const std::string& what, const Matrix& m) {
  if (m.rows() != m.cols()) throw DimensionMismatch(what + " (square)", static_cast<long>(m.rows()),
                                                    static_cast<long>(m.cols()));
}

/// Entrywise relative symmetry test, with a round-off floor scaled by the largest entry.
inline bool is_symmetric(const Matrix& m, double rel_tol = 1e-12) {
  if (m.rows() != m.cols()) return false;
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * m.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < m.cols(); ++j) {
      const double a = m(i, j);
      const double b = m(j, i);
      if (!(std::abs(a - b) <= rel_tol * std::max(std::abs(a), std::abs(b)) + floor)) return false;
    }
  }
  return true;
}

inline Matrix symmetric_part(const Matrix& m) { return 0.5 * (m + m.transpose()); }

}  // namespace detail

/// Symmetric n x n operator. Stored exactly symmetric after construction.
class SymmetricOperator {
 public:
  SymmetricOperator() = default;

  /// Validates symmetry to 1e-12 relative, then stores the symmetric part.
  explicit SymmetricOperator(const Matrix& m) {
    detail::require_square("SymmetricOperator", m);
    if (!detail::is_symmetric(m)) throw NotSymmetric("SymmetricOperator: matrix is not symmetric");
    matrix_ = detail::symmetric_part(m);
  }

  /// Skips the check; for matrices that are symmetric up to accumulated round-off.
  static SymmetricOperator symmetrized(const Matrix& m) {
    detail::require_square("SymmetricOperator", m);
    SymmetricOperator op;
    op.matrix_ = detail::symmetric_part(m);
    return op;
  }

  static SymmetricOperator zero(Eigen::Index n) { return symmetrized(Matrix::Zero(n, n)); }
  static SymmetricOperator identity(Eigen::Index n) { return symmetrized(Matrix::Identity(n, n)); }

  const Matrix& matrix() const noexcept { return matrix_; }
  Eigen::Index dim() const noexcept { return matrix_.rows(); }

  /// Bilinear form A[h1, h2].
  double operator()(const Vector& h1, const Vector& h2) const { return h1.dot(matrix_ * h2); }

  double min_eigenvalue() const {
    if (dim() == 0) return std::numeric_limits<double>::infinity();
    Eigen::SelfAdjointEigenSolver<Matrix> es(matrix_, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }

 private:
  Matrix matrix_;
};

/// Symmetric square root of an SPD matrix, by eigendecomposition.
inline Matrix sym_sqrt(const Matrix& spd, const std::string& what = "matrix") {
  Eigen::SelfAdjointEigenSolver<Matrix> es(detail::symmetric_part(spd));
  if (es.info() != Eigen::Success) throw Error(what + ": eigendecomposition failed");
  const Vector& ev = es.eigenvalues();
  if (ev.size() > 0 && !(ev.minCoeff() > 0.0)) throw NotPositiveDefinite(what, ev.minCoeff());
  const Matrix& v = es.eigenvectors();
  Matrix r = v * ev.cwiseSqrt().asDiagonal() * v.transpose();
  return detail::symmetric_part(r);
}

/// N(mean, covariance) on R^n.
///
/// The Cholesky factor and the symmetric square root of the covariance are
/// computed once at construction; the object is immutable afterwards.
class GaussianMeasure {
 public:
  GaussianMeasure(Vector mean, Matrix covariance) : mean_(std::move(mean)), cov_(std::move(covariance)) {
    detail::require_square("GaussianMeasure covariance", cov_);
    detail::require_dim("GaussianMeasure mean", cov_.rows(), mean_.size());
    if (!detail::is_symmetric(cov_)) throw NotSymmetric("GaussianMeasure: covariance is not symmetric");
    cov_ = detail::symmetric_part(cov_);

    Eigen::LLT<Matrix> llt(cov_);
    if (llt.info() != Eigen::Success) {
      throw NotPositiveDefinite("GaussianMeasure covariance", SymmetricOperator(cov_).min_eigenvalue());
    }
    chol_ = llt.matrixL();
    if (chol_.diagonal().size() > 0 && !(chol_.diagonal().minCoeff() > 0.0)) {
      throw NotPositiveDefinite("GaussianMeasure covariance", SymmetricOperator(cov_).min_eigenvalue());
    }
    const double scale = std::max(cov_.norm(), std::numeric_limits<double>::min());
    if ((chol_ * chol_.transpose() - cov_).norm() > 1e-10 * scale) {
      throw NotPositiveDefinite("GaussianMeasure covariance (ill-conditioned)",
                                SymmetricOperator(cov_).min_eigenvalue());
    }
    log_det_ = 2.0 * chol_.diagonal().array().log().sum();
    sqrt_ = sym_sqrt(cov_, "GaussianMeasure covariance");
  }

  /// Centered measure N(0, covariance).
  static GaussianMeasure centered(const Matrix& covariance) {
    return GaussianMeasure(Vector::Zero(covariance.rows()), covariance);
  }

  Eigen::Index dim() const noexcept { return mean_.size(); }
  const Vector& mean() const noexcept { return mean_; }
  const Matrix& covariance() const noexcept { return cov_; }
  /// Lower-triangular L with L L^T = covariance.
  const Matrix& chol() const noexcept { return chol_; }
  /// Symmetric C^{1/2}.
  const Matrix& sqrt_covariance() const noexcept { return sqrt_; }
  double log_det() const noexcept { return log_det_; }

  /// C^{-1} v through the Cholesky factor.
  Vector solve(const Vector& v) const {
    detail::require_dim("GaussianMeasure::solve", dim(), v.size());
    return chol_.transpose().triangularView<Eigen::Upper>().solve(
        chol_.triangularView<Eigen::Lower>().solve(v));
  }

  /// C^{-1} B, column by column.
  Matrix solve_columns(const Matrix& b) const {
    detail::require_dim("GaussianMeasure::solve_columns", dim(), b.rows());
    return chol_.transpose().triangularView<Eigen::Upper>().solve(chol_.triangularView<Eigen::Lower>().solve(b));
  }

  Matrix precision() const { return detail::symmetric_part(solve_columns(Matrix::Identity(dim(), dim()))); }

  /// Squared Cameron-Martin norm v^T C^{-1} v.
  double cm_norm2(const Vector& v) const {
    detail::require_dim("GaussianMeasure::cm_norm2", dim(), v.size());
    return chol_.triangularView<Eigen::Lower>().solve(v).squaredNorm();
  }

  bool is_centered() const { return mean_.isZero(0.0); }

 private:
  Vector mean_;
  Matrix cov_;
  Matrix chol_;
  Matrix sqrt_;
  double log_det_ = 0.0;
};

/// log of the Lebesgue density of g at u.
inline double log_density(const GaussianMeasure& g, const Vector& u) {
  detail::require_dim("log_density", g.dim(), u.size());
  const double n = static_cast<double>(g.dim());
  return -0.5 * g.cm_norm2(u - g.mean()) - 0.5 * (n * std::log(2.0 * std::numbers::pi) + g.log_det());
}

/// `count` draws mean + L z, one per column.
inline Matrix sample(const GaussianMeasure& g, Generator& gen, Eigen::Index count) {
  if (count < 1) throw Error("sample: count must be >= 1");
  Matrix z(g.dim(), count);
  for (Eigen::Index c = 0; c < count; ++c)
    for (Eigen::Index i = 0; i < g.dim(); ++i) z(i, c) = gen.normal();
  Matrix out = g.chol().triangularView<Eigen::Lower>() * z;
  out.colwise() += g.mean();
  return out;
}

inline Matrix sample(const GaussianMeasure& g, std::uint64_t seed, Eigen::Index count) {
  Generator gen(seed);
  return sample(g, gen, count);
}

namespace detail {

/// Eigendecomposition of S = Q^{1/2} M Q^{1/2} shared by both Gaussian integrals.
struct DpzFactor {
  Matrix basis;          // eigenvectors of S
  Vector one_minus_s;    // 1 - eigenvalues of S
  Matrix projector;      // basis^T Q^{1/2}
  double log_det = 0.0;  // log det(1 - S)

  DpzFactor(const GaussianMeasure& prior, const SymmetricOperator& m) {
    if (!prior.is_centered()) throw Error("Gaussian integral: prior must be centered");
    require_dim("Gaussian integral operator", prior.dim(), m.dim());
    const Matrix& qs = prior.sqrt_covariance();
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric_part(qs * m.matrix() * qs));
    if (es.info() != Eigen::Success) throw Error("Gaussian integral: eigendecomposition failed");
    const Vector& s = es.eigenvalues();
    if (s.size() > 0 && !(s.maxCoeff() < 1.0 - 1e-10)) throw ConditionViolated(s.maxCoeff());
    basis = es.eigenvectors();
    one_minus_s = (1.0 - s.array()).matrix();
    projector = basis.transpose() * qs;
    log_det = one_minus_s.array().log().sum();
  }

  /// <L a, b> with L = Q^{1/2}(1 - S)^{-1} Q^{1/2}.
  double l_form(const Vector& wa, const Vector& wb) const {
    return (wa.array() * wb.array() / one_minus_s.array()).sum();
  }
};

}  // namespace detail

/// log of  int exp(1/2 <M u,u> + <b,u>) dN(0,Q)(u).
inline double log_gauss_integral_real(const GaussianMeasure& prior, const SymmetricOperator& m,
                                      const Vector& b) {
  detail::require_dim("gauss_integral_real b", prior.dim(), b.size());
  const detail::DpzFactor f(prior, m);
  const Vector w = f.projector * b;
  return 0.5 * f.l_form(w, w) - 0.5 * f.log_det;
}

/// int exp(1/2 <M u,u> + <b,u>) dN(0,Q)(u)
///   = exp(1/2 |(1-S)^{-1/2} Q^{1/2} b|^2) / sqrt(det(1-S)),  S = Q^{1/2} M Q^{1/2}.
/// Throws ConditionViolated unless every eigenvalue of S is below 1 - 1e-10.
inline double gauss_integral_real(const GaussianMeasure& prior, const SymmetricOperator& m, const Vector& b) {
  return std::exp(log_gauss_integral_real(prior, m, b));
}

/// int exp(1/2 <M u,u> + <b1 + i b2, u>) dN(0,Q)(u)
///   = exp(1/2 <L b1,b1> + i <L b1,b2> - 1/2 <L b2,b2>) / sqrt(det(1-S)).
/// With b2 = 0 this is bitwise equal to gauss_integral_real.
inline std::complex<double> gauss_integral_complex(const GaussianMeasure& prior, const SymmetricOperator& m,
                                                   const Vector& b1, const Vector& b2) {
  detail::require_dim("gauss_integral_complex b1", prior.dim(), b1.size());
  detail::require_dim("gauss_integral_complex b2", prior.dim(), b2.size());
  const detail::DpzFactor f(prior, m);
  const Vector w1 = f.projector * b1;
  const Vector w2 = f.projector * b2;
  const double log_mag = 0.5 * f.l_form(w1, w1) - 0.5 * f.l_form(w2, w2) - 0.5 * f.log_det;
  return std::polar(std::exp(log_mag), f.l_form(w1, w2));
}

namespace detail {

inline Vector conjugated_eigenvalues(const Matrix& prior_cov, const Matrix& h, bool add_identity) {
  require_square("prior covariance", prior_cov);
  require_dim("det_factor operator", prior_cov.rows(), h.rows());
  const Matrix cs = sym_sqrt(prior_cov, "prior covariance");
  Matrix a = symmetric_part(cs * h * cs);
  if (add_identity) a += Matrix::Identity(a.rows(), a.cols());
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

}  // namespace detail

/// log det(C^{1/2} h C^{1/2}); throws NotPositiveDefinite if any eigenvalue is <= 0.
inline double log_det_factor(const Matrix& prior_cov, const SymmetricOperator& h) {
  const Vector ev = detail::conjugated_eigenvalues(prior_cov, h.matrix(), false);
  if (ev.size() > 0 && !(ev.minCoeff() > 0.0)) throw NotPositiveDefinite("C^{1/2} h C^{1/2}", ev.minCoeff());
  return ev.array().log().sum();
}

inline double det_factor(const Matrix& prior_cov, const SymmetricOperator& h) {
  return std::exp(log_det_factor(prior_cov, h));
}

/// log det(Id + C^{1/2} h C^{1/2}), the form that appears with h = H Phi.
inline double log_det_identity_plus(const Matrix& prior_cov, const SymmetricOperator& h) {
  const Vector ev = detail::conjugated_eigenvalues(prior_cov, h.matrix(), true);
  if (ev.size() > 0 && !(ev.minCoeff() > 0.0))
    throw NotPositiveDefinite("Id + C^{1/2} h C^{1/2}", ev.minCoeff());
  return ev.array().log().sum();
}

inline double det_identity_plus(const Matrix& prior_cov, const SymmetricOperator& h) {
  return std::exp(log_det_identity_plus(prior_cov, h));
}

}  // namespace lapcert
