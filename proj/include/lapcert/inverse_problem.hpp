#pragma once

// The inverse problem y = G(u) + eta with eta ~ N(0, Gamma) and prior
// u ~ N(0, C0): data misfit Phi, regularized objective I and their derivatives.

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lapcert/finite_difference.hpp"
#include "lapcert/gaussian_core.hpp"

namespace lapcert {

/// Forward map G : R^n -> R^m with first and (optionally) second derivatives.
struct ForwardModel {
  std::string name;
  Eigen::Index dim_in = 0;
  Eigen::Index dim_out = 0;
  std::function<Vector(const Vector&)> eval;
  /// DG(u), m x n.
  std::function<Matrix(const Vector&)> jacobian;
  /// HG(u): one symmetric n x n form per output. Empty means finite differences of the Jacobian.
  std::function<std::vector<Matrix>(const Vector&)> hessian;
  /// False if eval may not be called concurrently; engines then run single-threaded.
  bool reentrant = true;
  /// True if G is affine (HG vanishes identically).
  bool linear = false;
};

namespace detail {

inline void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw NonFiniteValue(std::string(what) + " produced non-finite values");
}

inline void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw NonFiniteValue(std::string(what) + " produced non-finite values");
}

}  // namespace detail

inline Vector forward_eval(const ForwardModel& g, const Vector& u) {
  detail::require_dim(g.name + " input", g.dim_in, u.size());
  Vector out = g.eval(u);
  detail::require_dim(g.name + " output", g.dim_out, out.size());
  detail::require_finite(out, "forward model");
  return out;
}

inline Matrix forward_jacobian(const ForwardModel& g, const Vector& u) {
  detail::require_dim(g.name + " input", g.dim_in, u.size());
  Matrix jac = g.jacobian ? g.jacobian(u) : fd::jacobian(g.eval, u);
  if (jac.rows() != g.dim_out || jac.cols() != g.dim_in)
    throw DimensionMismatch(g.name + " Jacobian rows", static_cast<long>(g.dim_out), static_cast<long>(jac.rows()));
  detail::require_finite(jac, "forward Jacobian");
  return jac;
}

/// Second derivative HG(u), falling back to central differences of the Jacobian.
inline std::vector<Matrix> forward_hessian(const ForwardModel& g, const Vector& u) {
  detail::require_dim(g.name + " input", g.dim_in, u.size());
  if (g.linear) return std::vector<Matrix>(static_cast<std::size_t>(g.dim_out), Matrix::Zero(g.dim_in, g.dim_in));
  if (g.hessian) {
    auto h = g.hessian(u);
    detail::require_dim(g.name + " Hessian count", g.dim_out, static_cast<Eigen::Index>(h.size()));
    for (const auto& m : h) detail::require_finite(m, "forward Hessian");
    return h;
  }
  std::vector<Matrix> h(static_cast<std::size_t>(g.dim_out), Matrix(g.dim_in, g.dim_in));
  Vector x = u;
  for (Eigen::Index j = 0; j < g.dim_in; ++j) {
    const double step = fd::first_order_step(u[j]);
    x[j] = u[j] + step;
    const Matrix jp = forward_jacobian(g, x);
    x[j] = u[j] - step;
    const Matrix jm = forward_jacobian(g, x);
    x[j] = u[j];
    const Matrix d = (jp - jm) / (2.0 * step);
    for (Eigen::Index k = 0; k < g.dim_out; ++k) h[static_cast<std::size_t>(k)].col(j) = d.row(k).transpose();
  }
  for (auto& m : h) {
    m = detail::symmetric_part(m);
    detail::require_finite(m, "finite-difference forward Hessian");
  }
  return h;
}

/// Forward model, noise covariance Gamma, centered Gaussian prior and data y.
class ForwardProblem {
 public:
  ForwardProblem(ForwardModel model, const Matrix& noise_cov, const Matrix& prior_cov, Vector data)
      : model_(std::move(model)),
        noise_(GaussianMeasure::centered(noise_cov)),
        prior_(GaussianMeasure::centered(prior_cov)),
        data_(std::move(data)) {
    if (!model_.eval) throw Error("ForwardProblem: model has no evaluation function");
    detail::require_dim("ForwardProblem prior", model_.dim_in, prior_.dim());
    detail::require_dim("ForwardProblem noise covariance", model_.dim_out, noise_.dim());
    detail::require_dim("ForwardProblem data", model_.dim_out, data_.size());
    detail::require_finite(data_, "ForwardProblem data");
  }

  const ForwardModel& model() const noexcept { return model_; }
  const GaussianMeasure& noise() const noexcept { return noise_; }
  const Matrix& noise_cov() const noexcept { return noise_.covariance(); }
  const GaussianMeasure& prior() const noexcept { return prior_; }
  const Matrix& prior_cov() const noexcept { return prior_.covariance(); }
  const Vector& data() const noexcept { return data_; }
  Eigen::Index dim() const noexcept { return model_.dim_in; }

  ForwardProblem with_data(Vector y) const { return ForwardProblem(model_, noise_cov(), prior_cov(), std::move(y)); }

 private:
  ForwardModel model_;
  GaussianMeasure noise_;
  GaussianMeasure prior_;
  Vector data_;
};

/// Phi(u) = 1/2 (y - G(u))^T Gamma^{-1} (y - G(u)).
inline double misfit_phi(const ForwardProblem& p, const Vector& u) {
  const Vector r = p.data() - forward_eval(p.model(), u);
  return 0.5 * p.noise().cm_norm2(r);
}

/// I(u) = Phi(u) + 1/2 u^T C0^{-1} u.
inline double objective_i(const ForwardProblem& p, const Vector& u) {
  return misfit_phi(p, u) + 0.5 * p.prior().cm_norm2(u);
}

/// DPhi(u) = -DG(u)^T Gamma^{-1} (y - G(u)).
inline Vector grad_phi(const ForwardProblem& p, const Vector& u) {
  const Vector r = p.data() - forward_eval(p.model(), u);
  return -forward_jacobian(p.model(), u).transpose() * p.noise().solve(r);
}

inline Vector grad_i(const ForwardProblem& p, const Vector& u) { return grad_phi(p, u) + p.prior().solve(u); }

/// HPhi(u)[h1,h2] = <DG h1, Gamma^{-1} DG h2> - <HG[h1,h2], Gamma^{-1}(y - G(u))>.
inline SymmetricOperator hess_phi(const ForwardProblem& p, const Vector& u) {
  const Vector r = p.data() - forward_eval(p.model(), u);
  const Matrix jac = forward_jacobian(p.model(), u);
  const Vector wr = p.noise().solve(r);
  Matrix gauss_newton = jac.transpose() * p.noise().solve_columns(jac);
  if (!p.model().linear) {
    const auto hg = forward_hessian(p.model(), u);
    for (Eigen::Index k = 0; k < p.model().dim_out; ++k) gauss_newton -= wr[k] * hg[static_cast<std::size_t>(k)];
  }
  return SymmetricOperator::symmetrized(gauss_newton);
}

inline SymmetricOperator hess_i(const ForwardProblem& p, const Vector& u) {
  return SymmetricOperator::symmetrized(hess_phi(p, u).matrix() + p.prior().precision());
}

/// Finite-difference checks of DG, HG, grad I and HI at the given points.
///
/// Thresholds: 1e-5 for first derivatives, 1e-4 for second derivatives, on the
/// relative error ||a - b|| / max(||a||, ||b||, 1).
inline std::vector<fd::DerivativeCheck> check_derivatives(const ForwardProblem& p, const std::vector<Vector>& points) {
  fd::DerivativeCheck dg{"DG", 0.0, 1e-5, 0};
  fd::DerivativeCheck hg{"HG", 0.0, 1e-4, 0};
  fd::DerivativeCheck gi{"grad I", 0.0, 1e-5, 0};
  fd::DerivativeCheck hi{"HI", 0.0, 1e-4, 0};
  const ForwardModel& g = p.model();
  for (const Vector& u : points) {
    dg.max_error = std::max(dg.max_error, fd::relative_error(forward_jacobian(g, u), fd::jacobian(g.eval, u)));
    ++dg.points;

    const auto analytic = forward_hessian(g, u);
    const auto jac_fn = [&g](const Vector& x) -> Matrix { return forward_jacobian(g, x); };
    for (Eigen::Index k = 0; k < g.dim_out; ++k) {
      const auto row_k = [&](const Vector& x) -> Vector { return jac_fn(x).row(k).transpose(); };
      hg.max_error = std::max(hg.max_error, fd::relative_error(analytic[static_cast<std::size_t>(k)],
                                                               fd::hessian_from_gradient(row_k, u)));
    }
    ++hg.points;

    const auto obj = [&p](const Vector& x) { return objective_i(p, x); };
    gi.max_error = std::max(gi.max_error, fd::relative_error(grad_i(p, u), fd::gradient(obj, u)));
    ++gi.points;

    const auto grad = [&p](const Vector& x) -> Vector { return grad_i(p, x); };
    hi.max_error = std::max(hi.max_error, fd::relative_error(hess_i(p, u).matrix(), fd::hessian_from_gradient(grad, u)));
    ++hi.points;
  }
  return {dg, hg, gi, hi};
}

/// Derivative-check points drawn from the prior with the given seed.
inline std::vector<Vector> derivative_check_points(const ForwardProblem& p, int count, std::uint64_t seed) {
  const Matrix draws = sample(p.prior(), seed, count);
  std::vector<Vector> pts;
  pts.reserve(static_cast<std::size_t>(count));
  for (Eigen::Index c = 0; c < draws.cols(); ++c) pts.emplace_back(draws.col(c));
  return pts;
}

}  // namespace lapcert
