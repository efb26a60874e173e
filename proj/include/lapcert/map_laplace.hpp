#pragma once

// MAP estimation by damped Newton, the quadratic surrogate T Phi of the misfit
// at the MAP point, and the Laplace measure N(u_MAP, HI(u_MAP)^{-1}).

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "lapcert/gaussian_core.hpp"
#include "lapcert/inverse_problem.hpp"
#include "lapcert/quadrature.hpp"

namespace lapcert {

struct MapOptions {
  int max_iterations = 200;
  /// Converged when ||grad I|| <= grad_tolerance * (1 + |I|).
  double grad_tolerance = 1e-10;
  double armijo_c = 1e-4;
  double backtrack = 0.5;
  int max_halvings = 40;
  /// Extra Newton runs from prior draws; the lowest I wins.
  int multistarts = 5;
  std::uint64_t multistart_seed = 7;
  /// Minima whose I differs by more than this are reported as distinct.
  double multistart_tolerance = 1e-6;
};

struct MultistartSummary {
  int runs = 0;
  int converged_runs = 0;
  /// Largest |I - I_best| over converged runs.
  double objective_spread = 0.0;
  /// Some converged run ended in a different local minimum.
  bool disagreement = false;
};

struct MapResult {
  Vector u_map;
  /// Unmodified HI(u_MAP); positive definite.
  SymmetricOperator hess_i_at_map;
  SymmetricOperator hess_phi_at_map;
  double i_at_map = 0.0;
  int iterations = 0;
  double grad_norm = 0.0;
  bool converged = false;
  MultistartSummary multistart;
};

namespace detail {

struct NewtonRun {
  Vector u;
  double value = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
};

/// Newton direction with a Levenberg shift whenever H is not positive definite.
inline Vector newton_direction(const Matrix& h, const Vector& g) {
  Eigen::LLT<Matrix> llt(h);
  if (llt.info() == Eigen::Success) return -llt.solve(g);
  const double scale = 1.0 + h.cwiseAbs().maxCoeff();
  const double min_ev = SymmetricOperator::symmetrized(h).min_eigenvalue();
  double shift = std::max(-min_ev, 0.0) + 1e-6 * scale;
  const Matrix id = Matrix::Identity(h.rows(), h.cols());
  for (int k = 0; k < 60; ++k) {
    Eigen::LLT<Matrix> shifted(h + shift * id);
    if (shifted.info() == Eigen::Success) return -shifted.solve(g);
    shift *= 2.0;
  }
  return -g;
}

inline NewtonRun newton(const ForwardProblem& p, Vector u, const MapOptions& opts) {
  NewtonRun run;
  double value = objective_i(p, u);
  for (int it = 0;; ++it) {
    const Vector g = grad_i(p, u);
    if (!std::isfinite(value) || !g.allFinite()) throw NonFiniteValue("Newton iteration left the finite domain of I");
    run.grad_norm = g.norm();
    if (run.grad_norm <= opts.grad_tolerance * (1.0 + std::abs(value))) {
      run.u = u;
      run.value = value;
      run.iterations = it;
      return run;
    }
    if (it >= opts.max_iterations)
      throw MaxIterations("Newton: no convergence after " + std::to_string(opts.max_iterations) +
                          " iterations (||grad I|| = " + std::to_string(run.grad_norm) + ")");

    const Vector d = newton_direction(hess_i(p, u).matrix(), g);
    const double slope = g.dot(d);
    double t = 1.0;
    bool accepted = false;
    for (int k = 0; k <= opts.max_halvings; ++k) {
      const Vector trial = u + t * d;
      double trial_value = std::numeric_limits<double>::infinity();
      try {
        trial_value = objective_i(p, trial);
      } catch (const NonFiniteValue&) {
      }
      // A few ulps of slack: near the optimum the decrease is below the resolution of I.
      const double slack = 8.0 * std::numeric_limits<double>::epsilon() * std::abs(value);
      if (trial != u && std::isfinite(trial_value) && trial_value <= value + opts.armijo_c * t * slope + slack) {
        u = trial;
        value = trial_value;
        accepted = true;
        break;
      }
      t *= opts.backtrack;
    }
    if (!accepted) {
      // Round-off floor: the full step cannot be resolved in I any more.
      if (run.grad_norm <= 1e-6 * (1.0 + std::abs(value))) {
        u += d;
        value = objective_i(p, u);
      } else {
        throw MaxIterations("Newton: line search failed after " + std::to_string(opts.max_halvings) +
                            " halvings");
      }
    }
  }
}

}  // namespace detail

/// Minimizer of I by Newton with Armijo backtracking, plus seeded multistarts.
///
/// Throws MaxIterations if the run from `init` does not converge and
/// IndefiniteHessianAtOptimum if the best stationary point is a saddle.
inline MapResult find_map(const ForwardProblem& p, const Vector& init, const MapOptions& opts = {}) {
  detail::require_dim("find_map init", p.dim(), init.size());
  detail::NewtonRun best = detail::newton(p, init, opts);

  MultistartSummary ms;
  ms.runs = 1;
  ms.converged_runs = 1;
  std::vector<double> values{best.value};
  if (opts.multistarts > 0) {
    const Matrix starts = sample(p.prior(), opts.multistart_seed, opts.multistarts);
    for (Eigen::Index s = 0; s < starts.cols(); ++s) {
      ++ms.runs;
      try {
        detail::NewtonRun run = detail::newton(p, starts.col(s), opts);
        ++ms.converged_runs;
        values.push_back(run.value);
        if (run.value < best.value - 1e-12 * (1.0 + std::abs(best.value))) best = std::move(run);
      } catch (const Error&) {
      }
    }
  }
  for (double v : values) ms.objective_spread = std::max(ms.objective_spread, std::abs(v - best.value));
  ms.disagreement = ms.objective_spread > opts.multistart_tolerance;

  MapResult r;
  r.u_map = best.u;
  r.i_at_map = best.value;
  r.iterations = best.iterations;
  r.grad_norm = best.grad_norm;
  r.converged = true;
  r.multistart = ms;
  r.hess_phi_at_map = hess_phi(p, best.u);
  r.hess_i_at_map = hess_i(p, best.u);
  const double min_ev = r.hess_i_at_map.min_eigenvalue();
  if (!(min_ev > 0.0)) throw IndefiniteHessianAtOptimum(min_ev);
  return r;
}

inline MapResult find_map(const ForwardProblem& p, const MapOptions& opts = {}) {
  return find_map(p, Vector::Zero(p.dim()), opts);
}

/// Second-order Taylor expansion of Phi at the MAP point:
///   T Phi(u) = Phi(v) + DPhi(v)(u - v) + 1/2 HPhi(v)[u - v, u - v].
struct TaylorMisfit {
  Vector anchor;
  double value = 0.0;
  Vector grad;
  SymmetricOperator hess;

  static TaylorMisfit at(const ForwardProblem& p, const Vector& anchor) {
    return TaylorMisfit{anchor, misfit_phi(p, anchor), grad_phi(p, anchor), hess_phi(p, anchor)};
  }

  static TaylorMisfit at(const ForwardProblem& p, const MapResult& r) {
    return TaylorMisfit{r.u_map, misfit_phi(p, r.u_map), grad_phi(p, r.u_map), r.hess_phi_at_map};
  }

  double operator()(const Vector& u) const {
    detail::require_dim("TaylorMisfit", anchor.size(), u.size());
    const Vector d = u - anchor;
    return value + grad.dot(d) + 0.5 * d.dot(hess.matrix() * d);
  }
};

inline double taylor_misfit_eval(const TaylorMisfit& t, const Vector& u) { return t(u); }

/// nu = N(u_MAP, HI(u_MAP)^{-1}).
inline GaussianMeasure laplace_measure(const MapResult& r) {
  const Matrix& h = r.hess_i_at_map.matrix();
  Eigen::LLT<Matrix> llt(h);
  if (llt.info() != Eigen::Success) throw NotPositiveDefinite("HI(u_MAP)", r.hess_i_at_map.min_eigenvalue());
  const Matrix cov = detail::symmetric_part(llt.solve(Matrix::Identity(h.rows(), h.cols())));
  return GaussianMeasure(r.u_map, cov);
}

struct NormalizationCheck {
  /// exp(-I(u_MAP)) / sqrt(det(C^{1/2} HI(u_MAP) C^{1/2})).
  double analytic = 0.0;
  /// int exp(-T Phi) dmu_0 by the engine.
  double numeric = 0.0;

  double relative_error() const { return std::abs(numeric - analytic) / std::abs(analytic); }
};

inline NormalizationCheck normalization_constant(const ForwardProblem& p, const TaylorMisfit& t, const MapResult& r,
                                                 const IntegrationEngine& engine) {
  NormalizationCheck c;
  c.analytic = std::exp(-r.i_at_map - 0.5 * log_det_factor(p.prior_cov(), r.hess_i_at_map));
  c.numeric = engine.integrate_scalar(
      p.prior(), [&t](const Vector& u) { return std::exp(-t(u)); }, p.model().reentrant);
  return c;
}

struct CharacteristicCheck {
  /// int exp(i<lambda,u> - T Phi(u)) dmu_0(u), by the engine.
  std::complex<double> lhs;
  /// exp(-I(v)) exp(i<v,lambda> - 1/2 HI(v)^{-1}[lambda,lambda]) / sqrt(det(C^{1/2} HI(v) C^{1/2})).
  std::complex<double> rhs;
  /// The same integral through the complex Gaussian integral with M = C^{-1} - HI(v),
  /// b1 = HI(v) v, b2 = lambda.
  std::complex<double> via_gauss_integral;
  /// Normalized: lhs / int exp(-T Phi) dmu_0, to compare with the N(v, HI^{-1}) characteristic function.
  std::complex<double> measure_lhs;
  std::complex<double> measure_rhs;

  double relative_error() const { return std::abs(lhs - rhs) / std::abs(rhs); }
};

/// Characteristic function of N(mean, cov) at lambda.
inline std::complex<double> gaussian_charfn(const GaussianMeasure& g, const Vector& lambda) {
  detail::require_dim("gaussian_charfn", g.dim(), lambda.size());
  return std::polar(std::exp(-0.5 * lambda.dot(g.covariance() * lambda)), g.mean().dot(lambda));
}

inline CharacteristicCheck charfn_check(const ForwardProblem& p, const TaylorMisfit& t, const MapResult& r,
                                        const Vector& lambda, const IntegrationEngine& engine) {
  detail::require_dim("charfn_check lambda", p.dim(), lambda.size());
  const auto est = engine.integrate(
      p.prior(), 3,
      [&](const Vector& u, Vector& out) {
        const double w = std::exp(-t(u));
        const double phase = lambda.dot(u);
        out[0] = w * std::cos(phase);
        out[1] = w * std::sin(phase);
        out[2] = w;
      },
      p.model().reentrant);

  CharacteristicCheck c;
  c.lhs = {est.value[0], est.value[1]};
  const Vector& v = r.u_map;
  const Matrix& j = r.hess_i_at_map.matrix();
  const double half_log_det = 0.5 * log_det_factor(p.prior_cov(), r.hess_i_at_map);
  const double quad = lambda.dot(j.llt().solve(lambda));
  c.rhs = std::polar(std::exp(-r.i_at_map - 0.5 * quad - half_log_det), v.dot(lambda));

  const SymmetricOperator m = SymmetricOperator::symmetrized(p.prior().precision() - j);
  c.via_gauss_integral =
      std::exp(-r.i_at_map - 0.5 * v.dot(j * v)) * gauss_integral_complex(p.prior(), m, j * v, lambda);

  c.measure_lhs = c.lhs / est.value[2];
  c.measure_rhs = gaussian_charfn(laplace_measure(r), lambda);
  return c;
}

}  // namespace lapcert
