#pragma once

// The one-dimensional exp(u) study: d_H and both certificates for y = -2 and
// y = 2, the published reference table, a (sigma, gamma) calibration search,
// and Lebesgue-density curves of the posterior and its Laplace approximation.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "lapcert/builtin_models.hpp"
#include "lapcert/hellinger_metrics.hpp"
#include "lapcert/map_laplace.hpp"

namespace lapcert::study {

struct Exp1dRow {
  double y = 0.0;
  double sigma = 1.0;
  double gamma = 1.0;
  double u_map = 0.0;
  double d_hellinger = 0.0;
  double k_prop61 = 0.0;
  double bound_prop61 = 0.0;
  double k_cor63 = 0.0;
  double bound_cor63 = 0.0;

  std::array<double, 5> values() const { return {d_hellinger, k_prop61, bound_prop61, k_cor63, bound_cor63}; }
};

inline constexpr std::array<const char*, 5> kValueNames = {"d_H", "K_prop61", "bound_prop61", "K_cor63",
                                                           "bound_cor63"};

/// Published values for G(u) = exp(u), y in {-2, 2}.
inline std::array<Exp1dRow, 2> reference_rows() {
  Exp1dRow neg;
  neg.y = -2.0;
  neg.d_hellinger = 0.32595;
  neg.k_prop61 = 0.46621;
  neg.bound_prop61 = 0.41128;
  neg.k_cor63 = 0.55328;
  neg.bound_cor63 = 0.50517;
  Exp1dRow pos;
  pos.y = 2.0;
  pos.d_hellinger = 0.095810;
  pos.k_prop61 = 0.13648;
  pos.bound_prop61 = 0.10330;
  pos.k_cor63 = 0.17422;
  pos.bound_cor63 = 0.13434;
  return {neg, pos};
}

inline Exp1dRow run_exp1d(double y, double sigma, double gamma, const IntegrationEngine& engine) {
  const ForwardProblem p = exp1d_problem(y, sigma, gamma);
  const MapResult r = find_map(p);
  const TaylorMisfit t = TaylorMisfit::at(p, r);
  const CertificationReport c = certify(p, t, r, engine);
  Exp1dRow row;
  row.y = y;
  row.sigma = sigma;
  row.gamma = gamma;
  row.u_map = r.u_map[0];
  row.d_hellinger = c.hellinger.distance;
  row.k_prop61 = c.prop61.k_value;
  row.bound_prop61 = c.prop61.hellinger_bound;
  row.k_cor63 = c.cor63.k_value;
  row.bound_cor63 = c.cor63.hellinger_bound;
  return row;
}

/// Largest relative deviation of the five values from the reference row.
inline double max_relative_error(const Exp1dRow& row, const Exp1dRow& ref) {
  const auto a = row.values();
  const auto b = ref.values();
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]) / std::abs(b[i]));
  return worst;
}

struct SweepResult {
  Exp1dRow best;
  double max_relative_error = std::numeric_limits<double>::infinity();
  int evaluations = 0;
};

namespace detail {

inline void consider(SweepResult& s, double sigma, double gamma, const Exp1dRow& ref, const IntegrationEngine& engine) {
  ++s.evaluations;
  try {
    const Exp1dRow row = run_exp1d(ref.y, sigma, gamma, engine);
    const double err = max_relative_error(row, ref);
    if (err < s.max_relative_error) {
      s.max_relative_error = err;
      s.best = row;
    }
  } catch (const Error&) {
  }
}

}  // namespace detail

/// Tries every (sigma, gamma) pair from the given candidate values.
inline SweepResult grid_sweep(const Exp1dRow& ref, const std::vector<double>& candidates,
                              const IntegrationEngine& engine) {
  SweepResult s;
  for (double sigma : candidates)
    for (double gamma : candidates) detail::consider(s, sigma, gamma, ref, engine);
  return s;
}

/// Log-spaced grid over sigma in [0.1, 10], gamma in [0.05, 5], then compass
/// search in log space from the best grid point.
inline SweepResult refined_sweep(const Exp1dRow& ref, const IntegrationEngine& engine, int grid_points = 41) {
  SweepResult s;
  const double ls0 = std::log(0.1), ls1 = std::log(10.0);
  const double lg0 = std::log(0.05), lg1 = std::log(5.0);
  for (int i = 0; i < grid_points; ++i) {
    for (int j = 0; j < grid_points; ++j) {
      const double ls = ls0 + (ls1 - ls0) * i / (grid_points - 1);
      const double lg = lg0 + (lg1 - lg0) * j / (grid_points - 1);
      detail::consider(s, std::exp(ls), std::exp(lg), ref, engine);
    }
  }
  if (!std::isfinite(s.max_relative_error)) return s;
  double step = (ls1 - ls0) / (grid_points - 1);
  while (step > 1e-7) {
    bool improved = false;
    const double ls = std::log(s.best.sigma), lg = std::log(s.best.gamma);
    const std::array<std::array<double, 2>, 4> moves{{{step, 0.0}, {-step, 0.0}, {0.0, step}, {0.0, -step}}};
    for (const auto& mv : moves) {
      const double before = s.max_relative_error;
      detail::consider(s, std::exp(ls + mv[0]), std::exp(lg + mv[1]), ref, engine);
      if (s.max_relative_error < before) {
        improved = true;
        break;
      }
    }
    if (!improved) step *= 0.5;
  }
  return s;
}

struct DensityPoint {
  double u = 0.0;
  double posterior = 0.0;
  double laplace = 0.0;
};

/// Lebesgue densities of the posterior and of N(u_MAP, HI^{-1}) on [lo, hi] for a 1D problem.
inline std::vector<DensityPoint> density_curve(const ForwardProblem& p, const MapResult& r,
                                               const IntegrationEngine& engine, double lo = -4.0, double hi = 4.0,
                                               double step = 0.01) {
  if (p.dim() != 1) throw Error("density_curve: only one-dimensional problems");
  if (!(step > 0.0) || !(hi > lo)) throw Error("density_curve: bad grid");
  const double shift = misfit_phi(p, r.u_map);
  const double z = engine.integrate_scalar(
      p.prior(), [&](const Vector& u) { return std::exp(-(misfit_phi(p, u) - shift)); }, p.model().reentrant);
  const GaussianMeasure nu = laplace_measure(r);
  const auto count = static_cast<long>(std::llround((hi - lo) / step));
  std::vector<DensityPoint> out;
  out.reserve(static_cast<std::size_t>(count + 1));
  Vector u(1);
  for (long i = 0; i <= count; ++i) {
    u[0] = lo + step * static_cast<double>(i);
    const double post = std::exp(-(misfit_phi(p, u) - shift) + log_density(p.prior(), u)) / z;
    out.push_back({u[0], post, std::exp(log_density(nu, u))});
  }
  return out;
}

}  // namespace lapcert::study
