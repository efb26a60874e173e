#pragma once

// Hellinger distance between the posterior and its Laplace approximation,
// computed from prior-weighted integrals of exp(-Phi) and exp(-T Phi), and
// the certified upper bounds obtained from reverse Cauchy-Schwarz inequalities.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "lapcert/gaussian_core.hpp"
#include "lapcert/inverse_problem.hpp"
#include "lapcert/map_laplace.hpp"
#include "lapcert/quadrature.hpp"

namespace lapcert {

/// K / sqrt(1 + (1 - K)^2): the Hellinger bound implied by a certificate K.
inline double hellinger_bound_from_k(double k) { return k / std::sqrt(1.0 + (1.0 - k) * (1.0 - k)); }

enum class BoundMethod { Prop61, Cor63 };

inline std::string to_string(BoundMethod m) { return m == BoundMethod::Prop61 ? "prop61" : "cor63"; }

struct BoundCertificate {
  BoundMethod method = BoundMethod::Prop61;
  double k_value = 0.0;
  double hellinger_bound = 0.0;
  /// ||exp(-Phi/2) - exp(-T Phi/2)|| in L2(mu_0) (Prop61) or its pointwise upper bound (Cor63).
  double lhs = 0.0;
  /// ||exp(-T Phi/2)|| in L2(mu_0) = exp(-I(u_MAP)/2) / det(C^{1/2} HI C^{1/2})^{1/4}.
  double rhs = 0.0;
  /// K < 1; K = 0 (Phi == T Phi) is accepted as the degenerate case.
  bool valid = false;
};

/// Every prior-weighted integral needed for d_H and both certificates, from one engine pass.
///
/// Integrals are stored multiplied by exp(shift) with shift = Phi(u_MAP) so that
/// problems with a large misfit do not underflow; all derived ratios are shift-free.
struct CertificationIntegrals {
  double shift = 0.0;
  double z_phi = 0.0;        // int exp(-Phi)
  double z_taylor = 0.0;     // int exp(-T Phi)
  double inner = 0.0;        // int exp(-(Phi + T Phi)/2)
  double diff_sq = 0.0;      // int (exp(-Phi/2) - exp(-T Phi/2))^2
  double cor_integral = 0.0; // int exp(-min(Phi, T Phi)) min(|Phi - T Phi|^2 / 4, 1)
  Matrix covariance;         // estimator covariance of the five values (Monte Carlo only)
  double log_det_hess_i = 0.0;      // log det(C^{1/2} HI C^{1/2})
  double log_det_identity_plus = 0.0; // log det(Id + C^{1/2} HPhi C^{1/2})
  double i_at_map = 0.0;
};

/// Throws DivergentIntegral when exp(-T Phi) is not mu_0-integrable.
inline CertificationIntegrals certification_integrals(const ForwardProblem& p, const TaylorMisfit& t, double i_at_map,
                                                      const IntegrationEngine& engine) {
  CertificationIntegrals c;
  try {
    c.log_det_identity_plus = log_det_identity_plus(p.prior_cov(), t.hess);
  } catch (const NotPositiveDefinite& e) {
    throw DivergentIntegral("exp(-T Phi) is not integrable against the prior: det(Id + C^{1/2} HPhi C^{1/2}) <= 0 "
                            "(smallest eigenvalue " + std::to_string(e.smallest_eigenvalue()) + ")");
  }
  const SymmetricOperator hess_i_op = SymmetricOperator::symmetrized(t.hess.matrix() + p.prior().precision());
  c.log_det_hess_i = log_det_factor(p.prior_cov(), hess_i_op);
  c.i_at_map = i_at_map;
  c.shift = t.value;

  const double s = c.shift;
  const auto est = engine.integrate(
      p.prior(), 5,
      [&](const Vector& u, Vector& out) {
        const double phi = misfit_phi(p, u) - s;
        const double tphi = t(u) - s;
        const double ep = std::exp(-0.5 * phi);
        const double et = std::exp(-0.5 * tphi);
        const double gap = phi - tphi;
        out[0] = ep * ep;
        out[1] = et * et;
        out[2] = ep * et;
        out[3] = (ep - et) * (ep - et);
        out[4] = std::exp(-std::min(phi, tphi)) * std::min(0.25 * gap * gap, 1.0);
      },
      p.model().reentrant);
  c.z_phi = est.value[0];
  c.z_taylor = est.value[1];
  c.inner = est.value[2];
  c.diff_sq = est.value[3];
  c.cor_integral = est.value[4];
  c.covariance = est.covariance;
  return c;
}

inline CertificationIntegrals certification_integrals(const ForwardProblem& p, const TaylorMisfit& t,
                                                      const IntegrationEngine& engine) {
  return certification_integrals(p, t, misfit_phi(p, t.anchor) + 0.5 * p.prior().cm_norm2(t.anchor), engine);
}

struct HellingerEstimate {
  double distance = 0.0;
  double squared = 0.0;
  /// Delta-method standard error of the distance (Monte Carlo only, else 0).
  double standard_error = 0.0;
};

/// d_H^2 = 1 - <e^{-Phi/2}, e^{-T Phi/2}> / (||e^{-Phi/2}|| ||e^{-T Phi/2}||); radicands down to -1e-12 clamp to 0.
inline HellingerEstimate hellinger_from(const CertificationIntegrals& c) {
  HellingerEstimate h;
  const double norm = std::sqrt(c.z_phi * c.z_taylor);
  double sq = 1.0 - c.inner / norm;
  if (sq < 0.0) {
    if (sq < -1e-12) throw Error("hellinger: negative radicand " + std::to_string(sq) + " beyond round-off");
    sq = 0.0;
  }
  h.squared = sq;
  h.distance = std::sqrt(sq);
  if (c.covariance.size() > 0 && c.covariance.norm() > 0.0 && h.distance > 0.0) {
    Vector grad = Vector::Zero(5);
    grad[0] = 0.5 * c.inner / (c.z_phi * norm);
    grad[1] = 0.5 * c.inner / (c.z_taylor * norm);
    grad[2] = -1.0 / norm;
    const double var_sq = grad.dot(c.covariance * grad);
    h.standard_error = std::sqrt(std::max(0.0, var_sq)) / (2.0 * h.distance);
  }
  return h;
}

inline HellingerEstimate hellinger_estimate(const ForwardProblem& p, const TaylorMisfit& t,
                                            const IntegrationEngine& engine) {
  return hellinger_from(certification_integrals(p, t, engine));
}

inline double hellinger(const ForwardProblem& p, const TaylorMisfit& t, const IntegrationEngine& engine) {
  return hellinger_estimate(p, t, engine).distance;
}

namespace detail {

/// log ||exp(-T Phi / 2)||^2 relative to the shift.
inline double shifted_log_norm2(const CertificationIntegrals& c) {
  return -(c.i_at_map - c.shift) - 0.5 * c.log_det_hess_i;
}

inline BoundCertificate make_certificate(BoundMethod method, double shifted_lhs_sq, const CertificationIntegrals& c) {
  BoundCertificate b;
  b.method = method;
  const double log_norm2 = shifted_log_norm2(c);
  b.k_value = std::sqrt(std::max(0.0, shifted_lhs_sq) * std::exp(-log_norm2));
  b.hellinger_bound = hellinger_bound_from_k(b.k_value);
  b.lhs = std::sqrt(std::max(0.0, shifted_lhs_sq) * std::exp(-c.shift));
  b.rhs = std::exp(0.5 * (log_norm2 - c.shift));
  b.valid = b.k_value < 1.0;
  return b;
}

}  // namespace detail

/// K = ||e^{-Phi/2} - e^{-T Phi/2}|| / ||e^{-T Phi/2}||, both in L2(mu_0).
inline BoundCertificate bound_prop61(const CertificationIntegrals& c) {
  return detail::make_certificate(BoundMethod::Prop61, c.diff_sq, c);
}

/// K^2 = int e^{-min(Phi, T Phi)} min(|Phi - T Phi|^2 / 4, 1) dmu_0 / ||e^{-T Phi/2}||^2.
inline BoundCertificate bound_cor63(const CertificationIntegrals& c) {
  return detail::make_certificate(BoundMethod::Cor63, c.cor_integral, c);
}

inline BoundCertificate bound_prop61(const ForwardProblem& p, const TaylorMisfit& t, const MapResult& r,
                                     const IntegrationEngine& engine) {
  return bound_prop61(certification_integrals(p, t, r.i_at_map, engine));
}

inline BoundCertificate bound_cor63(const ForwardProblem& p, const TaylorMisfit& t, const MapResult& r,
                                    const IntegrationEngine& engine) {
  return bound_cor63(certification_integrals(p, t, r.i_at_map, engine));
}

/// Outcome of a reverse Cauchy-Schwarz check on a pair (f, g).
struct ReverseCsResult {
  bool holds_pre = false;
  /// Lower bound on <f, g> implied by the lemma.
  double lower = 0.0;
  double inner = 0.0;
};

/// ||f - g||^2 <= D (||f||^2 + ||g||^2)  implies  <f,g> >= (1 - D)/2 (||f||^2 + ||g||^2).
inline ReverseCsResult reverse_cs_d(const Vector& f, const Vector& g, double d) {
  detail::require_dim("reverse_cs_d", f.size(), g.size());
  if (!(d > 0.0)) throw Error("reverse_cs_d: D must be positive");
  const double sum = f.squaredNorm() + g.squaredNorm();
  return ReverseCsResult{(f - g).squaredNorm() <= d * sum, 0.5 * (1.0 - d) * sum, f.dot(g)};
}

/// ||f - g|| <= K ||f||  implies  <f,g> >= (1 - K)/(1 + (1 - K)^2) (||f||^2 + ||g||^2).
inline ReverseCsResult reverse_cs_k(const Vector& f, const Vector& g, double k) {
  detail::require_dim("reverse_cs_k", f.size(), g.size());
  if (!(k > 0.0 && k < 1.0)) throw Error("reverse_cs_k: K must lie in (0, 1)");
  const double sum = f.squaredNorm() + g.squaredNorm();
  const double c = (1.0 - k) / (1.0 + (1.0 - k) * (1.0 - k));
  return ReverseCsResult{(f - g).norm() <= k * f.norm(), c * sum, f.dot(g)};
}

struct ExpectationGap {
  double e_posterior = 0.0;
  double e_laplace = 0.0;
  double gap = 0.0;
  /// 2 sqrt(E^mu f^2 + E^nu f^2) d_H(mu, nu).
  double bound = 0.0;
  double d_hellinger = 0.0;

  bool holds(double tolerance = 0.0) const { return gap <= bound + tolerance; }
};

/// |E^mu f - E^nu f| against 2 sqrt(E^mu f^2 + E^nu f^2) d_H(mu, nu), all by quadrature against the prior.
inline ExpectationGap expectation_gap_bound(const ForwardProblem& p, const TaylorMisfit& t,
                                            const std::function<double(const Vector&)>& f,
                                            const IntegrationEngine& engine) {
  const double s = t.value;
  const auto est = engine.integrate(
      p.prior(), 6,
      [&](const Vector& u, Vector& out) {
        const double wp = std::exp(-(misfit_phi(p, u) - s));
        const double wt = std::exp(-(t(u) - s));
        const double fv = f(u);
        out << wp, wp * fv, wp * fv * fv, wt, wt * fv, wt * fv * fv;
      },
      p.model().reentrant);
  const Vector& v = est.value;
  ExpectationGap e;
  e.e_posterior = v[1] / v[0];
  e.e_laplace = v[4] / v[3];
  e.gap = std::abs(e.e_posterior - e.e_laplace);
  e.d_hellinger = hellinger(p, t, engine);
  e.bound = 2.0 * std::sqrt(v[2] / v[0] + v[5] / v[3]) * e.d_hellinger;
  return e;
}

/// d_H and both certificates from one set of integrals.
struct CertificationReport {
  HellingerEstimate hellinger;
  BoundCertificate prop61;
  BoundCertificate cor63;
  CertificationIntegrals integrals;
};

inline CertificationReport certify(const ForwardProblem& p, const TaylorMisfit& t, const MapResult& r,
                                   const IntegrationEngine& engine) {
  CertificationReport rep;
  rep.integrals = certification_integrals(p, t, r.i_at_map, engine);
  rep.hellinger = hellinger_from(rep.integrals);
  rep.prop61 = bound_prop61(rep.integrals);
  rep.cor63 = bound_cor63(rep.integrals);
  return rep;
}

}  // namespace lapcert
