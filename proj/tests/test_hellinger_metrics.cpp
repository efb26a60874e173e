#include <cmath>

#include <gtest/gtest.h>

#include "lapcert/builtin_models.hpp"
#include "lapcert/hellinger_metrics.hpp"
#include "lapcert/map_laplace.hpp"

using namespace lapcert;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

struct Solved {
  ForwardProblem p;
  MapResult r;
  TaylorMisfit t;
};

Solved solve(const ForwardProblem& p) {
  MapResult r = find_map(p);
  TaylorMisfit t = TaylorMisfit::at(p, r);
  return {p, r, t};
}

// Independent adaptive-quadrature values for exp1d with sigma = gamma = 1.
struct Exp1dOracle {
  double y, d_h, k_prop, k_cor;
};
constexpr Exp1dOracle kNeg{-2.0, 0.10389540692322792, 0.14662538907794723, 0.1851694466017939};
constexpr Exp1dOracle kPos{2.0, 0.2512313526217249, 0.36724922592400194, 0.45862827546316504};

// Random-walk Metropolis on the exp1d posterior, test-only oracle for E^mu[u].
double metropolis_mean(const ForwardProblem& p, double start, long steps, std::uint64_t seed) {
  Generator gen(seed);
  Vector u = vec({start});
  double lu = -objective_i(p, u);
  double sum = 0.0;
  const long burn = steps / 10;
  for (long k = 0; k < steps + burn; ++k) {
    Vector prop = u;
    prop[0] += 0.8 * gen.normal();
    const double lp = -objective_i(p, prop);
    if (std::log(gen.uniform()) < lp - lu) {
      u = prop;
      lu = lp;
    }
    if (k >= burn) sum += u[0];
  }
  return sum / static_cast<double>(steps);
}

}  // namespace

TEST(BoundFromK, Values) {
  EXPECT_EQ(hellinger_bound_from_k(0.0), 0.0);
  EXPECT_NEAR(hellinger_bound_from_k(1.0), 1.0, 1e-15);
  EXPECT_NEAR(hellinger_bound_from_k(0.5), 0.5 / std::sqrt(1.25), 1e-15);
  double prev = 0.0;
  for (int i = 1; i <= 100; ++i) {
    const double b = hellinger_bound_from_k(i / 100.0);
    EXPECT_GT(b, prev);
    prev = b;
  }
}

TEST(Hellinger, LinearProblemsAreExact) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Solved s = solve(linear_problem(2, 2, seed));
    const auto rep = certify(s.p, s.t, s.r, IntegrationEngine::default_for(2));
    EXPECT_LE(rep.hellinger.distance, 1e-6);
    EXPECT_LE(rep.prop61.k_value, 1e-6);
    EXPECT_LE(rep.cor63.k_value, 1e-6);
    EXPECT_TRUE(rep.prop61.valid);
  }
}

TEST(Hellinger, Exp1dAgainstAdaptiveQuadrature) {
  const auto gh = IntegrationEngine::gauss_hermite(400);
  for (const auto& o : {kNeg, kPos}) {
    const Solved s = solve(exp1d_problem(o.y));
    const auto rep = certify(s.p, s.t, s.r, gh);
    EXPECT_NEAR(rep.hellinger.distance, o.d_h, 1e-6 * o.d_h) << "y " << o.y;
    EXPECT_NEAR(rep.prop61.k_value, o.k_prop, 1e-6 * o.k_prop) << "y " << o.y;
    EXPECT_NEAR(rep.prop61.hellinger_bound, hellinger_bound_from_k(o.k_prop), 1e-6);
  }
}

TEST(Hellinger, Cor63IntegralByMonteCarlo) {
  // The min() in the integrand has kinks; Monte Carlo is unbiased for it.
  const auto mc = IntegrationEngine::monte_carlo(1000000, 314);
  for (const auto& o : {kNeg, kPos}) {
    const Solved s = solve(exp1d_problem(o.y));
    const auto rep = certify(s.p, s.t, s.r, mc);
    EXPECT_NEAR(rep.cor63.k_value, o.k_cor, 0.01 * o.k_cor) << "y " << o.y;
    EXPECT_NEAR(rep.hellinger.distance, o.d_h, 4.0 * rep.hellinger.standard_error + 1e-4);
    EXPECT_GT(rep.hellinger.standard_error, 0.0);
  }
}

TEST(Hellinger, Cor63GaussHermite96KnownBias) {
  // GH96 resolves the kinked integrand to about two percent.
  const auto gh = IntegrationEngine::gauss_hermite(96);
  for (const auto& o : {kNeg, kPos}) {
    const Solved s = solve(exp1d_problem(o.y));
    EXPECT_NEAR(bound_cor63(s.p, s.t, s.r, gh).k_value, o.k_cor, 0.025 * o.k_cor);
  }
}

TEST(Hellinger, RangeAndDominance) {
  const auto e = IntegrationEngine::gauss_hermite(96);
  for (double y : {-3.0, -2.0, -1.0, 0.5, 2.0, 4.0}) {
    const Solved s = solve(exp1d_problem(y));
    const auto rep = certify(s.p, s.t, s.r, e);
    EXPECT_GE(rep.hellinger.distance, 0.0);
    EXPECT_LE(rep.hellinger.distance, 1.0);
    for (const auto& c : {rep.prop61, rep.cor63})
      if (c.valid) EXPECT_LE(rep.hellinger.distance, c.hellinger_bound + 1e-6) << "y " << y;
  }
}

TEST(Hellinger, TwoDeterminantFormsAgree) {
  for (const ForwardProblem& p : {exp1d_problem(-2.0), quad2d_problem(), linear_problem(3, 2, 1)}) {
    const Solved s = solve(p);
    const auto c = certification_integrals(p, s.t, s.r.i_at_map, IntegrationEngine::default_for(p.dim()));
    EXPECT_NEAR(c.log_det_hess_i, c.log_det_identity_plus, 1e-10 * std::max(1.0, std::abs(c.log_det_hess_i)));
  }
}

TEST(Hellinger, DivergentTaylorIntegral) {
  // Away from the MAP point HPhi can be negative enough that exp(-T Phi) is not integrable.
  const ForwardProblem p = exp1d_problem(10.0);
  const TaylorMisfit t = TaylorMisfit::at(p, vec({1.0}));
  ASSERT_LT(1.0 + t.hess.matrix()(0, 0), 0.0);
  EXPECT_THROW(certification_integrals(p, t, IntegrationEngine::gauss_hermite(20)), DivergentIntegral);
}

TEST(Hellinger, EngineDeterminism) {
  const Solved s = solve(quad2d_problem());
  const auto mc = IntegrationEngine::monte_carlo(50000, 9);
  const auto a = certify(s.p, s.t, s.r, mc.with_threads(1));
  const auto b = certify(s.p, s.t, s.r, mc.with_threads(3));
  EXPECT_EQ(a.hellinger.distance, b.hellinger.distance);
  EXPECT_EQ(a.cor63.k_value, b.cor63.k_value);
}

TEST(Hellinger, Quad2dEnginesAgree) {
  const Solved s = solve(quad2d_problem());
  const auto gh = certify(s.p, s.t, s.r, IntegrationEngine::gauss_hermite(64));
  const auto mc = certify(s.p, s.t, s.r, IntegrationEngine::monte_carlo(400000, 77));
  EXPECT_NEAR(gh.hellinger.distance, mc.hellinger.distance, 4.0 * mc.hellinger.standard_error + 1e-4);
  EXPECT_NEAR(gh.prop61.k_value, mc.prop61.k_value, 0.02 * gh.prop61.k_value);
}

TEST(ReverseCauchySchwarz, DVersion) {
  const Vector f = vec({1.0, 0.0});
  const Vector g = vec({0.9, 0.1});
  const auto r = reverse_cs_d(f, g, 0.05);
  EXPECT_TRUE(r.holds_pre);
  EXPECT_GE(r.inner, r.lower);
  EXPECT_THROW(reverse_cs_d(f, g, 0.0), Error);
  EXPECT_THROW(reverse_cs_d(f, vec({1.0}), 0.5), DimensionMismatch);
}

TEST(ReverseCauchySchwarz, KVersion) {
  const Vector f = vec({1.0, 2.0, -1.0});
  const Vector g = vec({1.1, 1.8, -0.9});
  const auto r = reverse_cs_k(f, g, 0.2);
  EXPECT_TRUE(r.holds_pre);
  EXPECT_GE(r.inner, r.lower);
  EXPECT_THROW(reverse_cs_k(f, g, 1.0), Error);
  EXPECT_THROW(reverse_cs_k(f, g, 0.0), Error);
}

TEST(ReverseCauchySchwarz, RandomPairs) {
  Generator gen(2718);
  int checked_d = 0, checked_k = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(gen.uniform() * 6);
    Vector f(n), h(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      f[i] = gen.normal();
      h[i] = gen.normal();
    }
    const double eps = gen.uniform();
    const Vector g = f + eps * h;
    const double sum = f.squaredNorm() + g.squaredNorm();
    const double d = std::min(1.0, (f - g).squaredNorm() / sum * (1.0 + gen.uniform()));
    if (d > 0.0) {
      const auto r = reverse_cs_d(f, g, d);
      if (r.holds_pre) {
        ++checked_d;
        EXPECT_GE(r.inner, r.lower - 1e-12 * sum);
      }
    }
    const double k = (f - g).norm() / f.norm() * (1.0 + 0.5 * gen.uniform());
    if (k > 0.0 && k < 1.0) {
      const auto r = reverse_cs_k(f, g, k);
      if (r.holds_pre) {
        ++checked_k;
        EXPECT_GE(r.inner, r.lower - 1e-12 * sum);
      }
    }
  }
  EXPECT_GT(checked_d, 1000);
  EXPECT_GT(checked_k, 500);
}

TEST(ExpectationGap, ConstantFunctionHasNoGap) {
  const Solved s = solve(exp1d_problem(2.0));
  const auto g = expectation_gap_bound(s.p, s.t, [](const Vector&) { return 3.0; }, IntegrationEngine::gauss_hermite(96));
  EXPECT_NEAR(g.gap, 0.0, 1e-12);
  EXPECT_TRUE(g.holds(1e-6));
}

TEST(ExpectationGap, Exp1dMoments) {
  const auto e = IntegrationEngine::gauss_hermite(96);
  for (double y : {-2.0, 2.0}) {
    const Solved s = solve(exp1d_problem(y));
    const auto g1 = expectation_gap_bound(s.p, s.t, [](const Vector& u) { return u[0]; }, e);
    EXPECT_NEAR(g1.e_laplace, s.r.u_map[0], 1e-10);
    EXPECT_TRUE(g1.holds(1e-6)) << "gap " << g1.gap << " bound " << g1.bound;
    const auto g2 = expectation_gap_bound(s.p, s.t, [](const Vector& u) { return u[0] * u[0]; }, e);
    EXPECT_TRUE(g2.holds(1e-6)) << "gap " << g2.gap << " bound " << g2.bound;
  }
}

TEST(ExpectationGap, PosteriorMeanMatchesOracles) {
  const auto e = IntegrationEngine::gauss_hermite(200);
  const Solved neg = solve(exp1d_problem(-2.0));
  const Solved pos = solve(exp1d_problem(2.0));
  auto id = [](const Vector& u) { return u[0]; };
  const double mneg = expectation_gap_bound(neg.p, neg.t, id, e).e_posterior;
  const double mpos = expectation_gap_bound(pos.p, pos.t, id, e).e_posterior;
  // Adaptive quadrature values.
  EXPECT_NEAR(mneg, -1.0874877140046046, 1e-8);
  EXPECT_NEAR(mpos, 0.16097866004862119, 1e-8);
  // Metropolis chain, loose tolerance for autocorrelation.
  EXPECT_NEAR(metropolis_mean(neg.p, -1.0, 400000, 5), mneg, 0.02);
  EXPECT_NEAR(metropolis_mean(pos.p, 0.5, 400000, 6), mpos, 0.02);
}
