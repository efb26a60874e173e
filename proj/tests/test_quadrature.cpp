#include <cmath>
#include <cstdlib>

#include <gtest/gtest.h>

#include "lapcert/quadrature.hpp"

using namespace lapcert;

namespace {

// E[Z^k] for Z ~ N(0,1): (k-1)!! for even k, zero for odd k.
double normal_moment(int k) {
  if (k % 2 == 1) return 0.0;
  double m = 1.0;
  for (int j = k - 1; j > 1; j -= 2) m *= j;
  return m;
}

}  // namespace

TEST(GaussHermiteRule, SmallOrdersAreExact) {
  const GaussHermiteRule one = gauss_hermite_rule(1);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one.nodes[0], 0.0);
  EXPECT_NEAR(one.weights[0], 1.0, 1e-15);

  const GaussHermiteRule two = gauss_hermite_rule(2);
  EXPECT_NEAR(two.nodes[1], 1.0, 1e-15);
  EXPECT_NEAR(two.weights[0], 0.5, 1e-15);

  const GaussHermiteRule three = gauss_hermite_rule(3);
  EXPECT_NEAR(three.nodes[2], std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(three.weights[1], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(three.weights[0], 1.0 / 6.0, 1e-15);
}

TEST(GaussHermiteRule, RejectsNonPositiveOrder) {
  EXPECT_THROW(gauss_hermite_rule(0), Error);
  EXPECT_THROW(IntegrationEngine::gauss_hermite(-1), Error);
}

class GaussHermiteMoments : public ::testing::TestWithParam<int> {};

TEST_P(GaussHermiteMoments, ReproducesNormalMoments) {
  const int n = GetParam();
  const GaussHermiteRule r = gauss_hermite_rule(n);
  double wsum = 0.0;
  for (double w : r.weights) wsum += w;
  EXPECT_NEAR(wsum, 1.0, 1e-13);
  // Exact for polynomials of degree <= 2n - 1; cap the degree where (k-1)!! stays moderate.
  const int kmax = std::min(2 * n - 1, 40);
  for (int k = 0; k <= kmax; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) s += r.weights[i] * std::pow(r.nodes[i], k);
    const double expect = normal_moment(k);
    const double scale = std::max(1.0, std::sqrt(normal_moment(2 * k)));
    EXPECT_NEAR(s, expect, 1e-12 * scale) << "order " << n << " moment " << k;
  }
}

INSTANTIATE_TEST_SUITE_P(Orders, GaussHermiteMoments, ::testing::Values(2, 3, 5, 8, 13, 20, 32, 48, 64, 96, 200));

TEST(GaussHermiteRule, NodesSortedAndSymmetric) {
  for (int n : {7, 96, 400}) {
    const GaussHermiteRule r = gauss_hermite_rule(n);
    for (std::size_t i = 1; i < r.size(); ++i) EXPECT_LT(r.nodes[i - 1], r.nodes[i]);
    for (std::size_t i = 0; i < r.size(); ++i) {
      EXPECT_EQ(r.nodes[i], -r.nodes[r.size() - 1 - i]);
      EXPECT_GE(r.weights[i], 0.0);
    }
  }
}

TEST(IntegrationEngine, DefaultSelection) {
  EXPECT_EQ(IntegrationEngine::default_for(1).kind(), EngineKind::GaussHermite);
  EXPECT_EQ(IntegrationEngine::default_for(1).order(), 96);
  EXPECT_EQ(IntegrationEngine::default_for(2).order(), 96);
  EXPECT_EQ(IntegrationEngine::default_for(3).order(), 48);
  EXPECT_EQ(IntegrationEngine::default_for(4).kind(), EngineKind::MonteCarlo);
}

TEST(IntegrationEngine, GaussHermiteCorrelatedMoments) {
  Vector mean(2);
  mean << 0.5, -1.0;
  Matrix cov(2, 2);
  cov << 1.0, 0.4, 0.4, 2.0;
  const GaussianMeasure g(mean, cov);
  const auto e = IntegrationEngine::gauss_hermite(10);
  const auto est = e.integrate(g, 3, [](const Vector& u, Vector& out) {
    out[0] = u[0];
    out[1] = u[0] * u[1];
    out[2] = u[1] * u[1];
  });
  EXPECT_NEAR(est.value[0], 0.5, 1e-13);
  EXPECT_NEAR(est.value[1], 0.4 + 0.5 * -1.0, 1e-13);
  EXPECT_NEAR(est.value[2], 2.0 + 1.0, 1e-13);
  EXPECT_EQ(est.covariance.norm(), 0.0);
}

TEST(IntegrationEngine, GaussHermiteGridLimit) {
  const auto e = IntegrationEngine::gauss_hermite(96);
  const GaussianMeasure g = GaussianMeasure::centered(Matrix::Identity(5, 5));
  EXPECT_THROW(e.integrate_scalar(g, [](const Vector&) { return 1.0; }), Error);
}

TEST(IntegrationEngine, MonteCarloWithinStandardErrors) {
  const GaussianMeasure g = GaussianMeasure::centered(Matrix::Identity(3, 3));
  const auto e = IntegrationEngine::monte_carlo(200000, 17);
  const auto est = e.integrate(g, 2, [](const Vector& u, Vector& out) {
    out[0] = u.squaredNorm();
    out[1] = std::exp(0.5 * u[0]);
  });
  EXPECT_NEAR(est.value[0], 3.0, 4.0 * est.standard_error(0));
  EXPECT_NEAR(est.value[1], std::exp(0.125), 4.0 * est.standard_error(1));
  // Var |u|^2 = 2 n.
  EXPECT_NEAR(est.standard_error(0), std::sqrt(6.0 / 200000.0), 0.05 * std::sqrt(6.0 / 200000.0));
}

TEST(IntegrationEngine, MonteCarloIndependentOfThreadCount) {
  Matrix cov(2, 2);
  cov << 1.0, 0.2, 0.2, 0.5;
  const GaussianMeasure g = GaussianMeasure::centered(cov);
  const auto base = IntegrationEngine::monte_carlo(100003, 5);
  auto f = [](const Vector& u, Vector& out) { out[0] = std::sin(u[0]) + u[1] * u[1]; };
  const auto a = base.with_threads(1).integrate(g, 1, f);
  const auto b = base.with_threads(4).integrate(g, 1, f);
  const auto c = base.with_threads(4).integrate(g, 1, f, false);
  EXPECT_EQ(a.value[0], b.value[0]);
  EXPECT_EQ(a.covariance(0, 0), b.covariance(0, 0));
  EXPECT_EQ(a.value[0], c.value[0]);
}

TEST(IntegrationEngine, MonteCarloSeedMatters) {
  const GaussianMeasure g = GaussianMeasure::centered(Matrix::Identity(1, 1));
  auto f = [](const Vector& u) { return u[0]; };
  const double a = IntegrationEngine::monte_carlo(5000, 1).integrate_scalar(g, f);
  const double b = IntegrationEngine::monte_carlo(5000, 1).integrate_scalar(g, f);
  const double c = IntegrationEngine::monte_carlo(5000, 2).integrate_scalar(g, f);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  EXPECT_THROW(IntegrationEngine::monte_carlo(1, 0), Error);
}

TEST(EngineThreads, EnvironmentCap) {
  const char* old = std::getenv("LAPLACE_CERT_THREADS");
  const std::string saved = old ? old : "";
  setenv("LAPLACE_CERT_THREADS", "1", 1);
  EXPECT_EQ(engine_threads(), 1u);
  setenv("LAPLACE_CERT_THREADS", "garbage", 1);
  EXPECT_GE(engine_threads(), 1u);
  if (old)
    setenv("LAPLACE_CERT_THREADS", saved.c_str(), 1);
  else
    unsetenv("LAPLACE_CERT_THREADS");
}
