#pragma once

// Integration against a Gaussian reference measure: tensor Gauss-Hermite
// rules for low dimension, seeded block Monte Carlo otherwise.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

#include "lapcert/gaussian_core.hpp"
#include "lapcert/random.hpp"

namespace lapcert {

/// Nodes and weights for  int f(x) dN(0,1)(x) ~= sum_i w_i f(x_i).
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const noexcept { return nodes.size(); }
};

/// Gauss-Hermite rule of the given order for the standard normal weight.
///
/// Nodes start from the eigenvalues of the Jacobi matrix (Golub-Welsch) and are
/// polished by Newton iteration on the orthonormal three-term recurrence in
/// long double, which also yields the weights 2 / H'_n(x)^2 without the
/// underflow of the eigenvector formula.
inline GaussHermiteRule gauss_hermite_rule(int order) {
  if (order < 1) throw Error("gauss_hermite_rule: order must be >= 1");
  using real = long double;
  const int n = order;
  const real pim4 = 0.7511255444649425L;  // pi^{-1/4}

  Matrix jacobi = Matrix::Zero(n, n);
  for (int k = 1; k < n; ++k) jacobi(k - 1, k) = jacobi(k, k - 1) = std::sqrt(0.5 * k);
  Eigen::SelfAdjointEigenSolver<Matrix> es(jacobi, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw Error("gauss_hermite_rule: eigenvalue solve failed");

  // p1 = normalized H_n(z), returns derivative factor.
  auto recurrence = [&](real z, real& p1) {
    p1 = pim4;
    real p2 = 0.0L;
    for (int j = 0; j < n; ++j) {
      const real p3 = p2;
      p2 = p1;
      p1 = z * std::sqrt(2.0L / (j + 1)) * p2 - std::sqrt(static_cast<real>(j) / (j + 1)) * p3;
    }
    return std::sqrt(2.0L * n) * p2;
  };

  GaussHermiteRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  const real sqrt2 = std::sqrt(2.0L);
  const real inv_sqrt_pi = 1.0L / std::sqrt(std::numbers::pi_v<long double>);
  const Vector& ev = es.eigenvalues();
  for (int i = 0; i < n; ++i) {
    real z = ev[i];
    real p1 = 0.0L;
    real pp = recurrence(z, p1);
    for (int it = 0; it < 8; ++it) {
      const real dz = p1 / pp;
      z -= dz;
      pp = recurrence(z, p1);
      if (std::abs(dz) <= 1e-18L * std::max<real>(1.0L, std::abs(z))) break;
    }
    rule.nodes[static_cast<std::size_t>(i)] = static_cast<double>(z * sqrt2);
    rule.weights[static_cast<std::size_t>(i)] = static_cast<double>(2.0L / (pp * pp) * inv_sqrt_pi);
  }
  // Exact symmetry about zero.
  for (int i = 0; i < n / 2; ++i) {
    const auto a = static_cast<std::size_t>(i);
    const auto b = static_cast<std::size_t>(n - 1 - i);
    const double x = 0.5 * (rule.nodes[b] - rule.nodes[a]);
    const double w = 0.5 * (rule.weights[a] + rule.weights[b]);
    rule.nodes[a] = -x;
    rule.nodes[b] = x;
    rule.weights[a] = rule.weights[b] = w;
  }
  if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
  return rule;
}

/// Worker count for engines: LAPLACE_CERT_THREADS caps hardware concurrency.
inline unsigned engine_threads() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("LAPLACE_CERT_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  return n;
}

enum class EngineKind { GaussHermite, MonteCarlo };

inline std::string to_string(EngineKind k) { return k == EngineKind::GaussHermite ? "gh" : "mc"; }

/// Integrand receives a point u and writes `outputs` values into out.
using Integrand = std::function<void(const Vector& u, Vector& out)>;

/// Deterministic integration against a Gaussian measure.
///
/// Points are u = mean + C^{1/2} z with z standard normal. Gauss-Hermite uses
/// the symmetric square root and a tensor grid; Monte Carlo uses the Cholesky
/// factor and fixed-size sample blocks, each with its own substream of the seed,
/// so the result does not depend on the number of workers.
class IntegrationEngine {
 public:
  struct Estimate {
    Vector value;
    /// Covariance of the estimator (sample covariance / N); zero for quadrature.
    Matrix covariance;

    double standard_error(Eigen::Index i) const { return std::sqrt(std::max(0.0, covariance(i, i))); }
  };

  static constexpr Eigen::Index kBlockSize = 8192;

  static IntegrationEngine gauss_hermite(int order) {
    if (order < 1) throw Error("IntegrationEngine: Gauss-Hermite order must be positive");
    IntegrationEngine e;
    e.kind_ = EngineKind::GaussHermite;
    e.order_ = order;
    e.rule_ = gauss_hermite_rule(order);
    return e;
  }

  static IntegrationEngine monte_carlo(long samples, std::uint64_t seed) {
    if (samples < 2) throw Error("IntegrationEngine: Monte Carlo needs at least 2 samples");
    IntegrationEngine e;
    e.kind_ = EngineKind::MonteCarlo;
    e.samples_ = samples;
    e.seed_ = seed;
    return e;
  }

  /// Gauss-Hermite 96 per axis up to 2D, 48 per axis in 3D, Monte Carlo above.
  static IntegrationEngine default_for(Eigen::Index dim, long samples = 200000, std::uint64_t seed = 20170101) {
    if (dim <= 2) return gauss_hermite(96);
    if (dim <= 3) return gauss_hermite(48);
    return monte_carlo(samples, seed);
  }

  EngineKind kind() const noexcept { return kind_; }
  int order() const noexcept { return order_; }
  long samples() const noexcept { return samples_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const GaussHermiteRule& rule() const noexcept { return rule_; }

  /// Caps worker threads for Monte Carlo; 0 means engine_threads().
  IntegrationEngine with_threads(unsigned threads) const {
    IntegrationEngine e = *this;
    e.threads_ = threads;
    return e;
  }

  Estimate integrate(const GaussianMeasure& ref, Eigen::Index outputs, const Integrand& f,
                     bool reentrant = true) const {
    if (outputs < 1) throw Error("IntegrationEngine: need at least one output");
    return kind_ == EngineKind::GaussHermite ? integrate_gh(ref, outputs, f)
                                             : integrate_mc(ref, outputs, f, reentrant);
  }

  double integrate_scalar(const GaussianMeasure& ref, const std::function<double(const Vector&)>& f,
                          bool reentrant = true) const {
    return integrate(
               ref, 1, [&](const Vector& u, Vector& out) { out[0] = f(u); }, reentrant)
        .value[0];
  }

 private:
  Estimate integrate_gh(const GaussianMeasure& ref, Eigen::Index outputs, const Integrand& f) const {
    const Eigen::Index n = ref.dim();
    const auto q = static_cast<Eigen::Index>(rule_.size());
    double total = 1.0;
    for (Eigen::Index d = 0; d < n; ++d) total *= static_cast<double>(q);
    if (total > 5e7) throw Error("IntegrationEngine: tensor Gauss-Hermite grid too large; use Monte Carlo");

    Estimate est{Vector::Zero(outputs), Matrix::Zero(outputs, outputs)};
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n), 0);
    Vector z(n), u(n), out(outputs);
    const Matrix& cs = ref.sqrt_covariance();
    for (;;) {
      double w = 1.0;
      for (Eigen::Index d = 0; d < n; ++d) {
        const auto k = static_cast<std::size_t>(idx[static_cast<std::size_t>(d)]);
        z[d] = rule_.nodes[k];
        w *= rule_.weights[k];
      }
      u.noalias() = ref.mean() + cs * z;
      out.setZero();
      f(u, out);
      est.value.noalias() += w * out;
      Eigen::Index d = 0;
      for (; d < n; ++d) {
        if (++idx[static_cast<std::size_t>(d)] < q) break;
        idx[static_cast<std::size_t>(d)] = 0;
      }
      if (d == n) break;
    }
    return est;
  }

  struct BlockStats {
    Eigen::Index count = 0;
    Vector mean;
    Matrix m2;  // sum of outer products of deviations
  };

  BlockStats run_block(const GaussianMeasure& ref, Eigen::Index outputs, const Integrand& f,
                       std::uint64_t block, Eigen::Index count) const {
    Generator gen(substream_seed(seed_, block));
    const Eigen::Index n = ref.dim();
    BlockStats s{0, Vector::Zero(outputs), Matrix::Zero(outputs, outputs)};
    Vector z(n), u(n), out(outputs), delta(outputs);
    const auto lower = ref.chol().triangularView<Eigen::Lower>();
    for (Eigen::Index i = 0; i < count; ++i) {
      for (Eigen::Index d = 0; d < n; ++d) z[d] = gen.normal();
      u.noalias() = ref.mean() + lower * z;
      out.setZero();
      f(u, out);
      ++s.count;
      delta = out - s.mean;
      s.mean += delta / static_cast<double>(s.count);
      s.m2.noalias() += delta * (out - s.mean).transpose();
    }
    return s;
  }

  Estimate integrate_mc(const GaussianMeasure& ref, Eigen::Index outputs, const Integrand& f,
                        bool reentrant) const {
    const Eigen::Index blocks = (samples_ + kBlockSize - 1) / kBlockSize;
    std::vector<BlockStats> stats(static_cast<std::size_t>(blocks));
    auto block_size = [&](Eigen::Index b) { return std::min(kBlockSize, samples_ - b * kBlockSize); };

    unsigned workers = threads_ == 0 ? engine_threads() : threads_;
    if (!reentrant) workers = 1;
    workers = static_cast<unsigned>(std::min<Eigen::Index>(workers, blocks));
    if (workers <= 1) {
      for (Eigen::Index b = 0; b < blocks; ++b)
        stats[static_cast<std::size_t>(b)] = run_block(ref, outputs, f, static_cast<std::uint64_t>(b), block_size(b));
    } else {
      std::vector<std::thread> pool;
      pool.reserve(workers);
      for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          for (Eigen::Index b = w; b < blocks; b += workers)
            stats[static_cast<std::size_t>(b)] =
                run_block(ref, outputs, f, static_cast<std::uint64_t>(b), block_size(b));
        });
      }
      for (auto& t : pool) t.join();
    }

    // Chan et al. pairwise merge, always in block order.
    BlockStats acc = stats.front();
    for (std::size_t b = 1; b < stats.size(); ++b) {
      const BlockStats& s = stats[b];
      const double na = static_cast<double>(acc.count);
      const double nb = static_cast<double>(s.count);
      const Vector delta = s.mean - acc.mean;
      acc.mean += delta * (nb / (na + nb));
      acc.m2 += s.m2 + delta * delta.transpose() * (na * nb / (na + nb));
      acc.count += s.count;
    }
    const double n = static_cast<double>(acc.count);
    return Estimate{acc.mean, acc.m2 / ((n - 1.0) * n)};
  }

  EngineKind kind_ = EngineKind::GaussHermite;
  int order_ = 0;
  long samples_ = 0;
  std::uint64_t seed_ = 0;
  unsigned threads_ = 0;
  GaussHermiteRule rule_;
};

}  // namespace lapcert
