#pragma once

// Registry of ready-made forward problems.
//
//   exp1d   G(u) = exp(u) on R, Gamma = gamma^2, C0 = sigma^2 (default y = 2).
//   linear  G(u) = A u with seeded random A, Gamma and C0.
//   quad2d  G_i(u) = u_i + u_i^2 / 2 on R^2, correlated prior.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lapcert/inverse_problem.hpp"
#include "lapcert/random.hpp"

namespace lapcert {

struct BuiltinOptions {
  std::optional<Vector> y;
  /// Prior standard deviation for exp1d.
  double sigma = 1.0;
  /// Noise standard deviation for exp1d.
  double gamma = 1.0;
  /// Seed for the random linear problem.
  std::uint64_t seed = 42;
  Eigen::Index linear_dim_in = 3;
  Eigen::Index linear_dim_out = 2;
};

inline ForwardModel exp_model(Eigen::Index n = 1) {
  ForwardModel g;
  g.name = "exp";
  g.dim_in = n;
  g.dim_out = n;
  g.eval = [](const Vector& u) -> Vector { return u.array().exp().matrix(); };
  g.jacobian = [](const Vector& u) -> Matrix { return u.array().exp().matrix().asDiagonal(); };
  g.hessian = [n](const Vector& u) {
    std::vector<Matrix> h(static_cast<std::size_t>(n), Matrix::Zero(n, n));
    for (Eigen::Index k = 0; k < n; ++k) h[static_cast<std::size_t>(k)](k, k) = std::exp(u[k]);
    return h;
  };
  return g;
}

/// Componentwise G_i(u) = u_i + u_i^2 / 2.
inline ForwardModel quad_model(Eigen::Index n = 2) {
  ForwardModel g;
  g.name = "quad";
  g.dim_in = n;
  g.dim_out = n;
  g.eval = [](const Vector& u) -> Vector { return (u.array() + 0.5 * u.array().square()).matrix(); };
  g.jacobian = [](const Vector& u) -> Matrix { return (1.0 + u.array()).matrix().asDiagonal(); };
  g.hessian = [n](const Vector&) {
    std::vector<Matrix> h(static_cast<std::size_t>(n), Matrix::Zero(n, n));
    for (Eigen::Index k = 0; k < n; ++k) h[static_cast<std::size_t>(k)](k, k) = 1.0;
    return h;
  };
  return g;
}

inline ForwardModel linear_model(const Matrix& a) {
  ForwardModel g;
  g.name = "linear";
  g.dim_in = a.cols();
  g.dim_out = a.rows();
  g.eval = [a](const Vector& u) -> Vector { return a * u; };
  g.jacobian = [a](const Vector&) -> Matrix { return a; };
  g.linear = true;
  return g;
}

inline ForwardProblem exp1d_problem(double y = 2.0, double sigma = 1.0, double gamma = 1.0) {
  if (!(sigma > 0.0) || !(gamma > 0.0)) throw Error("exp1d: sigma and gamma must be positive");
  Matrix noise(1, 1), prior(1, 1);
  noise(0, 0) = gamma * gamma;
  prior(0, 0) = sigma * sigma;
  Vector data(1);
  data[0] = y;
  ForwardModel g = exp_model(1);
  g.name = "exp1d";
  return ForwardProblem(std::move(g), noise, prior, data);
}

namespace detail {

inline Matrix random_spd(Eigen::Index n, Generator& gen, double floor) {
  Matrix b(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) b(i, j) = gen.normal();
  return symmetric_part(b * b.transpose() / static_cast<double>(n) + floor * Matrix::Identity(n, n));
}

}  // namespace detail

/// Linear-Gaussian problem with entries of A ~ N(0,1) and random SPD Gamma, C0.
inline ForwardProblem linear_problem(Eigen::Index n, Eigen::Index m, std::uint64_t seed) {
  if (n < 1 || m < 1) throw Error("linear: dimensions must be positive");
  Generator gen(seed);
  Matrix a(m, n);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = gen.normal();
  const Matrix noise = detail::random_spd(m, gen, 0.25);
  const Matrix prior = detail::random_spd(n, gen, 0.5);
  Vector y(m);
  for (Eigen::Index i = 0; i < m; ++i) y[i] = gen.normal();
  return ForwardProblem(linear_model(a), noise, prior, y);
}

inline ForwardProblem quad2d_problem() {
  Matrix prior(2, 2);
  prior << 1.0, 0.3, 0.3, 0.8;
  const Matrix noise = 0.5 * Matrix::Identity(2, 2);
  Vector y(2);
  y << 1.0, -0.2;
  ForwardModel g = quad_model(2);
  g.name = "quad2d";
  return ForwardProblem(std::move(g), noise, prior, y);
}

inline std::vector<std::string> builtin_names() { return {"exp1d", "linear", "quad2d"}; }

/// Look up a built-in problem by name; throws UnknownModel.
inline ForwardProblem builtin_model(const std::string& name, const BuiltinOptions& opts = {}) {
  auto with_y = [&](ForwardProblem p) { return opts.y ? p.with_data(*opts.y) : p; };
  if (name == "exp1d") return with_y(exp1d_problem(2.0, opts.sigma, opts.gamma));
  if (name == "linear") return with_y(linear_problem(opts.linear_dim_in, opts.linear_dim_out, opts.seed));
  if (name == "quad2d") return with_y(quad2d_problem());
  throw UnknownModel(name);
}

}  // namespace lapcert
