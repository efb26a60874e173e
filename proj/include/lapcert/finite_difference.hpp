#pragma once

// Central finite differences and a small derivative-check harness.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "lapcert/gaussian_core.hpp"

namespace lapcert::fd {

inline double first_order_step(double x) {
  return (1.0 + std::abs(x)) * std::cbrt(std::numeric_limits<double>::epsilon());
}

inline double second_order_step(double x) {
  return (1.0 + std::abs(x)) * std::pow(std::numeric_limits<double>::epsilon(), 0.25);
}

inline Vector gradient(const std::function<double(const Vector&)>& f, const Vector& u) {
  Vector g(u.size());
  Vector x = u;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double h = first_order_step(u[i]);
    x[i] = u[i] + h;
    const double fp = f(x);
    x[i] = u[i] - h;
    const double fm = f(x);
    x[i] = u[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// m x n Jacobian of a vector map.
inline Matrix jacobian(const std::function<Vector(const Vector&)>& f, const Vector& u) {
  Matrix jac;
  Vector x = u;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double h = first_order_step(u[i]);
    x[i] = u[i] + h;
    const Vector fp = f(x);
    x[i] = u[i] - h;
    const Vector fm = f(x);
    x[i] = u[i];
    if (i == 0) jac.resize(fp.size(), u.size());
    jac.col(i) = (fp - fm) / (2.0 * h);
  }
  return jac;
}

/// Hessian by differencing an analytic gradient; symmetrized.
inline Matrix hessian_from_gradient(const std::function<Vector(const Vector&)>& grad, const Vector& u) {
  return detail::symmetric_part(jacobian(grad, u));
}

/// Hessian from function values only (second differences, step eps^{1/4}).
inline Matrix hessian_from_values(const std::function<double(const Vector&)>& f, const Vector& u) {
  const Eigen::Index n = u.size();
  Matrix h(n, n);
  Vector x = u;
  const double f0 = f(u);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double hi = second_order_step(u[i]);
    x[i] = u[i] + hi;
    const double fp = f(x);
    x[i] = u[i] - hi;
    const double fm = f(x);
    x[i] = u[i];
    h(i, i) = (fp - 2.0 * f0 + fm) / (hi * hi);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double hj = second_order_step(u[j]);
      auto at = [&](double si, double sj) {
        x[i] = u[i] + si * hi;
        x[j] = u[j] + sj * hj;
        const double v = f(x);
        x[i] = u[i];
        x[j] = u[j];
        return v;
      };
      h(i, j) = h(j, i) = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * hi * hj);
    }
  }
  return h;
}

/// ||a - b|| / max(||a||, ||b||, 1).
template <class A, class B>
double relative_error(const A& a, const B& b) {
  const double scale = std::max({a.norm(), b.norm(), 1.0});
  return (a - b).norm() / scale;
}

inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1.0});
}

struct DerivativeCheck {
  std::string quantity;
  double max_error = 0.0;
  double threshold = 0.0;
  int points = 0;

  bool passed() const { return max_error <= threshold; }
};

}  // namespace lapcert::fd
