#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "monopole/error.hpp"
#include "monopole/types.hpp"

namespace monopole {

/// Pairwise (cascade) summation. The reduction tree depends only on the length,
/// so the result is reproducible regardless of how the terms were produced.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Legendre rule on [-1, 1] by Newton iteration on P_n.
inline QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw DomainError("gauss_legendre: order must be >= 1");
  QuadratureRule rule;
  rule.nodes.assign(n, 0.0);
  rule.weights.assign(n, 2.0);
  if (n == 1) return rule;
  // P_n(x) and P_n'(x) by the three-term recurrence
  auto legendre = [n](double x) {
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    return std::pair{p1, n * (x * p1 - p0) / (x * x - 1.0)};
  };
  for (int i = 0; i < n / 2; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      const auto [p, dp] = legendre(x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = legendre(x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.weights[n / 2] = 2.0 / std::pow(legendre(0.0).second, 2);
  return rule;
}

/// Gauss-Legendre rule mapped onto [a, b].
inline QuadratureRule gauss_legendre(int n, double a, double b) {
  QuadratureRule rule = gauss_legendre(n);
  const double c = 0.5 * (b + a), h = 0.5 * (b - a);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = c + h * rule.nodes[i];
    rule.weights[i] *= h;
  }
  return rule;
}

/// Central first derivative of f along `dir` at `x`, optionally with one
/// Richardson level (h, h/2) which lifts the order from 2 to 4.
template <class F>
auto central_derivative(F&& f, const Vec3& x, const Vec3& dir, double h, bool richardson) {
  auto d = [&](double step) { return ((f(Vec3(x + step * dir)) - f(Vec3(x - step * dir))) / (2.0 * step)).eval(); };
  if (!richardson) return d(h);
  const auto coarse = d(h);
  const auto fine = d(0.5 * h);
  return ((4.0 * fine - coarse) / 3.0).eval();
}

/// Divergence of a vector field by central differences.
template <class F>
double divergence(F&& field, const Vec3& x, double h, bool richardson = true) {
  double div = 0.0;
  for (int i = 0; i < 3; ++i) {
    const Vec3 e = Vec3::Unit(i);
    div += central_derivative(field, x, e, h, richardson)(i);
  }
  return div;
}

/// Curl of a vector field by central differences.
template <class F>
Vec3 curl(F&& field, const Vec3& x, double h, bool richardson = true) {
  Eigen::Matrix3d jac;  // jac(i, j) = ∂_j F_i
  for (int j = 0; j < 3; ++j) jac.col(j) = central_derivative(field, x, Vec3::Unit(j), h, richardson);
  return {jac(2, 1) - jac(1, 2), jac(0, 2) - jac(2, 0), jac(1, 0) - jac(0, 1)};
}

}  // namespace monopole
