#pragma once

#include <array>
#include <cmath>
#include <numbers>

namespace freedeconv {

namespace detail {

template <int N>
struct GaussLegendre {
  std::array<double, N> nodes{};
  std::array<double, N> weights{};

  GaussLegendre() {
    for (int i = 0; i < N; ++i) {
      double x = std::cos(std::numbers::pi * (i + 0.75) / (N + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= N; ++k) {
          const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = N * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      nodes[i] = x;
      weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
  }
};

inline const GaussLegendre<20>& gauss_legendre_20() {
  static const GaussLegendre<20> rule;
  return rule;
}

template <class F>
auto gl_panel(F& f, double a, double b) {
  const auto& rule = gauss_legendre_20();
  const double c = 0.5 * (a + b), r = 0.5 * (b - a);
  decltype(f(c)) acc{};
  for (int i = 0; i < 20; ++i) acc += rule.weights[i] * f(c + r * rule.nodes[i]);
  return acc * r;
}

template <class F, class T>
T adaptive(F& f, double a, double b, T whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const T left = gl_panel(f, a, m);
  const T right = gl_panel(f, m, b);
  const T both = left + right;
  if (depth <= 0 || std::abs(both - whole) <= tol) return both;
  return adaptive(f, a, m, left, 0.5 * tol, depth - 1) + adaptive(f, m, b, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive 20-point Gauss-Legendre on [a, b]; works for real or complex integrands.
template <class F>
auto integrate(F f, double a, double b, double abs_tol = 1e-10, int max_depth = 40) {
  const auto whole = detail::gl_panel(f, a, b);
  return detail::adaptive(f, a, b, whole, abs_tol, max_depth);
}

}  // namespace freedeconv
