#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <string>

#include "freedeconv/errors.hpp"

namespace freedeconv {

struct FixedPointConfig {
  double tol = 1e-10;
  int max_iter = 200;
  std::optional<std::complex<double>> initial;  // nullopt: operation default
  // Finish with Newton steps when plain iteration stalls (slow near the real axis).
  bool newton_fallback = false;
  // Off only for an explicit unsafe smoothing override.
  bool enforce_threshold = true;

  void validate() const {
    if (!(tol > 0.0) || tol > 1e-2) fail(ErrorKind::InvalidArgument, "tol must lie in (0, 1e-2]");
    if (max_iter < 1) fail(ErrorKind::InvalidArgument, "max_iter must be at least 1");
  }
};

/// Stopping threshold: tol, floored at the roundoff level of an iterate of size `scale`.
inline double effective_tol(double tol, double scale) {
  return std::max(tol, 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, scale));
}

struct FixedPointOutcome {
  std::complex<double> w;
  int iters = 0;
  double residual = INFINITY;
  bool converged = false;
};

/// Iterates w <- T(w) from w0. Stops when two consecutive steps are below
/// effective_tol(tol, |w|). `inside(w)` flags points that left the
/// admissible domain; such an iterate ends the run unconverged.
template <class Map, class Inside>
FixedPointOutcome iterate_fixed_point(Map&& T, std::complex<double> w0, const FixedPointConfig& cfg, Inside&& inside) {
  FixedPointOutcome out;
  out.w = w0;
  std::complex<double> w = w0;
  bool close = false;
  for (int n = 1; n <= cfg.max_iter; ++n) {
    const std::complex<double> next = T(w);
    out.iters = n;
    if (!std::isfinite(next.real()) || !std::isfinite(next.imag()) || !inside(next)) return out;
    const double step = std::abs(next - w);
    const double tol = effective_tol(cfg.tol, std::abs(next));
    if (close && step < tol) {
      out.w = w;
      out.residual = step;
      out.converged = true;
      return out;
    }
    close = step < tol;
    w = next;
    out.w = w;
  }
  return out;
}

/// Newton's method on g(w) = T(w) - w with a central-difference derivative.
template <class Map, class Inside>
FixedPointOutcome newton_fixed_point(Map&& T, std::complex<double> w0, double tol, int max_steps, Inside&& inside) {
  FixedPointOutcome out;
  std::complex<double> w = w0;
  for (int n = 1; n <= max_steps; ++n) {
    const std::complex<double> tw = T(w);
    const std::complex<double> g = tw - w;
    out.iters += 1;
    out.w = w;
    out.residual = std::abs(g);
    if (out.residual < effective_tol(tol, std::abs(w))) {
      out.converged = true;
      return out;
    }
    const double h = 1e-6 * std::max(std::abs(w), 1e-6);
    const std::complex<double> gp = T(w + h) - (w + h);
    const std::complex<double> gm = T(w - h) - (w - h);
    out.iters += 2;
    const std::complex<double> dg = (gp - gm) / (2.0 * h);
    if (dg == 0.0) return out;
    std::complex<double> next = w - g / dg;
    if (!std::isfinite(next.real()) || !std::isfinite(next.imag())) return out;
    // Damp steps that leave the domain.
    for (int k = 0; k < 30 && !inside(next); ++k) next = w + 0.5 * (next - w);
    if (!inside(next)) return out;
    w = next;
  }
  out.w = w;
  out.residual = std::abs(T(w) - w);
  out.converged = out.residual < effective_tol(tol, std::abs(w));
  return out;
}

}  // namespace freedeconv
