#include "freedeconv/multiplicative_deconv.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "freedeconv/parallel.hpp"

namespace freedeconv {

namespace {

constexpr double kThresholdMargin = 1e-9;
constexpr double kStrictT = 0.2;

struct Inequalities {
  double r_prime;  // max(2 sqrt(gamma1), beta1)
  double var1;
  double var3;

  double F(double t, double I) const {
    return I * I * (1.0 - t) * (1.0 - 2.0 * t - t * t) / ((1.0 - t) * I + var3);
  }
  bool holds(double t, double I) const {
    const double f = F(t, I);
    return f >= r_prime && f > 8.0 * var1 / (3.0 * t);
  }
};

Inequalities inequalities(const MultiplicativeProblem& p) {
  const JacobiParams& jp = p.noise_jacobi();
  return {std::max(2.0 * std::sqrt(*jp.gamma1), *jp.beta1), p.noise_variance(), p.observed_variance()};
}

// t grid of step 1e-3 on (0, sqrt(2) - 1), with t = 1/5 included exactly.
const std::vector<double>& t_grid() {
  static const std::vector<double> grid = [] {
    std::vector<double> g;
    for (int k = 1; k * 1e-3 < std::numbers::sqrt2 - 1.0; ++k) g.push_back(k == 200 ? kStrictT : k * 1e-3);
    return g;
  }();
  return grid;
}

void require_jacobi(const MultiplicativeProblem& p) {
  if (p.degenerate_noise())
    fail(ErrorKind::DegenerateNoise, "noise has zero variance; the trivial path needs no threshold");
  if (!p.noise_jacobi().beta1 || !p.noise_jacobi().gamma1)
    fail(ErrorKind::MomentUndefined, "noise lacks the fourth moment needed for beta1, gamma1");
}

std::string point_str(Complex z) {
  std::ostringstream os;
  os.precision(10);
  os << z.real() << (z.imag() < 0 ? " - " : " + ") << std::abs(z.imag()) << "i";
  return os.str();
}

}  // namespace

MultiplicativeProblem MultiplicativeProblem::create(Measure noise, Measure observed) {
  if (!has_nonnegative_support(noise)) fail(ErrorKind::Domain, "noise must be supported on [0, inf)");
  MultiplicativeProblem p(std::move(noise), std::move(observed));
  p.s1_ = mean(p.noise_);
  if (p.s1_ == 0.0) fail(ErrorKind::FirstMomentZero, "noise has zero first moment (delta_0)");
  p.s3_ = mean(p.observed_);
  if (p.s3_ == 0.0) fail(ErrorKind::FirstMomentZero, "observed measure has zero first moment");
  const auto c = central_moments(p.noise_);
  if (!c[2]) fail(ErrorKind::MomentUndefined, "noise variance undefined");
  const double s1 = p.s1_;
  const double c2 = *c[2] / (s1 * s1);
  std::optional<double> c3, c4;
  if (c[3]) c3 = *c[3] / (s1 * s1 * s1);
  if (c[4]) c4 = *c[4] / (s1 * s1 * s1 * s1);
  p.jacobi_ = jacobi_from_central(1.0, c2, c3, c4);
  p.var1_ = p.jacobi_.gamma0;
  p.var3_ = variance(p.observed_) / (p.s3_ * p.s3_);
  return p;
}

Complex MultiplicativeProblem::f1(Complex w) const { return f_transform_ext(noise_, s1_ * w) / s1_; }
Complex MultiplicativeProblem::h1(Complex w) const { return w - f1(w); }
Complex MultiplicativeProblem::f3(Complex w) const { return f_transform_ext(observed_, s3_ * w) / s3_; }
Complex MultiplicativeProblem::h3(Complex w) const { return w - f3(w); }

Complex MultiplicativeProblem::to_normalized(Complex z) const {
  const double c = scale();
  return c > 0.0 ? c * z : c * std::conj(z);
}

Complex MultiplicativeProblem::from_normalized(Complex f2n) const {
  const double c = scale();
  return c > 0.0 ? f2n / c : std::conj(f2n) / c;
}

double constant_K(const MultiplicativeProblem& p) {
  require_jacobi(p);
  const JacobiParams& jp = p.noise_jacobi();
  const double v1 = p.noise_variance(), v3 = p.observed_variance();
  const double R = 2.0 * std::max(std::sqrt(*jp.gamma1), *jp.beta1);
  const double first = 6.0 * (2.0 * v1 + std::sqrt(5.0 * v1 * v1 + 2.0 * v3 * v1));
  const double second = R + 1.5 * std::sqrt(R * R + 4.0 * R * v3);
  return std::max(first, second);
}

double feasible_disk_ratio(const MultiplicativeProblem& p, double I) {
  require_jacobi(p);
  const Inequalities ineq = inequalities(p);
  if (ineq.holds(kStrictT, I)) return kStrictT;
  double best = 0.0;
  for (double t : t_grid())
    if (ineq.holds(t, I)) best = t;
  return best;
}

double refine_K(const MultiplicativeProblem& p) {
  require_jacobi(p);
  const Inequalities ineq = inequalities(p);
  auto feasible = [&](double I) {
    for (double t : t_grid())
      if (ineq.holds(t, I)) return true;
    return false;
  };
  double hi = constant_K(p);
  for (int k = 0; k < 60 && !feasible(hi); ++k) hi *= 2.0;
  if (!feasible(hi)) fail(ErrorKind::NonConvergence, "no feasible I found for the refined constant");
  double lo = 0.0;
  for (int k = 0; k < 200 && hi - lo > 1e-12 * hi; ++k) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? hi : lo) = mid;
  }
  return hi;
}

double threshold_K(const MultiplicativeProblem& p, KPolicy policy) {
  return policy == KPolicy::Strict ? constant_K(p) : refine_K(p);
}

double caller_threshold(const MultiplicativeProblem& p, double K) { return K / std::abs(p.scale()); }

MulSubordinationResult subordinate_mul_with_K(const MultiplicativeProblem& p, Complex z, double K,
                                              const FixedPointConfig& cfg) {
  cfg.validate();
  MulSubordinationResult r;
  r.z = z;
  r.z_normalized = p.to_normalized(z);
  const Complex zn = r.z_normalized;
  if (p.degenerate_noise()) {
    if (!(z.imag() > 0.0)) fail(ErrorKind::Domain, "subordinate_mul needs Im z > 0");
    r.w3tilde = 0.0;
    r.w3 = zn;
    r.w1 = zn;
    r.F2 = f_transform_ext(p.observed(), p.s1() * z) / p.s1();
    return r;
  }
  if (cfg.enforce_threshold && !(zn.imag() > K * (1.0 + kThresholdMargin))) {
    std::ostringstream os;
    os << "normalized Im z = " << zn.imag() << " at z = " << point_str(z) << " is not above K = " << K;
    fail(ErrorKind::BelowThreshold, os.str());
  }
  double t = feasible_disk_ratio(p, zn.imag());
  if (t == 0.0 && !cfg.enforce_threshold) t = kStrictT;
  if (t == 0.0) fail(ErrorKind::BelowThreshold, "no contraction disk exists at z = " + point_str(z));
  const double radius = t * zn.imag() / std::abs(zn);
  r.disk_radius = radius;
  auto T = [&](Complex w) {
    const Complex w3 = zn * (1.0 + w);
    const Complex h3 = p.h3(w3);
    if (h3 == 0.0) fail(ErrorKind::DomainEscape, "h3 vanishes at an iterate");
    const Complex delta = zn * (1.0 + w) * (1.0 + w) / h3;
    if (delta.imag() == 0.0 && delta.real() >= 0.0) fail(ErrorKind::DomainEscape, "iterate reached the cut [0, inf)");
    return p.h1(delta) - 1.0;
  };
  auto inside = [&](Complex w) { return std::abs(w) <= radius * (1.0 + 1e-12); };
  Complex start = 0.0;
  if (cfg.initial && inside(*cfg.initial)) start = *cfg.initial;
  const FixedPointOutcome out = iterate_fixed_point(T, start, cfg, inside);
  if (!out.converged) {
    if (out.iters < cfg.max_iter)
      fail(ErrorKind::DomainEscape, "iterate left the contraction disk at z = " + point_str(z));
    fail(ErrorKind::NonConvergence,
         "multiplicative subordination at z = " + point_str(z) + " did not converge in " + std::to_string(cfg.max_iter) + " steps");
  }
  r.w3tilde = out.w;
  r.w3 = zn * (1.0 + r.w3tilde);
  const Complex F2n = p.f3(r.w3) * zn / r.w3;
  r.w1 = r.w3 * r.w3 / (zn * p.h3(r.w3));
  r.F2 = p.from_normalized(F2n);
  r.iters = out.iters;
  r.residual = out.residual;
  return r;
}

MulSubordinationResult subordinate_mul(const MultiplicativeProblem& p, Complex z, const FixedPointConfig& cfg,
                                       KPolicy policy) {
  const double K = p.degenerate_noise() ? 0.0 : threshold_K(p, policy);
  return subordinate_mul_with_K(p, z, K, cfg);
}

LineScan scan_line_mul(const MultiplicativeProblem& p, double lambda, const UniformGrid& xs,
                       const FixedPointConfig& cfg, KPolicy policy, bool warm_start) {
  cfg.validate();
  const double K = p.degenerate_noise() ? 0.0 : threshold_K(p, policy);
  const double floor = caller_threshold(p, K);
  if (!(lambda > 0.0) ||
      (cfg.enforce_threshold && !p.degenerate_noise() && !(lambda > floor * (1.0 + kThresholdMargin)))) {
    std::ostringstream os;
    os << "lambda = " << lambda << " is not above the threshold " << floor;
    fail(ErrorKind::BelowThreshold, os.str());
  }
  LineScan scan;
  scan.lambda = lambda;
  scan.xs = xs;
  scan.F2.resize(xs.size());
  scan.iters.resize(xs.size());
  std::vector<double> residuals(xs.size(), 0.0);
  const std::size_t chunks = (xs.size() + kScanChunk - 1) / kScanChunk;
  parallel_for(chunks, [&](std::size_t c) {
    std::optional<Complex> warm;
    const std::size_t end = std::min(xs.size(), (c + 1) * kScanChunk);
    for (std::size_t i = c * kScanChunk; i < end; ++i) {
      FixedPointConfig local = cfg;
      local.initial = warm_start ? warm : std::nullopt;
      MulSubordinationResult r;
      try {
        r = subordinate_mul_with_K(p, Complex(xs.at(i), lambda), K, local);
      } catch (const Error& e) {
        std::ostringstream os;
        os << e.what() << " (scan point x = " << xs.at(i) << ")";
        throw Error(e.kind(), os.str());
      }
      scan.F2[i] = r.F2;
      scan.iters[i] = r.iters;
      residuals[i] = r.residual;
      warm = r.w3tilde;
    }
  });
  scan.max_residual = residuals.empty() ? 0.0 : *std::max_element(residuals.begin(), residuals.end());
  return scan;
}

}  // namespace freedeconv
