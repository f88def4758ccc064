#include "freedeconv/additive_deconv.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "freedeconv/forward_conv.hpp"
#include "freedeconv/parallel.hpp"

namespace freedeconv {

namespace {

constexpr double kThresholdMargin = 1e-9;

std::string point_str(Complex z) {
  std::ostringstream os;
  os.precision(10);
  os << z.real() << (z.imag() < 0 ? " - " : " + ") << std::abs(z.imag()) << "i";
  return os.str();
}

class RegularizedSource final : public ImplicitSource {
 public:
  RegularizedSource(AdditiveProblem p, FixedPointConfig cfg) : p_(std::move(p)), cfg_(cfg), c_(threshold(p_)) {}
  Complex cauchy_upper(Complex z) const override {
    FixedPointConfig local = cfg_;
    local.initial.reset();
    return 1.0 / subordinate(p_, z + Complex(0.0, c_), local).F2;
  }
  std::optional<double> raw_moment(int k) const override {
    if (k == 0) return 1.0;
    return std::nullopt;
  }
  Interval support() const override { return {-INFINITY, INFINITY}; }
  std::string describe() const override { return "RegularizedDeconvolution(" + freedeconv::describe(p_.observed()) + ")"; }

 private:
  AdditiveProblem p_;
  FixedPointConfig cfg_;
  double c_;
};

}  // namespace

std::vector<double> LineScan::smoothed_density() const {
  std::vector<double> v(F2.size());
  for (std::size_t i = 0; i < F2.size(); ++i) v[i] = -(1.0 / F2[i]).imag() / std::numbers::pi;
  return v;
}

AdditiveProblem AdditiveProblem::create(Measure noise, Measure observed) {
  AdditiveProblem p(std::move(noise), std::move(observed));
  p.shift_ = mean(p.noise_);
  p.var1_ = variance(p.noise_);
  p.var3_ = variance(p.observed_);
  if (p.var1_ < 1e-14) p.var1_ = 0.0;
  return p;
}

double threshold(const AdditiveProblem& p) { return 2.0 * std::numbers::sqrt2 * std::sqrt(p.noise_variance()); }

SubordinationResult subordinate(const AdditiveProblem& p, Complex z, const FixedPointConfig& cfg) {
  cfg.validate();
  const double thr = threshold(p);
  if (cfg.enforce_threshold && !(z.imag() > thr + kThresholdMargin)) {
    std::ostringstream os;
    os << "Im z = " << z.imag() << " at z = " << point_str(z) << " is not above the threshold " << thr;
    fail(ErrorKind::BelowThreshold, os.str());
  }
  const double s = p.shift();
  SubordinationResult r;
  r.z = z;
  r.shift = s;
  if (p.noise_variance() == 0.0) {
    // Point noise: h1 is constant.
    r.w3 = z + s;
    r.F2 = f_transform_ext(p.observed(), r.w3);
    r.w1 = r.F2 + r.w3 - z;
    return r;
  }
  auto h1c = [&](Complex w) { return h_transform_ext(p.noise(), w + s) - s; };
  auto f3c = [&](Complex w) { return f_transform_ext(p.observed(), w + s); };
  auto T = [&](Complex w) { return h1c(f3c(w) + w - z) + z; };
  const double floor = 0.75 * z.imag();
  auto inside = [&](Complex w) { return w.imag() > floor; };
  Complex start = z;
  if (cfg.initial) {
    start = *cfg.initial - s;
    if (!inside(start)) fail(ErrorKind::Domain, "initial point must satisfy Im w > (3/4) Im z");
  }
  const FixedPointOutcome out = iterate_fixed_point(T, start, cfg, inside);
  if (!out.converged) {
    if (out.iters < cfg.max_iter)
      fail(ErrorKind::DomainEscape, "iterate left Im w > (3/4) Im z at z = " + point_str(z));
    fail(ErrorKind::NonConvergence,
         "additive subordination at z = " + point_str(z) + " did not converge in " + std::to_string(cfg.max_iter) + " steps");
  }
  const Complex w3c = out.w;
  r.w3 = w3c + s;
  r.F2 = f3c(w3c);
  r.w1 = r.F2 + r.w3 - z;
  r.iters = out.iters;
  r.residual = out.residual;
  return r;
}

LineScan scan_line(const AdditiveProblem& p, double lambda, const UniformGrid& xs, const FixedPointConfig& cfg,
                   bool warm_start) {
  cfg.validate();
  const double thr = threshold(p);
  if (cfg.enforce_threshold && !(lambda > thr + kThresholdMargin)) {
    std::ostringstream os;
    os << "lambda = " << lambda << " is not above the threshold " << thr;
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
      local.initial = warm_start ? warm : cfg.initial;
      const Complex z(xs.at(i), lambda);
      SubordinationResult r;
      try {
        r = subordinate(p, z, local);
      } catch (const Error& e) {
        std::ostringstream os;
        os << e.what() << " (scan point x = " << xs.at(i) << ")";
        throw Error(e.kind(), os.str());
      }
      scan.F2[i] = r.F2;
      scan.iters[i] = r.iters;
      residuals[i] = r.residual;
      warm = r.w3;
    }
  });
  scan.max_residual = residuals.empty() ? 0.0 : *std::max_element(residuals.begin(), residuals.end());
  return scan;
}

Measure regularized_measure(const AdditiveProblem& p, const FixedPointConfig& cfg) {
  cfg.validate();
  return ImplicitMeasure{std::make_shared<RegularizedSource>(p, cfg)};
}

RegularizedReport regularized_measure_checks(const AdditiveProblem& p, std::span<const double> heights,
                                             const FixedPointConfig& cfg) {
  cfg.validate();
  if (heights.empty()) fail(ErrorKind::InvalidArgument, "no heights given");
  for (double y : heights)
    if (!(y > 0.0) || !std::isfinite(y)) fail(ErrorKind::InvalidArgument, "heights must be positive");
  RegularizedReport rep;
  rep.heights.assign(heights.begin(), heights.end());
  std::sort(rep.heights.begin(), rep.heights.end());
  const double c = threshold(p);
  FixedPointConfig inner = cfg;
  inner.initial.reset();
  inner.tol = std::max(cfg.tol * 1e-2, 1e-14);
  inner.max_iter = std::max(cfg.max_iter, 400);

  for (double y : rep.heights) {
    const Complex F = subordinate(p, Complex(0.0, y + c), inner).F2;
    rep.F_tilde.push_back(F);
    rep.ratio_error.push_back(std::abs(F / Complex(0.0, y) - 1.0));
    if (F.imag() < y * (1.0 - 1e-12)) {
      std::ostringstream os;
      os << "Nevanlinna bound Im F(iy) >= y fails at y = " << y << " (Im F = " << F.imag() << ")";
      fail(ErrorKind::CertificateFailure, os.str());
    }
  }
  for (std::size_t k = 1; k < rep.ratio_error.size(); ++k) {
    if (rep.ratio_error[k] > rep.ratio_error[k - 1] * (1.0 + 1e-12)) {
      std::ostringstream os;
      os << "|F(iy)/(iy) - 1| is not decreasing between y = " << rep.heights[k - 1] << " and y = " << rep.heights[k];
      fail(ErrorKind::CertificateFailure, os.str());
    }
  }
  const double sigma3 = std::sqrt(p.observed_variance());
  if (rep.heights.back() >= 50.0 * sigma3) {
    rep.tail_check_applied = true;
    if (!(rep.ratio_error.back() < 0.05)) {
      std::ostringstream os;
      os << "|F(iy)/(iy) - 1| = " << rep.ratio_error.back() << " at y = " << rep.heights.back() << " is not below 0.05";
      fail(ErrorKind::CertificateFailure, os.str());
    }
  }

  const Measure tilde = regularized_measure(p, inner);
  const double m3 = mean(p.observed());
  const double scale = 1.0 + sigma3;
  FixedPointConfig fwd = inner;
  fwd.max_iter = std::max(cfg.max_iter, 2000);
  for (int k = -2; k <= 2; ++k) {
    const Complex z(m3 + k * scale, scale);
    const Complex lhs = forward_add_F(p.noise(), tilde, z, fwd).F;
    const Complex rhs = f_transform_ext(p.observed(), z + Complex(0.0, c));
    const double err = std::abs(lhs - rhs);
    rep.test_points.push_back(z);
    rep.identity_error.push_back(err);
    rep.max_identity_error = std::max(rep.max_identity_error, err);
    if (!(err < 10.0 * cfg.tol)) {
      std::ostringstream os;
      os << "forward identity mu1 boxplus mu~ = mu3 boxplus Cauchy fails at z = " << point_str(z) << " (error " << err << ")";
      fail(ErrorKind::CertificateFailure, os.str());
    }
  }
  return rep;
}

}  // namespace freedeconv
