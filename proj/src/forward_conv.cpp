#include "freedeconv/forward_conv.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "freedeconv/parallel.hpp"

namespace freedeconv {

namespace {

constexpr int kMaxHalvings = 6;

bool finite(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

void check_first_moment(const Measure& m, const char* which) {
  const auto m1 = try_moment(m, 1);
  if (m1 && *m1 == 0.0) fail(ErrorKind::FirstMomentZero, std::string(which) + " has zero first moment");
}

// Capital H of the multiplicative iteration: H(u) = h(1/u).
Complex cap_h(const Measure& m, Complex u) {
  if (u == 0.0) fail(ErrorKind::Domain, "H evaluated at 0");
  return h_transform_ext(m, 1.0 / u);
}

struct MulMap {
  const Measure& m1;
  const Measure& m2;
  Complex u;
  Complex operator()(Complex w) const { return u * cap_h(m1, cap_h(m2, w) * u); }
};

// Plain iteration, then Newton if allowed; exceptions count as failure.
FixedPointOutcome try_solve_mul(const MulMap& T, Complex start, const FixedPointConfig& cfg, bool newton) {
  auto inside = [](Complex w) { return finite(w) && w != 0.0; };
  FixedPointOutcome out;
  try {
    out = iterate_fixed_point(T, start, cfg, inside);
  } catch (const Error&) {
    out.converged = false;
  }
  if (out.converged || !newton) return out;
  try {
    const Complex from = finite(out.w) && out.w != 0.0 ? out.w : start;
    FixedPointOutcome nt = newton_fixed_point(T, from, cfg.tol, 60, inside);
    nt.iters += out.iters;
    return nt;
  } catch (const Error&) {
    return out;
  }
}

// Walks u*s from a small s where plain iteration contracts up to s = 1.
FixedPointOutcome continuation_mul(const Measure& m1, const Measure& m2, Complex u, const FixedPointConfig& cfg) {
  int total = 0;
  for (int k = 1; k <= kMaxHalvings; ++k) {
    const double s0 = std::ldexp(1.0, -k);
    FixedPointOutcome base = try_solve_mul(MulMap{m1, m2, u * s0}, u * s0, cfg, false);
    total += base.iters;
    if (!base.converged) continue;
    double s = s0;
    Complex w = base.w;
    double ratio = 2.0;
    while (s < 1.0) {
      const double next = std::min(1.0, s * ratio);
      const Complex guess = w * (next / s);
      FixedPointOutcome step = try_solve_mul(MulMap{m1, m2, u * next}, guess, FixedPointConfig{cfg.tol, 40, {}, true}, true);
      total += step.iters;
      if (step.converged) {
        s = next;
        w = step.w;
        ratio = std::min(2.0, ratio * ratio);
      } else {
        ratio = std::sqrt(ratio);
        if (ratio < 1.0 + 1e-6) break;
      }
    }
    if (s >= 1.0) {
      FixedPointOutcome done;
      done.w = w;
      done.iters = total;
      done.residual = std::abs(MulMap{m1, m2, u}(w) - w);
      done.converged = done.residual < cfg.tol;
      if (done.converged) return done;
    }
  }
  FixedPointOutcome none;
  none.iters = total;
  return none;
}

class AddConvolutionSource final : public ImplicitSource {
 public:
  AddConvolutionSource(Measure a, Measure b, FixedPointConfig cfg) : a_(std::move(a)), b_(std::move(b)), cfg_(cfg) {}
  Complex cauchy_upper(Complex z) const override { return 1.0 / forward_add_F(a_, b_, z, cfg_).F; }
  std::optional<double> raw_moment(int k) const override {
    if (k == 0) return 1.0;
    const auto ma = try_moment(a_, 1), mb = try_moment(b_, 1);
    if (!ma || !mb) return std::nullopt;
    if (k == 1) return *ma + *mb;
    if (k == 2) {
      const auto ca = central_moments(a_), cb = central_moments(b_);
      if (!ca[2] || !cb[2]) return std::nullopt;
      const double m = *ma + *mb;
      return *ca[2] + *cb[2] + m * m;
    }
    return std::nullopt;
  }
  Interval support() const override {
    const Interval x = support_hull(a_), y = support_hull(b_);
    return {x.lo + y.lo, x.hi + y.hi};
  }
  std::string describe() const override {
    return "FreeAdditiveConvolution(" + freedeconv::describe(a_) + "," + freedeconv::describe(b_) + ")";
  }

 private:
  Measure a_, b_;
  FixedPointConfig cfg_;
};

class MulConvolutionSource final : public ImplicitSource {
 public:
  MulConvolutionSource(Measure a, Measure b, FixedPointConfig cfg) : a_(std::move(a)), b_(std::move(b)), cfg_(cfg) {}
  Complex cauchy_upper(Complex z) const override {
    const Complex u = 1.0 / z;
    const Complex eta = forward_mul_eta(a_, b_, u, cfg_).eta;
    return 1.0 / (z * (1.0 - eta));
  }
  std::optional<double> raw_moment(int k) const override {
    if (k == 0) return 1.0;
    const auto a1 = try_moment(a_, 1), b1 = try_moment(b_, 1);
    if (!a1 || !b1) return std::nullopt;
    if (k == 1) return *a1 * *b1;
    if (k == 2) {
      const auto a2 = try_moment(a_, 2), b2 = try_moment(b_, 2);
      if (!a2 || !b2) return std::nullopt;
      return *a2 * *b1 * *b1 + *a1 * *a1 * *b2 - *a1 * *a1 * *b1 * *b1;
    }
    return std::nullopt;
  }
  Interval support() const override {
    const Interval x = support_hull(a_), y = support_hull(b_);
    const double c[4] = {x.lo * y.lo, x.lo * y.hi, x.hi * y.lo, x.hi * y.hi};
    return {*std::min_element(c, c + 4), *std::max_element(c, c + 4)};
  }
  std::string describe() const override {
    return "FreeMultiplicativeConvolution(" + freedeconv::describe(a_) + "," + freedeconv::describe(b_) + ")";
  }

 private:
  Measure a_, b_;
  FixedPointConfig cfg_;
};

}  // namespace

ForwardAddResult forward_add_F(const Measure& m1, const Measure& m2, Complex z, const FixedPointConfig& cfg) {
  cfg.validate();
  if (!(z.imag() > 0.0)) fail(ErrorKind::Domain, "forward_add_F needs Im z > 0");
  auto T = [&](Complex w) { return z - h_transform_ext(m1, z - h_transform_ext(m2, w)); };
  auto inside = [&](Complex w) { return w.imag() > 0.0; };
  const Complex start = cfg.initial.value_or(z);
  if (!(start.imag() > 0.0)) fail(ErrorKind::Domain, "initial point must lie in the upper half-plane");
  FixedPointOutcome out = iterate_fixed_point(T, start, cfg, inside);
  if (!out.converged && cfg.newton_fallback) {
    FixedPointOutcome nt = newton_fixed_point(T, out.w.imag() > 0.0 ? out.w : start, cfg.tol, 60, inside);
    nt.iters += out.iters;
    if (nt.converged && nt.w.imag() >= z.imag() * (1.0 - 1e-12)) out = nt;
  }
  if (!out.converged) {
    std::ostringstream os;
    os << "forward additive iteration at z = " << z << " did not converge in " << out.iters << " steps";
    fail(ErrorKind::NonConvergence, os.str());
  }
  ForwardAddResult r;
  r.w2 = out.w;
  r.F = f_transform_ext(m2, r.w2);
  r.w1 = z - h_transform_ext(m2, r.w2);
  r.iters = out.iters;
  r.residual = out.residual;
  return r;
}

ForwardMulResult forward_mul_eta(const Measure& m1, const Measure& m2, Complex w, const FixedPointConfig& cfg) {
  cfg.validate();
  if (!has_nonnegative_support(m1)) fail(ErrorKind::Domain, "forward_mul_eta needs m1 supported on [0, inf)");
  check_first_moment(m1, "m1");
  check_first_moment(m2, "m2");
  if (w == 0.0 || !finite(w)) fail(ErrorKind::Domain, "forward_mul_eta needs finite w != 0");
  const MulMap T{m1, m2, w};
  FixedPointOutcome out = try_solve_mul(T, cfg.initial.value_or(w), cfg, cfg.newton_fallback);
  if (!out.converged) {
    FixedPointOutcome cont = continuation_mul(m1, m2, w, cfg);
    cont.iters += out.iters;
    out = cont;
  }
  if (!out.converged) {
    std::ostringstream os;
    os << "forward multiplicative iteration at w = " << w << " did not converge";
    fail(ErrorKind::NonConvergence, os.str());
  }
  ForwardMulResult r;
  r.w2 = out.w;
  r.eta = r.w2 * cap_h(m2, r.w2);
  r.iters = out.iters;
  r.residual = out.residual;
  return r;
}

double DensitySamples::mass() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s * step;
}

DensitySamples forward_density(const Measure& m1, const Measure& m2, ConvolutionMode mode, const UniformGrid& grid,
                               double y, const FixedPointConfig& cfg) {
  cfg.validate();
  if (!(y > 0.0)) fail(ErrorKind::InvalidArgument, "forward_density needs y > 0");
  if (grid.size() == 0) fail(ErrorKind::InvalidArgument, "empty grid");
  DensitySamples out;
  out.x0 = grid.start;
  out.step = grid.step;
  out.values.assign(grid.size(), 0.0);
  out.iters.assign(grid.size(), 0);
  const std::size_t chunks = (grid.size() + kScanChunk - 1) / kScanChunk;
  parallel_for(chunks, [&](std::size_t c) {
    std::optional<Complex> warm;
    const std::size_t end = std::min(grid.size(), (c + 1) * kScanChunk);
    for (std::size_t i = c * kScanChunk; i < end; ++i) {
      const Complex z(grid.at(i), y);
      FixedPointConfig local = cfg;
      local.initial = warm;
      Complex g;
      if (mode == ConvolutionMode::Additive) {
        const ForwardAddResult r = forward_add_F(m1, m2, z, local);
        g = 1.0 / r.F;
        warm = r.w2;
        out.iters[i] = r.iters;
      } else {
        const ForwardMulResult r = forward_mul_eta(m1, m2, 1.0 / z, local);
        g = 1.0 / (z * (1.0 - r.eta));
        warm = r.w2;
        out.iters[i] = r.iters;
      }
      out.values[i] = std::max(0.0, -g.imag() / std::numbers::pi);
    }
  });
  return out;
}

Measure free_additive_convolution(const Measure& m1, const Measure& m2, const FixedPointConfig& cfg) {
  cfg.validate();
  return ImplicitMeasure{std::make_shared<AddConvolutionSource>(m1, m2, cfg)};
}

Measure free_multiplicative_convolution(const Measure& m1, const Measure& m2, const FixedPointConfig& cfg) {
  cfg.validate();
  if (!has_nonnegative_support(m1)) fail(ErrorKind::Domain, "multiplicative convolution needs m1 on [0, inf)");
  return ImplicitMeasure{std::make_shared<MulConvolutionSource>(m1, m2, cfg)};
}

}  // namespace freedeconv
