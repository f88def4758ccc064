#include "freedeconv/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "freedeconv/errors.hpp"
#include "freedeconv/grid.hpp"
#include "freedeconv/quadrature.hpp"

namespace freedeconv {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Neumaier compensated summation.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

template <class Weight>
Complex resolvent_sum(const std::vector<double>& xs, Weight weight, Complex z) {
  CompensatedSum re, im;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const Complex t = weight(i) * (1.0 / (z - xs[i]));
    re.add(t.real());
    im.add(t.imag());
  }
  return {re.value(), im.value()};
}

template <class Weight>
double power_sum(const std::vector<double>& xs, Weight weight, double shift, int k) {
  CompensatedSum s;
  for (std::size_t i = 0; i < xs.size(); ++i) s.add(weight(i) * std::pow(xs[i] - shift, k));
  return s.value();
}

void check_off_hull(const Measure& m, Complex z) {
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) fail(ErrorKind::Domain, "non-finite argument");
  if (z.imag() != 0.0) return;
  const Interval hull = support_hull(m);
  if (hull.contains(z.real()))
    fail(ErrorKind::Domain, "real argument " + std::to_string(z.real()) + " lies in the support hull");
}

Complex analytic_cauchy(const AnalyticMeasure& m, Complex z) {
  return std::visit(
      overloaded{
          [&](const Semicircle& s) {
            const double r = 2.0 * std::sqrt(s.variance);
            const Complex zeta = z - s.mean;
            const Complex root = std::sqrt(zeta - r) * std::sqrt(zeta + r);
            return 2.0 / (zeta + root);
          },
          [&](const MarchenkoPastur& mp) {
            const double sl = std::sqrt(mp.ratio);
            const double a = (1.0 - sl) * (1.0 - sl), b = (1.0 + sl) * (1.0 + sl);
            const Complex root = std::sqrt(z - a) * std::sqrt(z - b);
            return 2.0 / (z + 1.0 - mp.ratio + root);
          },
          [&](const CauchyDistribution& c) {
            const double s = z.imag() > 0.0 ? c.scale : -c.scale;
            return 1.0 / (z - c.center + Complex(0.0, s));
          },
          [&](const PointMass& p) { return 1.0 / (z - p.position); },
      },
      m.family);
}

Complex analytic_f(const AnalyticMeasure& m, Complex z) {
  return std::visit(
      overloaded{
          [&](const Semicircle& s) {
            const double r = 2.0 * std::sqrt(s.variance);
            const Complex zeta = z - s.mean;
            return 0.5 * (zeta + std::sqrt(zeta - r) * std::sqrt(zeta + r));
          },
          [&](const MarchenkoPastur& mp) {
            const double sl = std::sqrt(mp.ratio);
            const double a = (1.0 - sl) * (1.0 - sl), b = (1.0 + sl) * (1.0 + sl);
            return 0.5 * (z + 1.0 - mp.ratio + std::sqrt(z - a) * std::sqrt(z - b));
          },
          [&](const CauchyDistribution& c) {
            const double s = z.imag() > 0.0 ? c.scale : -c.scale;
            return z - c.center + Complex(0.0, s);
          },
          [&](const PointMass& p) { return z - p.position; },
      },
      m.family);
}

double analytic_raw_moment(const AnalyticMeasure& m, int k) {
  return std::visit(
      overloaded{
          [&](const Semicircle& s) {
            const double a = s.mean, v = s.variance;
            const double table[5] = {1.0, a, a * a + v, a * a * a + 3.0 * a * v, a * a * a * a + 6.0 * a * a * v + 2.0 * v * v};
            return table[k];
          },
          [&](const MarchenkoPastur& mp) {
            const double l = mp.ratio;
            const double table[5] = {1.0, l, l * l + l, l * l * l + 3.0 * l * l + l,
                                     l * l * l * l + 6.0 * l * l * l + 6.0 * l * l + l};
            return table[k];
          },
          [&](const CauchyDistribution&) -> double {
            if (k == 0) return 1.0;
            fail(ErrorKind::MomentUndefined, "Cauchy distribution has no moment of order " + std::to_string(k));
          },
          [&](const PointMass& p) { return std::pow(p.position, k); },
      },
      m.family);
}

}  // namespace

DiscreteMeasure DiscreteMeasure::from_atoms(std::vector<std::pair<double, double>> atoms) {
  if (atoms.empty()) fail(ErrorKind::InvalidArgument, "discrete measure needs at least one atom");
  std::sort(atoms.begin(), atoms.end());
  DiscreteMeasure out;
  double total = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const auto [x, w] = atoms[i];
    if (!std::isfinite(x) || !std::isfinite(w)) fail(ErrorKind::InvalidArgument, "atoms must be finite");
    if (!(w > 0.0)) fail(ErrorKind::InvalidArgument, "atom weights must be positive");
    if (i > 0 && !(x > atoms[i - 1].first)) fail(ErrorKind::InvalidArgument, "atom positions must be distinct");
    out.positions.push_back(x);
    out.weights.push_back(w);
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12)
    fail(ErrorKind::InvalidArgument, "atom weights sum to " + std::to_string(total) + ", expected 1");
  return out;
}

AnalyticMeasure AnalyticMeasure::semicircle(double mean, double variance) {
  if (!std::isfinite(mean) || !(variance > 0.0) || !std::isfinite(variance))
    fail(ErrorKind::InvalidArgument, "semicircle needs finite mean and positive variance");
  return {Semicircle{mean, variance}};
}

AnalyticMeasure AnalyticMeasure::marchenko_pastur(double ratio) {
  if (!(ratio > 0.0) || !std::isfinite(ratio)) fail(ErrorKind::InvalidArgument, "Marchenko-Pastur ratio must be positive");
  return {MarchenkoPastur{ratio}};
}

AnalyticMeasure AnalyticMeasure::cauchy(double center, double scale) {
  if (!std::isfinite(center) || !(scale > 0.0) || !std::isfinite(scale))
    fail(ErrorKind::InvalidArgument, "Cauchy distribution needs finite center and positive scale");
  return {CauchyDistribution{center, scale}};
}

AnalyticMeasure AnalyticMeasure::point(double position) {
  if (!std::isfinite(position)) fail(ErrorKind::InvalidArgument, "point mass position must be finite");
  return {PointMass{position}};
}

EmpiricalSpectrum EmpiricalSpectrum::from_samples(std::vector<double> samples) {
  if (samples.empty()) fail(ErrorKind::InvalidArgument, "empirical spectrum is empty");
  for (double x : samples)
    if (!std::isfinite(x)) fail(ErrorKind::InvalidArgument, "empirical spectrum has a non-finite entry");
  std::sort(samples.begin(), samples.end());
  return {std::move(samples)};
}

GridDensity GridDensity::create(double x0, double step, std::vector<double> values) {
  if (!std::isfinite(x0) || !(step > 0.0)) fail(ErrorKind::InvalidArgument, "grid density needs finite origin and positive step");
  if (values.empty()) fail(ErrorKind::InvalidArgument, "grid density is empty");
  for (double v : values)
    if (!(v >= 0.0) || !std::isfinite(v)) fail(ErrorKind::InvariantViolation, "grid density values must be finite and nonnegative");
  GridDensity g{x0, step, std::move(values)};
  const double total = g.mass();
  if (std::abs(total - 1.0) > 1e-6)
    fail(ErrorKind::InvariantViolation, "grid density mass is " + std::to_string(total) + ", expected 1");
  return g;
}

double GridDensity::mass() const {
  CompensatedSum s;
  for (double v : values) s.add(v);
  return s.value() * step;
}

double GridDensity::mass_in(double a, double b) const {
  CompensatedSum s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double x = position(i);
    if (x >= a && x <= b) s.add(values[i]);
  }
  return s.value() * step;
}

Measure semicircle(double mean, double variance) { return AnalyticMeasure::semicircle(mean, variance); }
Measure marchenko_pastur(double ratio) { return AnalyticMeasure::marchenko_pastur(ratio); }
Measure cauchy_distribution(double center, double scale) { return AnalyticMeasure::cauchy(center, scale); }
Measure point_mass(double position) { return AnalyticMeasure::point(position); }
Measure discrete(std::vector<std::pair<double, double>> atoms) { return DiscreteMeasure::from_atoms(std::move(atoms)); }

Interval support_hull(const Measure& m) {
  return std::visit(
      overloaded{
          [](const DiscreteMeasure& d) { return Interval{d.positions.front(), d.positions.back()}; },
          [](const EmpiricalSpectrum& e) { return Interval{e.eigenvalues.front(), e.eigenvalues.back()}; },
          [](const GridDensity& g) { return Interval{g.x0, g.position(g.values.size() - 1)}; },
          [](const ImplicitMeasure& im) { return im.source->support(); },
          [](const AnalyticMeasure& a) {
            return std::visit(overloaded{
                                  [](const Semicircle& s) {
                                    const double r = 2.0 * std::sqrt(s.variance);
                                    return Interval{s.mean - r, s.mean + r};
                                  },
                                  [](const MarchenkoPastur& mp) {
                                    const double sl = std::sqrt(mp.ratio);
                                    const double lo = mp.ratio < 1.0 ? 0.0 : (1.0 - sl) * (1.0 - sl);
                                    return Interval{lo, (1.0 + sl) * (1.0 + sl)};
                                  },
                                  [](const CauchyDistribution&) {
                                    return Interval{-INFINITY, INFINITY};
                                  },
                                  [](const PointMass& p) { return Interval{p.position, p.position}; },
                              },
                              a.family);
          },
      },
      m.rep());
}

bool has_nonnegative_support(const Measure& m) { return support_hull(m).lo >= 0.0; }

Complex cauchy_transform_ext(const Measure& m, Complex z) {
  check_off_hull(m, z);
  return std::visit(
      overloaded{
          [&](const DiscreteMeasure& d) {
            return resolvent_sum(d.positions, [&](std::size_t i) { return d.weights[i]; }, z);
          },
          [&](const EmpiricalSpectrum& e) {
            const double w = 1.0 / static_cast<double>(e.eigenvalues.size());
            return resolvent_sum(e.eigenvalues, [w](std::size_t) { return w; }, z);
          },
          [&](const GridDensity& g) {
            CompensatedSum re, im;
            for (std::size_t i = 0; i < g.values.size(); ++i) {
              const Complex t = (g.values[i] * g.step) * (1.0 / (z - g.position(i)));
              re.add(t.real());
              im.add(t.imag());
            }
            return Complex(re.value(), im.value());
          },
          [&](const ImplicitMeasure& im) {
            if (z.imag() > 0.0) return im.source->cauchy_upper(z);
            if (z.imag() < 0.0) return std::conj(im.source->cauchy_upper(std::conj(z)));
            fail(ErrorKind::Domain, "implicit measures are evaluated off the real axis only");
          },
          [&](const AnalyticMeasure& a) { return analytic_cauchy(a, z); },
      },
      m.rep());
}

Complex cauchy_transform(const Measure& m, Complex z) {
  if (!(z.imag() > 0.0)) fail(ErrorKind::Domain, "cauchy_transform needs Im z > 0");
  return cauchy_transform_ext(m, z);
}

Complex f_transform_ext(const Measure& m, Complex z) {
  if (const auto* a = std::get_if<AnalyticMeasure>(&m.rep())) {
    check_off_hull(m, z);
    return analytic_f(*a, z);
  }
  const Complex g = cauchy_transform_ext(m, z);
  if (g == 0.0) fail(ErrorKind::Domain, "Cauchy transform vanishes");
  return 1.0 / g;
}

Complex f_transform(const Measure& m, Complex z) {
  if (!(z.imag() > 0.0)) fail(ErrorKind::Domain, "f_transform needs Im z > 0");
  return f_transform_ext(m, z);
}

Complex h_transform_ext(const Measure& m, Complex z) {
  if (const auto* a = std::get_if<AnalyticMeasure>(&m.rep())) {
    if (const auto* p = std::get_if<PointMass>(&a->family)) {
      check_off_hull(m, z);
      return p->position;
    }
  }
  return z - f_transform_ext(m, z);
}

Complex h_transform(const Measure& m, Complex z) {
  const bool upper = z.imag() > 0.0;
  const bool cut_plane = has_nonnegative_support(m) && !(z.imag() == 0.0 && z.real() >= 0.0);
  if (!upper && !cut_plane) fail(ErrorKind::Domain, "h_transform argument outside the analytic domain");
  return h_transform_ext(m, z);
}

Complex eta_transform(const Measure& m, Complex w) {
  if (w == 0.0) fail(ErrorKind::Domain, "eta_transform needs w != 0");
  return w * h_transform(m, 1.0 / w);
}

std::optional<double> try_moment(const Measure& m, int k) {
  if (k < 0 || k > 4) fail(ErrorKind::InvalidArgument, "moment order must be in 0..4");
  if (k == 0) return 1.0;
  return std::visit(
      overloaded{
          [&](const DiscreteMeasure& d) -> std::optional<double> {
            return power_sum(d.positions, [&](std::size_t i) { return d.weights[i]; }, 0.0, k);
          },
          [&](const EmpiricalSpectrum& e) -> std::optional<double> {
            const double w = 1.0 / static_cast<double>(e.eigenvalues.size());
            return power_sum(e.eigenvalues, [w](std::size_t) { return w; }, 0.0, k);
          },
          [&](const GridDensity& g) -> std::optional<double> {
            CompensatedSum s;
            for (std::size_t i = 0; i < g.values.size(); ++i) s.add(g.values[i] * g.step * std::pow(g.position(i), k));
            return s.value();
          },
          [&](const ImplicitMeasure& im) { return im.source->raw_moment(k); },
          [&](const AnalyticMeasure& a) -> std::optional<double> {
            if (std::holds_alternative<CauchyDistribution>(a.family)) return std::nullopt;
            return analytic_raw_moment(a, k);
          },
      },
      m.rep());
}

double moment(const Measure& m, int k) {
  const auto v = try_moment(m, k);
  if (!v) fail(ErrorKind::MomentUndefined, "moment of order " + std::to_string(k) + " undefined for " + describe(m));
  return *v;
}

double mean(const Measure& m) { return moment(m, 1); }

double variance(const Measure& m) {
  const auto c = central_moments(m);
  if (!c[2]) fail(ErrorKind::MomentUndefined, "variance undefined for " + describe(m));
  return *c[2];
}

std::vector<std::optional<double>> central_moments(const Measure& m) {
  std::vector<std::optional<double>> c(5);
  c[0] = 1.0;
  c[1] = 0.0;
  const auto m1 = try_moment(m, 1);
  if (!m1) {
    c[1].reset();
    return c;
  }
  const double mu = *m1;
  auto direct = [&](const std::vector<double>& xs, auto weight) {
    for (int k = 2; k <= 4; ++k) c[k] = power_sum(xs, weight, mu, k);
  };
  std::visit(
      overloaded{
          [&](const DiscreteMeasure& d) { direct(d.positions, [&](std::size_t i) { return d.weights[i]; }); },
          [&](const EmpiricalSpectrum& e) {
            const double w = 1.0 / static_cast<double>(e.eigenvalues.size());
            direct(e.eigenvalues, [w](std::size_t) { return w; });
          },
          [&](const GridDensity& g) {
            for (int k = 2; k <= 4; ++k) {
              CompensatedSum s;
              for (std::size_t i = 0; i < g.values.size(); ++i) s.add(g.values[i] * g.step * std::pow(g.position(i) - mu, k));
              c[k] = s.value();
            }
          },
          [&](const AnalyticMeasure& a) {
            std::visit(overloaded{
                           [&](const Semicircle& s) {
                             c[2] = s.variance;
                             c[3] = 0.0;
                             c[4] = 2.0 * s.variance * s.variance;
                           },
                           [&](const MarchenkoPastur& mp) {
                             c[2] = mp.ratio;
                             c[3] = mp.ratio;
                             c[4] = 2.0 * mp.ratio * mp.ratio + mp.ratio;
                           },
                           [&](const CauchyDistribution&) {},
                           [&](const PointMass&) { c[2] = c[3] = c[4] = 0.0; },
                       },
                       a.family);
          },
          [&](const ImplicitMeasure&) {
            const auto m2 = try_moment(m, 2), m3 = try_moment(m, 3), m4 = try_moment(m, 4);
            if (m2) c[2] = std::max(0.0, *m2 - mu * mu);
            if (m2 && m3) c[3] = *m3 - 3.0 * mu * *m2 + 2.0 * mu * mu * mu;
            if (m2 && m3 && m4) c[4] = *m4 - 4.0 * mu * *m3 + 6.0 * mu * mu * *m2 - 3.0 * mu * mu * mu * mu;
          },
      },
      m.rep());
  return c;
}

JacobiParams jacobi_from_central(double mean, double c2, std::optional<double> c3, std::optional<double> c4) {
  JacobiParams jp;
  jp.beta0 = mean;
  jp.gamma0 = c2 < 1e-14 ? 0.0 : c2;
  if (jp.gamma0 == 0.0 || !c3 || !c4) return jp;
  jp.beta1 = mean + *c3 / c2;
  jp.gamma1 = std::max(0.0, (*c4 - *c3 * *c3 / c2 - c2 * c2) / c2);
  return jp;
}

JacobiParams jacobi_params(const Measure& m) {
  const auto c = central_moments(m);
  if (!c[1] || !c[2]) fail(ErrorKind::MomentUndefined, "Jacobi parameters need two moments; " + describe(m) + " lacks them");
  return jacobi_from_central(moment(m, 1), *c[2], c[3], c[4]);
}

double stieltjes_invert(std::span<const double> xs, std::span<const Complex> g, double a, double b) {
  if (xs.size() != g.size()) fail(ErrorKind::InvalidArgument, "sample count mismatch");
  if (!is_uniform(xs)) fail(ErrorKind::NonUniformGrid, "Stieltjes inversion samples must lie on a uniform grid");
  if (!(a < b)) fail(ErrorKind::InvalidArgument, "bin must satisfy a < b");
  const double step = xs[1] - xs[0];
  if (a < xs.front() - 1e-9 * step || b > xs.back() + 1e-9 * step)
    fail(ErrorKind::GridCoverage, "bin [" + std::to_string(a) + ", " + std::to_string(b) + "] extends beyond the samples");
  auto f = [&](std::size_t i) { return -g[i].imag() / std::numbers::pi; };
  CompensatedSum s;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    const double lo = std::max(a, xs[i]), hi = std::min(b, xs[i + 1]);
    if (!(hi > lo)) continue;
    const double span = xs[i + 1] - xs[i];
    auto interp = [&](double x) { return f(i) + (f(i + 1) - f(i)) * (x - xs[i]) / span; };
    s.add(0.5 * (hi - lo) * (interp(lo) + interp(hi)));
  }
  return s.value();
}

double density(const AnalyticMeasure& m, double x) {
  return std::visit(
      overloaded{
          [&](const Semicircle& s) {
            const double r2 = 4.0 * s.variance - (x - s.mean) * (x - s.mean);
            return r2 > 0.0 ? std::sqrt(r2) / (2.0 * std::numbers::pi * s.variance) : 0.0;
          },
          [&](const MarchenkoPastur& mp) {
            const double sl = std::sqrt(mp.ratio);
            const double a = (1.0 - sl) * (1.0 - sl), b = (1.0 + sl) * (1.0 + sl);
            const double r2 = (b - x) * (x - a);
            return (r2 > 0.0 && x > 0.0) ? std::sqrt(r2) / (2.0 * std::numbers::pi * x) : 0.0;
          },
          [&](const CauchyDistribution& c) {
            return c.scale / (std::numbers::pi * ((x - c.center) * (x - c.center) + c.scale * c.scale));
          },
          [&](const PointMass&) { return 0.0; },
      },
      m.family);
}

double interval_mass(const AnalyticMeasure& m, double a, double b) {
  if (!(a < b)) return 0.0;
  return std::visit(
      overloaded{
          [&](const Semicircle& s) {
            const double r = 2.0 * std::sqrt(s.variance);
            const double lo = std::max(a, s.mean - r), hi = std::min(b, s.mean + r);
            if (!(hi > lo)) return 0.0;
            return integrate([&](double x) { return density(m, x); }, lo, hi);
          },
          [&](const MarchenkoPastur& mp) {
            const double sl = std::sqrt(mp.ratio);
            const double lo = std::max(a, (1.0 - sl) * (1.0 - sl)), hi = std::min(b, (1.0 + sl) * (1.0 + sl));
            double mass = 0.0;
            if (mp.ratio < 1.0 && a <= 0.0 && 0.0 <= b) mass += 1.0 - mp.ratio;
            if (hi > lo) mass += integrate([&](double x) { return density(m, x); }, lo, hi);
            return mass;
          },
          [&](const CauchyDistribution& c) {
            return (std::atan((b - c.center) / c.scale) - std::atan((a - c.center) / c.scale)) / std::numbers::pi;
          },
          [&](const PointMass& p) { return (a <= p.position && p.position <= b) ? 1.0 : 0.0; },
      },
      m.family);
}

std::string describe(const Measure& m) {
  std::ostringstream os;
  os.precision(6);
  std::visit(overloaded{
                 [&](const DiscreteMeasure& d) { os << "Discrete(" << d.positions.size() << " atoms)"; },
                 [&](const EmpiricalSpectrum& e) { os << "Empirical(n=" << e.eigenvalues.size() << ")"; },
                 [&](const GridDensity& g) { os << "GridDensity(" << g.values.size() << " cells)"; },
                 [&](const ImplicitMeasure& im) { os << im.source->describe(); },
                 [&](const AnalyticMeasure& a) {
                   std::visit(overloaded{
                                  [&](const Semicircle& s) { os << "Semicircle(" << s.mean << "," << s.variance << ")"; },
                                  [&](const MarchenkoPastur& mp) { os << "MarchenkoPastur(" << mp.ratio << ")"; },
                                  [&](const CauchyDistribution& c) { os << "Cauchy(" << c.center << "," << c.scale << ")"; },
                                  [&](const PointMass& p) { os << "Point(" << p.position << ")"; },
                              },
                              a.family);
                 },
             },
             m.rep());
  return os.str();
}

}  // namespace freedeconv
