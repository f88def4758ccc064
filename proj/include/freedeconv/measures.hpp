#pragma once

#include <complex>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "freedeconv/errors.hpp"

namespace freedeconv {

using Complex = std::complex<double>;

struct Interval {
  double lo;
  double hi;
  bool contains(double x) const { return lo <= x && x <= hi; }
};

struct DiscreteMeasure {
  std::vector<double> positions;  // strictly increasing
  std::vector<double> weights;    // positive, sum 1

  static DiscreteMeasure from_atoms(std::vector<std::pair<double, double>> atoms);
};

struct Semicircle {
  double mean;
  double variance;
};

// Free Poisson law of rate `ratio`, jump size 1.
struct MarchenkoPastur {
  double ratio;
};

struct CauchyDistribution {
  double center;
  double scale;
};

struct PointMass {
  double position;
};

struct AnalyticMeasure {
  std::variant<Semicircle, MarchenkoPastur, CauchyDistribution, PointMass> family;

  static AnalyticMeasure semicircle(double mean, double variance);
  static AnalyticMeasure marchenko_pastur(double ratio);
  static AnalyticMeasure cauchy(double center, double scale);
  static AnalyticMeasure point(double position);
};

struct EmpiricalSpectrum {
  std::vector<double> eigenvalues;  // sorted ascending

  static EmpiricalSpectrum from_samples(std::vector<double> samples);
};

// Density values per unit length at x0 + i*step; mass one.
struct GridDensity {
  double x0 = 0.0;
  double step = 1.0;
  std::vector<double> values;

  static GridDensity create(double x0, double step, std::vector<double> values);
  double position(std::size_t i) const { return x0 + static_cast<double>(i) * step; }
  double mass() const;
  double mass_in(double a, double b) const;
};

// A measure known only through its Cauchy transform (lazy convolutions,
// regularized deconvolution outputs).
class ImplicitSource {
 public:
  virtual ~ImplicitSource() = default;
  // G(z) for Im z > 0.
  virtual Complex cauchy_upper(Complex z) const = 0;
  virtual std::optional<double> raw_moment(int k) const = 0;
  virtual Interval support() const = 0;
  virtual std::string describe() const = 0;
};

struct ImplicitMeasure {
  std::shared_ptr<const ImplicitSource> source;
};

class Measure {
 public:
  using Rep = std::variant<DiscreteMeasure, AnalyticMeasure, EmpiricalSpectrum, GridDensity, ImplicitMeasure>;

  Measure(DiscreteMeasure m) : rep_(std::move(m)) {}
  Measure(AnalyticMeasure m) : rep_(std::move(m)) {}
  Measure(EmpiricalSpectrum m) : rep_(std::move(m)) {}
  Measure(GridDensity m) : rep_(std::move(m)) {}
  Measure(ImplicitMeasure m) : rep_(std::move(m)) {}

  const Rep& rep() const { return rep_; }

 private:
  Rep rep_;
};

Measure semicircle(double mean, double variance);
Measure marchenko_pastur(double ratio);
Measure cauchy_distribution(double center, double scale);
Measure point_mass(double position);
Measure discrete(std::vector<std::pair<double, double>> atoms);

/// Cauchy transform on the upper half-plane.
Complex cauchy_transform(const Measure& m, Complex z);
/// Cauchy transform anywhere off the convex hull of the support.
Complex cauchy_transform_ext(const Measure& m, Complex z);

Complex f_transform(const Measure& m, Complex z);
Complex f_transform_ext(const Measure& m, Complex z);

/// h(z) = z - F(z). Domain: Im z > 0, or z off [0, inf) for measures on [0, inf).
Complex h_transform(const Measure& m, Complex z);
Complex h_transform_ext(const Measure& m, Complex z);

/// eta(w) = w h(1/w).
Complex eta_transform(const Measure& m, Complex w);

double moment(const Measure& m, int k);
std::optional<double> try_moment(const Measure& m, int k);
double mean(const Measure& m);
double variance(const Measure& m);

Interval support_hull(const Measure& m);
bool has_nonnegative_support(const Measure& m);

struct JacobiParams {
  double beta0 = 0.0;
  double gamma0 = 0.0;
  std::optional<double> beta1;
  std::optional<double> gamma1;
};

JacobiParams jacobi_params(const Measure& m);
/// From the mean and central moments c2, c3, c4 (c3/c4 optional).
JacobiParams jacobi_from_central(double mean, double c2, std::optional<double> c3, std::optional<double> c4);

/// Central moments c2..c4 where they exist (index k -> c_k, entries 0 and 1 unused).
std::vector<std::optional<double>> central_moments(const Measure& m);

/// -(1/pi) * integral over [a, b] of Im g, trapezoid rule on the linear interpolant.
double stieltjes_invert(std::span<const double> xs, std::span<const Complex> g, double a, double b);

/// Density of the absolutely continuous part (zero for Point).
double density(const AnalyticMeasure& m, double x);
/// Mass of [a, b] for an analytic measure (atoms included), by quadrature.
double interval_mass(const AnalyticMeasure& m, double a, double b);

std::string describe(const Measure& m);

}  // namespace freedeconv
