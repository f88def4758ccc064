#include <doctest.h>

#include <cmath>

#include "freedeconv/forward_conv.hpp"
#include "freedeconv/multiplicative_deconv.hpp"
#include "oracles.hpp"

using namespace freedeconv;
using C = std::complex<double>;

namespace {

FixedPointConfig tight() {
  FixedPointConfig cfg;
  cfg.tol = 1e-12;
  cfg.max_iter = 1000;
  return cfg;
}

// mu2 = {(1/2, 1/2), (2, 1/2)} scaled to unit mean.
const std::vector<double> kX = {0.4, 1.6};
const std::vector<double> kW = {0.5, 0.5};
Measure two_atoms() { return discrete({{0.4, 0.5}, {1.6, 0.5}}); }

C exact_F(const std::vector<double>& x, const std::vector<double>& w, C z) { return 1.0 / oracle::discrete_G(x, w, z); }

MultiplicativeProblem mp_round_trip() {
  const Measure mp = marchenko_pastur(1.0);
  return MultiplicativeProblem::create(mp, free_multiplicative_convolution(mp, two_atoms(), tight()));
}

}  // namespace

TEST_CASE("constant K for Marchenko-Pastur noise") {
  const MultiplicativeProblem p = MultiplicativeProblem::create(marchenko_pastur(1.0), marchenko_pastur(1.0));
  CHECK(p.noise_variance() == doctest::Approx(1.0));
  CHECK(p.observed_variance() == doctest::Approx(1.0));
  CHECK(*p.noise_jacobi().beta1 == doctest::Approx(2.0));
  CHECK(*p.noise_jacobi().gamma1 == doctest::Approx(1.0));
  const double K = constant_K(p);
  CHECK(K == doctest::Approx(6 * (2 + std::sqrt(7.0))));
  CHECK(K == doctest::Approx(27.87).epsilon(1e-3));
}

TEST_CASE("K of the normalized problem is scale invariant") {
  const Measure a = discrete({{0.5, 0.3}, {1.0, 0.3}, {3.0, 0.4}});
  const Measure a2 = discrete({{1.0, 0.3}, {2.0, 0.3}, {6.0, 0.4}});
  const Measure b = marchenko_pastur(2.0);
  const MultiplicativeProblem p = MultiplicativeProblem::create(a, free_multiplicative_convolution(a, b));
  const MultiplicativeProblem q = MultiplicativeProblem::create(a2, free_multiplicative_convolution(a2, b));
  CHECK(constant_K(p) == doctest::Approx(constant_K(q)).epsilon(1e-12));
  CHECK(refine_K(p) == doctest::Approx(refine_K(q)).epsilon(1e-9));
}

TEST_CASE("point noise takes the trivial path") {
  const MultiplicativeProblem p = MultiplicativeProblem::create(point_mass(1.0), two_atoms());
  CHECK(p.degenerate_noise());
  CHECK_THROWS_AS(constant_K(p), Error);
  const C z(0.3, 0.2);
  const MulSubordinationResult r = subordinate_mul(p, z);
  CHECK(r.w3tilde == 0.0);
  CHECK(std::abs(r.F2 - f_transform(two_atoms(), z)) < 1e-15);
  const LineScan s = scan_line_mul(p, 0.5, UniformGrid::from_range(-1, 1, 0.1));
  for (std::size_t i = 0; i < s.xs.size(); ++i) CHECK(std::abs(s.F2[i] - f_transform(two_atoms(), C(s.xs.at(i), 0.5))) < 1e-15);
}

TEST_CASE("refined K") {
  const MultiplicativeProblem p = MultiplicativeProblem::create(marchenko_pastur(1.0), marchenko_pastur(1.0));
  const double K0 = refine_K(p);
  CHECK(K0 <= constant_K(p) + 1e-6);
  CHECK(K0 < 27.87);
  // Independent check of the bisection: some t on the grid satisfies both
  // inequalities at K0 and none does just below it.
  auto F = [](double t, double I) { return I * I * (1 - t) * (1 - 2 * t - t * t) / ((1 - t) * I + 1.0); };
  auto feasible = [&](double I) {
    for (int k = 1; k * 1e-3 < std::sqrt(2.0) - 1; ++k) {
      const double t = k * 1e-3;
      if (F(t, I) >= 2.0 && F(t, I) > 8.0 / (3 * t)) return true;
    }
    return false;
  };
  CHECK(feasible(K0 * (1 + 1e-9)));
  CHECK_FALSE(feasible(K0 * (1 - 1e-6)));
  CHECK(K0 == doctest::Approx(24.8914).epsilon(1e-5));
}

TEST_CASE("refined K as the noise variance vanishes") {
  const double eps = 1e-4;
  const Measure noise = discrete({{1.0 - eps, 0.5}, {1.0 + eps, 0.5}});
  const MultiplicativeProblem p = MultiplicativeProblem::create(noise, marchenko_pastur(1.0));
  CHECK(p.noise_variance() == doctest::Approx(1e-8).epsilon(1e-6));
  const double r = std::max(2 * std::sqrt(*p.noise_jacobi().gamma1), *p.noise_jacobi().beta1);
  const double v3 = p.observed_variance();
  // With sigma1 -> 0 only F(t, I) >= r binds; at t -> 0 that is I^2 / (I + v3) = r.
  const double limit = 0.5 * (r + std::sqrt(r * r + 4 * r * v3));
  CHECK(refine_K(p) == doctest::Approx(limit).epsilon(1e-2));
}

TEST_CASE("round trip against the exact discrete F") {
  const MultiplicativeProblem p = mp_round_trip();
  // m2 = 2 * 1 + 1 * 1.36 - 1, so the normalized variance is 1.36.
  CHECK(p.observed_variance() == doctest::Approx(1.36).epsilon(1e-9));
  const double K = constant_K(p);
  CHECK(K == doctest::Approx(6 * (2 + std::sqrt(5 + 2 * 1.36))));
  CHECK(K == doctest::Approx(28.67).epsilon(1e-3));
  for (double x : {-20.0, 0.0, 0.5, 1.0, 30.0}) {
    const C z(x, K + 1);
    const MulSubordinationResult r = subordinate_mul(p, z, tight());
    CHECK(std::abs(r.F2 - exact_F(kX, kW, z)) < 1e-5);
  }
}

TEST_CASE("subordination invariants and decay with height") {
  const MultiplicativeProblem p = mp_round_trip();
  const FixedPointConfig cfg = tight();
  const double K = constant_K(p);
  for (double x : {-5.0, 0.0, 2.0}) {
    double previous = INFINITY;
    for (double y : {K + 1, 2 * K, 10 * K}) {
      const C z(x, y);
      const MulSubordinationResult r = subordinate_mul(p, z, cfg);
      const C zn = r.z_normalized;
      const double radius = zn.imag() / (5 * std::abs(zn));
      CHECK(std::abs(r.w3tilde) <= radius);
      CHECK(r.w3.imag() >= 0.8 * zn.imag());
      const C w = r.w3tilde;
      const C T = p.h1(zn * (1.0 + w) * (1.0 + w) / p.h3(zn * (1.0 + w))) - 1.0;
      CHECK(std::abs(T - w) < 10 * cfg.tol);
      const C htilde = (r.w3 - p.f3(r.w3)) / (r.w3 * r.w3);
      CHECK(std::abs(r.w1 * zn * htilde - 1.0) < 10 * cfg.tol);
      // eta of mu2 from F2 equals eta3 at 1 / w3 (normalized coordinates).
      const C F2n = p.f3(r.w3) * zn / r.w3;
      CHECK(std::abs((1.0 - F2n / zn) - (1.0 - p.f3(r.w3) / r.w3)) < 10 * cfg.tol);
      CHECK(std::abs(w) < previous);
      previous = std::abs(w);
    }
  }
}

TEST_CASE("normalization equivariance") {
  const double c1 = 2.5, c3 = 0.4;
  const Measure a = discrete({{0.5, 0.5}, {1.5, 0.5}});
  const Measure a_s = discrete({{0.5 * c1, 0.5}, {1.5 * c1, 0.5}});
  const Measure b = two_atoms();
  // c1 mu1 boxtimes (c3 / c1) mu2 = c3 mu3.
  const Measure b_s = discrete({{0.4 * c3 / c1, 0.5}, {1.6 * c3 / c1, 0.5}});
  const MultiplicativeProblem unit = MultiplicativeProblem::create(a, free_multiplicative_convolution(a, b, tight()));
  const MultiplicativeProblem sp = MultiplicativeProblem::create(a_s, free_multiplicative_convolution(a_s, b_s, tight()));
  CHECK(sp.s1() == doctest::Approx(c1));
  CHECK(sp.s3() == doctest::Approx(c3));
  const double K = constant_K(unit);
  CHECK(constant_K(sp) == doctest::Approx(K).epsilon(1e-9));
  for (double x : {-3.0, 1.0}) {
    const C z(x, K + 2);
    const C f_unit = subordinate_mul(unit, z, tight()).F2;
    const C f_scaled = subordinate_mul(sp, z * c3 / c1, tight()).F2;
    CHECK(std::abs(f_scaled - (c3 / c1) * f_unit) < 1e-9);
  }
}

TEST_CASE("signed mu2 with a negative normalization") {
  // A signed three-atom mu2 gives a negative first moment.
  const Measure b = discrete({{-3.0, 0.5}, {0.5, 1.0 / 6}, {4.0, 1.0 / 3}});
  const Measure a = marchenko_pastur(1.0);
  const MultiplicativeProblem p = MultiplicativeProblem::create(a, free_multiplicative_convolution(a, b, tight()));
  CHECK(p.scale() < 0.0);
  const double lambda = caller_threshold(p, constant_K(p)) * 1.01;
  for (double x : {-4.0, 0.0, 4.0}) {
    const C z(x, lambda);
    const MulSubordinationResult r = subordinate_mul(p, z, tight());
    CHECK(std::abs(r.F2 - exact_F({-3.0, 0.5, 4.0}, {0.5, 1.0 / 6, 1.0 / 3}, z)) < 1e-6);
  }
}

TEST_CASE("threshold and domain errors") {
  const MultiplicativeProblem p = mp_round_trip();
  const double K = constant_K(p);
  try {
    subordinate_mul(p, C(0, K * 0.99));
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::BelowThreshold);
  }
  CHECK_THROWS_AS(MultiplicativeProblem::create(semicircle(1, 1), two_atoms()), Error);
  CHECK_THROWS_AS(MultiplicativeProblem::create(point_mass(0.0), two_atoms()), Error);
  CHECK_THROWS_AS(MultiplicativeProblem::create(marchenko_pastur(1.0), semicircle(0, 1)), Error);
}

TEST_CASE("scans: warm versus cold and the 401-point round trip") {
  const MultiplicativeProblem p = mp_round_trip();
  const double K = constant_K(p);
  const UniformGrid xs = UniformGrid::from_range(-20, 20, 0.1);
  REQUIRE(xs.size() == 401);
  const LineScan warm = scan_line_mul(p, K + 1, xs, tight(), KPolicy::Strict, true);
  const LineScan cold = scan_line_mul(p, K + 1, xs, tight(), KPolicy::Strict, false);
  double diff = 0.0, err = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    diff = std::max(diff, std::abs(warm.F2[i] - cold.F2[i]));
    err = std::max(err, std::abs(warm.F2[i] - exact_F(kX, kW, C(xs.at(i), K + 1))));
  }
  CHECK(diff < 1e-9);
  CHECK(err < 1e-5);
  CHECK(warm.total_iters() < cold.total_iters());
  CHECK_THROWS_AS(scan_line_mul(p, K * 0.5, xs), Error);
}

TEST_CASE("refined policy runs at K0 + 1") {
  const MultiplicativeProblem p = mp_round_trip();
  const double K0 = refine_K(p);
  CHECK(K0 <= constant_K(p));
  const UniformGrid xs = UniformGrid::from_range(-20, 20, 0.1);
  const LineScan s = scan_line_mul(p, K0 + 1, xs, tight(), KPolicy::Refined);
  double err = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) err = std::max(err, std::abs(s.F2[i] - exact_F(kX, kW, C(xs.at(i), K0 + 1))));
  CHECK(err < 1e-5);
}
