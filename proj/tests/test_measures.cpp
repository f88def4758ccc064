#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "freedeconv/measures.hpp"
#include "oracles.hpp"

using namespace freedeconv;
using C = std::complex<double>;

namespace {

Measure example_discrete() { return discrete({{-1.0, 0.5}, {0.0, 1.0 / 6}, {1.0, 1.0 / 3}}); }

std::vector<Measure> zoo() {
  return {point_mass(0.3),        example_discrete(), semicircle(0.5, 2.0), marchenko_pastur(0.5),
          marchenko_pastur(2.0),  cauchy_distribution(0.0, 1.5),
          EmpiricalSpectrum::from_samples({-2.0, 0.1, 0.4, 3.0, 3.0})};
}

std::vector<C> upper_grid() {
  std::vector<C> zs;
  for (double x : {-5.0, -1.3, 0.0, 0.7, 4.0})
    for (double y : {1e-3, 0.05, 1.0, 20.0}) zs.emplace_back(x, y);
  return zs;
}

}  // namespace

TEST_CASE("cauchy transform spot values") {
  CHECK(std::abs(cauchy_transform(point_mass(0.0), C(0, 1)) - C(0, -1)) < 1e-15);
  const C g = cauchy_transform(example_discrete(), C(0, 1));
  CHECK(std::abs(g - C(1.0 / 12, -7.0 / 12)) < 1e-12);
  CHECK(std::abs(cauchy_transform(semicircle(0, 1), C(0, 1)) - C(0, -0.6180339887498949)) < 1e-12);
  CHECK(std::abs(cauchy_transform(cauchy_distribution(0.0, 2.0), C(0, 1)) - C(0, -1.0 / 3)) < 1e-15);
}

TEST_CASE("closed forms match quadrature oracles") {
  for (C z : {C(0, 1), C(0.3, 0.2), C(-2.5, 0.5), C(4.0, 1e-2)}) {
    CHECK(std::abs(cauchy_transform(semicircle(0.5, 2.0), z) - oracle::semicircle_G(0.5, 2.0, z)) < 1e-7);
    CHECK(std::abs(cauchy_transform(marchenko_pastur(2.0), z) - oracle::marchenko_pastur_G(2.0, z)) < 1e-7);
    CHECK(std::abs(cauchy_transform(marchenko_pastur(0.5), z) - oracle::marchenko_pastur_G(0.5, z)) < 1e-7);
  }
}

TEST_CASE("half-plane invariants over the zoo") {
  for (const Measure& m : zoo())
    for (C z : upper_grid()) {
      const C g = cauchy_transform(m, z);
      const C f = f_transform(m, z);
      CHECK(g.imag() < 0.0);
      CHECK(std::abs(g) <= 1.0 / z.imag() * (1 + 1e-12));
      CHECK(f.imag() >= z.imag() * (1 - 1e-12));
    }
}

TEST_CASE("Im z <= 0 is a domain error") {
  CHECK_THROWS_AS(cauchy_transform(semicircle(0, 1), C(1, 0)), Error);
  CHECK_THROWS_AS(f_transform(example_discrete(), C(0, -1)), Error);
}

TEST_CASE("F transform spot values") {
  CHECK(std::abs(f_transform(point_mass(2.0), C(1, 3)) - C(-1, 3)) < 1e-14);
  CHECK(std::abs(f_transform(semicircle(0, 1), C(0, 3)) - C(0, 3.302775637731995)) < 1e-12);
  CHECK(std::abs(f_transform(cauchy_distribution(0, 0.7), C(0, 1)) - C(0, 1.7)) < 1e-14);
}

TEST_CASE("h transform and the variance bound") {
  CHECK(std::abs(h_transform(point_mass(1.5), C(0.2, 0.1)) - C(1.5, 0)) < 1e-12);
  const C h = h_transform(example_discrete(), C(0, 2));
  CHECK(std::abs(h - C(-1.0 / 6, 0)) <= (29.0 / 36) / 2);
  CHECK(std::abs(h_transform(semicircle(0, 1), C(0, 10))) <= 0.1);
  for (const Measure& m : zoo()) {
    const auto v = try_moment(m, 2);
    if (!v) continue;
    const double b0 = mean(m), g0 = variance(m);
    for (C z : upper_grid()) CHECK(std::abs(h_transform(m, z) - b0) <= g0 / z.imag() * (1 + 1e-9) + 1e-12);
  }
}

TEST_CASE("h on the cut plane for nonnegative support") {
  const Measure mp = marchenko_pastur(1.0);
  const C z(-2.0, 0.0);
  const C expect = z - 1.0 / cauchy_transform_ext(mp, z);
  CHECK(std::abs(h_transform(mp, z) - expect) < 1e-12);
  CHECK_THROWS_AS(h_transform(semicircle(0, 1), C(-2.0, 0.0)), Error);
}

TEST_CASE("eta transform") {
  CHECK(std::abs(eta_transform(point_mass(1.0), C(0, 0.1)) - C(0, 0.1)) < 1e-14);
  const C w(0, -0.2);
  CHECK(std::abs(eta_transform(example_discrete(), w) - w * h_transform(example_discrete(), C(0, 5))) < 1e-14);
  for (double s : {1e-3, 1e-4}) {
    const C ww(0, s);
    CHECK(std::abs(eta_transform(marchenko_pastur(1.0), ww) / ww - 1.0) < 10 * s);
  }
}

TEST_CASE("moments") {
  CHECK(moment(example_discrete(), 1) == doctest::Approx(-1.0 / 6).epsilon(1e-14));
  CHECK(moment(semicircle(0, 1), 2) == doctest::Approx(1.0));
  CHECK(moment(marchenko_pastur(1.0), 2) == doctest::Approx(2.0));
  // Oracle: Simpson quadrature of t^2 dMP_1.
  std::function<double(double)> f = [](double th) {
    const double t = 2.0 + 2.0 * std::sin(th);
    return t * std::sqrt(std::max(0.0, (4.0 - t) * t)) / (2 * std::numbers::pi) * 2.0 * std::cos(th);
  };
  CHECK(oracle::simpson(f, -std::numbers::pi / 2, std::numbers::pi / 2) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(moment(marchenko_pastur(1.0), 4) == doctest::Approx(14.0));
  CHECK(moment(semicircle(1.0, 2.0), 4) == doctest::Approx(1 + 6 * 2 + 2 * 4));
  CHECK_THROWS_AS(moment(cauchy_distribution(0, 1), 1), Error);
  CHECK(moment(cauchy_distribution(0, 1), 0) == 1.0);
}

TEST_CASE("Jacobi parameters") {
  const JacobiParams p = jacobi_params(point_mass(2.0));
  CHECK(p.beta0 == 2.0);
  CHECK(p.gamma0 == 0.0);
  CHECK_FALSE(p.beta1.has_value());
  const JacobiParams s = jacobi_params(semicircle(0, 1));
  CHECK(s.beta0 == doctest::Approx(0.0));
  CHECK(s.gamma0 == doctest::Approx(1.0));
  CHECK(*s.beta1 == doctest::Approx(0.0));
  CHECK(*s.gamma1 == doctest::Approx(1.0));
  const JacobiParams mp = jacobi_params(marchenko_pastur(1.0));
  CHECK(mp.beta0 == doctest::Approx(1.0));
  CHECK(mp.gamma0 == doctest::Approx(1.0));
  CHECK(*mp.beta1 == doctest::Approx(2.0));
  CHECK(*mp.gamma1 == doctest::Approx(1.0));
  CHECK_THROWS_AS(jacobi_params(cauchy_distribution(0, 1)), Error);
}

TEST_CASE("Jacobi parameters match Gram-Schmidt on random discrete measures") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 3 + trial % 5;
    std::vector<double> x(n);
    for (auto& v : x) v = u(rng);
    std::sort(x.begin(), x.end());
    const auto w = oracle::random_weights(rng, n);
    std::vector<std::pair<double, double>> atoms;
    for (std::size_t k = 0; k < n; ++k) atoms.emplace_back(x[k], w[k]);
    const JacobiParams p = jacobi_params(discrete(atoms));
    const oracle::Jacobi o = oracle::gram_schmidt_jacobi(x, w);
    CHECK(std::abs(p.beta0 - o.b0) < 1e-10);
    CHECK(std::abs(p.gamma0 - o.g0) < 1e-10);
    CHECK(std::abs(*p.beta1 - o.b1) < 1e-10);
    CHECK(std::abs(*p.gamma1 - o.g1) < 1e-10);
  }
}

TEST_CASE("empirical spectrum equals the uniform discrete measure exactly") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  std::vector<double> ev(500);
  for (auto& v : ev) v = nd(rng);
  const Measure e = EmpiricalSpectrum::from_samples(ev);
  std::sort(ev.begin(), ev.end());
  std::vector<std::pair<double, double>> atoms;
  for (double v : ev) atoms.emplace_back(v, 1.0 / 500);
  const Measure d = discrete(atoms);
  for (C z : upper_grid()) CHECK(cauchy_transform(e, z) == cauchy_transform(d, z));
}

TEST_CASE("Stieltjes inversion") {
  std::vector<double> xs;
  std::vector<C> g;
  for (int k = 0; k <= 4000; ++k) {
    xs.push_back(-2.0 + k * 1e-3);
    g.push_back(cauchy_transform(point_mass(0.0), C(xs.back(), 0.01)));
  }
  const double expect = 2.0 / std::numbers::pi * std::atan(1.0 / 0.01);
  CHECK(stieltjes_invert(xs, g, -1, 1) == doctest::Approx(expect).epsilon(1e-5));
  CHECK(stieltjes_invert(xs, g, -1, 1) == doctest::Approx(0.9937).epsilon(1e-4));
  CHECK(stieltjes_invert(xs, g, 1, 2) <= 0.004);
  CHECK_THROWS_AS(stieltjes_invert(xs, g, 1, 3), Error);

  std::vector<C> gs;
  for (double x : xs) gs.push_back(cauchy_transform(semicircle(0, 1), C(x, 0.01)));
  CHECK(stieltjes_invert(xs, gs, -1.5, 0.3) == doctest::Approx(stieltjes_invert(xs, gs, -0.3, 1.5)).epsilon(1e-12));

  std::vector<double> bad = xs;
  bad[10] += 1e-4;
  CHECK_THROWS_AS(stieltjes_invert(bad, g, -1, 1), Error);
}

TEST_CASE("Stieltjes inversion recovers atom weights") {
  const Measure m = example_discrete();
  std::vector<double> xs;
  std::vector<C> g;
  for (int k = 0; k <= 30000; ++k) {
    xs.push_back(-1.5 + k * 1e-4);
    g.push_back(cauchy_transform(m, C(xs.back(), 1e-3)));
  }
  CHECK(std::abs(stieltjes_invert(xs, g, -1.05, -0.95) - 0.5) < 2e-2);
  CHECK(std::abs(stieltjes_invert(xs, g, -0.05, 0.05) - 1.0 / 6) < 2e-2);
  CHECK(std::abs(stieltjes_invert(xs, g, 0.95, 1.05) - 1.0 / 3) < 2e-2);
}

TEST_CASE("grid density invariants") {
  CHECK_THROWS_AS(GridDensity::create(0.0, 0.5, {1.0, -0.1, 1.1}), Error);
  CHECK_THROWS_AS(GridDensity::create(0.0, 0.5, {1.0, 1.0, 1.0}), Error);
  const GridDensity d = GridDensity::create(0.0, 0.5, {1.0, 0.5, 0.5});
  CHECK(d.mass() == doctest::Approx(1.0));
}

TEST_CASE("interval mass") {
  CHECK(interval_mass(std::get<AnalyticMeasure>(semicircle(0, 1).rep()), -2, 2) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(interval_mass(std::get<AnalyticMeasure>(semicircle(0, 1).rep()), -2, 0) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(interval_mass(std::get<AnalyticMeasure>(cauchy_distribution(0, 1).rep()), -1, 1) == doctest::Approx(0.5));
  CHECK(interval_mass(std::get<AnalyticMeasure>(marchenko_pastur(0.5).rep()), -0.05, 0.05) == doctest::Approx(0.5));
}

TEST_CASE("constructors validate") {
  CHECK_THROWS_AS(discrete({{0.0, 0.5}, {0.0, 0.5}}), Error);
  CHECK_THROWS_AS(discrete({{0.0, 0.5}, {1.0, 0.4}}), Error);
  CHECK_THROWS_AS(semicircle(0.0, 0.0), Error);
  CHECK_THROWS_AS(marchenko_pastur(-1.0), Error);
  CHECK_THROWS_AS(EmpiricalSpectrum::from_samples({}), Error);
}
