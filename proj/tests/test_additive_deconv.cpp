#include <doctest.h>

#include <cmath>
#include <random>

#include "freedeconv/additive_deconv.hpp"
#include "freedeconv/forward_conv.hpp"
#include "oracles.hpp"

using namespace freedeconv;
using C = std::complex<double>;

namespace {

Measure example_discrete() { return discrete({{-1.0, 0.5}, {0.0, 1.0 / 6}, {1.0, 1.0 / 3}}); }

FixedPointConfig tight() {
  FixedPointConfig cfg;
  cfg.tol = 1e-12;
  cfg.max_iter = 1000;
  return cfg;
}

// Exact F of a discrete measure.
C exact_F(const std::vector<double>& x, const std::vector<double>& w, C z) { return 1.0 / oracle::discrete_G(x, w, z); }

const std::vector<double> kX = {-1.0, 0.0, 1.0};
const std::vector<double> kW = {0.5, 1.0 / 6, 1.0 / 3};

}  // namespace

TEST_CASE("threshold values") {
  CHECK(threshold(AdditiveProblem::create(semicircle(0, 1), semicircle(0, 2))) == doctest::Approx(2.828427).epsilon(1e-6));
  CHECK(threshold(AdditiveProblem::create(point_mass(0.4), semicircle(0, 2))) == 0.0);
  CHECK(threshold(AdditiveProblem::create(example_discrete(), semicircle(0, 2))) ==
        doctest::Approx(2 * std::sqrt(2.0) * std::sqrt(29.0 / 36)));
  CHECK_THROWS_AS(AdditiveProblem::create(cauchy_distribution(0, 1), semicircle(0, 1)), Error);
}

TEST_CASE("point noise") {
  const AdditiveProblem p = AdditiveProblem::create(point_mass(0.5), example_discrete());
  const C z(0.2, 0.3);
  const SubordinationResult r = subordinate(p, z);
  CHECK(std::abs(r.w3 - (z + 0.5)) < 1e-15);
  CHECK(std::abs(r.F2 - f_transform(example_discrete(), z + 0.5)) < 1e-15);
}

TEST_CASE("semicircle self-deconvolution") {
  const AdditiveProblem p = AdditiveProblem::create(semicircle(0, 1), semicircle(0, 2));
  const SubordinationResult r = subordinate(p, C(0, 3), tight());
  CHECK(std::abs(r.F2 - C(0, 3.302776)) < 1e-6);
  CHECK(std::abs(r.F2 - f_transform(semicircle(0, 1), C(0, 3))) < 1e-10);
}

TEST_CASE("below threshold is rejected") {
  const AdditiveProblem p = AdditiveProblem::create(semicircle(0, 1), semicircle(0, 2));
  CHECK_THROWS_AS(subordinate(p, C(0, 2.8)), Error);
  try {
    subordinate(p, C(0, 2 * std::sqrt(2.0)));
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::BelowThreshold);
  }
}

TEST_CASE("discrete round trip through the forward oracle") {
  const Measure m1 = semicircle(0, 1);
  const AdditiveProblem p = AdditiveProblem::create(m1, free_additive_convolution(m1, example_discrete(), tight()));
  for (double x : {-2.0, 0.0, 2.0}) {
    const C z(x, 3.0);
    const SubordinationResult r = subordinate(p, z, tight());
    CHECK(std::abs(r.F2 - exact_F(kX, kW, z)) < 1e-6);
  }
}

TEST_CASE("subordination invariants") {
  const FixedPointConfig cfg = tight();
  const Measure m1 = discrete({{-0.5, 0.3}, {0.2, 0.3}, {1.1, 0.4}});
  const AdditiveProblem p = AdditiveProblem::create(m1, free_additive_convolution(m1, marchenko_pastur(0.8), cfg));
  const double var1 = variance(m1), thr = threshold(p);
  for (double x : {-3.0, -0.5, 0.0, 1.0, 4.0})
    for (double y : {thr + 0.01, thr + 1.0, 3 * thr}) {
      const C z(x, y);
      const SubordinationResult r = subordinate(p, z, cfg);
      const double s = p.shift();
      auto h1c = [&](C w) { return h_transform(m1, w + s) - s; };
      auto f3c = [&](C w) { return f_transform(p.observed(), w + s); };
      const C w3c = r.w3 - s;
      CHECK(std::abs(h1c(f3c(w3c) + w3c - z) + z - w3c) < cfg.tol * 10);
      CHECK(r.w3.imag() > 0.75 * y);
      CHECK(r.w1.imag() >= 0.5 * y);
      CHECK(std::abs(w3c - z) <= 2 * var1 / y * (1 + 1e-9));
      CHECK(std::abs((r.w1 - r.w3) - (r.F2 - z)) < 10 * cfg.tol);
      CHECK(std::abs(f_transform(m1, r.w1) - r.F2) < 1e-8);
      CHECK(r.F2.imag() >= y);
    }
}

TEST_CASE("scan_line with point noise is exact") {
  const AdditiveProblem p = AdditiveProblem::create(point_mass(0.0), example_discrete());
  const UniformGrid xs = UniformGrid::from_range(-2, 2, 0.1);
  const LineScan s = scan_line(p, 0.5, xs);
  for (std::size_t i = 0; i < xs.size(); ++i) CHECK(s.F2[i] == f_transform(example_discrete(), C(xs.at(i), 0.5)));
}

TEST_CASE("warm and cold scans agree") {
  const AdditiveProblem p = AdditiveProblem::create(semicircle(0, 1), semicircle(0.2, 2.5));
  const UniformGrid xs = UniformGrid::from_range(-3, 3, 0.01);
  REQUIRE(xs.size() == 601);
  const LineScan warm = scan_line(p, 3.0, xs, {}, true);
  const LineScan cold = scan_line(p, 3.0, xs, {}, false);
  double diff = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) diff = std::max(diff, std::abs(warm.F2[i] - cold.F2[i]));
  CHECK(diff < 1e-9);
  CHECK(warm.total_iters() < cold.total_iters());
  CHECK(warm.max_residual < 1e-10);
}

TEST_CASE("scan round trip of the discrete example") {
  const Measure m1 = semicircle(0, 1);
  const AdditiveProblem p = AdditiveProblem::create(m1, free_additive_convolution(m1, example_discrete(), tight()));
  const UniformGrid xs = UniformGrid::from_range(-4, 4, 0.01);
  const LineScan s = scan_line(p, 3.0, xs, tight());
  double err = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    err = std::max(err, std::abs(s.F2[i] - exact_F(kX, kW, C(xs.at(i), 3.0))));
    CHECK(s.F2[i].imag() >= 3.0);
  }
  CHECK(err < 1e-6);
  for (double v : s.smoothed_density()) CHECK(v >= 0.0);
}

TEST_CASE("random round trips") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-2, 2);
  auto random_discrete = [&](std::vector<double>& x, std::vector<double>& w) {
    const std::size_t n = 1 + rng() % 4;
    x.resize(n);
    for (auto& v : x) v = u(rng);
    std::sort(x.begin(), x.end());
    x.erase(std::unique(x.begin(), x.end()), x.end());
    w = oracle::random_weights(rng, x.size());
    std::vector<std::pair<double, double>> atoms;
    for (std::size_t k = 0; k < x.size(); ++k) atoms.emplace_back(x[k], w[k]);
    return discrete(atoms);
  };
  const FixedPointConfig cfg = tight();
  for (int trial = 0; trial < 6; ++trial) {
    std::vector<double> x1, w1, x2, w2;
    const Measure m1 = trial % 2 ? semicircle(u(rng), 0.5 + 0.25 * trial) : random_discrete(x1, w1);
    const bool mp = trial % 3 == 2;
    const Measure m2 = mp ? marchenko_pastur(1.5) : random_discrete(x2, w2);
    const AdditiveProblem p = AdditiveProblem::create(m1, free_additive_convolution(m1, m2, cfg));
    const double lambda = std::max(threshold(p) * 1.01, 0.5);
    const UniformGrid xs = UniformGrid::from_range(-4, 4, 0.05);
    const LineScan s = scan_line(p, lambda, xs, cfg);
    double err = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const C z(xs.at(i), lambda);
      const C exact = mp ? f_transform(m2, z) : exact_F(x2, w2, z);
      err = std::max(err, std::abs(s.F2[i] - exact));
    }
    CHECK(err < 1e-5);
  }
}

TEST_CASE("shift equivariance") {
  const double s = 0.75;
  const Measure m2 = discrete({{-0.4, 0.5}, {1.0, 0.5}});
  const Measure m2s = discrete({{-0.4 + s, 0.5}, {1.0 + s, 0.5}});
  const FixedPointConfig cfg = tight();
  const AdditiveProblem base = AdditiveProblem::create(semicircle(0, 1), free_additive_convolution(semicircle(0, 1), m2, cfg));
  const AdditiveProblem both =
      AdditiveProblem::create(semicircle(s, 1), free_additive_convolution(semicircle(s, 1), m2, cfg));
  const AdditiveProblem obs =
      AdditiveProblem::create(semicircle(0, 1), free_additive_convolution(semicircle(0, 1), m2s, cfg));
  for (double x : {-1.0, 0.3, 2.0}) {
    const C z(x, 3.0);
    const C f = subordinate(base, z, cfg).F2;
    CHECK(std::abs(subordinate(both, z, cfg).F2 - f) < 1e-9);
    CHECK(std::abs(subordinate(obs, z + s, cfg).F2 - f) < 1e-9);
  }
}

TEST_CASE("regularized measure certificates") {
  const double heights[] = {1.0, 10.0, 100.0};
  const AdditiveProblem trivial = AdditiveProblem::create(point_mass(0.0), example_discrete());
  CHECK_NOTHROW(regularized_measure_checks(trivial, heights));

  const AdditiveProblem p = AdditiveProblem::create(semicircle(0, 1), semicircle(0, 2));
  const RegularizedReport rep = regularized_measure_checks(p, heights, tight());
  CHECK(rep.max_identity_error < 1e-6);

  // Forward identity at 5i, computed here from the public pieces.
  const Measure mu_tilde = regularized_measure(p, tight());
  const C z(0, 5);
  const C lhs = forward_add_F(semicircle(0, 1), mu_tilde, z, tight()).F;
  const C rhs = f_transform(semicircle(0, 2), z + C(0, 2 * std::sqrt(2.0)));
  CHECK(std::abs(lhs - rhs) < 1e-6);

  const double tall[] = {10.0, 100.0, 1000.0};
  const RegularizedReport r2 = regularized_measure_checks(p, tall, tight());
  CHECK(r2.ratio_error[0] > r2.ratio_error[1]);
  CHECK(r2.ratio_error[1] > r2.ratio_error[2]);
}
