#pragma once

#include <vector>

#include "freedeconv/fixed_point.hpp"
#include "freedeconv/grid.hpp"
#include "freedeconv/measures.hpp"

namespace freedeconv {

struct ForwardAddResult {
  Complex F;   // F of m1 boxplus m2 at z
  Complex w2;  // subordination point of m2
  Complex w1;  // subordination point of m1
  int iters = 0;
  double residual = 0.0;
};

/// F_{m1 boxplus m2}(z) through the fixed point w2 = z - h1(z - h2(w2)), h = w - F.
ForwardAddResult forward_add_F(const Measure& m1, const Measure& m2, Complex z, const FixedPointConfig& cfg = {});

struct ForwardMulResult {
  Complex eta;  // eta of m1 boxtimes m2 at w
  Complex w2;
  int iters = 0;
  double residual = 0.0;
};

/// eta_{m1 boxtimes m2}(w) through w2 = w H1(H2(w2) w), H(u) = h(1/u).
/// m1 must live on [0, inf).
ForwardMulResult forward_mul_eta(const Measure& m1, const Measure& m2, Complex w, const FixedPointConfig& cfg = {});

enum class ConvolutionMode { Additive, Multiplicative };

/// Density samples -Im G(x + iy)/pi of the convolution. Not renormalized: mass
/// outside the grid is lost, so this is not a GridDensity.
struct DensitySamples {
  double x0 = 0.0;
  double step = 1.0;
  std::vector<double> values;
  std::vector<int> iters;

  double position(std::size_t i) const { return x0 + static_cast<double>(i) * step; }
  double mass() const;
};

DensitySamples forward_density(const Measure& m1, const Measure& m2, ConvolutionMode mode, const UniformGrid& grid,
                               double y, const FixedPointConfig& cfg = {});

/// Lazy measures backed by the forward evaluators (moments up to order 2).
Measure free_additive_convolution(const Measure& m1, const Measure& m2, const FixedPointConfig& cfg = {});
Measure free_multiplicative_convolution(const Measure& m1, const Measure& m2, const FixedPointConfig& cfg = {});

}  // namespace freedeconv
