#pragma once

#include <complex>
#include <vector>

#include "freedeconv/grid.hpp"

namespace freedeconv {

// Values of F_{mu2}(x + i lambda) on a horizontal line.
struct LineScan {
  double lambda = 0.0;
  UniformGrid xs;
  std::vector<std::complex<double>> F2;
  std::vector<int> iters;
  double max_residual = 0.0;

  long total_iters() const {
    long s = 0;
    for (int k : iters) s += k;
    return s;
  }
  // Density samples -Im(1/F2)/pi of mu2 * Cauchy(lambda).
  std::vector<double> smoothed_density() const;
};

}  // namespace freedeconv
