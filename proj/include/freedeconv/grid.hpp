#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace freedeconv {

// Uniform real grid start, start + step, ..., count points.
struct UniformGrid {
  double start = 0.0;
  double step = 1.0;
  std::size_t count = 0;

  static UniformGrid from_range(double a, double b, double step);
  static UniformGrid from_points(std::span<const double> xs);

  double at(std::size_t i) const { return start + static_cast<double>(i) * step; }
  double stop() const { return at(count == 0 ? 0 : count - 1); }
  std::size_t size() const { return count; }
  std::vector<double> points() const;
};

bool is_uniform(std::span<const double> xs, double rel_tol = 1e-9);

}  // namespace freedeconv
