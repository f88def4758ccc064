#include "freedeconv/grid.hpp"

#include <cmath>
#include <string>

#include "freedeconv/errors.hpp"

namespace freedeconv {

UniformGrid UniformGrid::from_range(double a, double b, double step) {
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(step))
    fail(ErrorKind::InvalidArgument, "grid bounds must be finite");
  if (!(step > 0.0)) fail(ErrorKind::InvalidArgument, "grid step must be positive");
  if (!(a < b)) fail(ErrorKind::InvalidArgument, "grid start must be below stop");
  const double n = std::floor((b - a) / step + 1e-9);
  if (n > 1e8) fail(ErrorKind::InvalidArgument, "grid has too many points");
  return UniformGrid{a, step, static_cast<std::size_t>(n) + 1};
}

UniformGrid UniformGrid::from_points(std::span<const double> xs) {
  if (xs.size() < 2) fail(ErrorKind::NonUniformGrid, "grid needs at least two points");
  if (!is_uniform(xs)) fail(ErrorKind::NonUniformGrid, "grid spacing is not uniform");
  const double step = (xs.back() - xs.front()) / static_cast<double>(xs.size() - 1);
  return UniformGrid{xs.front(), step, xs.size()};
}

std::vector<double> UniformGrid::points() const {
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = at(i);
  return out;
}

bool is_uniform(std::span<const double> xs, double rel_tol) {
  if (xs.size() < 2) return false;
  const double step = (xs.back() - xs.front()) / static_cast<double>(xs.size() - 1);
  if (!(step > 0.0)) return false;
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (std::abs((xs[i] - xs[i - 1]) - step) > rel_tol * step + 1e-12 * std::abs(xs[i])) return false;
  }
  return true;
}

}  // namespace freedeconv
