#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "freedeconv/grid.hpp"
#include "freedeconv/line_scan.hpp"
#include "freedeconv/measures.hpp"

namespace freedeconv {

// Discretized K U = V for the Cauchy kernel of width lambda.
struct FredholmSystem {
  Eigen::MatrixXd kernel;  // n x m
  Eigen::VectorXd rhs;     // n
  double step = 1.0;       // solution grid step
  UniformGrid xs_obs;
  UniformGrid ys_sol;
  double lambda = 0.0;
};

/// Kernel entries (1/pi) lambda / ((x - y)^2 + lambda^2) * step.
FredholmSystem build_system(const LineScan& scan, const UniformGrid& ys_sol);

/// Euclidean projection onto {u >= 0, step * sum(u) = 1}.
template <class Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> project_scaled_simplex(const Eigen::MatrixBase<Derived>& v,
                                                                                  typename Derived::Scalar step) {
  using Scalar = typename Derived::Scalar;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index m = v.size();
  const Scalar target = Scalar(1) / step;
  Vec sorted = v;
  std::sort(sorted.data(), sorted.data() + m, [](Scalar a, Scalar b) { return a > b; });
  Scalar running = 0, tau = 0;
  for (Eigen::Index k = 0; k < m; ++k) {
    running += sorted[k];
    const Scalar candidate = (running - target) / Scalar(k + 1);
    if (k + 1 == m || sorted[k + 1] <= candidate) {
      tau = candidate;
      break;
    }
  }
  return (v.array() - tau).cwiseMax(Scalar(0)).matrix();
}

struct QPConfig {
  int max_iter = 20000;
  double tol = 1e-8;  // projected-gradient norm
  bool polish = true;  // exact active-set finish
  int polish_every = 500;
};

struct QPSolution {
  Eigen::VectorXd U;
  double objective = 0.0;
  double alpha = 0.0;
  int iterations = 0;
  double kkt_residual = 0.0;
  double lipschitz = 0.0;
  bool converged = false;
  std::vector<double> objective_trace;  // one entry per accelerated iteration
};

/// min ||K U - V||^2 + alpha^2 ||U||^2 over the scaled simplex.
QPSolution solve_qp(const FredholmSystem& sys, double alpha, const QPConfig& cfg = {});

double qp_objective(const FredholmSystem& sys, const Eigen::VectorXd& U, double alpha);
/// ||U - P(U - grad f(U) / L)||.
double kkt_residual(const FredholmSystem& sys, const Eigen::VectorXd& U, double alpha, double L);
/// Largest eigenvalue of 2 (K^T K + alpha^2 I) by power iteration.
double lipschitz_constant(const FredholmSystem& sys, double alpha);

struct LCurvePoint {
  double alpha;
  double residual;
  double solution_norm;
};

struct AlphaSelection {
  double alpha = 1e-3;
  double eta = 0.0;
  bool fallback = false;
  std::string warning;
  std::vector<LCurvePoint> trace;
};

/// Discrepancy principle: ||K U(alpha) - V|| ~ 1.1 eta, alpha in [1e-8, 1].
/// eta defaults to the residual of an unconstrained ridge solve at alpha = 1e-4.
AlphaSelection choose_alpha(const FredholmSystem& sys, std::optional<double> noise_level, const QPConfig& cfg = {});

/// Residual of the unconstrained ridge solve at alpha.
double ridge_residual(const FredholmSystem& sys, double alpha);

struct CauchyDeconvolution {
  GridDensity density;
  QPSolution qp;
  AlphaSelection selection;  // filled when alpha was chosen automatically
  double lambda = 0.0;
  double alpha = 0.0;
  double residual = 0.0;  // ||K U - V||
};

CauchyDeconvolution deconvolve_cauchy(const LineScan& scan, const UniformGrid& ys_sol, std::optional<double> alpha,
                                      const QPConfig& cfg = {});

}  // namespace freedeconv
