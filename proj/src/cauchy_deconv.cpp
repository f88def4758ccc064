#include "freedeconv/cauchy_deconv.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "freedeconv/errors.hpp"

namespace freedeconv {

namespace {

struct Quadratic {
  Eigen::MatrixXd Q;  // K^T K
  Eigen::VectorXd c;  // K^T V
  double vv = 0.0;    // V^T V
  double alpha2 = 0.0;
  double step = 1.0;

  Eigen::VectorXd gradient(const Eigen::VectorXd& U, const Eigen::VectorXd& QU) const {
    return 2.0 * (QU - c) + 2.0 * alpha2 * U;
  }
  double objective(const Eigen::VectorXd& U, const Eigen::VectorXd& QU) const {
    return U.dot(QU) - 2.0 * c.dot(U) + vv + alpha2 * U.squaredNorm();
  }
};

Quadratic make_quadratic(const FredholmSystem& sys, double alpha) {
  Quadratic q;
  q.Q.noalias() = sys.kernel.transpose() * sys.kernel;
  q.c.noalias() = sys.kernel.transpose() * sys.rhs;
  q.vv = sys.rhs.squaredNorm();
  q.alpha2 = alpha * alpha;
  q.step = sys.step;
  return q;
}

double power_iteration(const Eigen::MatrixXd& Q, double alpha2) {
  const Eigen::Index m = Q.rows();
  Eigen::VectorXd v = Eigen::VectorXd::Ones(m) / std::sqrt(static_cast<double>(m));
  double lambda = 0.0;
  for (int it = 0; it < 1000; ++it) {
    Eigen::VectorXd w = Q * v;
    const double next = v.dot(w);
    const double nrm = w.norm();
    if (nrm == 0.0) return 2.0 * alpha2;
    v = w / nrm;
    if (std::abs(next - lambda) <= 1e-12 * std::abs(next)) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return 2.0 * (lambda + alpha2);
}

double kkt_of(const Quadratic& q, const Eigen::VectorXd& U, double L) {
  const Eigen::VectorXd QU = q.Q * U;
  const Eigen::VectorXd g = q.gradient(U, QU);
  return (U - project_scaled_simplex(U - g / L, q.step)).norm();
}

// Primal active-set method for min 1/2 U^T H U - g^T U, U >= 0, step * sum U = 1,
// with H = 2 (Q + alpha^2 I), g = 2c. Starts from a feasible U.
std::optional<Eigen::VectorXd> active_set(const Quadratic& q, Eigen::VectorXd U) {
  const Eigen::Index m = U.size();
  const double delta = q.step;
  const double cutoff = 1e-3 * U.maxCoeff();
  std::vector<char> free(m, 0);
  for (Eigen::Index i = 0; i < m; ++i) free[i] = U[i] > cutoff;
  {
    double s = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (!free[i]) U[i] = 0.0;
      s += U[i];
    }
    if (!(s > 0.0)) return std::nullopt;
    U *= 1.0 / (delta * s);
  }
  const double gscale = 1.0 + 2.0 * q.c.cwiseAbs().maxCoeff();
  for (int it = 0; it < 20 * m + 100; ++it) {
    std::vector<Eigen::Index> F;
    for (Eigen::Index i = 0; i < m; ++i)
      if (free[i]) F.push_back(i);
    const Eigen::Index nf = static_cast<Eigen::Index>(F.size());
    if (nf == 0) return std::nullopt;
    Eigen::MatrixXd H(nf, nf);
    Eigen::VectorXd g(nf);
    for (Eigen::Index a = 0; a < nf; ++a) {
      for (Eigen::Index b = 0; b < nf; ++b) H(a, b) = 2.0 * q.Q(F[a], F[b]);
      H(a, a) += 2.0 * q.alpha2;
      g[a] = 2.0 * q.c[F[a]];
    }
    Eigen::LLT<Eigen::MatrixXd> llt(H);
    if (llt.info() != Eigen::Success) return std::nullopt;
    const Eigen::VectorXd sa = llt.solve(g);
    const Eigen::VectorXd sb = llt.solve(Eigen::VectorXd::Ones(nf));
    const double nu = (delta * sa.sum() - 1.0) / (delta * delta * sb.sum());
    const Eigen::VectorXd u = sa - delta * nu * sb;

    double tmax = 1.0;
    Eigen::Index blocking = -1;
    for (Eigen::Index a = 0; a < nf; ++a) {
      const double cur = U[F[a]];
      const double p = u[a] - cur;
      if (u[a] < 0.0 && p < 0.0) {
        const double t = cur / -p;
        if (t < tmax) {
          tmax = t;
          blocking = F[a];
        }
      }
    }
    if (blocking < 0) {
      for (Eigen::Index a = 0; a < nf; ++a) U[F[a]] = u[a];
      const Eigen::VectorXd grad = 2.0 * (q.Q * U - q.c) + 2.0 * q.alpha2 * U;
      Eigen::Index enter = -1;
      double worst = -1e-12 * gscale;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (free[i]) continue;
        const double mu = grad[i] + delta * nu;
        if (mu < worst) {
          worst = mu;
          enter = i;
        }
      }
      if (enter < 0) return U;
      free[enter] = 1;
    } else {
      for (Eigen::Index a = 0; a < nf; ++a) U[F[a]] += tmax * (u[a] - U[F[a]]);
      U[blocking] = 0.0;
      free[blocking] = 0;
      for (Eigen::Index a = 0; a < nf; ++a)
        if (U[F[a]] <= 0.0) {
          U[F[a]] = 0.0;
          free[F[a]] = 0;
        }
    }
  }
  return std::nullopt;
}

}  // namespace

FredholmSystem build_system(const LineScan& scan, const UniformGrid& ys_sol) {
  if (scan.xs.size() < 2 || ys_sol.size() < 2) fail(ErrorKind::NonUniformGrid, "grids need at least two points");
  if (!(scan.xs.step > 0.0) || !(ys_sol.step > 0.0)) fail(ErrorKind::NonUniformGrid, "grid steps must be positive");
  if (scan.F2.size() != scan.xs.size()) fail(ErrorKind::InvalidArgument, "scan values do not match its grid");
  if (!(scan.lambda > 0.0)) fail(ErrorKind::InvalidArgument, "scan height must be positive");
  FredholmSystem sys;
  sys.lambda = scan.lambda;
  sys.step = ys_sol.step;
  sys.xs_obs = scan.xs;
  sys.ys_sol = ys_sol;
  const Eigen::Index n = static_cast<Eigen::Index>(scan.xs.size());
  const Eigen::Index m = static_cast<Eigen::Index>(ys_sol.size());
  const double lam = scan.lambda;
  sys.kernel.resize(n, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double y = ys_sol.at(static_cast<std::size_t>(j));
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d = scan.xs.at(static_cast<std::size_t>(i)) - y;
      sys.kernel(i, j) = lam / (std::numbers::pi * (d * d + lam * lam)) * sys.step;
    }
  }
  const double max_row = sys.kernel.rowwise().sum().maxCoeff();
  if (max_row > 1.0 + 1e-9) {
    std::ostringstream os;
    os << "kernel row sum " << max_row << " exceeds 1; the solution step " << sys.step << " is too coarse for lambda " << lam;
    fail(ErrorKind::InvariantViolation, os.str());
  }
  sys.rhs.resize(n);
  const std::vector<double> v = scan.smoothed_density();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(v[static_cast<std::size_t>(i)] >= 0.0)) fail(ErrorKind::InvariantViolation, "scan yields a negative density sample");
    sys.rhs[i] = v[static_cast<std::size_t>(i)];
  }
  return sys;
}

double qp_objective(const FredholmSystem& sys, const Eigen::VectorXd& U, double alpha) {
  return (sys.kernel * U - sys.rhs).squaredNorm() + alpha * alpha * U.squaredNorm();
}

double lipschitz_constant(const FredholmSystem& sys, double alpha) {
  const Eigen::MatrixXd Q = sys.kernel.transpose() * sys.kernel;
  return power_iteration(Q, alpha * alpha);
}

double kkt_residual(const FredholmSystem& sys, const Eigen::VectorXd& U, double alpha, double L) {
  const Eigen::VectorXd g = 2.0 * sys.kernel.transpose() * (sys.kernel * U - sys.rhs) + 2.0 * alpha * alpha * U;
  return (U - project_scaled_simplex(U - g / L, sys.step)).norm();
}

QPSolution solve_qp(const FredholmSystem& sys, double alpha, const QPConfig& cfg) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) fail(ErrorKind::InvalidArgument, "alpha must be positive");
  if (cfg.max_iter < 1 || !(cfg.tol > 0.0)) fail(ErrorKind::InvalidArgument, "invalid QP configuration");
  const Quadratic q = make_quadratic(sys, alpha);
  const Eigen::Index m = q.Q.rows();
  // Small safety factor over the power-iteration estimate.
  const double L = power_iteration(q.Q, q.alpha2) * (1.0 + 1e-6);

  QPSolution sol;
  sol.alpha = alpha;
  sol.lipschitz = L;
  Eigen::VectorXd U = Eigen::VectorXd::Constant(m, 1.0 / (static_cast<double>(m) * q.step));
  Eigen::VectorXd QU = q.Q * U;
  double f = q.objective(U, QU);
  Eigen::VectorXd Y = U, QY = QU;
  double t = 1.0;
  double kkt = kkt_of(q, U, L);
  int iter = 0;
  int since_polish = 0;
  while (kkt >= cfg.tol && iter < cfg.max_iter) {
    ++iter;
    ++since_polish;
    Eigen::VectorXd next = project_scaled_simplex(Y - q.gradient(Y, QY) / L, q.step);
    Eigen::VectorXd Qnext = q.Q * next;
    double fnext = q.objective(next, Qnext);
    if (fnext > f) {
      // Restart: drop momentum and take a plain projected-gradient step.
      t = 1.0;
      next = project_scaled_simplex(U - q.gradient(U, QU) / L, q.step);
      Qnext = q.Q * next;
      fnext = q.objective(next, Qnext);
      if (fnext > f) {
        next = U;
        Qnext = QU;
        fnext = f;
      }
      Y = next;
      QY = Qnext;
    } else {
      const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      const double beta = (t - 1.0) / tn;
      Y = next + beta * (next - U);
      QY = Qnext + beta * (Qnext - QU);
      t = tn;
    }
    U.swap(next);
    QU.swap(Qnext);
    f = fnext;
    sol.objective_trace.push_back(f);
    if (iter % 10 == 0) kkt = kkt_of(q, U, L);
    if (cfg.polish && since_polish >= cfg.polish_every) {
      since_polish = 0;
      if (auto exact = active_set(q, U)) {
        const Eigen::VectorXd Qe = q.Q * *exact;
        const double fe = q.objective(*exact, Qe);
        const double ke = kkt_of(q, *exact, L);
        if (fe <= f && ke < kkt) {
          U = *exact;
          QU = Qe;
          f = fe;
          kkt = ke;
          Y = U;
          QY = QU;
          t = 1.0;
          sol.objective_trace.push_back(f);
        }
      }
    }
  }
  kkt = kkt_of(q, U, L);
  if (cfg.polish && kkt >= cfg.tol * 1e-3) {
    if (auto exact = active_set(q, U)) {
      const Eigen::VectorXd Qe = q.Q * *exact;
      const double fe = q.objective(*exact, Qe);
      const double ke = kkt_of(q, *exact, L);
      if (fe <= f + 1e-15 * std::abs(f) && ke <= kkt) {
        U = *exact;
        f = fe;
        kkt = ke;
        sol.objective_trace.push_back(std::min(fe, sol.objective_trace.empty() ? fe : sol.objective_trace.back()));
      }
    }
  }
  sol.U = U;
  sol.iterations = iter;
  sol.kkt_residual = kkt;
  sol.objective = qp_objective(sys, U, alpha);
  sol.converged = kkt < cfg.tol;
  return sol;
}

double ridge_residual(const FredholmSystem& sys, double alpha) {
  Eigen::MatrixXd A = sys.kernel.transpose() * sys.kernel;
  A.diagonal().array() += alpha * alpha;
  const Eigen::VectorXd U = A.ldlt().solve(sys.kernel.transpose() * sys.rhs);
  return (sys.kernel * U - sys.rhs).norm();
}

AlphaSelection choose_alpha(const FredholmSystem& sys, std::optional<double> noise_level, const QPConfig& cfg) {
  constexpr double kLo = 1e-8, kHi = 1.0, kFallback = 1e-3;
  AlphaSelection sel;
  if (noise_level && !(*noise_level >= 0.0)) fail(ErrorKind::InvalidArgument, "noise level must be nonnegative");
  sel.eta = noise_level ? *noise_level : ridge_residual(sys, 1e-4);
  auto eval = [&](double a) {
    const QPSolution s = solve_qp(sys, a, cfg);
    const double res = (sys.kernel * s.U - sys.rhs).norm();
    sel.trace.push_back({a, res, s.U.norm()});
    return res;
  };
  if (sel.eta == 0.0) {
    sel.alpha = kLo;
    eval(kLo);
    return sel;
  }
  const double target = 1.1 * sel.eta;
  const double r_lo = eval(kLo);
  if (r_lo >= target) {
    sel.alpha = kLo;
    return sel;
  }
  const double r_hi = eval(kHi);
  if (r_hi < target) {
    sel.alpha = kFallback;
    sel.fallback = true;
    sel.warning = "alpha selection: discrepancy target not bracketed on [1e-8, 1]; using fallback alpha = 1e-3";
    return sel;
  }
  double lo = std::log(kLo), hi = std::log(kHi);
  double best = kLo, best_gap = INFINITY;
  for (int it = 0; it < 40 && hi - lo > 1e-3; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double a = std::exp(mid);
    const double r = eval(a);
    const double gap = std::abs(r - target);
    if (gap < best_gap) {
      best_gap = gap;
      best = a;
    }
    if (gap <= 0.01 * target) break;
    (r < target ? lo : hi) = mid;
  }
  sel.alpha = best;
  return sel;
}

CauchyDeconvolution deconvolve_cauchy(const LineScan& scan, const UniformGrid& ys_sol, std::optional<double> alpha,
                                      const QPConfig& cfg) {
  const FredholmSystem sys = build_system(scan, ys_sol);
  CauchyDeconvolution out{GridDensity{}, {}, {}, scan.lambda, 0.0, 0.0};
  if (alpha) {
    out.alpha = *alpha;
  } else {
    out.selection = choose_alpha(sys, std::nullopt, cfg);
    out.alpha = out.selection.alpha;
  }
  out.qp = solve_qp(sys, out.alpha, cfg);
  out.residual = (sys.kernel * out.qp.U - sys.rhs).norm();
  std::vector<double> values(out.qp.U.data(), out.qp.U.data() + out.qp.U.size());
  out.density = GridDensity::create(ys_sol.start, ys_sol.step, std::move(values));
  return out;
}

}  // namespace freedeconv
