#include "freedeconv/matrix_valued.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <cmath>
#include <sstream>

namespace freedeconv {

namespace {

constexpr double kThresholdMargin = 1e-9;
constexpr double kBoundSlack = 1e-8;
constexpr double kSingularRcond = 1e-14;

using Lu = Eigen::PartialPivLU<CMatrix>;

Lu factor(const CMatrix& M, ErrorKind kind, const char* what) {
  Lu lu(M);
  if (!(lu.rcond() > kSingularRcond)) fail(kind, std::string(what) + " is numerically singular");
  return lu;
}

CMatrix inverse(const CMatrix& M, ErrorKind kind, const char* what) { return factor(M, kind, what).inverse(); }

// partial_trace(L * R) without forming the full product.
CMatrix partial_trace_product(const CMatrix& L, const CMatrix& R, Eigen::Index d, Eigen::Index N) {
  CMatrix out = CMatrix::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) {
      std::complex<double> s = 0.0;
      for (Eigen::Index k = 0; k < N; ++k) s += L.row(i * N + k).transpose().cwiseProduct(R.col(j * N + k)).sum();
      out(i, j) = s / double(N);
    }
  return out;
}

// (x (x) I_N) * A, block by block.
CMatrix amplified_times(const CMatrix& x, const CMatrix& A, Eigen::Index N) {
  const Eigen::Index d = x.rows();
  CMatrix out = CMatrix::Zero(d * N, d * N);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index k = 0; k < d; ++k)
      if (x(i, k) != 0.0) out.middleRows(i * N, N) += x(i, k) * A.middleRows(k * N, N);
  return out;
}

bool is_hermitian(const CMatrix& b, double tol) { return (b - b.adjoint()).cwiseAbs().maxCoeff() <= tol; }

// E[(b (x) I - A)^{-1}] without domain checks.
CMatrix resolvent(const MatrixRealization& m, const CMatrix& b) {
  const CMatrix M = amplify(b, m.N()) - m.A();
  return partial_trace(inverse(M, ErrorKind::SingularResolvent, "b (x) I - A"), m.d(), m.N());
}

CMatrix f_raw(const MatrixRealization& m, const CMatrix& b) {
  return inverse(resolvent(m, b), ErrorKind::SingularResolvent, "G(b)");
}

CMatrix h_raw(const MatrixRealization& m, const CMatrix& b) { return b - f_raw(m, b); }

// E[(I - x A)^{-1}]; equals G(x^{-1}) x^{-1} when x is invertible.
CMatrix resolvent_at_inverse(const MatrixRealization& m, const CMatrix& x) {
  const Eigen::Index n = m.d() * m.N();
  const CMatrix M = CMatrix::Identity(n, n) - amplified_times(x, m.A(), m.N());
  return partial_trace(inverse(M, ErrorKind::SingularResolvent, "I - x A"), m.d(), m.N());
}

// H(x) = E[A (I - x A)^{-1}] E[(I - x A)^{-1}]^{-1}.
CMatrix H_raw(const MatrixRealization& m, const CMatrix& x) {
  const Eigen::Index n = m.d() * m.N();
  const CMatrix M = CMatrix::Identity(n, n) - amplified_times(x, m.A(), m.N());
  const CMatrix R = inverse(M, ErrorKind::SingularResolvent, "I - x A");
  const CMatrix P = partial_trace(R, m.d(), m.N());
  const CMatrix Q = partial_trace_product(m.A(), R, m.d(), m.N());
  return Q * inverse(P, ErrorKind::SingularResolvent, "E[(I - x A)^{-1}]");
}

MatrixRealization shifted(const MatrixRealization& m, const CMatrix& s) {
  return MatrixRealization::create(m.d(), m.N(), m.A() - amplify(s, m.N()));
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace

CMatrix imag_part(const CMatrix& b) { return (b - b.adjoint()) / std::complex<double>(0.0, 2.0); }

double operator_norm(const CMatrix& b) {
  if (b.size() == 0) return 0.0;
  return Eigen::JacobiSVD<CMatrix>(b).singularValues()(0);
}

double smallest_singular_value(const CMatrix& b) {
  const Eigen::VectorXd s = Eigen::JacobiSVD<CMatrix>(b).singularValues();
  return s(s.size() - 1);
}

double min_eigenvalue(const CMatrix& h) {
  const CMatrix sym = 0.5 * (h + h.adjoint());
  return Eigen::SelfAdjointEigenSolver<CMatrix>(sym, Eigen::EigenvaluesOnly).eigenvalues()(0);
}

MatrixRealization MatrixRealization::create(Eigen::Index d, Eigen::Index N, CMatrix A) {
  if (d < 1 || N < 1) fail(ErrorKind::InvalidArgument, "d and N must be at least 1");
  if (A.rows() != d * N || A.cols() != d * N)
    fail(ErrorKind::InvalidArgument, "A must be dN x dN (" + std::to_string(d * N) + ")");
  if (!A.allFinite()) fail(ErrorKind::InvalidArgument, "A has non-finite entries");
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  if (!is_hermitian(A, 1e-12 * scale)) fail(ErrorKind::InvalidArgument, "A is not self-adjoint");
  MatrixRealization m;
  m.d_ = d;
  m.N_ = N;
  m.A_ = 0.5 * (A + A.adjoint());
  m.stats_ = ov_stats(m);
  return m;
}

MatrixRealization MatrixRealization::constant(Eigen::Index d, Eigen::Index N, double a) {
  return create(d, N, CMatrix::Identity(d * N, d * N) * a);
}

OVStats ov_stats(const MatrixRealization& m) {
  OVStats s;
  s.mean = partial_trace(m.A(), m.d(), m.N());
  const CMatrix second = partial_trace_product(m.A(), m.A(), m.d(), m.N());
  s.variance_norm = operator_norm(second - s.mean * s.mean);
  const Eigen::VectorXd ev =
      Eigen::SelfAdjointEigenSolver<CMatrix>(m.A(), Eigen::EigenvaluesOnly).eigenvalues();
  s.bound = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
  s.alpha = operator_norm(s.mean);
  s.alpha_star = min_eigenvalue(s.mean);
  return s;
}

CMatrix ov_cauchy(const MatrixRealization& m, const CMatrix& b) {
  if (b.rows() != m.d() || b.cols() != m.d()) fail(ErrorKind::InvalidArgument, "b must be d x d");
  const double R = m.stats().bound;
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  if (is_hermitian(b, 1e-14 * scale)) {
    const CMatrix sym = 0.5 * (b + b.adjoint());
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<CMatrix>(sym, Eigen::EigenvaluesOnly).eigenvalues();
    if (!(ev(0) > R || ev(ev.size() - 1) < -R))
      fail(ErrorKind::Domain, "self-adjoint b must have spectrum outside [-||A||, ||A||]");
    return resolvent(m, sym);
  }
  if (!(min_eigenvalue(imag_part(b)) > 0.0)) fail(ErrorKind::Domain, "ov_cauchy needs Im b positive definite");
  return resolvent(m, b);
}

CMatrix ov_f(const MatrixRealization& m, const CMatrix& b) {
  return inverse(ov_cauchy(m, b), ErrorKind::SingularResolvent, "G(b)");
}

CMatrix ov_h(const MatrixRealization& m, const CMatrix& b) {
  if (b.rows() != m.d() || b.cols() != m.d()) fail(ErrorKind::InvalidArgument, "b must be d x d");
  const double s_inf = min_eigenvalue(imag_part(b));
  if (!(s_inf > 0.0)) fail(ErrorKind::Domain, "ov_h needs Im b positive definite");
  const CMatrix h = h_raw(m, b);
  const double dev = operator_norm(h - m.stats().mean);
  const double bound = 4.0 * m.stats().variance_norm / s_inf;
  if (dev > bound + kBoundSlack)
    fail(ErrorKind::BoundViolation, "||h(b) - mu(X)|| = " + num(dev) + " exceeds " + num(bound));
  return h;
}

CMatrix ov_H(const MatrixRealization& m, const CMatrix& x) {
  if (x.rows() != m.d() || x.cols() != m.d()) fail(ErrorKind::InvalidArgument, "x must be d x d");
  const double nx = operator_norm(x);
  const double R = m.stats().bound;
  if (!(nx * R < 1.0)) fail(ErrorKind::Domain, "ov_H needs ||x|| < 1/||A||");
  const CMatrix H = H_raw(m, x);
  const double dev = operator_norm(H - m.stats().mean);
  const double bound = nx == 0.0 ? 0.0 : m.stats().variance_norm / (1.0 / nx - R);
  if (dev > bound + kBoundSlack)
    fail(ErrorKind::BoundViolation, "||H(x) - mu(X)|| = " + num(dev) + " exceeds " + num(bound));
  return H;
}

double ov_add_threshold(const MatrixRealization& m1) {
  return 4.0 * std::sqrt(2.0) * std::sqrt(m1.stats().variance_norm);
}

double ov_mul_threshold(const MatrixRealization& m1, const MatrixRealization& m3) {
  const OVStats& s1 = m1.stats();
  const OVStats& s3 = m3.stats();
  if (!(s1.alpha_star > 0.0)) fail(ErrorKind::Domain, "mu1(X) must be positive definite");
  const double a = 2.0 / s1.alpha_star;
  const double sigma3 = std::sqrt(s3.variance_norm);
  const double K1 = s1.bound + 2.0 * s1.variance_norm / s1.alpha_star;
  const double K3 = std::max(a * (sigma3 + s3.alpha) * K1, s3.bound + sigma3);
  return a * K3;
}

OVResult ov_deconv_add(const MatrixRealization& m1, const MatrixRealization& m3, const CMatrix& b,
                       const FixedPointConfig& cfg) {
  cfg.validate();
  if (m1.d() != m3.d()) fail(ErrorKind::InvalidArgument, "m1 and m3 must share d");
  if (b.rows() != m1.d() || b.cols() != m1.d()) fail(ErrorKind::InvalidArgument, "b must be d x d");
  const CMatrix imb = imag_part(b);
  const double s_inf = min_eigenvalue(imb);
  const double K = ov_add_threshold(m1);
  if (!(s_inf > K + kThresholdMargin))
    fail(ErrorKind::BelowThreshold, "sigma_inf(Im b) = " + num(s_inf) + " is not above " + num(K));
  const CMatrix s = m1.stats().mean;
  const MatrixRealization c1 = shifted(m1, s);
  const MatrixRealization c3 = shifted(m3, s);
  const CMatrix floor = 0.75 * imb;
  auto T = [&](const CMatrix& r) -> CMatrix { return h_raw(c1, f_raw(c3, r) + r - b) + b; };

  OVResult out;
  CMatrix r = b;
  bool close = false;
  for (int n = 1; n <= cfg.max_iter; ++n) {
    const CMatrix next = T(r);
    out.iters = n;
    if (!next.allFinite()) fail(ErrorKind::SingularIterate, "iterate is not finite");
    if (!(min_eigenvalue(imag_part(next) - floor) > 0.0))
      fail(ErrorKind::DomainEscape, "iterate left {Im r > 3/4 Im b}");
    const double step = (next - r).norm();
    const double tol = effective_tol(cfg.tol, next.norm());
    if (close && step < tol) {
      out.residual = step;
      out.w3 = r + s;
      out.F2 = f_raw(c3, r);
      out.interior_margin = min_eigenvalue(imag_part(r)) - 0.75 * s_inf;
      if (!(out.interior_margin > 0.0)) fail(ErrorKind::DomainEscape, "fixed point is not interior");
      return out;
    }
    close = step < tol;
    r = next;
  }
  fail(ErrorKind::NonConvergence, "operator-valued additive iteration did not converge in " +
                                      std::to_string(cfg.max_iter) + " steps");
}

OVResult ov_deconv_mul(const MatrixRealization& m1, const MatrixRealization& m3, const CMatrix& b,
                       const FixedPointConfig& cfg) {
  cfg.validate();
  if (m1.d() != m3.d()) fail(ErrorKind::InvalidArgument, "m1 and m3 must share d");
  if (b.rows() != m1.d() || b.cols() != m1.d()) fail(ErrorKind::InvalidArgument, "b must be d x d");
  const double K = ov_mul_threshold(m1, m3);
  const double smin = smallest_singular_value(b);
  if (!(smin > K * (1.0 + kThresholdMargin)))
    fail(ErrorKind::BelowThreshold, "smallest singular value of b = " + num(smin) + " is not above K = " + num(K));
  const double radius = 2.0 / m1.stats().alpha_star;
  const CMatrix binv = inverse(b, ErrorKind::SingularIterate, "b");
  auto T = [&](const CMatrix& w) -> CMatrix {
    const CMatrix inner = b * w * H_raw(m3, w) * w;
    return binv * inverse(H_raw(m1, inner), ErrorKind::SingularIterate, "H1 at an iterate");
  };

  OVResult out;
  CMatrix w = binv * inverse(m1.stats().mean, ErrorKind::SingularIterate, "mu1(X)");
  bool close = false;
  for (int n = 1; n <= cfg.max_iter; ++n) {
    const CMatrix next = T(w);
    out.iters = n;
    if (!next.allFinite()) fail(ErrorKind::SingularIterate, "iterate is not finite");
    const double conf = operator_norm(b * next);
    if (!(conf < radius)) fail(ErrorKind::DomainEscape, "iterate left b^{-1} D(0, 2/alpha1*)");
    const double step = (next - w).norm();
    const double tol = effective_tol(cfg.tol, next.norm());
    if (close && step < tol) {
      out.residual = step;
      out.w3 = w;
      out.F2 = b * inverse(resolvent_at_inverse(m3, w), ErrorKind::SingularIterate, "E[(I - w3 A3)^{-1}]");
      out.interior_margin = radius - operator_norm(b * w);
      return out;
    }
    close = step < tol;
    w = next;
  }
  fail(ErrorKind::NonConvergence, "operator-valued multiplicative iteration did not converge in " +
                                      std::to_string(cfg.max_iter) + " steps");
}

}  // namespace freedeconv
