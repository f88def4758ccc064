#pragma once

#include <Eigen/Dense>

#include "freedeconv/fixed_point.hpp"

namespace freedeconv {

using CMatrix = Eigen::MatrixXcd;

/// (id (x) tr_N / N) of a dN x dN matrix; entry (i, k) of the big index is i*N + k.
template <class Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> partial_trace(const Eigen::MatrixBase<Derived>& M,
                                                                                       Eigen::Index d, Eigen::Index N) {
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) out(i, j) = M.block(i * N, j * N, N, N).diagonal().sum() / Scalar(double(N));
  return out;
}

/// b (x) I_N.
template <class Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> amplify(const Eigen::MatrixBase<Derived>& b,
                                                                                 Eigen::Index N) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index d = b.rows();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(d * N, d * N);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) out.block(i * N, j * N, N, N).diagonal().setConstant(b(i, j));
  return out;
}

/// Imaginary part (b - b*) / (2i).
CMatrix imag_part(const CMatrix& b);
double operator_norm(const CMatrix& b);
double smallest_singular_value(const CMatrix& b);
/// Smallest eigenvalue of a Hermitian matrix.
double min_eigenvalue(const CMatrix& h);

struct OVStats {
  CMatrix mean;
  double variance_norm = 0.0;  // ||mu(X^2) - mu(X)^2||
  double bound = 0.0;          // ||A||
  double alpha = 0.0;          // ||mu(X)||
  double alpha_star = 0.0;     // inf Spec mu(X)
};

class MatrixRealization {
 public:
  static MatrixRealization create(Eigen::Index d, Eigen::Index N, CMatrix A);
  /// a (x) I_N scaled identity realization of a point mass at a*I_d.
  static MatrixRealization constant(Eigen::Index d, Eigen::Index N, double a);

  Eigen::Index d() const { return d_; }
  Eigen::Index N() const { return N_; }
  const CMatrix& A() const { return A_; }
  const OVStats& stats() const { return stats_; }

 private:
  Eigen::Index d_ = 1;
  Eigen::Index N_ = 1;
  CMatrix A_;
  OVStats stats_;
};

OVStats ov_stats(const MatrixRealization& m);

/// G(b) = E[(b (x) I - A)^{-1}]. Accepts Im b > 0, or Hermitian b with
/// spectrum outside [-||A||, ||A||].
CMatrix ov_cauchy(const MatrixRealization& m, const CMatrix& b);
CMatrix ov_f(const MatrixRealization& m, const CMatrix& b);
/// h(b) = b - F(b); checks ||h(b) - mu(X)|| <= 4 sigma^2 / sigma_inf(Im b).
CMatrix ov_h(const MatrixRealization& m, const CMatrix& b);
/// H(x) = h(x^{-1}) for ||x|| < 1/||A||, computed without inverting x;
/// checks ||H(x) - mu(X)|| <= sigma^2 / (||x||^{-1} - ||A||).
CMatrix ov_H(const MatrixRealization& m, const CMatrix& x);

struct OVResult {
  CMatrix F2;
  CMatrix w3;
  int iters = 0;
  double residual = 0.0;
  double interior_margin = 0.0;
};

double ov_add_threshold(const MatrixRealization& m1);
double ov_mul_threshold(const MatrixRealization& m1, const MatrixRealization& m3);

/// Needs sigma_inf(Im b) > 4 sqrt(2) sigma1.
OVResult ov_deconv_add(const MatrixRealization& m1, const MatrixRealization& m3, const CMatrix& b,
                       const FixedPointConfig& cfg = {});
/// Needs sigma_min(b) > K. Returns F2(b) = b w3 F3(w3^{-1}).
OVResult ov_deconv_mul(const MatrixRealization& m1, const MatrixRealization& m3, const CMatrix& b,
                       const FixedPointConfig& cfg = {});

}  // namespace freedeconv
