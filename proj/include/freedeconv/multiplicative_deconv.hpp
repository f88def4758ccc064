#pragma once

#include "freedeconv/fixed_point.hpp"
#include "freedeconv/line_scan.hpp"
#include "freedeconv/measures.hpp"

namespace freedeconv {

enum class KPolicy { Strict, Refined };

// mu1 (noise, on [0, inf)) boxtimes mu2 = mu3 (observed). Both are
// normalized to unit first moment internally; s1, s3 are the raw means.
class MultiplicativeProblem {
 public:
  static MultiplicativeProblem create(Measure noise, Measure observed);

  const Measure& noise() const { return noise_; }
  const Measure& observed() const { return observed_; }
  double s1() const { return s1_; }
  double s3() const { return s3_; }
  // Variances of the normalized measures.
  double noise_variance() const { return var1_; }
  double observed_variance() const { return var3_; }
  const JacobiParams& noise_jacobi() const { return jacobi_; }
  bool degenerate_noise() const { return jacobi_.gamma0 == 0.0; }

  // Normalized transforms.
  Complex f1(Complex w) const;
  Complex h1(Complex w) const;
  Complex f3(Complex w) const;
  Complex h3(Complex w) const;

  // Caller z to normalized z', and F2 back.
  Complex to_normalized(Complex z) const;
  Complex from_normalized(Complex f2n) const;
  double scale() const { return s1_ / s3_; }

 private:
  MultiplicativeProblem(Measure noise, Measure observed) : noise_(std::move(noise)), observed_(std::move(observed)) {}
  Measure noise_;
  Measure observed_;
  double s1_ = 1.0;
  double s3_ = 1.0;
  double var1_ = 0.0;
  double var3_ = 0.0;
  JacobiParams jacobi_;
};

/// Closed-form threshold of the normalized problem.
double constant_K(const MultiplicativeProblem& p);
/// Smallest I for which the contraction inequalities hold for some t.
double refine_K(const MultiplicativeProblem& p);
double threshold_K(const MultiplicativeProblem& p, KPolicy policy);

/// Largest t on the search grid for which (t, I) satisfies both contraction
/// inequalities, or 0 when none does.
double feasible_disk_ratio(const MultiplicativeProblem& p, double I);

struct MulSubordinationResult {
  Complex z;             // caller coordinates
  Complex z_normalized;  // z' of the unit-mean problem
  Complex w3tilde;       // normalized coordinates from here on
  Complex w3;
  Complex w1;
  Complex F2;  // caller coordinates
  int iters = 0;
  double residual = 0.0;
  double disk_radius = 0.0;
};

/// Needs Im z' > K; K from the chosen policy on the normalized problem.
MulSubordinationResult subordinate_mul(const MultiplicativeProblem& p, Complex z, const FixedPointConfig& cfg = {},
                                       KPolicy policy = KPolicy::Strict);

/// Same with a precomputed threshold K (normalized units).
MulSubordinationResult subordinate_mul_with_K(const MultiplicativeProblem& p, Complex z, double K,
                                              const FixedPointConfig& cfg = {});

/// Lambda is in caller units; it must exceed K(1 + 1e-9)/|s1/s3|.
LineScan scan_line_mul(const MultiplicativeProblem& p, double lambda, const UniformGrid& xs,
                       const FixedPointConfig& cfg = {}, KPolicy policy = KPolicy::Strict, bool warm_start = true);

/// Lambda threshold in caller units.
double caller_threshold(const MultiplicativeProblem& p, double K);

}  // namespace freedeconv
