#pragma once

#include <span>
#include <string>
#include <vector>

#include "freedeconv/fixed_point.hpp"
#include "freedeconv/line_scan.hpp"
#include "freedeconv/measures.hpp"

namespace freedeconv {

// mu1 (noise) boxplus mu2 = mu3 (observed). The noise is recentred
// internally; results are reported in the caller's coordinates.
class AdditiveProblem {
 public:
  static AdditiveProblem create(Measure noise, Measure observed);

  const Measure& noise() const { return noise_; }
  const Measure& observed() const { return observed_; }
  double shift() const { return shift_; }
  double noise_variance() const { return var1_; }
  double observed_variance() const { return var3_; }

 private:
  AdditiveProblem(Measure noise, Measure observed) : noise_(std::move(noise)), observed_(std::move(observed)) {}
  Measure noise_;
  Measure observed_;
  double shift_ = 0.0;
  double var1_ = 0.0;
  double var3_ = 0.0;
};

/// 2 sqrt(2) sigma1.
double threshold(const AdditiveProblem& p);

struct SubordinationResult {
  Complex z;
  Complex w3;  // caller coordinates; the centred point is w3 - shift
  Complex w1;
  Complex F2;
  int iters = 0;
  double residual = 0.0;
  double shift = 0.0;
};

/// F_{mu2}(z) = F3(w3(z)) for Im z > 2 sqrt(2) sigma1. cfg.initial is a
/// starting w3 in caller coordinates.
SubordinationResult subordinate(const AdditiveProblem& p, Complex z, const FixedPointConfig& cfg = {});

LineScan scan_line(const AdditiveProblem& p, double lambda, const UniformGrid& xs, const FixedPointConfig& cfg = {},
                   bool warm_start = true);

/// The probability measure with F(z) = F3(w3(z + 2 sqrt(2) sigma1 i)).
Measure regularized_measure(const AdditiveProblem& p, const FixedPointConfig& cfg = {});

struct RegularizedReport {
  std::vector<double> heights;  // sorted
  std::vector<Complex> F_tilde;
  std::vector<double> ratio_error;  // |F(iy)/(iy) - 1|
  bool tail_check_applied = false;
  std::vector<Complex> test_points;
  std::vector<double> identity_error;
  double max_identity_error = 0.0;
};

/// Nevanlinna certificates and the forward identity mu1 boxplus mu~ = mu3 boxplus Cauchy.
/// Throws CertificateFailure naming the failed check.
RegularizedReport regularized_measure_checks(const AdditiveProblem& p, std::span<const double> heights,
                                             const FixedPointConfig& cfg = {});

}  // namespace freedeconv
