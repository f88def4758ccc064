#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "freedeconv/measures.hpp"

namespace freedeconv {

// Philox4x32-10 counter-based generator. Key = seed, counter high word = stream.
class Philox4x32 {
 public:
  using result_type = std::uint32_t;

  explicit Philox4x32(std::uint64_t seed, std::uint64_t stream = 0);

  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

  std::uint32_t operator()();
  static constexpr std::uint32_t min() { return 0; }
  static constexpr std::uint32_t max() { return 0xFFFFFFFFu; }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal by Box-Muller.
  double normal();

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t index_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  std::optional<double> spare_;
};

enum class EnsembleKind { Wigner, Wishart, Diag, GinibreSym };

EnsembleKind parse_ensemble_kind(const std::string& name);
const char* to_string(EnsembleKind kind);

/// n x m matrix of independent N(0, variance) entries, filled row by row.
Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, double variance, Philox4x32& rng);

/// (X + X^T) / sqrt(2n); off-diagonal variance 1/n.
Eigen::MatrixXd wigner_matrix(Eigen::Index n, Philox4x32& rng);
/// X X^T with X n x m of variance 1/n.
Eigen::MatrixXd wishart_matrix(Eigen::Index n, Eigen::Index m, Philox4x32& rng);
/// (X^2 + (X^T)^2) / 2 with X n x n of variance 1/n.
Eigen::MatrixXd ginibre_sym_matrix(Eigen::Index n, Philox4x32& rng);
/// Diagonal matrix with atom multiplicities from atom_multiplicities.
Eigen::MatrixXd diag_matrix(const DiscreteMeasure& atoms, Eigen::Index n);

/// Largest-remainder rounding of n * weights; sums to n.
std::vector<Eigen::Index> atom_multiplicities(const std::vector<double>& weights, Eigen::Index n);

/// Sorted eigenvalues of a symmetric matrix.
EmpiricalSpectrum spectrum_of(const Eigen::MatrixXd& sym);

struct EnsembleSpec {
  EnsembleKind kind = EnsembleKind::Wigner;
  Eigen::Index n = 0;
  Eigen::Index m = 0;  // wishart columns; 0 means n
  std::uint64_t seed = 0;
  std::optional<DiscreteMeasure> atoms;  // diag only
};

Eigen::MatrixXd generate_matrix(const EnsembleSpec& spec);
EmpiricalSpectrum generate_ensemble(const EnsembleSpec& spec);

/// Spectrum of A + W, W Wigner drawn from `seed`.
EmpiricalSpectrum additive_model(const Eigen::MatrixXd& A, std::uint64_t seed);
/// Spectrum of W A W^T, W n x n Gaussian of variance 1/n drawn from `seed`.
EmpiricalSpectrum multiplicative_model(const Eigen::MatrixXd& A, std::uint64_t seed);

}  // namespace freedeconv
