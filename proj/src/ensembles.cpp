#include "freedeconv/ensembles.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "freedeconv/errors.hpp"

namespace freedeconv {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

// Stream ids keep kinds independent under one seed.
std::uint64_t stream_of(EnsembleKind kind) { return static_cast<std::uint64_t>(kind) + 1; }
constexpr std::uint64_t kModelStream = 100;

void require_size(Eigen::Index n, const char* what) {
  if (n < 1) fail(ErrorKind::InvalidArgument, std::string(what) + " must be at least 1");
}

}  // namespace

Philox4x32::Philox4x32(std::uint64_t seed, std::uint64_t stream)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}, stream_(stream) {}

std::array<std::uint32_t, 4> Philox4x32::block(std::array<std::uint32_t, 4> c, std::array<std::uint32_t, 2> k) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      k[0] += kW0;
      k[1] += kW1;
    }
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
  return c;
}

std::uint32_t Philox4x32::operator()() {
  if (used_ == 4) {
    buffer_ = block({static_cast<std::uint32_t>(index_), static_cast<std::uint32_t>(index_ >> 32),
                     static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)},
                    key_);
    ++index_;
    used_ = 0;
  }
  return buffer_[used_++];
}

double Philox4x32::uniform() {
  const std::uint64_t a = (*this)() >> 5;
  const std::uint64_t b = (*this)() >> 6;
  return static_cast<double>(a * 67108864ull + b) * 0x1.0p-53;
}

double Philox4x32::normal() {
  if (spare_) {
    const double v = *spare_;
    spare_.reset();
    return v;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(t);
  return r * std::cos(t);
}

EnsembleKind parse_ensemble_kind(const std::string& name) {
  if (name == "wigner") return EnsembleKind::Wigner;
  if (name == "wishart") return EnsembleKind::Wishart;
  if (name == "diag") return EnsembleKind::Diag;
  if (name == "ginibre_sym" || name == "ginibre-sym") return EnsembleKind::GinibreSym;
  fail(ErrorKind::Config, "unknown ensemble kind '" + name + "'");
}

const char* to_string(EnsembleKind kind) {
  switch (kind) {
    case EnsembleKind::Wigner: return "wigner";
    case EnsembleKind::Wishart: return "wishart";
    case EnsembleKind::Diag: return "diag";
    case EnsembleKind::GinibreSym: return "ginibre_sym";
  }
  return "?";
}

Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, double variance, Philox4x32& rng) {
  Eigen::MatrixXd X(rows, cols);
  const double s = std::sqrt(variance);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) X(i, j) = s * rng.normal();
  return X;
}

Eigen::MatrixXd wigner_matrix(Eigen::Index n, Philox4x32& rng) {
  require_size(n, "n");
  const Eigen::MatrixXd X = gaussian_matrix(n, n, 1.0, rng);
  return (X + X.transpose()) / std::sqrt(2.0 * static_cast<double>(n));
}

Eigen::MatrixXd wishart_matrix(Eigen::Index n, Eigen::Index m, Philox4x32& rng) {
  require_size(n, "n");
  require_size(m, "m");
  const Eigen::MatrixXd X = gaussian_matrix(n, m, 1.0 / static_cast<double>(n), rng);
  return X * X.transpose();
}

Eigen::MatrixXd ginibre_sym_matrix(Eigen::Index n, Philox4x32& rng) {
  require_size(n, "n");
  const Eigen::MatrixXd X = gaussian_matrix(n, n, 1.0 / static_cast<double>(n), rng);
  const Eigen::MatrixXd X2 = X * X;
  return 0.5 * (X2 + X2.transpose());
}

std::vector<Eigen::Index> atom_multiplicities(const std::vector<double>& weights, Eigen::Index n) {
  require_size(n, "n");
  std::vector<Eigen::Index> count(weights.size());
  std::vector<double> rem(weights.size());
  Eigen::Index total = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const double exact = weights[k] * static_cast<double>(n);
    count[k] = static_cast<Eigen::Index>(std::floor(exact + 1e-9));
    rem[k] = exact - static_cast<double>(count[k]);
    total += count[k];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t k = 0; total < n && k < order.size(); ++k, ++total) ++count[order[k]];
  return count;
}

Eigen::MatrixXd diag_matrix(const DiscreteMeasure& atoms, Eigen::Index n) {
  const auto counts = atom_multiplicities(atoms.weights, n);
  Eigen::VectorXd diag(n);
  Eigen::Index pos = 0;
  for (std::size_t k = 0; k < counts.size(); ++k)
    for (Eigen::Index j = 0; j < counts[k]; ++j) diag(pos++) = atoms.positions[k];
  return diag.asDiagonal();
}

EmpiricalSpectrum spectrum_of(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) fail(ErrorKind::NonConvergence, "eigenvalue solver failed");
  const Eigen::VectorXd& ev = es.eigenvalues();
  return EmpiricalSpectrum::from_samples(std::vector<double>(ev.data(), ev.data() + ev.size()));
}

Eigen::MatrixXd generate_matrix(const EnsembleSpec& spec) {
  Philox4x32 rng(spec.seed, stream_of(spec.kind));
  switch (spec.kind) {
    case EnsembleKind::Wigner: return wigner_matrix(spec.n, rng);
    case EnsembleKind::Wishart: return wishart_matrix(spec.n, spec.m == 0 ? spec.n : spec.m, rng);
    case EnsembleKind::GinibreSym: return ginibre_sym_matrix(spec.n, rng);
    case EnsembleKind::Diag:
      if (!spec.atoms) fail(ErrorKind::Config, "diag ensemble needs atoms");
      return diag_matrix(*spec.atoms, spec.n);
  }
  fail(ErrorKind::Config, "unknown ensemble kind");
}

EmpiricalSpectrum generate_ensemble(const EnsembleSpec& spec) {
  if (spec.kind == EnsembleKind::Diag) {
    if (!spec.atoms) fail(ErrorKind::Config, "diag ensemble needs atoms");
    const auto counts = atom_multiplicities(spec.atoms->weights, spec.n);
    std::vector<double> ev;
    for (std::size_t k = 0; k < counts.size(); ++k) ev.insert(ev.end(), counts[k], spec.atoms->positions[k]);
    return EmpiricalSpectrum::from_samples(std::move(ev));
  }
  return spectrum_of(generate_matrix(spec));
}

EmpiricalSpectrum additive_model(const Eigen::MatrixXd& A, std::uint64_t seed) {
  Philox4x32 rng(seed, kModelStream);
  return spectrum_of(A + wigner_matrix(A.rows(), rng));
}

EmpiricalSpectrum multiplicative_model(const Eigen::MatrixXd& A, std::uint64_t seed) {
  Philox4x32 rng(seed, kModelStream + 1);
  const Eigen::MatrixXd W = gaussian_matrix(A.rows(), A.rows(), 1.0 / static_cast<double>(A.rows()), rng);
  const Eigen::MatrixXd M = W * A * W.transpose();
  return spectrum_of(0.5 * (M + M.transpose()));
}

}  // namespace freedeconv
