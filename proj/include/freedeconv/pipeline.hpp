#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "freedeconv/cauchy_deconv.hpp"
#include "freedeconv/errors.hpp"
#include "freedeconv/forward_conv.hpp"
#include "freedeconv/line_scan.hpp"
#include "freedeconv/multiplicative_deconv.hpp"

namespace freedeconv {

enum class Mode { Add, Mul, ForwardAdd, ForwardMul, CauchyOnly, OvAdd, OvMul };

Mode parse_mode(const std::string& name);
const char* to_string(Mode mode);

struct GridSpec {
  double start = 0.0;
  double stop = 0.0;
  double step = 0.0;
  /// "a:b:step".
  static GridSpec parse(const std::string& text);
  std::string str() const;
};

struct PipelineConfig {
  Mode mode = Mode::Add;
  std::string noise;     // measure spec, eigenvalue file, or matrix file (ov modes)
  std::string observed;  // same; cauchy-only also takes a scan CSV
  std::optional<double> lambda;  // nullopt: auto. Forward modes read it as the height y.
  GridSpec grid;
  std::optional<double> alpha;  // nullopt: discrepancy principle
  KPolicy k_policy = KPolicy::Strict;
  double tol = 1e-10;
  int max_iter = 500;
  std::uint64_t seed = 0;
  std::optional<double> unsafe_lambda;
  std::string out;

  /// Throws Config (or IO for the output directory) before any numerics.
  void validate() const;
};

struct StageSummary {
  std::string stage;
  std::optional<double> max_residual;  // unset when the stage does not track one
  double tol = 0.0;
  long iterations = 0;
};

struct RunReport {
  std::string mode;
  std::string noise;
  std::string observed;
  std::string grid;
  std::optional<double> threshold;  // additive lambda floor or caller-units K floor
  std::optional<double> K;          // normalized K for mul, OV constants for ov modes
  double lambda = 0.0;
  std::optional<double> alpha;
  std::string k_policy;
  std::uint64_t seed = 0;
  std::vector<StageSummary> stages;
  long total_iterations = 0;
  double wall_seconds = 0.0;
  std::vector<std::string> warnings;
  std::vector<std::string> files;

  std::string to_json() const;
};

struct PipelineResult {
  std::optional<LineScan> scan;
  std::optional<GridDensity> density;
  std::optional<DensitySamples> forward;
  RunReport report;
};

/// Runs one mode end to end and writes its outputs into cfg.out.
PipelineResult run_pipeline(const PipelineConfig& cfg);

/// Observation grid: the solution grid padded by 8 lambda per side, with at
/// most kMaxObservationPoints points.
UniformGrid observation_grid(const UniformGrid& solution, double lambda);
inline constexpr std::size_t kMaxObservationPoints = 4001;

/// 2 config, 3 convergence, 4 I/O.
int exit_code(ErrorKind kind);

}  // namespace freedeconv
