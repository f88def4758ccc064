#include "freedeconv/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <json.hpp>
#include <numbers>
#include <sstream>

#include "freedeconv/additive_deconv.hpp"
#include "freedeconv/io.hpp"
#include "freedeconv/matrix_valued.hpp"
#include "freedeconv/parallel.hpp"

namespace freedeconv {

namespace {

using json = nlohmann::json;

constexpr double kAutoMargin = 1e-6;
constexpr double kDefaultForwardHeight = 0.05;
constexpr double kMinColumnCapture = 0.9;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

struct LambdaChoice {
  double lambda = 0.0;
  bool enforce = true;
};

LambdaChoice choose_lambda(const PipelineConfig& cfg, double floor, RunReport& report) {
  if (cfg.unsafe_lambda) {
    report.warnings.push_back("unsafe-lambda override: lambda = " + fmt(*cfg.unsafe_lambda) +
                              " bypasses the theoretical threshold " + fmt(floor) +
                              "; convergence of the subordination iteration is not guaranteed");
    return {*cfg.unsafe_lambda, false};
  }
  const double automatic = floor * (1.0 + kAutoMargin);
  if (!cfg.lambda) return {automatic, true};
  if (*cfg.lambda < automatic) {
    report.warnings.push_back("lambda raised: requested " + fmt(*cfg.lambda) + " is below the threshold " + fmt(floor) +
                              "; using " + fmt(automatic));
    return {automatic, true};
  }
  return {*cfg.lambda, true};
}

FixedPointConfig fixed_point_config(const PipelineConfig& cfg, bool enforce) {
  FixedPointConfig fp;
  fp.tol = cfg.tol;
  fp.max_iter = cfg.max_iter;
  fp.enforce_threshold = enforce;
  return fp;
}

void check_scan_height(const LineScan& scan, RunReport& report) {
  std::size_t bad = 0;
  for (const Complex& f : scan.F2)
    if (f.imag() < scan.lambda * (1.0 - 1e-9)) ++bad;
  if (bad > 0)
    report.warnings.push_back("scan: " + std::to_string(bad) +
                              " points have Im F2 < lambda; the observed data is not an exact free convolution");
}

void check_column_capture(const UniformGrid& obs, const UniformGrid& sol, double lambda) {
  const double a = obs.start, b = obs.stop();
  for (double y : {sol.start, sol.stop()}) {
    const double capture = (std::atan((b - y) / lambda) - std::atan((a - y) / lambda)) / std::numbers::pi;
    if (capture < kMinColumnCapture)
      fail(ErrorKind::InvariantViolation, "observation grid captures only " + fmt(capture) + " of a kernel column");
  }
}

json scan_sidecar(const LineScan& scan, const PipelineConfig& cfg, bool with_density) {
  json j;
  j["schema"] = 1;
  j["kind"] = "line_scan";
  j["mode"] = to_string(cfg.mode);
  j["csv"] = "scan.csv";
  if (with_density) j["density"] = "density.json";
  j["lambda"] = scan.lambda;
  j["grid"] = {{"start", scan.xs.start}, {"step", scan.xs.step}, {"count", scan.xs.size()}};
  j["max_residual"] = scan.max_residual;
  j["total_iters"] = scan.total_iters();
  j["noise"] = cfg.noise;
  j["observed"] = cfg.observed;
  j["tol"] = cfg.tol;
  return j;
}

json density_sidecar(const CauchyDeconvolution& d) {
  json j;
  j["schema"] = 1;
  j["kind"] = "grid_density";
  j["csv"] = "density.csv";
  j["scan"] = "scan.json";
  j["lambda"] = d.lambda;
  j["alpha"] = d.alpha;
  j["alpha_auto"] = !d.selection.trace.empty();
  j["residual"] = d.residual;
  j["kkt_residual"] = d.qp.kkt_residual;
  j["iterations"] = d.qp.iterations;
  j["mass"] = d.density.mass();
  return j;
}

void add_stage(RunReport& r, std::string name, std::optional<double> residual, double tol, long iters) {
  StageSummary s;
  s.stage = std::move(name);
  s.max_residual = residual;
  s.tol = tol;
  s.iterations = iters;
  r.stages.push_back(std::move(s));
  r.total_iterations += iters;
}

void deconvolve_and_emit(const PipelineConfig& cfg, const UniformGrid& ys, PipelineResult& res, json scan_meta) {
  const fs::path out(cfg.out);
  const LineScan& scan = *res.scan;
  const CauchyDeconvolution d = deconvolve_cauchy(scan, ys, cfg.alpha);
  const QPConfig qp_defaults;
  add_stage(res.report, "cauchy", d.qp.kkt_residual, qp_defaults.tol, d.qp.iterations);
  res.report.alpha = d.alpha;
  if (!d.selection.warning.empty()) res.report.warnings.push_back(d.selection.warning);
  if (!d.qp.converged)
    res.report.warnings.push_back("cauchy: QP stopped at KKT residual " + fmt(d.qp.kkt_residual) + " above its tolerance");
  res.density = d.density;
  write_scan_csv(out / "scan.csv", scan);
  write_text(out / "scan.json", scan_meta.dump(2) + "\n");
  write_density_csv(out / "density.csv", d.density);
  write_text(out / "density.json", density_sidecar(d).dump(2) + "\n");
  res.report.files = {"scan.csv", "scan.json", "density.csv", "density.json"};
}

void run_add(const PipelineConfig& cfg, PipelineResult& res) {
  const AdditiveProblem p = AdditiveProblem::create(load_measure(cfg.noise), load_measure(cfg.observed));
  const double thr = threshold(p);
  res.report.threshold = thr;
  const LambdaChoice lc = choose_lambda(cfg, thr, res.report);
  res.report.lambda = lc.lambda;
  const UniformGrid ys = UniformGrid::from_range(cfg.grid.start, cfg.grid.stop, cfg.grid.step);
  const UniformGrid obs = observation_grid(ys, lc.lambda);
  check_column_capture(obs, ys, lc.lambda);
  res.scan = scan_line(p, lc.lambda, obs, fixed_point_config(cfg, lc.enforce));
  add_stage(res.report, "subordination", res.scan->max_residual, cfg.tol, res.scan->total_iters());
  check_scan_height(*res.scan, res.report);
  json meta = scan_sidecar(*res.scan, cfg, true);
  meta["threshold"] = thr;
  meta["shift"] = p.shift();
  deconvolve_and_emit(cfg, ys, res, std::move(meta));
}

void run_mul(const PipelineConfig& cfg, PipelineResult& res) {
  const MultiplicativeProblem p = MultiplicativeProblem::create(load_measure(cfg.noise), load_measure(cfg.observed));
  double K = 0.0;
  if (p.degenerate_noise()) {
    if (!cfg.lambda && !cfg.unsafe_lambda)
      fail(ErrorKind::Config, "noise is a point mass: no threshold exists, pass --lambda explicitly");
  } else {
    K = threshold_K(p, cfg.k_policy);
  }
  const double floor = caller_threshold(p, K);
  res.report.K = K;
  res.report.threshold = floor;
  const LambdaChoice lc = choose_lambda(cfg, floor, res.report);
  res.report.lambda = lc.lambda;
  const UniformGrid ys = UniformGrid::from_range(cfg.grid.start, cfg.grid.stop, cfg.grid.step);
  const UniformGrid obs = observation_grid(ys, lc.lambda);
  check_column_capture(obs, ys, lc.lambda);
  res.scan = scan_line_mul(p, lc.lambda, obs, fixed_point_config(cfg, lc.enforce), cfg.k_policy);
  add_stage(res.report, "subordination", res.scan->max_residual, cfg.tol, res.scan->total_iters());
  check_scan_height(*res.scan, res.report);
  json meta = scan_sidecar(*res.scan, cfg, true);
  meta["k_policy"] = cfg.k_policy == KPolicy::Strict ? "strict" : "refined";
  meta["K"] = K;
  meta["s1"] = p.s1();
  meta["s3"] = p.s3();
  deconvolve_and_emit(cfg, ys, res, std::move(meta));
}

void run_cauchy_only(const PipelineConfig& cfg, PipelineResult& res) {
  const double lambda = *cfg.lambda;
  res.report.lambda = lambda;
  const UniformGrid ys = UniformGrid::from_range(cfg.grid.start, cfg.grid.stop, cfg.grid.step);
  const fs::path observed(cfg.observed);
  if (observed.extension() == ".csv") {
    res.scan = read_scan_csv(observed, lambda);
  } else {
    const Measure m = load_measure(cfg.observed);
    const UniformGrid obs = observation_grid(ys, lambda);
    check_column_capture(obs, ys, lambda);
    LineScan scan;
    scan.lambda = lambda;
    scan.xs = obs;
    scan.F2.resize(obs.size());
    scan.iters.assign(obs.size(), 0);
    for (std::size_t i = 0; i < obs.size(); ++i) scan.F2[i] = f_transform(m, Complex(obs.at(i), lambda));
    res.scan = std::move(scan);
  }
  deconvolve_and_emit(cfg, ys, res, scan_sidecar(*res.scan, cfg, true));
}

void run_forward(const PipelineConfig& cfg, PipelineResult& res) {
  const double y = cfg.lambda.value_or(kDefaultForwardHeight);
  res.report.lambda = y;
  const Measure m1 = load_measure(cfg.noise);
  const Measure m2 = load_measure(cfg.observed);
  const UniformGrid grid = UniformGrid::from_range(cfg.grid.start, cfg.grid.stop, cfg.grid.step);
  const ConvolutionMode mode = cfg.mode == Mode::ForwardAdd ? ConvolutionMode::Additive : ConvolutionMode::Multiplicative;
  FixedPointConfig fp = fixed_point_config(cfg, true);
  fp.newton_fallback = true;
  res.forward = forward_density(m1, m2, mode, grid, y, fp);
  long iters = 0;
  for (int k : res.forward->iters) iters += k;
  add_stage(res.report, "forward", std::nullopt, cfg.tol, iters);
  const fs::path out(cfg.out);
  write_samples_csv(out / "forward.csv", *res.forward);
  json j;
  j["schema"] = 1;
  j["kind"] = "forward_density";
  j["mode"] = to_string(cfg.mode);
  j["csv"] = "forward.csv";
  j["y"] = y;
  j["mass_on_grid"] = res.forward->mass();
  write_text(out / "forward.json", j.dump(2) + "\n");
  res.report.files = {"forward.csv", "forward.json"};
}

void run_ov(const PipelineConfig& cfg, PipelineResult& res) {
  if (cfg.unsafe_lambda) fail(ErrorKind::Config, "--unsafe-lambda is not available for operator-valued modes");
  const MatrixRealization m1 = load_matrix(cfg.noise);
  const MatrixRealization m3 = load_matrix(cfg.observed);
  if (m1.d() != m3.d()) fail(ErrorKind::Config, "noise and observed matrices must share d");
  const bool add = cfg.mode == Mode::OvAdd;
  const double thr = add ? ov_add_threshold(m1) : ov_mul_threshold(m1, m3);
  res.report.threshold = thr;
  const LambdaChoice lc = choose_lambda(cfg, thr, res.report);
  res.report.lambda = lc.lambda;
  const UniformGrid grid = UniformGrid::from_range(cfg.grid.start, cfg.grid.stop, cfg.grid.step);
  const FixedPointConfig fp = fixed_point_config(cfg, true);
  const Eigen::Index d = m1.d();
  std::vector<OVResult> results(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    const CMatrix b = CMatrix::Identity(d, d) * Complex(grid.at(i), lc.lambda);
    results[i] = add ? ov_deconv_add(m1, m3, b, fp) : ov_deconv_mul(m1, m3, b, fp);
  });
  std::ostringstream csv;
  csv << "x,row,col,reF2,imF2,iters\n";
  double max_res = 0.0;
  long iters = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    max_res = std::max(max_res, results[i].residual);
    iters += results[i].iters;
    for (Eigen::Index r = 0; r < d; ++r)
      for (Eigen::Index c = 0; c < d; ++c)
        csv << format_double(grid.at(i)) << ',' << r << ',' << c << ',' << format_double(results[i].F2(r, c).real()) << ','
            << format_double(results[i].F2(r, c).imag()) << ',' << results[i].iters << '\n';
  }
  add_stage(res.report, add ? "ov-additive" : "ov-multiplicative", max_res, cfg.tol, iters);
  const fs::path out(cfg.out);
  write_text(out / "ov_scan.csv", csv.str());
  json j;
  j["schema"] = 1;
  j["kind"] = "ov_line_scan";
  j["mode"] = to_string(cfg.mode);
  j["csv"] = "ov_scan.csv";
  j["d"] = d;
  j["lambda"] = lc.lambda;
  j["threshold"] = thr;
  j["max_residual"] = max_res;
  write_text(out / "ov_scan.json", j.dump(2) + "\n");
  res.report.files = {"ov_scan.csv", "ov_scan.json"};
}

}  // namespace

Mode parse_mode(const std::string& name) {
  if (name == "add") return Mode::Add;
  if (name == "mul") return Mode::Mul;
  if (name == "forward-add") return Mode::ForwardAdd;
  if (name == "forward-mul") return Mode::ForwardMul;
  if (name == "cauchy-only") return Mode::CauchyOnly;
  if (name == "ov-add") return Mode::OvAdd;
  if (name == "ov-mul") return Mode::OvMul;
  fail(ErrorKind::Config, "unknown mode '" + name + "'");
}

const char* to_string(Mode mode) {
  switch (mode) {
    case Mode::Add: return "add";
    case Mode::Mul: return "mul";
    case Mode::ForwardAdd: return "forward-add";
    case Mode::ForwardMul: return "forward-mul";
    case Mode::CauchyOnly: return "cauchy-only";
    case Mode::OvAdd: return "ov-add";
    case Mode::OvMul: return "ov-mul";
  }
  return "?";
}

GridSpec GridSpec::parse(const std::string& text) {
  GridSpec g;
  std::string s = text;
  std::replace(s.begin(), s.end(), ':', ' ');
  std::istringstream is(s);
  std::string rest;
  if (!(is >> g.start >> g.stop >> g.step) || (is >> rest))
    fail(ErrorKind::Config, "grid must be start:stop:step, got '" + text + "'");
  return g;
}

std::string GridSpec::str() const { return format_double(start) + ":" + format_double(stop) + ":" + format_double(step); }

void PipelineConfig::validate() const {
  if (!std::isfinite(grid.start) || !std::isfinite(grid.stop) || !std::isfinite(grid.step))
    fail(ErrorKind::Config, "grid bounds must be finite");
  if (!(grid.step > 0.0)) fail(ErrorKind::Config, "grid step must be positive");
  if (!(grid.start < grid.stop)) fail(ErrorKind::Config, "grid start must be below stop");
  if ((grid.stop - grid.start) / grid.step > 1e6) fail(ErrorKind::Config, "grid has more than 1e6 points");
  if (observed.empty()) fail(ErrorKind::Config, "--observed is required");
  if (noise.empty() && mode != Mode::CauchyOnly) fail(ErrorKind::Config, "--noise is required for mode " + std::string(to_string(mode)));
  if (lambda && !(*lambda > 0.0)) fail(ErrorKind::Config, "lambda must be positive");
  if (unsafe_lambda && !(*unsafe_lambda > 0.0)) fail(ErrorKind::Config, "unsafe lambda must be positive");
  if (unsafe_lambda && (mode == Mode::ForwardAdd || mode == Mode::ForwardMul || mode == Mode::CauchyOnly))
    fail(ErrorKind::Config, "--unsafe-lambda only applies to deconvolution modes");
  if (mode == Mode::CauchyOnly && !lambda) fail(ErrorKind::Config, "cauchy-only needs an explicit --lambda");
  if (alpha && !(*alpha > 0.0)) fail(ErrorKind::Config, "alpha must be positive");
  if (!(tol > 0.0) || tol > 1e-2) fail(ErrorKind::Config, "tol must lie in (0, 1e-2]");
  if (max_iter < 1) fail(ErrorKind::Config, "max_iter must be at least 1");
  if (out.empty()) fail(ErrorKind::Config, "--out is required");
  if (!fs::is_directory(out)) fail(ErrorKind::IO, "output directory does not exist: " + out);
}

std::string RunReport::to_json() const {
  json j;
  j["schema"] = 1;
  j["mode"] = mode;
  j["inputs"] = {{"noise", noise}, {"observed", observed}, {"grid", grid}, {"seed", seed}, {"k_policy", k_policy}};
  j["threshold"] = threshold ? json(*threshold) : json(nullptr);
  j["K"] = K ? json(*K) : json(nullptr);
  j["lambda"] = lambda;
  j["alpha"] = alpha ? json(*alpha) : json(nullptr);
  json st = json::array();
  for (const StageSummary& s : stages)
    st.push_back({{"stage", s.stage}, {"max_residual", s.max_residual ? json(*s.max_residual) : json(nullptr)}, {"tol", s.tol}, {"iterations", s.iterations}});
  j["stages"] = st;
  j["total_iterations"] = total_iterations;
  j["wall_seconds"] = wall_seconds;
  j["warnings"] = warnings;
  j["files"] = files;
  return j.dump(2) + "\n";
}

UniformGrid observation_grid(const UniformGrid& solution, double lambda) {
  const double pad = 8.0 * lambda;
  const double a = solution.start - pad;
  const double b = solution.stop() + pad;
  double step = solution.step;
  std::size_t count = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9)) + 1;
  if (count > kMaxObservationPoints) {
    count = kMaxObservationPoints;
    step = (b - a) / static_cast<double>(count - 1);
  }
  return UniformGrid{a, step, count};
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::IO: return 4;
    case ErrorKind::NonConvergence:
    case ErrorKind::DomainEscape:
    case ErrorKind::MaxIterExceeded:
    case ErrorKind::BracketFailure:
    case ErrorKind::SingularResolvent:
    case ErrorKind::SingularIterate:
    case ErrorKind::CertificateFailure:
    case ErrorKind::BoundViolation:
    case ErrorKind::InvariantViolation: return 3;
    default: return 2;
  }
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  PipelineResult res;
  RunReport& r = res.report;
  r.mode = to_string(cfg.mode);
  r.noise = cfg.noise;
  r.observed = cfg.observed;
  r.grid = cfg.grid.str();
  r.k_policy = cfg.k_policy == KPolicy::Strict ? "strict" : "refined";
  r.seed = cfg.seed;
  switch (cfg.mode) {
    case Mode::Add: run_add(cfg, res); break;
    case Mode::Mul: run_mul(cfg, res); break;
    case Mode::CauchyOnly: run_cauchy_only(cfg, res); break;
    case Mode::ForwardAdd:
    case Mode::ForwardMul: run_forward(cfg, res); break;
    case Mode::OvAdd:
    case Mode::OvMul: run_ov(cfg, res); break;
  }
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.files.push_back("report.json");
  write_text(fs::path(cfg.out) / "report.json", r.to_json());
  return res;
}

}  // namespace freedeconv
