#include "freedeconv/cli.hpp"

#include <CLI11.hpp>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "freedeconv/ensembles.hpp"
#include "freedeconv/io.hpp"
#include "freedeconv/pipeline.hpp"

namespace freedeconv {

namespace {

std::optional<double> parse_auto(const std::string& text, const char* name) {
  if (text.empty() || text == "auto") return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    fail(ErrorKind::Config, std::string("--") + name + " must be a number or 'auto', got '" + text + "'");
  }
}

struct GenerateOptions {
  std::string kind = "wigner";
  long n = 0;
  long m = 0;
  std::uint64_t seed = 0;
  std::string atoms;
  std::string model = "none";
  std::string out;
};

void run_generate(const GenerateOptions& o) {
  EnsembleSpec spec;
  spec.kind = parse_ensemble_kind(o.kind);
  if (o.n < 1) fail(ErrorKind::Config, "--n must be at least 1");
  if (o.m < 0) fail(ErrorKind::Config, "--m must be nonnegative");
  spec.n = o.n;
  spec.m = o.m;
  spec.seed = o.seed;
  if (spec.kind == EnsembleKind::Diag) {
    if (o.atoms.empty()) fail(ErrorKind::Config, "diag needs --atoms '[[position, weight], ...]'");
    const Measure m = parse_measure_spec("{\"type\": \"discrete\", \"atoms\": " + o.atoms + "}");
    spec.atoms = std::get<DiscreteMeasure>(m.rep());
  }
  if (o.model != "none" && o.model != "add" && o.model != "mul")
    fail(ErrorKind::Config, "--model must be none, add or mul");
  const fs::path out(o.out);
  if (!out.parent_path().empty() && !fs::is_directory(out.parent_path()))
    fail(ErrorKind::IO, "directory does not exist: " + out.parent_path().string());
  EmpiricalSpectrum spectrum;
  if (o.model == "none") {
    spectrum = generate_ensemble(spec);
  } else {
    const Eigen::MatrixXd A = generate_matrix(spec);
    spectrum = o.model == "add" ? additive_model(A, o.seed) : multiplicative_model(A, o.seed);
  }
  std::ostringstream body;
  body << "# " << to_string(spec.kind) << " n=" << o.n << " m=" << o.m << " seed=" << o.seed << " model=" << o.model
       << "\n";
  for (double v : spectrum.eigenvalues) body << format_double(v) << '\n';
  write_text(out, body.str());
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Free deconvolution of spectral distributions"};
  app.require_subcommand(1);

  PipelineConfig cfg;
  std::string lambda_text = "auto", alpha_text = "auto", grid_text, policy = "strict";
  double unsafe = 0.0;
  const std::vector<std::string> modes = {"add", "mul", "forward-add", "forward-mul", "cauchy-only", "ov-add", "ov-mul"};
  std::vector<CLI::App*> mode_apps;
  for (const std::string& name : modes) {
    CLI::App* sub = app.add_subcommand(name, "run the " + name + " pipeline");
    sub->add_option("--noise", cfg.noise, "noise measure: JSON spec, .json file, eigenvalue file, or matrix file");
    sub->add_option("--observed", cfg.observed, "observed measure (same forms; cauchy-only also takes a scan CSV)");
    sub->add_option("--grid", grid_text, "solution grid start:stop:step")->required();
    sub->add_option("--lambda", lambda_text, "smoothing height or 'auto'");
    sub->add_option("--alpha", alpha_text, "Tikhonov parameter or 'auto'");
    sub->add_option("--k-policy", policy, "strict or refined")->check(CLI::IsMember({"strict", "refined"}));
    sub->add_option("--tol", cfg.tol, "fixed-point tolerance");
    sub->add_option("--max-iter", cfg.max_iter, "fixed-point iteration cap");
    sub->add_option("--seed", cfg.seed, "seed recorded in the report");
    sub->add_option("--unsafe-lambda", unsafe, "bypass the threshold check with this lambda");
    sub->add_option("--out", cfg.out, "output directory (must exist)")->required();
    mode_apps.push_back(sub);
  }

  GenerateOptions gen;
  CLI::App* generate = app.add_subcommand("generate", "sample a random-matrix spectrum");
  generate->add_option("--kind", gen.kind, "wigner, wishart, diag or ginibre_sym")->required();
  generate->add_option("--n", gen.n, "matrix size")->required();
  generate->add_option("--m", gen.m, "wishart columns (default n)");
  generate->add_option("--seed", gen.seed, "Philox4x32-10 key");
  generate->add_option("--atoms", gen.atoms, "diag atoms as [[position, weight], ...]");
  generate->add_option("--model", gen.model, "none, add (A + Wigner) or mul (W A W^T)");
  generate->add_option("--out", gen.out, "eigenvalue file to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 2;
  }

  try {
    if (generate->parsed()) {
      run_generate(gen);
      return 0;
    }
    for (std::size_t k = 0; k < modes.size(); ++k) {
      CLI::App* sub = mode_apps[k];
      if (!sub->parsed()) continue;
      cfg.mode = parse_mode(modes[k]);
      cfg.grid = GridSpec::parse(grid_text);
      cfg.lambda = parse_auto(lambda_text, "lambda");
      cfg.alpha = parse_auto(alpha_text, "alpha");
      cfg.k_policy = policy == "refined" ? KPolicy::Refined : KPolicy::Strict;
      if (sub->count("--unsafe-lambda") > 0) cfg.unsafe_lambda = unsafe;
      const PipelineResult res = run_pipeline(cfg);
      for (const std::string& w : res.report.warnings) std::cerr << "warning: " << w << '\n';
      std::cout << "wrote";
      for (const std::string& f : res.report.files) std::cout << ' ' << (fs::path(cfg.out) / f).string();
      std::cout << '\n';
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace freedeconv
