#include "freedeconv/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace freedeconv {

namespace {

using json = nlohmann::json;

constexpr char kMagic[8] = {'O', 'V', 'F', 'P', 'D', 'A', 'T', 'A'};

static_assert(std::endian::native == std::endian::little, "binary matrix format assumes a little-endian host");

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  const fs::path dir = path.parent_path();
  if (!dir.empty() && !fs::is_directory(dir)) fail(ErrorKind::IO, "directory does not exist: " + dir.string());
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) fail(ErrorKind::IO, "cannot open for writing: " + path.string());
  return out;
}

void close_checked(std::ofstream& out, const fs::path& path) {
  out.close();
  if (!out) fail(ErrorKind::IO, "write failed: " + path.string());
}

double number(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) fail(ErrorKind::Config, std::string("measure spec needs numeric '") + key + "'");
  return j.at(key).get<double>();
}

Measure measure_from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object() || !j.contains("type") || !j.at("type").is_string())
    fail(ErrorKind::Config, "measure spec must be an object with a string 'type'");
  const std::string type = j.at("type").get<std::string>();
  try {
    if (type == "semicircle") return semicircle(j.value("mean", 0.0), number(j, "variance"));
    if (type == "marchenko_pastur") return marchenko_pastur(number(j, "ratio"));
    if (type == "cauchy") return cauchy_distribution(j.value("center", 0.0), number(j, "scale"));
    if (type == "point") return point_mass(number(j, "position"));
    if (type == "discrete") {
      if (!j.contains("atoms") || !j.at("atoms").is_array()) fail(ErrorKind::Config, "discrete spec needs 'atoms'");
      std::vector<std::pair<double, double>> atoms;
      for (const json& a : j.at("atoms")) {
        if (!a.is_array() || a.size() != 2) fail(ErrorKind::Config, "atoms are [position, weight] pairs");
        atoms.emplace_back(a.at(0).get<double>(), a.at(1).get<double>());
      }
      return discrete(std::move(atoms));
    }
    if (type == "empirical") {
      if (j.contains("eigenvalues")) return EmpiricalSpectrum::from_samples(j.at("eigenvalues").get<std::vector<double>>());
      if (!j.contains("file")) fail(ErrorKind::Config, "empirical spec needs 'file' or 'eigenvalues'");
      fs::path file = j.at("file").get<std::string>();
      if (file.is_relative() && !base_dir.empty()) file = base_dir / file;
      return EmpiricalSpectrum::from_samples(read_eigenvalues(file));
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, std::string("bad measure spec: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::IO || e.kind() == ErrorKind::Config) throw;
    fail(ErrorKind::Config, std::string("invalid measure parameters: ") + e.what());
  }
  fail(ErrorKind::Config, "unknown measure type '" + type + "'");
}

}  // namespace

std::vector<double> read_eigenvalues(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IO, "cannot open eigenvalue file: " + path.string());
  std::vector<double> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream is(line);
    double v;
    if (!(is >> v)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      fail(ErrorKind::Config, path.string() + ":" + std::to_string(lineno) + ": not a number");
    }
    std::string rest;
    if (is >> rest) fail(ErrorKind::Config, path.string() + ":" + std::to_string(lineno) + ": trailing text");
    if (!std::isfinite(v)) fail(ErrorKind::Config, path.string() + ":" + std::to_string(lineno) + ": non-finite value");
    out.push_back(v);
  }
  if (out.empty()) fail(ErrorKind::Config, "eigenvalue file is empty: " + path.string());
  return out;
}

Measure parse_measure_spec(const std::string& json_text, const fs::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, std::string("measure spec is not valid JSON: ") + e.what());
  }
  return measure_from_json(j, base_dir);
}

Measure load_measure(const std::string& spec_or_path) {
  const auto first = spec_or_path.find_first_not_of(" \t\n");
  if (first != std::string::npos && spec_or_path[first] == '{') return parse_measure_spec(spec_or_path);
  const fs::path path(spec_or_path);
  if (path.extension() == ".json") return parse_measure_spec(read_text(path), path.parent_path());
  return EmpiricalSpectrum::from_samples(read_eigenvalues(path));
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_scan_csv(const fs::path& path, const LineScan& scan) {
  std::ofstream out = open_out(path);
  out << "x,reF2,imF2,iters\n";
  for (std::size_t i = 0; i < scan.xs.size(); ++i)
    out << format_double(scan.xs.at(i)) << ',' << format_double(scan.F2[i].real()) << ','
        << format_double(scan.F2[i].imag()) << ',' << scan.iters[i] << '\n';
  close_checked(out, path);
}

LineScan read_scan_csv(const fs::path& path, double lambda) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IO, "cannot open scan file: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("x,reF2,imF2", 0) != 0)
    fail(ErrorKind::Config, path.string() + ": expected header x,reF2,imF2,iters");
  std::vector<double> xs;
  LineScan scan;
  scan.lambda = lambda;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream is(line);
    double x, re, im;
    int it = 0;
    if (!(is >> x >> re >> im)) fail(ErrorKind::Config, path.string() + ":" + std::to_string(lineno) + ": bad row");
    is >> it;
    xs.push_back(x);
    scan.F2.emplace_back(re, im);
    scan.iters.push_back(it);
  }
  if (xs.size() < 2) fail(ErrorKind::Config, path.string() + ": scan needs at least two rows");
  scan.xs = UniformGrid::from_points(xs);
  return scan;
}

void write_density_csv(const fs::path& path, const GridDensity& density) {
  std::ofstream out = open_out(path);
  out << "y,density\n";
  for (std::size_t i = 0; i < density.values.size(); ++i)
    out << format_double(density.position(i)) << ',' << format_double(density.values[i]) << '\n';
  close_checked(out, path);
}

void write_samples_csv(const fs::path& path, const DensitySamples& samples) {
  std::ofstream out = open_out(path);
  out << "x,density,iters\n";
  for (std::size_t i = 0; i < samples.values.size(); ++i)
    out << format_double(samples.position(i)) << ',' << format_double(samples.values[i]) << ','
        << (i < samples.iters.size() ? samples.iters[i] : 0) << '\n';
  close_checked(out, path);
}

void write_text(const fs::path& path, const std::string& body) {
  std::ofstream out = open_out(path);
  out << body;
  close_checked(out, path);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IO, "cannot open: " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

MatrixRealization read_matrix_json(const fs::path& path) {
  try {
    const json j = json::parse(read_text(path));
    const auto d = j.at("d").get<Eigen::Index>();
    const auto N = j.at("N").get<Eigen::Index>();
    const json& a = j.at("A");
    const Eigen::Index n = d * N;
    if (d < 1 || N < 1 || !a.is_array() || static_cast<Eigen::Index>(a.size()) != n * n)
      fail(ErrorKind::Config, path.string() + ": 'A' must hold (dN)^2 complex pairs");
    CMatrix A(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
      for (Eigen::Index c = 0; c < n; ++c) {
        const json& e = a.at(static_cast<std::size_t>(r * n + c));
        A(r, c) = {e.at(0).get<double>(), e.at(1).get<double>()};
      }
    return MatrixRealization::create(d, N, std::move(A));
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, path.string() + ": bad matrix JSON: " + e.what());
  }
}

void write_matrix_json(const fs::path& path, const MatrixRealization& m) {
  json j;
  j["d"] = m.d();
  j["N"] = m.N();
  json a = json::array();
  const CMatrix& A = m.A();
  for (Eigen::Index r = 0; r < A.rows(); ++r)
    for (Eigen::Index c = 0; c < A.cols(); ++c) a.push_back({A(r, c).real(), A(r, c).imag()});
  j["A"] = std::move(a);
  write_text(path, j.dump() + "\n");
}

MatrixRealization read_matrix_binary(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IO, "cannot open: " + path.string());
  char magic[8];
  std::uint64_t d = 0, N = 0;
  in.read(magic, 8);
  in.read(reinterpret_cast<char*>(&d), 8);
  in.read(reinterpret_cast<char*>(&N), 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) fail(ErrorKind::Config, path.string() + ": missing OVFPDATA header");
  if (d < 1 || N < 1 || d * N > 100000) fail(ErrorKind::Config, path.string() + ": implausible dimensions");
  const auto n = static_cast<Eigen::Index>(d * N);
  CMatrix A(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) {
      double pair[2];
      in.read(reinterpret_cast<char*>(pair), sizeof pair);
      A(r, c) = {pair[0], pair[1]};
    }
  if (!in) fail(ErrorKind::IO, path.string() + ": truncated matrix data");
  return MatrixRealization::create(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(N), std::move(A));
}

void write_matrix_binary(const fs::path& path, const MatrixRealization& m) {
  std::ofstream out = open_out(path, std::ios::out | std::ios::binary);
  const std::uint64_t d = static_cast<std::uint64_t>(m.d()), N = static_cast<std::uint64_t>(m.N());
  out.write(kMagic, 8);
  out.write(reinterpret_cast<const char*>(&d), 8);
  out.write(reinterpret_cast<const char*>(&N), 8);
  const CMatrix& A = m.A();
  for (Eigen::Index r = 0; r < A.rows(); ++r)
    for (Eigen::Index c = 0; c < A.cols(); ++c) {
      const double pair[2] = {A(r, c).real(), A(r, c).imag()};
      out.write(reinterpret_cast<const char*>(pair), sizeof pair);
    }
  close_checked(out, path);
}

MatrixRealization load_matrix(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IO, "cannot open: " + path.string());
  char magic[8] = {};
  in.read(magic, 8);
  if (in && std::memcmp(magic, kMagic, 8) == 0) return read_matrix_binary(path);
  return read_matrix_json(path);
}

}  // namespace freedeconv
