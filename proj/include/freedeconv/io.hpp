#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "freedeconv/forward_conv.hpp"
#include "freedeconv/line_scan.hpp"
#include "freedeconv/matrix_valued.hpp"
#include "freedeconv/measures.hpp"

namespace freedeconv {

namespace fs = std::filesystem;

/// One float per line; blank lines and text after '#' are ignored.
std::vector<double> read_eigenvalues(const fs::path& path);

/// JSON measure spec, e.g. {"type": "semicircle", "mean": 0, "variance": 1}.
/// Relative "file" entries of empirical specs resolve against base_dir.
Measure parse_measure_spec(const std::string& json_text, const fs::path& base_dir = {});

/// Inline JSON, a .json spec file, or an eigenvalue file.
Measure load_measure(const std::string& spec_or_path);

/// "%.17g" formatting used by every writer.
std::string format_double(double v);

void write_scan_csv(const fs::path& path, const LineScan& scan);
/// Reads a scan CSV; the height is not stored in the CSV and is passed in.
LineScan read_scan_csv(const fs::path& path, double lambda);
void write_density_csv(const fs::path& path, const GridDensity& density);
void write_samples_csv(const fs::path& path, const DensitySamples& samples);
void write_text(const fs::path& path, const std::string& body);
std::string read_text(const fs::path& path);

/// {"d": .., "N": .., "A": [[re, im], ...]} with A row-major.
MatrixRealization read_matrix_json(const fs::path& path);
void write_matrix_json(const fs::path& path, const MatrixRealization& m);
/// "OVFPDATA", uint64 d, uint64 N, then (dN)^2 row-major (re, im) float64 pairs, little-endian.
MatrixRealization read_matrix_binary(const fs::path& path);
void write_matrix_binary(const fs::path& path, const MatrixRealization& m);
/// Dispatches on the magic header.
MatrixRealization load_matrix(const fs::path& path);

}  // namespace freedeconv
