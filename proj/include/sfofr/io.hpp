#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sfofr/basis.hpp"
#include "sfofr/curves.hpp"

namespace sfofr::io {

namespace fs = std::filesystem;

/// Curve CSV: header `id,g_1,...,g_m` (grid values), then one row per site:
/// `site_id,v_1,...,v_m`. Empty or non-numeric cells are schema violations.
struct CurveTable {
  VectorXd grid;
  std::vector<std::string> ids;
  MatrixXd values;
};

CurveTable read_curves(const fs::path& path);
void write_curves(const fs::path& path, const VectorXd& grid,
                  const std::vector<std::string>& ids, const MatrixXd& values);

/// Locations CSV: header `id,x,y`.
struct Locations {
  std::vector<std::string> ids;
  MatrixXd coords;
};
Locations read_locations(const fs::path& path);
void write_locations(const fs::path& path, const std::vector<std::string>& ids,
                     const MatrixXd& coords);

/// Adjacency CSV: header `from,to`, one undirected edge per row, ids as in
/// `ids`. Unknown ids are schema violations.
MatrixXd read_adjacency(const fs::path& path, const std::vector<std::string>& ids);
void write_adjacency(const fs::path& path, const std::vector<std::string>& ids,
                     const MatrixXd& adjacency);

/// Basis CSV: rows are basis functions, header row holds grid points.
void write_basis(const fs::path& path, const BasisSystem& basis);
/// Reads values and grid; weights are rebuilt from `domain`.
BasisSystem read_basis(const fs::path& path, BasisFamily family, Interval domain);

/// Plain numeric matrix with a header line of column names.
void write_matrix(const fs::path& path, const MatrixXd& m,
                  const std::vector<std::string>& header = {});
MatrixXd read_matrix(const fs::path& path);

/// Little-endian 64-bit floats, row-major, no header.
void write_binary(const fs::path& path, const std::vector<double>& data);
std::vector<double> read_binary(const fs::path& path);

/// Dataset directory: response.csv, covariate.csv, optional locations.csv or
/// adjacency.csv, optional meta.json holding the t/r domains.
FunctionalDataset load_dataset(const fs::path& dir);
void save_dataset(const fs::path& dir, const FunctionalDataset& data);

/// Shortest decimal form that reads back to the same double.
std::string format_number(double v);

/// Split one CSV line on commas (no quoting).
std::vector<std::string> split_csv_line(const std::string& line);
double parse_number(const std::string& cell, const fs::path& path, std::size_t line);

}  // namespace sfofr::io
