#include "sfofr/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "sfofr/error.hpp"

namespace sfofr::io {

namespace {

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::missing_file, "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) fail(ErrorCode::missing_file, "cannot write " + path.string());
  return out;
}


std::string schema_error(const fs::path& path, std::size_t line, const std::string& what) {
  std::ostringstream msg;
  msg << path.string() << ":" << line << ": " << what;
  return msg.str();
}

std::vector<std::vector<std::string>> read_rows(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(split_csv_line(line));
  }
  if (rows.empty()) fail(ErrorCode::schema_violation, path.string() + ": empty file");
  return rows;
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t");
    const auto e = cell.find_last_not_of(" \t");
    cells.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_number(const std::string& cell, const fs::path& path, std::size_t line) {
  if (cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan")
    fail(ErrorCode::schema_violation, schema_error(path, line, "missing value"));
  double v = 0.0;
  const char* first = cell.data();
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, cell.data() + cell.size(), v);
  if (res.ec != std::errc() || res.ptr != cell.data() + cell.size() || !std::isfinite(v))
    fail(ErrorCode::schema_violation, schema_error(path, line, "not a number: '" + cell + "'"));
  return v;
}

CurveTable read_curves(const fs::path& path) {
  const auto rows = read_rows(path);
  const auto& header = rows.front();
  if (header.size() < 2)
    fail(ErrorCode::schema_violation, schema_error(path, 1, "header needs grid values"));
  CurveTable t;
  const Index m = Index(header.size()) - 1;
  t.grid.resize(m);
  for (Index j = 0; j < m; ++j) t.grid[j] = parse_number(header[j + 1], path, 1);
  t.values.resize(Index(rows.size()) - 1, m);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (Index(r.size()) != m + 1)
      fail(ErrorCode::schema_violation,
           schema_error(path, i + 1, "expected " + std::to_string(m + 1) + " cells"));
    t.ids.push_back(r[0]);
    for (Index j = 0; j < m; ++j) t.values(Index(i) - 1, j) = parse_number(r[j + 1], path, i + 1);
  }
  return t;
}

void write_curves(const fs::path& path, const VectorXd& grid,
                  const std::vector<std::string>& ids, const MatrixXd& values) {
  require(values.cols() == grid.size() && Index(ids.size()) == values.rows(),
          ErrorCode::dimension_mismatch, "curve table dimensions do not match");
  std::ofstream out = open_out(path);
  out << "id";
  for (Index j = 0; j < grid.size(); ++j) out << ',' << format_number(grid[j]);
  out << '\n';
  for (Index i = 0; i < values.rows(); ++i) {
    out << ids[i];
    for (Index j = 0; j < values.cols(); ++j) out << ',' << format_number(values(i, j));
    out << '\n';
  }
}

Locations read_locations(const fs::path& path) {
  const auto rows = read_rows(path);
  Locations loc;
  loc.coords.resize(Index(rows.size()) - 1, 2);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 3)
      fail(ErrorCode::schema_violation, schema_error(path, i + 1, "expected id,x,y"));
    loc.ids.push_back(rows[i][0]);
    loc.coords(Index(i) - 1, 0) = parse_number(rows[i][1], path, i + 1);
    loc.coords(Index(i) - 1, 1) = parse_number(rows[i][2], path, i + 1);
  }
  return loc;
}

void write_locations(const fs::path& path, const std::vector<std::string>& ids,
                     const MatrixXd& coords) {
  require(Index(ids.size()) == coords.rows() && coords.cols() == 2,
          ErrorCode::dimension_mismatch, "locations dimensions do not match");
  std::ofstream out = open_out(path);
  out << "id,x,y\n";
  for (Index i = 0; i < coords.rows(); ++i)
    out << ids[i] << ',' << format_number(coords(i, 0)) << ',' << format_number(coords(i, 1))
        << '\n';
}

MatrixXd read_adjacency(const fs::path& path, const std::vector<std::string>& ids) {
  std::map<std::string, Index> index;
  for (std::size_t i = 0; i < ids.size(); ++i) index[ids[i]] = Index(i);
  const auto rows = read_rows(path);
  MatrixXd d = MatrixXd::Zero(Index(ids.size()), Index(ids.size()));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 2)
      fail(ErrorCode::schema_violation, schema_error(path, i + 1, "expected from,to"));
    const auto a = index.find(rows[i][0]);
    const auto b = index.find(rows[i][1]);
    if (a == index.end() || b == index.end())
      fail(ErrorCode::schema_violation, schema_error(path, i + 1, "unknown site id"));
    if (a->second == b->second)
      fail(ErrorCode::schema_violation, schema_error(path, i + 1, "self-loop"));
    d(a->second, b->second) = d(b->second, a->second) = 1.0;
  }
  return d;
}

void write_adjacency(const fs::path& path, const std::vector<std::string>& ids,
                     const MatrixXd& adjacency) {
  std::ofstream out = open_out(path);
  out << "from,to\n";
  for (Index i = 0; i < adjacency.rows(); ++i)
    for (Index j = i + 1; j < adjacency.cols(); ++j)
      if (adjacency(i, j) != 0.0) out << ids[i] << ',' << ids[j] << '\n';
}

void write_basis(const fs::path& path, const BasisSystem& basis) {
  std::vector<std::string> ids;
  for (Index k = 0; k < basis.size(); ++k) ids.push_back(std::to_string(k + 1));
  write_curves(path, basis.grid, ids, basis.values);
}

BasisSystem read_basis(const fs::path& path, BasisFamily family, Interval domain) {
  CurveTable t = read_curves(path);
  BasisSystem b;
  b.family = family;
  b.domain = domain;
  b.grid = t.grid;
  b.values = t.values;
  b.weights = trapezoid_weights(t.grid, domain);
  return b;
}

void write_matrix(const fs::path& path, const MatrixXd& m,
                  const std::vector<std::string>& header) {
  std::ofstream out = open_out(path);
  if (header.empty()) {
    for (Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << "c" << j + 1;
  } else {
    require(Index(header.size()) == m.cols(), ErrorCode::dimension_mismatch,
            "header does not match the matrix columns");
    for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  }
  out << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_number(m(i, j));
    out << '\n';
  }
}

MatrixXd read_matrix(const fs::path& path) {
  const auto rows = read_rows(path);
  const Index cols = Index(rows.front().size());
  MatrixXd m(Index(rows.size()) - 1, cols);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (Index(rows[i].size()) != cols)
      fail(ErrorCode::schema_violation, schema_error(path, i + 1, "ragged row"));
    for (Index j = 0; j < cols; ++j) m(Index(i) - 1, j) = parse_number(rows[i][j], path, i + 1);
  }
  return m;
}

void write_binary(const fs::path& path, const std::vector<double>& data) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::missing_file, "cannot write " + path.string());
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(data.data()),
              std::streamsize(data.size() * sizeof(double)));
  } else {
    for (double v : data) {
      unsigned char bytes[8];
      std::memcpy(bytes, &v, 8);
      for (int b = 7; b >= 0; --b) out.put(char(bytes[b]));
    }
  }
}

std::vector<double> read_binary(const fs::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) fail(ErrorCode::missing_file, "cannot open " + path.string());
  const auto size = std::size_t(in.tellg());
  if (size % 8 != 0) fail(ErrorCode::schema_violation, path.string() + ": truncated binary");
  in.seekg(0);
  std::vector<double> data(size / 8);
  in.read(reinterpret_cast<char*>(data.data()), std::streamsize(size));
  if constexpr (std::endian::native != std::endian::little) {
    for (double& v : data) {
      unsigned char bytes[8];
      std::memcpy(bytes, &v, 8);
      std::reverse(bytes, bytes + 8);
      std::memcpy(&v, bytes, 8);
    }
  }
  return data;
}

FunctionalDataset load_dataset(const fs::path& dir) {
  FunctionalDataset data;
  const CurveTable y = read_curves(dir / "response.csv");
  const CurveTable x = read_curves(dir / "covariate.csv");
  if (y.ids != x.ids)
    fail(ErrorCode::schema_violation, "response and covariate files list different site ids");
  data.response = y.values;
  data.covariate = x.values;
  data.t_grid = y.grid;
  data.r_grid = x.grid;
  data.ids = y.ids;
  data.t_domain = Interval{y.grid[0], y.grid[y.grid.size() - 1]};
  data.r_domain = Interval{x.grid[0], x.grid[x.grid.size() - 1]};

  if (fs::exists(dir / "meta.json")) {
    std::ifstream in(dir / "meta.json");
    nlohmann::json meta;
    try {
      in >> meta;
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::schema_violation, (dir / "meta.json").string() + ": " + e.what());
    }
    if (meta.contains("t_domain"))
      data.t_domain = Interval{meta["t_domain"][0].get<double>(), meta["t_domain"][1].get<double>()};
    if (meta.contains("r_domain"))
      data.r_domain = Interval{meta["r_domain"][0].get<double>(), meta["r_domain"][1].get<double>()};
  }

  if (fs::exists(dir / "locations.csv")) {
    const Locations loc = read_locations(dir / "locations.csv");
    if (loc.ids != data.ids)
      fail(ErrorCode::schema_violation, "locations.csv ids do not match the curve ids");
    data.spatial = SpatialStructure::continuous(loc.coords);
  } else if (fs::exists(dir / "adjacency.csv")) {
    data.spatial = SpatialStructure::discrete(read_adjacency(dir / "adjacency.csv", data.ids));
  }
  data.validate();
  return data;
}

void save_dataset(const fs::path& dir, const FunctionalDataset& data) {
  data.validate();
  fs::create_directories(dir);
  std::vector<std::string> ids = data.ids;
  if (ids.empty())
    for (Index i = 0; i < data.size(); ++i) ids.push_back(std::to_string(i + 1));
  write_curves(dir / "response.csv", data.t_grid, ids, data.response);
  write_curves(dir / "covariate.csv", data.r_grid, ids, data.covariate);
  if (data.spatial) {
    if (data.spatial->kind == DomainKind::continuous)
      write_locations(dir / "locations.csv", ids, data.spatial->coords);
    else
      write_adjacency(dir / "adjacency.csv", ids, data.spatial->adjacency);
  }
  nlohmann::json meta;
  meta["t_domain"] = {data.t_domain.lo, data.t_domain.hi};
  meta["r_domain"] = {data.r_domain.lo, data.r_domain.hi};
  meta["n"] = data.size();
  std::ofstream out = open_out(dir / "meta.json");
  out << meta.dump(2) << '\n';
}

}  // namespace sfofr::io
