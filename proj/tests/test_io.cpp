#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "sfofr/error.hpp"
#include "sfofr/io.hpp"

using namespace sfofr;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::invalid_argument;
}

}  // namespace

TEST(Csv, CurvesRoundTripBitExact) {
  TempDir dir("sfofr_io_curves");
  const VectorXd grid = VectorXd::LinSpaced(7, 0.1, 0.7);
  const MatrixXd values = MatrixXd::Random(3, 7) * 1e3;
  io::write_curves(dir.path / "c.csv", grid, {"a", "b", "c"}, values);
  const io::CurveTable t = io::read_curves(dir.path / "c.csv");
  EXPECT_EQ(t.grid, grid);
  EXPECT_EQ(t.values, values);
  EXPECT_EQ(t.ids, (std::vector<std::string>{"a", "b", "c"}));
}

TEST(Csv, SchemaViolationsCarryLineNumbers) {
  TempDir dir("sfofr_io_bad");
  write_text(dir.path / "na.csv", "id,1,2\ns1,0.5,NA\n");
  write_text(dir.path / "short.csv", "id,1,2\ns1,0.5\n");
  write_text(dir.path / "text.csv", "id,1,2\ns1,abc,1\n");
  for (const char* f : {"na.csv", "short.csv", "text.csv"}) {
    try {
      io::read_curves(dir.path / f);
      FAIL() << f;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::schema_violation) << f;
      EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
    }
  }
  EXPECT_EQ(code_of([&] { io::read_curves(dir.path / "missing.csv"); }), ErrorCode::missing_file);
}

TEST(Csv, LocationsAndAdjacency) {
  TempDir dir("sfofr_io_spatial");
  MatrixXd coords(3, 2);
  coords << 0.1, 0.2, 0.3, 0.4, 0.5, 0.6;
  io::write_locations(dir.path / "l.csv", {"x", "y", "z"}, coords);
  EXPECT_EQ(io::read_locations(dir.path / "l.csv").coords, coords);

  MatrixXd adj = MatrixXd::Zero(3, 3);
  adj(0, 2) = adj(2, 0) = 1.0;
  io::write_adjacency(dir.path / "a.csv", {"x", "y", "z"}, adj);
  EXPECT_EQ(io::read_adjacency(dir.path / "a.csv", {"x", "y", "z"}), adj);
  write_text(dir.path / "unknown.csv", "from,to\nx,w\n");
  EXPECT_EQ(code_of([&] { io::read_adjacency(dir.path / "unknown.csv", {"x", "y"}); }),
            ErrorCode::schema_violation);
  write_text(dir.path / "loop.csv", "from,to\nx,x\n");
  EXPECT_EQ(code_of([&] { io::read_adjacency(dir.path / "loop.csv", {"x", "y"}); }),
            ErrorCode::schema_violation);
}

TEST(Csv, MatrixAndBinary) {
  TempDir dir("sfofr_io_matrix");
  const MatrixXd m = MatrixXd::Random(4, 3);
  io::write_matrix(dir.path / "m.csv", m);
  EXPECT_EQ(io::read_matrix(dir.path / "m.csv"), m);
  const std::vector<double> v{1.5, -2.25, 1e-300, 3.141592653589793};
  io::write_binary(dir.path / "v.bin", v);
  EXPECT_EQ(io::read_binary(dir.path / "v.bin"), v);
  EXPECT_EQ(fs::file_size(dir.path / "v.bin"), 32u);
}

TEST(Dataset, SaveLoadKeepsDomainsAndSpatialData) {
  TempDir dir("sfofr_io_dataset");
  FunctionalDataset d;
  d.t_grid = VectorXd::LinSpaced(5, 1.0, 5.0);
  d.r_grid = VectorXd::LinSpaced(4, 1.0, 4.0);
  d.t_domain = {0.0, 5.0};
  d.r_domain = {0.0, 4.0};
  d.response = MatrixXd::Random(3, 5);
  d.covariate = MatrixXd::Random(3, 4);
  d.ids = {"p", "q", "r"};
  d.spatial = SpatialStructure::continuous(MatrixXd::Random(3, 2));
  io::save_dataset(dir.path, d);
  const FunctionalDataset back = io::load_dataset(dir.path);
  EXPECT_EQ(back.response, d.response);
  EXPECT_EQ(back.covariate, d.covariate);
  EXPECT_EQ(back.t_domain.lo, 0.0);
  EXPECT_EQ(back.r_domain.hi, 4.0);
  ASSERT_TRUE(back.spatial.has_value());
  EXPECT_EQ(back.spatial->coords, d.spatial->coords);

  write_text(dir.path / "covariate.csv", "id,1,2,3,4\np,1,2,3,4\nq,1,2,3,4\nzz,1,2,3,4\n");
  EXPECT_EQ(code_of([&] { io::load_dataset(dir.path); }), ErrorCode::schema_violation);
}

TEST(Format, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 225.0}) {
    EXPECT_EQ(std::stod(io::format_number(v)), v);
  }
  EXPECT_EQ(io::format_number(0.1), "0.1");
}
