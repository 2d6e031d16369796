#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sys/wait.h>
#include <unistd.h>

#include "sfofr/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using Eigen::Index;
using Eigen::MatrixXd;

namespace {

const fs::path& work() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / ("sfofr_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = std::string("cd ") + work().string() + " && " + SFOFR_CLI + " " + args +
                          " > last.out 2> last.err";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

json last_error() {
  std::ifstream in(work() / "last.err");
  std::string line, last;
  while (std::getline(in, line))
    if (!line.empty()) last = line;
  return json::parse(last);
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    ASSERT_EQ(run("simulate --n 120 --seed 4 --out sim"), 0);
    ASSERT_EQ(run("fit --data sim/train --model psfofr --k-basis 8 --g-basis 8 --rank 6 "
                  "--max-edge 0.1 --iters 1200 --burnin 200 --thin 2 --out fit"),
              0);
  }
};

}  // namespace

TEST_F(Cli, SummarizeEmitsNestedBands) {
  ASSERT_EQ(run("summarize --fit fit --alpha 0.05 --alpha 0.10 --contour --out sum"), 0);
  const MatrixXd table = sfofr::io::read_matrix(work() / "sum" / "surface.csv");
  std::ifstream in(work() / "sum" / "surface.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_NE(header.find("lower_0.05"), std::string::npos) << header;
  // r, t, mean, sd, lower/upper/significant at 0.05, then at 0.1.
  for (Index i = 0; i < table.rows(); ++i) {
    EXPECT_GE(table(i, 7), table(i, 4) - 1e-15);
    EXPECT_LE(table(i, 8), table(i, 5) + 1e-15);
  }
}

TEST_F(Cli, PredictScoresHeldOutSites) {
  ASSERT_EQ(run("predict --fit fit --data sim/test --out pred"), 0);
  std::ifstream in(work() / "pred" / "prediction.json");
  const json j = json::parse(in);
  const double mspe = j["alphas"][0]["mspe"];
  EXPECT_GT(mspe, 0.0);
  EXPECT_LT(mspe, 1.0);
  EXPECT_TRUE(fs::exists(work() / "pred" / "predicted_mean.csv"));
}

TEST_F(Cli, BaselineUkRuns) {
  ASSERT_EQ(run("baseline-uk --data sim/train --targets sim/test --g-basis 8 --out uk"), 0);
  EXPECT_TRUE(fs::exists(work() / "uk" / "variogram.csv"));
}

TEST_F(Cli, ConfigFileIsOverriddenByFlags) {
  std::ofstream(work() / "cfg.json") << R"({"iters": 500, "burnin": 100, "thin": 4,
                                         "k_basis": "6", "g-basis": "6", "model": "fofr"})";
  ASSERT_EQ(run("fit --data sim/train --config cfg.json --thin 2 --out fitcfg"), 0);
  std::ifstream in(work() / "fitcfg" / "fit.json");
  const json j = json::parse(in);
  EXPECT_EQ(j["iters"], 500);
  EXPECT_EQ(j["thin"], 2);
  EXPECT_EQ(j["k_n"], 6);
  EXPECT_EQ(j["draws"], 200);
  EXPECT_EQ(j["model"], "fofr");
}

TEST_F(Cli, ErrorsMapToExitCodes) {
  EXPECT_EQ(run("fit --data nowhere --out x"), 3);
  EXPECT_EQ(last_error()["error"]["code"], "missing_file");

  fs::create_directories(work() / "nospatial");
  fs::copy_file(work() / "sim/train/response.csv", work() / "nospatial/response.csv",
                fs::copy_options::overwrite_existing);
  fs::copy_file(work() / "sim/train/covariate.csv", work() / "nospatial/covariate.csv",
                fs::copy_options::overwrite_existing);
  EXPECT_EQ(run("fit --data nospatial --model sfofr --k-basis 6 --g-basis 6 --out x"), 6);
  EXPECT_EQ(last_error()["error"]["code"], "missing_spatial_metadata");

  EXPECT_EQ(run("fit --data sim/train --bogus 1"), 2);
  EXPECT_EQ(run("fit --data sim/train --iters 10 --burnin 20 --k-basis 6 --g-basis 6 --out x"), 2);

  std::ofstream(work() / "nospatial/covariate.csv") << "id,1,2\ns1,1,oops\n";
  EXPECT_EQ(run("fit --data nospatial --model fofr --out x"), 4);
}
