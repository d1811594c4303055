#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <unistd.h>

#include "frontlab/cli.hpp"

namespace fs = std::filesystem;
using namespace frontlab;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("frontlab_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(std::vector<std::string> args, bool with_out = true) {
    if (with_out) {
      args.push_back("--out");
      args.push_back(dir_.string());
    }
    out_.str("");
    err_.str("");
    return cli::run(args, out_, err_);
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

const std::vector<std::string> kPushedRun = {"continue", "--model", "nagumo", "--L", "16", "--dx", "0.1",
                                             "--mode", "pushed", "--from", "mu=0.4", "--to", "mu=0.3",
                                             "--max-step", "0.05", "--profile-every", "0", "--name", "pushed"};

}  // namespace

TEST_F(Cli, Dispersion) {
  EXPECT_EQ(run({"dispersion", "--model", "nagumo", "--param", "mu=0.36"}), 0);
  const auto j = nlohmann::json::parse(slurp(dir_ / "dispersion-nagumo" / "dispersion.json"));
  EXPECT_NEAR(j["c_lin"].get<double>(), 1.2, 1e-10);
  EXPECT_NEAR(j["nu_lin"].get<double>(), -0.6, 1e-10);
  EXPECT_TRUE(j["warnings"].empty());
  EXPECT_TRUE(fs::exists(dir_ / "dispersion-nagumo" / "manifest.json"));
}

TEST_F(Cli, ConfigErrors) {
  // cutoff unresolved: m dx = 3
  EXPECT_EQ(run({"continue", "--model", "nagumo", "--dx", "0.3", "--from", "mu=1", "--to", "mu=0.9"}), cli::kConfigError);
  EXPECT_EQ(run({"continue", "--model", "nagumo", "--N", "100", "--dx", "0.1", "--from", "mu=1"}), cli::kConfigError);
  EXPECT_EQ(run({"dispersion", "--model", "fisher"}), cli::kConfigError);
  EXPECT_EQ(run({"dispersion", "--model", "nagumo", "--param", "mu=abc"}), cli::kConfigError);
  EXPECT_EQ(run({"dispersion", "--model", "nagumo", "--param", "kappa=1"}), cli::kConfigError);
  EXPECT_EQ(run({"validate", "--model", "keller_segel"}), cli::kConfigError);
  EXPECT_EQ(run({"frobnicate"}), cli::kConfigError);
}

TEST_F(Cli, NoTransition) {
  EXPECT_EQ(run({"find-transition", "--model", "nagumo", "--L", "8", "--dx", "0.2", "--from", "mu=1", "--to",
                 "mu=1.3", "--profile-every", "0"}),
            cli::kNoTransition);
}

TEST_F(Cli, FindTransition) {
  EXPECT_EQ(run({"find-transition", "--model", "nagumo", "--from", "mu=1", "--to", "mu=0.2", "--profile-every", "0"}),
            0);
  const auto j = nlohmann::json::parse(slurp(dir_ / "find-transition-nagumo" / "transition.json"));
  EXPECT_NEAR(j["params"]["mu"].get<double>(), 0.5, 1e-4);
  EXPECT_TRUE(fs::exists(dir_ / "find-transition-nagumo" / "pushed.json"));
}

TEST_F(Cli, PushedBranchCsv) {
  ASSERT_EQ(run(kPushedRun), 0) << err_.str();
  const auto rows = parse_csv(slurp(dir_ / "pushed" / "branch.csv"));
  ASSERT_GT(rows.size(), 2u);
  const auto& head = rows.front();
  const auto col = [&](const std::string& name) {
    const auto it = std::find(head.begin(), head.end(), name);
    EXPECT_NE(it, head.end()) << name;
    return static_cast<std::size_t>(it - head.begin());
  };
  const std::size_t imu = col("mu"), ic = col("c");
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const double mu = std::stod(rows[r][imu]);
    EXPECT_NEAR(std::stod(rows[r][ic]), std::sqrt(2.0) * (0.5 + mu), 1e-4) << mu;
  }
  EXPECT_NEAR(std::stod(rows.back()[imu]), 0.3, 1e-12);
}

TEST_F(Cli, PushedBranchMatchesGolden) {
  ASSERT_EQ(run(kPushedRun), 0) << err_.str();
  const auto got = parse_csv(slurp(dir_ / "pushed" / "branch.csv"));
  const auto want = parse_csv(slurp(fs::path(FRONTLAB_GOLDEN_DIR) / "nagumo_pushed_branch.csv"));
  ASSERT_EQ(got.size(), want.size());
  EXPECT_EQ(got.front(), want.front());
  for (std::size_t r = 1; r < got.size(); ++r) {
    ASSERT_EQ(got[r].size(), want[r].size());
    for (std::size_t k = 0; k < got[r].size(); ++k) {
      const double a = std::stod(got[r][k]), b = std::stod(want[r][k]);
      EXPECT_NEAR(a, b, 1e-8 * (1.0 + std::abs(b))) << "row " << r << " column " << want.front()[k];
    }
  }
}

TEST_F(Cli, RerunIsIdentical) {
  std::vector<std::string> args = kPushedRun;
  args[std::find(args.begin(), args.end(), "0") - args.begin()] = "2";
  ASSERT_EQ(run(args), 0);
  EXPECT_EQ(run({"rerun", (dir_ / "pushed" / "manifest.json").string()}, false), 0) << out_.str() << err_.str();
  EXPECT_NE(out_.str().find("identical"), std::string::npos);
  EXPECT_EQ(slurp(dir_ / "pushed" / "branch.csv"), slurp(dir_ / "pushed-rerun" / "branch.csv"));
}

TEST_F(Cli, OutputDirectoryFromEnvironment) {
  ::setenv("FRONTLAB_OUT", dir_.c_str(), 1);
  const int code = run({"dispersion", "--model", "kpp_burgers", "--name", "env"}, false);
  ::unsetenv("FRONTLAB_OUT");
  EXPECT_EQ(code, 0);
  EXPECT_TRUE(fs::exists(dir_ / "env" / "dispersion.json"));
}

TEST(CliExitCodes, Mapping) {
  EXPECT_EQ(cli::exit_code(ErrorKind::NoConvergence), 2);
  EXPECT_EQ(cli::exit_code(ErrorKind::SingularJacobian), 2);
  EXPECT_EQ(cli::exit_code(ErrorKind::ResonanceAbort), 3);
  EXPECT_EQ(cli::exit_code(ErrorKind::InvalidGrid), 4);
  EXPECT_EQ(cli::exit_code(ErrorKind::ParseError), 4);
  EXPECT_EQ(cli::exit_code(ErrorKind::NoTransition), 5);
  EXPECT_EQ(cli::exit_code(ErrorKind::WrongSide), 1);
}

TEST(CliConfig, Validation) {
  cli::RunConfig c;
  EXPECT_NO_THROW(c.validate());
  c.N = 100;
  c.dx = 0.1;
  EXPECT_THROW(c.validate(), Error);
  c.dx.reset();
  EXPECT_EQ(c.grid().N, 100);
  c.N.reset();
  EXPECT_NEAR(c.grid().dx(), 0.1, 1e-15);
  c.from = {"mu", 1.0};
  c.to = {"sigma", 0.5};
  EXPECT_THROW(c.validate(), Error);
}
