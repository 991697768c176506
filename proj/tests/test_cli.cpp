#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "test_util.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = SSVDD_CLI_PATH;
const std::string kIris = std::string(SSVDD_TEST_DATA_DIR) + "/iris.csv";

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() / ("ssvdd_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  std::string path(const std::string& name) const { return (dir / name).string(); }

  int run(const std::string& args, std::string* out = nullptr) const {
    const std::string stdout_file = path("stdout.txt");
    const std::string cmd = kCli + " " + args + " > " + stdout_file + " 2> " + path("stderr.txt");
    const int status = std::system(cmd.c_str());
    if (out != nullptr) *out = slurp(stdout_file);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
  }

  fs::path dir;
};

}  // namespace

TEST_F(CliTest, TrainSvddGivesIdentityProjection) {
  std::string out;
  ASSERT_EQ(run("train --data " + kIris + " --target-class Setosa --method svdd --kernel linear --C 0.2 --out " +
                path("m.json"), &out),
            0);
  EXPECT_NE(out.find("N=50"), std::string::npos) << out;
  EXPECT_NE(out.find("D=4"), std::string::npos) << out;
  const ssvdd::TrainedModel m = ssvdd::load_model(path("m.json"));
  EXPECT_EQ(m.Q, ssvdd::Matrix::Identity(4, 4));
  EXPECT_EQ(m.config.d, 4);
  const std::string log = slurp(path("stderr.txt"));
  EXPECT_NE(log.find("[config] train"), std::string::npos);
  EXPECT_NE(log.find("seed=42"), std::string::npos);
}

TEST_F(CliTest, TrainTwiceIsByteIdentical) {
  const std::string args = "train --data " + kIris + " --target-class Versicolor --iters 20 --out ";
  ASSERT_EQ(run(args + path("a.json")), 0);
  ASSERT_EQ(run(args + path("b.json")), 0);
  EXPECT_EQ(slurp(path("a.json")), slurp(path("b.json")));
}

TEST_F(CliTest, InfeasibleCExitsThree) {
  std::ofstream csv(path("hundred.csv"));
  const ssvdd::Matrix x = ssvdd::testing::random_matrix(3, 100, 1);
  for (ssvdd::Index i = 0; i < 100; ++i) csv << x(0, i) << ',' << x(1, i) << ',' << x(2, i) << ",t\n";
  csv.close();
  ASSERT_EQ(run("train --data " + path("hundred.csv") + " --target-class t --C 0.001 --out " + path("m.json")), 3);
  EXPECT_NE(slurp(path("stderr.txt")).find("C < 1/N infeasible"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("m.json")));
}

TEST_F(CliTest, UsageAndDataErrors) {
  EXPECT_EQ(run("train --data " + kIris + " --out " + path("m.json")), 1);
  EXPECT_EQ(run("train --data " + kIris + " --target-class Setosa --psi 7 --out " + path("m.json")), 1);
  EXPECT_EQ(run("train --data " + kIris + " --target-class Setosa --zscore maybe --out " + path("m.json")), 1);
  EXPECT_EQ(run("frobnicate"), 1);
  EXPECT_FALSE(fs::exists(path("m.json")));
  EXPECT_EQ(run("train --data " + path("missing.csv") + " --target-class Setosa --out " + path("m.json")), 2);
  EXPECT_EQ(run("train --data " + kIris + " --target-class Nope --out " + path("m.json")), 2);
  EXPECT_FALSE(fs::exists(path("m.json")));
}

TEST_F(CliTest, PredictRoundTrip) {
  ASSERT_EQ(run("train --data " + kIris + " --target-class Setosa --iters 10 --out " + path("m.json")), 0);
  std::string out;
  ASSERT_EQ(run("predict --model " + path("m.json") + " --data " + kIris, &out), 0);
  std::istringstream lines(out);
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "row_index,distance_sq,label");
  int rows = 0;
  int positives_in_setosa = 0;
  while (std::getline(lines, line)) {
    if (rows < 50 && line.find(",positive") != std::string::npos) ++positives_in_setosa;
    ++rows;
  }
  EXPECT_EQ(rows, 150);
  EXPECT_GE(positives_in_setosa, 25);

  ASSERT_EQ(run("predict --model " + path("m.json") + " --data " + kIris + " --out " + path("p.csv")), 0);
  EXPECT_EQ(slurp(path("p.csv")), out);

  std::ofstream narrow(path("narrow.csv"));
  narrow << "1,2,x\n3,4,y\n";
  narrow.close();
  EXPECT_EQ(run("predict --model " + path("m.json") + " --data " + path("narrow.csv") + " --out " + path("q.csv")), 2);
  EXPECT_FALSE(fs::exists(path("q.csv")));
}

TEST_F(CliTest, TraceAndBenchmarkAreDeterministic) {
  const std::string trace = "trace --data " + kIris + " --target-class Setosa --iters 5 --splits 2 --out ";
  ASSERT_EQ(run(trace + path("t1.csv")), 0);
  ASSERT_EQ(run(trace + path("t2.csv")), 0);
  EXPECT_EQ(slurp(path("t1.csv")), slurp(path("t2.csv")));

  std::ofstream cfg(path("bench.json"));
  cfg << R"({"datasets":[{"path":")" << kIris
      << R"(","name":"iris","label_column":"last","has_header":false,"target_classes":["Setosa"]}],)"
      << R"("methods":["svdd-linear","nssvdd-linear-psi2-min"],"repetitions":2,"seed":7,"k_max":5,)"
      << R"("grid":{"C":[0.1,0.3],"d":[2],"beta":[1],"eta":[0.01]}})";
  cfg.close();
  const std::string bench = "benchmark --config " + path("bench.json") + " --jobs 2 --table " + path("table.txt") + " --out ";
  ASSERT_EQ(run(bench + path("r1.csv")), 0);
  ASSERT_EQ(run(bench + path("r2.csv")), 0);
  EXPECT_EQ(slurp(path("r1.csv")), slurp(path("r2.csv")));
  EXPECT_NE(slurp(path("table.txt")).find("iris"), std::string::npos);

  std::ofstream bad(path("bad.json"));
  bad << R"({"datasets":[]})";
  bad.close();
  EXPECT_EQ(run("benchmark --config " + path("bad.json") + " --out " + path("r3.csv")), 2);
  EXPECT_FALSE(fs::exists(path("r3.csv")));
}
