#include <sys/wait.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

using nlohmann::json;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

CliRun run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + std::string(LAPCERT_CLI_PATH) + " " + args + " 2>&1";
  CliRun r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string data(const std::string& name) { return std::string(LAPCERT_DATA_DIR) + "/" + name; }

std::filesystem::path temp_dir(const std::string& name) {
  auto d = std::filesystem::temp_directory_path() / ("lapcert_cli_" + name);
  std::filesystem::remove_all(d);
  std::filesystem::create_directories(d);
  return d;
}

json run_json(const std::string& args) {
  const CliRun r = run(args);
  EXPECT_EQ(r.code, 0) << r.out;
  return json::parse(r.out);
}

}  // namespace

TEST(Cli, SolveExp1d) {
  const json j = run_json("solve --builtin exp1d --y 2");
  EXPECT_NEAR(j["u_map"][0].get<double>(), 0.5244798110606967, 1e-10);
  EXPECT_TRUE(j["map"]["converged"].get<bool>());
}

TEST(Cli, SolveLinearIsOneStep) {
  const json j = run_json("solve --builtin linear");
  EXPECT_TRUE(j["one_step"].get<bool>());
}

TEST(Cli, LaplaceReportsCovariance) {
  const json j = run_json("laplace --builtin exp1d --y 2");
  const double var = j["laplace"]["covariance"]["data"][0].get<double>();
  EXPECT_NEAR(1.0 / var, 3.330199815999237, 1e-9);
}

TEST(Cli, CertifyExp1d) {
  const json j = run_json("certify --builtin exp1d --y -2 --engine gh --order 400");
  EXPECT_NEAR(j["d_hellinger"].get<double>(), 0.10389540692322792, 1e-6);
  EXPECT_NEAR(j["prop61"]["K"].get<double>(), 0.14662538907794723, 1e-6);
  EXPECT_TRUE(j["prop61"]["valid"].get<bool>());
  EXPECT_LE(j["d_hellinger"].get<double>(), j["cor63"]["bound"].get<double>());
}

TEST(Cli, CertifyLinearIsExact) {
  const json j = run_json("certify --spec " + data("linear.json"));
  EXPECT_LE(j["d_hellinger"].get<double>(), 1e-6);
  EXPECT_LE(j["prop61"]["K"].get<double>(), 1e-6);
  EXPECT_LE(j["cor63"]["K"].get<double>(), 1e-6);
}

TEST(Cli, CertifyIsDeterministic) {
  for (const std::string args : {"certify --builtin quad2d", "certify --builtin quad2d --engine mc --samples 30000 --seed 4"}) {
    const CliRun a = run(args);
    const CliRun b = run(args);
    EXPECT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
  }
}

TEST(Cli, ThreadCountDoesNotChangeMonteCarlo) {
  const std::string args = "certify --builtin quad2d --engine mc --samples 40000 --seed 8";
  const CliRun a = run(args, "env LAPLACE_CERT_THREADS=1 ");
  const CliRun b = run(args, "env LAPLACE_CERT_THREADS=4 ");
  EXPECT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
}

TEST(Cli, WritesOutFile) {
  const auto dir = temp_dir("out");
  const auto path = dir / "solve.json";
  const CliRun r = run("solve --spec " + data("exp_scaled.json") + " --out " + path.string());
  ASSERT_EQ(r.code, 0) << r.out;
  std::ifstream in(path);
  const json j = json::parse(in);
  EXPECT_EQ(j["command"], "solve");
}

TEST(Cli, MalformedSpecExitsOne) {
  const CliRun r = run("solve --spec " + data("malformed.json"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("line 4"), std::string::npos) << r.out;
}

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run("solve").code, 1);
  EXPECT_EQ(run("solve --builtin exp1d --spec " + data("exp1d.json")).code, 1);
  EXPECT_EQ(run("solve --builtin nope").code, 1);
  EXPECT_EQ(run("solve --spec " + data("bad_dims.json")).code, 1);
  EXPECT_EQ(run("solve --builtin exp1d --y 1,2").code, 1);
  EXPECT_EQ(run("certify --builtin exp1d --engine simpson").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
}

TEST(Cli, SolverFailureExitsTwo) {
  const CliRun r = run("solve --spec " + data("overflow.json"));
  EXPECT_EQ(r.code, 2) << r.out;
}

TEST(Cli, CheckDerivatives) {
  for (const std::string name : {"exp1d", "linear", "quad2d"}) {
    const json j = run_json("check-derivatives --builtin " + name);
    EXPECT_TRUE(j["passed"].get<bool>()) << name;
    EXPECT_EQ(j["checks"].size(), 4u);
  }
}

TEST(Cli, ReproducePaperWritesDensities) {
  const auto dir = temp_dir("reproduce");
  const CliRun r = run("reproduce-paper --out " + dir.string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(std::filesystem::exists(dir / "reproduce.json"));
  for (const std::string name : {"density_y-2.csv", "density_y2.csv"}) {
    std::ifstream in(dir / name);
    ASSERT_TRUE(in) << name;
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "u,posterior_density,laplace_density");
    std::vector<std::array<double, 3>> rows;
    while (std::getline(in, line)) {
      std::stringstream ss(line);
      std::array<double, 3> v{};
      char comma;
      ss >> v[0] >> comma >> v[1] >> comma >> v[2];
      rows.push_back(v);
    }
    ASSERT_EQ(rows.size(), 801u);
    EXPECT_NEAR(rows.front()[0], -4.0, 1e-12);
    EXPECT_NEAR(rows.back()[0], 4.0, 1e-12);
    // Both densities carry essentially all their mass on [-4, 4].
    double post = 0.0, lap = 0.0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const double h = rows[i][0] - rows[i - 1][0];
      post += 0.5 * h * (rows[i][1] + rows[i - 1][1]);
      lap += 0.5 * h * (rows[i][2] + rows[i - 1][2]);
    }
    EXPECT_NEAR(post, 1.0, 1e-3) << name;
    EXPECT_NEAR(lap, 1.0, 1e-3) << name;
  }
}
