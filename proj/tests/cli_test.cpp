// Runs the installed-style `ocpvars` binary and checks exit codes and output.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#ifndef OCPVARS_CLI_PATH
#error "OCPVARS_CLI_PATH must point at the ocpvars executable"
#endif

namespace {

struct CliRun {
  int status = -1;
  std::string out;  // stdout and stderr merged
};

CliRun run(const std::string& args) {
  const std::string cmd = std::string(OCPVARS_CLI_PATH) + " " + args + " 2>&1";
  CliRun r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe)) r.out += buf.data();
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "ocpvars_cli_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

TEST(Cli, AssertPasses) {
  const CliRun r = run("assert");
  EXPECT_EQ(r.status, 0) << r.out;
  EXPECT_NE(r.out.find("26/26 assertions passed"), std::string::npos) << r.out;
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
}

TEST(Cli, AssertFaultInjectionNamesTheFailure) {
  const CliRun r = run("assert --inject-fault");
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.out.find("assertion failed: X(x, 1, linear_velocity).Index"), std::string::npos) << r.out;
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run("").status, 2);
  EXPECT_EQ(run("no-such-command").status, 2);
  EXPECT_EQ(run("bench-build --reps 1").status, 2);
  EXPECT_EQ(run("bench-access --horizon 0").status, 2);
  EXPECT_EQ(run("demo-quadrotor --dt").status, 2);
  EXPECT_EQ(run("demo-quadrotor --params /nonexistent/params.txt").status, 2);
  EXPECT_EQ(run("bench-build --reps 3 --horizon 30 --rotors 4 --out /nonexistent/dir/out.csv").status, 2);
}

TEST(Cli, HelpExitsZero) { EXPECT_EQ(run("--help").status, 0); }

TEST(Cli, BenchBuildWritesCsv) {
  const auto path = scratch("build.csv");
  const CliRun r = run("bench-build --horizon 30,90,390 --rotors 4,8 --reps 3 --check --out " + path.string());
  EXPECT_EQ(r.status, 0) << r.out;
  const std::string csv = slurp(path);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "horizon,rotors,flavor,median_ns,p90_ns");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 13);
  EXPECT_NE(r.out.find("lazy <= eager holds"), std::string::npos) << r.out;
}

TEST(Cli, BenchAccessWritesCsv) {
  const CliRun r = run("bench-access --horizon 30 --rotors 4 --reps 3");
  EXPECT_EQ(r.status, 0) << r.out;
  EXPECT_NE(r.out.find("horizon,rotors,flavor,raw_ns_per_access,map_ns_per_access,ratio"), std::string::npos);
  EXPECT_NE(r.out.find("30,4,eager,"), std::string::npos);
  EXPECT_NE(r.out.find("30,4,lazy,"), std::string::npos);
}

TEST(Cli, DemoWithParamsFileAndSavedArtifacts) {
  const auto params = scratch("params.txt");
  {
    std::ofstream out(params);
    out << "# heavier airframe\nmass = 1.2\narm_length = 0.25\n";
  }
  const auto csv = scratch("demo.csv");
  const auto inst = scratch("instance.txt");
  const auto res = scratch("result.txt");
  const CliRun r = run("demo-quadrotor --params " + params.string() + " --horizon 20 --dt 0.05 --steps 40 --out " +
                    csv.string() + " --save-instance " + inst.string() + " --save-result " + res.string());
  EXPECT_EQ(r.status, 0) << r.out;
  EXPECT_NE(r.out.find("status: ok"), std::string::npos) << r.out;
  const std::string trajectory = slurp(csv);
  EXPECT_EQ(trajectory.substr(0, trajectory.find('\n')), "t,px,py,pz,qx,qy,qz,qw,vx,vy,vz,wx,wy,wz,u0,u1,u2,u3");
  EXPECT_EQ(std::count(trajectory.begin(), trajectory.end(), '\n'), 42);
  EXPECT_NE(slurp(inst).find("quadrotor.mass=1.2"), std::string::npos);
  EXPECT_EQ(slurp(res).rfind("format=ocpvars-result-1", 0), 0u);
}

TEST(Cli, DemoRejectsBadParams) {
  const auto params = scratch("bad_params.txt");
  {
    std::ofstream out(params);
    out << "wingspan = 3\n";
  }
  EXPECT_EQ(run("demo-quadrotor --steps 1 --params " + params.string()).status, 2);
}

}  // namespace
