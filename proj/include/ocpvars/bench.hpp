#pragma once

// Harness behind the `ocpvars` command-line tool: the reference assertion
// suite, map construction/access benchmarks and the closed-loop quadrotor
// demo. Everything here returns data; printing and exit codes live in the
// tool.

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ocpvars/dynamics.hpp"
#include "ocpvars/sqp.hpp"

namespace ocpvars {

// ---------------------------------------------------------------------------
// Assertion suite

struct AssertionRecord {
  std::string name;
  std::string expected;
  std::string actual;
  bool passed = false;
};

struct AssertionReport {
  std::vector<AssertionRecord> records;

  bool all_passed() const;
  std::vector<std::string> failures() const;
  // Fixed-width table, one row per assertion.
  std::string table() const;
};

/// Sizes, indices and bypass equalities of the multirotor hierarchy (N = 30,
/// four rotors), the locomotion and loco-manipulation totals against a
/// recursive-sum count, and ambiguity detection. With `inject_fault` the
/// index of X(x, 1, linear_velocity) is deliberately shifted by one, so
/// exactly that assertion fails.
AssertionReport run_paper_assertions(bool inject_fault = false);

// ---------------------------------------------------------------------------
// Benchmarks

struct BenchConfig {
  std::vector<std::size_t> horizons{30, 90, 390};
  std::vector<std::size_t> rotors{4, 8};
  int repetitions = 5;
  int warmup = 1;
  std::string output;  // empty: caller decides (stdout)

  // Throws kValidation: empty grid, zero grid entry, repetitions < 3,
  // negative warmup.
  void validate() const;
};

struct BuildRow {
  std::size_t horizon = 0;
  std::size_t rotors = 0;
  std::string flavor;  // "eager" or "lazy"
  double median_ns = 0.0;
  double p90_ns = 0.0;
};

struct AccessRow {
  std::size_t horizon = 0;
  std::size_t rotors = 0;
  std::string flavor;
  double raw_ns_per_access = 0.0;
  double map_ns_per_access = 0.0;
  double ratio = 0.0;
};

/// Times hierarchy build plus map construction (eager: owned buffer and view
/// table; lazy: buffer allocation and binding) for every grid point. Rows are
/// ordered by horizon, then rotors, then eager before lazy.
std::vector<BuildRow> bench_build(const BenchConfig& config);

/// Times randomised leaf reads through pre-resolved eager handles, lazy
/// views and hand-written offset arithmetic over one buffer. Throws
/// kEvaluation if the three paths ever read different values.
std::vector<AccessRow> bench_access(const BenchConfig& config, unsigned seed = 7);

// Median and 90th percentile (nearest rank) of a sample; empty throws.
double percentile(std::vector<double> samples, double fraction);

inline constexpr const char* kBuildCsvHeader = "horizon,rotors,flavor,median_ns,p90_ns";
inline constexpr const char* kAccessCsvHeader = "horizon,rotors,flavor,raw_ns_per_access,map_ns_per_access,ratio";
inline constexpr const char* kDemoCsvHeader = "t,px,py,pz,qx,qy,qz,qw,vx,vy,vz,wx,wy,wz,u0,u1,u2,u3";

void write_csv(std::ostream& out, const std::vector<BuildRow>& rows);
void write_csv(std::ostream& out, const std::vector<AccessRow>& rows);

// ---------------------------------------------------------------------------
// Closed-loop demo

struct DemoConfig {
  QuadrotorParams params;
  std::size_t horizon = 30;
  double dt = 0.05;
  std::size_t steps = 200;
  Eigen::Vector3d initial_position{1.0, 0.0, 0.0};
  Eigen::Vector3d target{0.0, 0.0, 0.0};
  // Optional reference change: from step `target_step_at` on, regulate to
  // `target_step`.
  std::optional<std::size_t> target_step_at;
  Eigen::Vector3d target_step{0.0, 0.0, 0.0};
  SqpOptions options;

  void validate() const;
};

struct DemoSample {
  double t = 0.0;
  RigidBodyState<double> state;
  Eigen::VectorXd input;  // applied during [t, t + dt); held on the final sample
};

struct DemoSummary {
  std::size_t solves = 0;
  int total_iterations = 0;
  int max_iterations = 0;
  double worst_final_defect = 0.0;
  double mean_solve_seconds = 0.0;
  double max_solve_seconds = 0.0;
  double terminal_position_error = 0.0;  // against the target active at the end
  double max_quaternion_norm_error = 0.0;
  bool failed = false;
  std::string failure;  // solver termination or error text when failed
};

struct DemoResult {
  std::vector<DemoSample> samples;  // steps + 1 when the run completes
  DemoSummary summary;
  std::optional<OcpInstance> first_instance;
  std::optional<SqpResult> first_result;
};

/// Receding-horizon loop: solve, apply the first input, integrate the plant
/// one step with the model's integrator, shift the solution as the next
/// guess. Stops at the first solve that does not converge.
DemoResult run_quadrotor_demo(const DemoConfig& config);

void write_csv(std::ostream& out, const std::vector<DemoSample>& samples);
std::string summary_text(const DemoSummary& summary);

}  // namespace ocpvars
