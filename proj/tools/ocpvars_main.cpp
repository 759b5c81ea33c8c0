// ocpvars: assertion suite, map benchmarks and the closed-loop quadrotor demo.
//
// Exit codes: 0 success, 1 assertion or solver failure, 2 usage error
// (bad flags, invalid configuration, unreadable/unwritable files).

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ocpvars/bench.hpp"
#include "ocpvars/error.hpp"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

// Writes through `emit` to the file at `path`, or to stdout when empty.
template <class Emit>
void with_output(const std::string& path, Emit&& emit) {
  if (path.empty()) {
    emit(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path);
  if (!out) throw ocpvars::Error(ocpvars::ErrorCode::kIo, "cannot open '" + path + "' for writing");
  emit(out);
  out.flush();
  if (!out) throw ocpvars::Error(ocpvars::ErrorCode::kIo, "failed writing '" + path + "'");
}

void write_text(const std::string& path, const std::string& text) {
  with_output(path, [&](std::ostream& out) { out << text; });
}

Eigen::Vector3d vec3(const std::vector<double>& v) { return {v[0], v[1], v[2]}; }

int cmd_assert(bool inject_fault) {
  const auto report = ocpvars::run_paper_assertions(inject_fault);
  std::cout << report.table();
  const auto failures = report.failures();
  std::cout << report.records.size() - failures.size() << "/" << report.records.size() << " assertions passed\n";
  for (const auto& name : failures) std::cerr << "assertion failed: " << name << '\n';
  return failures.empty() ? 0 : kExitFailure;
}

int cmd_bench_build(const ocpvars::BenchConfig& config, bool check) {
  const auto rows = ocpvars::bench_build(config);
  with_output(config.output, [&](std::ostream& out) { ocpvars::write_csv(out, rows); });
  // Largest grid point is the last eager/lazy pair.
  const auto& eager = rows[rows.size() - 2];
  const auto& lazy = rows.back();
  const bool ok = lazy.median_ns <= eager.median_ns;
  std::fprintf(stderr, "N=%zu rotors=%zu: lazy median %.0f ns, eager median %.0f ns -> lazy <= eager %s\n",
               lazy.horizon, lazy.rotors, lazy.median_ns, eager.median_ns, ok ? "holds" : "does NOT hold");
  return (check && !ok) ? kExitFailure : 0;
}

int cmd_bench_access(const ocpvars::BenchConfig& config, double gate, bool check) {
  const auto rows = ocpvars::bench_access(config);
  with_output(config.output, [&](std::ostream& out) { ocpvars::write_csv(out, rows); });
  bool ok = true;
  for (const auto& r : rows) {
    if (r.flavor == "eager" && r.ratio > gate) ok = false;
  }
  std::fprintf(stderr, "eager access ratio <= %.2f at every grid point: %s\n", gate, ok ? "yes" : "NO");
  return (check && !ok) ? kExitFailure : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variable hierarchies for optimal control: assertions, benchmarks and an MPC demo"};
  app.require_subcommand(1);

  bool inject_fault = false;
  auto* assert_cmd = app.add_subcommand("assert", "Check reference sizes, indices and bypass equalities");
  assert_cmd->add_flag("--inject-fault", inject_fault, "Shift one expected index to exercise the failure path");

  ocpvars::BenchConfig build_config;
  bool build_check = false;
  auto* build_cmd = app.add_subcommand("bench-build", "Time hierarchy and map construction");
  build_cmd->add_option("--horizon", build_config.horizons, "Horizon grid")->delimiter(',')->capture_default_str();
  build_cmd->add_option("--rotors", build_config.rotors, "Rotor-count grid")->delimiter(',')->capture_default_str();
  build_cmd->add_option("--reps", build_config.repetitions, "Timed repetitions (>= 3)")->capture_default_str();
  build_cmd->add_option("--warmup", build_config.warmup, "Untimed warm-up runs")->capture_default_str();
  build_cmd->add_option("--out", build_config.output, "CSV output path (default stdout)");
  build_cmd->add_flag("--check", build_check, "Exit 1 unless lazy <= eager at the largest grid point");

  ocpvars::BenchConfig access_config;
  bool access_check = false;
  double access_gate = 2.0;
  auto* access_cmd = app.add_subcommand("bench-access", "Time leaf access through maps vs raw offsets");
  access_cmd->add_option("--horizon", access_config.horizons, "Horizon grid")->delimiter(',')->capture_default_str();
  access_cmd->add_option("--rotors", access_config.rotors, "Rotor-count grid")->delimiter(',')->capture_default_str();
  access_cmd->add_option("--reps", access_config.repetitions, "Timed repetitions (>= 3)")->capture_default_str();
  access_cmd->add_option("--warmup", access_config.warmup, "Untimed warm-up runs")->capture_default_str();
  access_cmd->add_option("--out", access_config.output, "CSV output path (default stdout)");
  access_cmd->add_option("--gate", access_gate, "Eager ratio gate")->capture_default_str();
  access_cmd->add_flag("--check", access_check, "Exit 1 if an eager ratio exceeds the gate");

  ocpvars::DemoConfig demo;
  std::string params_path, demo_out, save_instance, save_result;
  std::vector<double> offset{1.0, 0.0, 0.0}, target{0.0, 0.0, 0.0}, step_target;
  std::size_t step_at = 0;
  auto* demo_cmd = app.add_subcommand("demo-quadrotor", "Closed-loop quadrotor MPC; trajectory CSV");
  demo_cmd->add_option("--params", params_path, "Quadrotor parameters (key = value lines)")->check(CLI::ExistingFile);
  demo_cmd->add_option("--horizon", demo.horizon, "OCP horizon")->capture_default_str();
  demo_cmd->add_option("--dt", demo.dt, "Time step [s]")->capture_default_str();
  demo_cmd->add_option("--steps", demo.steps, "Closed-loop steps")->capture_default_str();
  demo_cmd->add_option("--offset", offset, "Initial position")->expected(3)->capture_default_str();
  demo_cmd->add_option("--target", target, "Hover target position")->expected(3)->capture_default_str();
  auto* step_at_opt = demo_cmd->add_option("--step-at", step_at, "Step index of a reference change");
  demo_cmd->add_option("--step-target", step_target, "Target after the reference change")
      ->expected(3)
      ->needs(step_at_opt);
  demo_cmd->add_option("--out", demo_out, "CSV output path (default stdout)");
  demo_cmd->add_option("--save-instance", save_instance, "Write the first OCP instance");
  demo_cmd->add_option("--save-result", save_result, "Write the first solver result");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*assert_cmd) return cmd_assert(inject_fault);
    if (*build_cmd) return cmd_bench_build(build_config, build_check);
    if (*access_cmd) return cmd_bench_access(access_config, access_gate, access_check);

    if (!params_path.empty()) {
      demo.params = ocpvars::quadrotor_params_from(ocpvars::read_key_values(params_path));
    }
    demo.initial_position = vec3(offset);
    demo.target = vec3(target);
    if (*step_at_opt) {
      demo.target_step_at = step_at;
      demo.target_step = step_target.empty() ? demo.target : vec3(step_target);
    }
    const auto result = ocpvars::run_quadrotor_demo(demo);
    with_output(demo_out, [&](std::ostream& out) { ocpvars::write_csv(out, result.samples); });
    if (!save_instance.empty() && result.first_instance) {
      write_text(save_instance, ocpvars::serialize_instance(*result.first_instance));
    }
    if (!save_result.empty() && result.first_result) {
      write_text(save_result, ocpvars::serialize_result(*result.first_result));
    }
    std::cerr << ocpvars::summary_text(result.summary);
    return result.summary.failed ? kExitFailure : 0;
  } catch (const ocpvars::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    switch (e.code()) {
      case ocpvars::ErrorCode::kValidation:
      case ocpvars::ErrorCode::kIo:
      case ocpvars::ErrorCode::kDomain:
        return kExitUsage;
      default:
        return kExitFailure;
    }
  }
}
