#include "ocpvars/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>

#include "ocpvars/expr.hpp"
#include "ocpvars/fixtures.hpp"
#include "ocpvars/varmap.hpp"

namespace ocpvars {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ns(Clock::time_point start) {
  return std::chrono::duration<double, std::nano>(Clock::now() - start).count();
}

// Keeps benchmark results observable so the work is not optimised away.
volatile double g_sink = 0.0;

std::string fmt(double v, const char* spec = "%.1f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

// ---------------------------------------------------------------------------
// Assertion suite

// Plain declaration tree summed recursively; shares nothing with Hierarchy.
struct SizeDecl {
  std::size_t count = 1;
  std::size_t leaf_size = 0;
  std::vector<SizeDecl> children;
};

std::size_t recursive_size(const SizeDecl& d) {
  if (d.children.empty()) return d.count * d.leaf_size;
  std::size_t sum = 0;
  for (const SizeDecl& c : d.children) sum += recursive_size(c);
  return d.count * sum;
}

SizeDecl rigid_body_decl(std::size_t count = 1) { return {count, 0, {{1, 3, {}}, {1, 4, {}}, {1, 3, {}}, {1, 3, {}}}}; }
SizeDecl pair_decl(std::size_t count) { return {count, 0, {{1, 3, {}}, {1, 3, {}}}}; }

SizeDecl locomotion_decl(std::size_t horizon, std::size_t legs) {
  return {1, 0, {rigid_body_decl(horizon + 1), {horizon, 0, {pair_decl(legs)}}}};
}

SizeDecl loco_manipulation_decl(std::size_t horizon, std::size_t robots, std::size_t legs) {
  const SizeDecl x{horizon + 1, 0, {rigid_body_decl(), rigid_body_decl(robots)}};
  const SizeDecl robot_input{robots, 0, {pair_decl(legs), pair_decl(1)}};
  return {1, 0, {x, {horizon, 0, {robot_input}}}};
}

class Suite {
 public:
  explicit Suite(AssertionReport& report) : report_(report) {}

  void equal(std::string name, long long expected, const std::function<long long()>& actual) {
    AssertionRecord r{std::move(name), std::to_string(expected), "", false};
    try {
      const long long v = actual();
      r.actual = std::to_string(v);
      r.passed = v == expected;
    } catch (const std::exception& e) {
      r.actual = std::string("error: ") + e.what();
    }
    report_.records.push_back(std::move(r));
  }

  void same(std::string name, const Hierarchy& root, const Query& lhs, const Query& rhs) {
    AssertionRecord r{std::move(name), "equal", "", false};
    try {
      const ResolvedVariable a = resolve(root, lhs);
      const ResolvedVariable b = resolve(root, rhs);
      r.passed = a == b;
      r.actual = r.passed ? "equal" : a.chain_string() + " vs " + b.chain_string();
    } catch (const std::exception& e) {
      r.actual = std::string("error: ") + e.what();
    }
    report_.records.push_back(std::move(r));
  }

  void raises(std::string name, ErrorCode expected, const std::function<void()>& body) {
    AssertionRecord r{std::move(name), std::string(to_string(expected)), "no error", false};
    try {
      body();
    } catch (const Error& e) {
      r.actual = std::string(to_string(e.code()));
      r.passed = e.code() == expected;
    } catch (const std::exception& e) {
      r.actual = e.what();
    }
    report_.records.push_back(std::move(r));
  }

 private:
  AssertionReport& report_;
};

}  // namespace

bool AssertionReport::all_passed() const {
  return !records.empty() && std::all_of(records.begin(), records.end(), [](const auto& r) { return r.passed; });
}

std::vector<std::string> AssertionReport::failures() const {
  std::vector<std::string> out;
  for (const auto& r : records) {
    if (!r.passed) out.push_back(r.name);
  }
  return out;
}

std::string AssertionReport::table() const {
  std::size_t width = 9;
  for (const auto& r : records) width = std::max(width, r.name.size());
  std::ostringstream out;
  char line[512];
  std::snprintf(line, sizeof line, "%-6s %-*s %-12s %s\n", "result", static_cast<int>(width), "assertion",
                "expected", "actual");
  out << line;
  for (const auto& r : records) {
    std::snprintf(line, sizeof line, "%-6s %-*s %-12s %s\n", r.passed ? "PASS" : "FAIL", static_cast<int>(width),
                  r.name.c_str(), r.expected.c_str(), r.actual.c_str());
    out << line;
  }
  return out.str();
}

AssertionReport run_paper_assertions(bool inject_fault) {
  AssertionReport report;
  Suite s(report);
  const auto v = fixtures::multirotor(30, 4);
  const auto& X = v.X;
  const auto& U = v.U;
  const auto& dv = v.decision_variables;
  auto index = [](const Hierarchy& h, const Query& q) { return static_cast<long long>(resolve(h, q).offset); };

  s.equal("x.Size", 13, [&] { return static_cast<long long>(v.x.size()); });
  s.equal("X.Size", 403, [&] { return static_cast<long long>(X.size()); });
  s.equal("u.Size", 4, [&] { return static_cast<long long>(v.u.size()); });
  s.equal("U.Size", 120, [&] { return static_cast<long long>(U.size()); });
  s.equal("decision_variables.Size", 523, [&] { return static_cast<long long>(dv.size()); });

  s.equal("X(x, 0).Index", 0, [&] { return index(X, {"x", 0}); });
  s.equal("X(x, 1).Index == x.Size", static_cast<long long>(v.x.size()), [&] { return index(X, {"x", 1}); });
  s.equal("X(x, 1, linear_velocity).Index", 20,
          [&] { return index(X, {"x", 1, "linear_velocity"}) + (inject_fault ? 1 : 0); });
  s.equal("decision_variables(U).Index == X.Size", static_cast<long long>(X.size()),
          [&] { return index(dv, {"U"}); });
  s.equal("U(u, 0).Index", 0, [&] { return index(U, {"u", 0}); });
  s.equal("U(u, 1).Index", 4, [&] { return index(U, {"u", 1}); });
  s.equal("U(u, 1, rotor_speed, 0).Index", 4, [&] { return index(U, {"u", 1, "rotor_speed", 0}); });
  s.equal("U(u, 1, rotor_speed, 1).Index", 5, [&] { return index(U, {"u", 1, "rotor_speed", 1}); });

  s.same("X(x, 1, linear_velocity) == X(linear_velocity, 1)", X, {"x", 1, "linear_velocity"},
         {"linear_velocity", 1});
  s.same("U(u, 1, rotor_speed, 0) == U(rotor_speed, 1, 0)", U, {"u", 1, "rotor_speed", 0}, {"rotor_speed", 1, 0});
  s.same("U(u, 1, rotor_speed, 1) == U(rotor_speed, 1, 1)", U, {"u", 1, "rotor_speed", 1}, {"rotor_speed", 1, 1});
  s.same("dv(X, x, 1, linear_velocity) == dv(linear_velocity, 1)", dv, {"X", "x", 1, "linear_velocity"},
         {"linear_velocity", 1});
  s.same("dv(U, u, 2, rotor_speed, 3) == dv(u, 2, rotor_speed, 3)", dv, {"U", "u", 2, "rotor_speed", 3},
         {"u", 2, "rotor_speed", 3});
  s.same("dv(U, u, 2, rotor_speed, 3) == dv(rotor_speed, 2, 3)", dv, {"U", "u", 2, "rotor_speed", 3},
         {"rotor_speed", 2, 3});

  const auto macros = fixtures::multirotor_macros(30, 4);
  s.equal("macro spelling decision_variables.Size", 523,
          [&] { return static_cast<long long>(macros.decision_variables.size()); });

  const auto loco = fixtures::locomotion(30, 4);
  const auto clm = fixtures::loco_manipulation(10, 2, 4);
  s.equal("locomotion (N=30) recursive sum", 1123,
          [&] { return static_cast<long long>(recursive_size(locomotion_decl(30, 4))); });
  s.equal("locomotion (N=30) decision_variables.Size", 1123,
          [&] { return static_cast<long long>(loco.decision_variables.size()); });
  s.equal("loco-manipulation (N=10, 2 robots) recursive sum", 1029,
          [&] { return static_cast<long long>(recursive_size(loco_manipulation_decl(10, 2, 4))); });
  s.equal("loco-manipulation (N=10, 2 robots) decision_variables.Size", 1029,
          [&] { return static_cast<long long>(clm.decision_variables.size()); });

  s.raises("loco-manipulation X(position, 0) is ambiguous", ErrorCode::kAmbiguous,
           [&] { resolve(clm.X, {"position", 0}); });
  s.raises("sibling duplicate leaves are ambiguous", ErrorCode::kAmbiguous, [&] {
    const auto a = bind("a", concat({leaf("value", Kind::scalar())}));
    const auto b = bind("b", concat({leaf("value", Kind::scalar())}));
    resolve(build(bind("top", concat({a, b}))), {"value"});
  });
  return report;
}

// ---------------------------------------------------------------------------
// Benchmarks

void BenchConfig::validate() const {
  if (horizons.empty() || rotors.empty()) throw Error(ErrorCode::kValidation, "benchmark grid is empty");
  for (std::size_t n : horizons) {
    if (n == 0) throw Error(ErrorCode::kValidation, "horizon grid entries must be positive");
  }
  for (std::size_t r : rotors) {
    if (r == 0) throw Error(ErrorCode::kValidation, "rotor grid entries must be positive");
  }
  if (repetitions < 3) throw Error(ErrorCode::kValidation, "repetitions must be at least 3");
  if (warmup < 0) throw Error(ErrorCode::kValidation, "warmup count must be non-negative");
}

double percentile(std::vector<double> samples, double fraction) {
  if (samples.empty()) throw Error(ErrorCode::kValidation, "percentile of an empty sample");
  std::sort(samples.begin(), samples.end());
  const auto rank = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(samples.size())));
  return samples[std::clamp<std::size_t>(rank, 1, samples.size()) - 1];
}

namespace {

// The multirotor decision variables, built as a single hierarchy.
Hierarchy multirotor_decision_variables(std::size_t horizon, std::size_t rotors) {
  const auto x = bind("x", concat({leaf("position", Kind::vector(3)), leaf("orientation", Kind::quaternion()),
                                   leaf("linear_velocity", Kind::vector(3)),
                                   leaf("angular_velocity", Kind::vector(3))}));
  const auto u = bind("u", replicate(rotors, leaf("rotor_speed", Kind::scalar())));
  return build(bind("decision_variables",
                    concat({bind("X", replicate(horizon + 1, x)), bind("U", replicate(horizon, u))})));
}

template <class Body>
std::vector<double> time_repeated(const BenchConfig& config, Body&& body) {
  for (int i = 0; i < config.warmup; ++i) body();
  std::vector<double> samples;
  samples.reserve(static_cast<std::size_t>(config.repetitions));
  for (int i = 0; i < config.repetitions; ++i) {
    const auto start = Clock::now();
    body();
    samples.push_back(elapsed_ns(start));
  }
  return samples;
}

struct Access {
  std::size_t leaf;  // 0..3 state leaves, 4 rotor speed
  std::size_t k;
  std::size_t j;     // rotor index
};

constexpr std::size_t kLeafOffset[] = {0, 3, 7, 10};
constexpr std::size_t kLeafSize[] = {3, 4, 3, 3};
constexpr const char* kLeafName[] = {"position", "orientation", "linear_velocity", "angular_velocity"};
constexpr std::size_t kAccessesPerRep = 1u << 16;

}  // namespace

std::vector<BuildRow> bench_build(const BenchConfig& config) {
  config.validate();
  std::vector<BuildRow> rows;
  for (std::size_t n : config.horizons) {
    for (std::size_t r : config.rotors) {
      const auto eager = time_repeated(config, [&] {
        EagerMap<double> map(multirotor_decision_variables(n, r));
        g_sink = map.root().data()[0] + static_cast<double>(map.table().size());
      });
      const auto lazy = time_repeated(config, [&] {
        Hierarchy h = multirotor_decision_variables(n, r);
        std::vector<double> buffer(h.size(), 0.0);
        LazyMap<double> map(std::move(h), std::span<double>(buffer));
        g_sink = map.root().data()[0] + static_cast<double>(map.size());
      });
      rows.push_back({n, r, "eager", percentile(eager, 0.5), percentile(eager, 0.9)});
      rows.push_back({n, r, "lazy", percentile(lazy, 0.5), percentile(lazy, 0.9)});
    }
  }
  return rows;
}

std::vector<AccessRow> bench_access(const BenchConfig& config, unsigned seed) {
  config.validate();
  std::mt19937 rng(seed);
  std::vector<AccessRow> rows;
  for (std::size_t n : config.horizons) {
    for (std::size_t r : config.rotors) {
      const Hierarchy h = multirotor_decision_variables(n, r);
      EagerMap<double> eager(h);
      std::uniform_real_distribution<double> value(-1.0, 1.0);
      for (double& s : eager.buffer()) s = value(rng);
      const LazyMap<double> lazy(h, eager.buffer());

      // Random leaves, resolved once up front for the map paths.
      std::uniform_int_distribution<std::size_t> pick_leaf(0, 4);
      std::vector<Access> accesses;
      std::vector<EntryHandle> handles;
      std::vector<ResolvedVariable> resolved;
      for (std::size_t i = 0; i < kAccessesPerRep; ++i) {
        const std::size_t leaf = pick_leaf(rng);
        Access a{leaf, 0, 0};
        Query q = {"x"};
        if (leaf < 4) {
          a.k = std::uniform_int_distribution<std::size_t>(0, n)(rng);
          q = Query{"x", a.k, kLeafName[leaf]};
        } else {
          a.k = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
          a.j = std::uniform_int_distribution<std::size_t>(0, r - 1)(rng);
          q = Query{"u", a.k, "rotor_speed", a.j};
        }
        accesses.push_back(a);
        resolved.push_back(resolve(h, q));
        handles.push_back({resolved.back().entry});
      }

      const double* base = eager.data();
      const std::size_t states = 13 * (n + 1);
      double raw_sum = 0, eager_sum = 0, lazy_sum = 0;
      const auto raw_samples = time_repeated(config, [&] {
        double sum = 0;
        for (const Access& a : accesses) {
          const std::size_t offset = a.leaf < 4 ? a.k * 13 + kLeafOffset[a.leaf] : states + a.k * r + a.j;
          const std::size_t size = a.leaf < 4 ? kLeafSize[a.leaf] : 1;
          for (std::size_t i = 0; i < size; ++i) sum += base[offset + i];
        }
        raw_sum = sum;
        g_sink = sum;
      });
      const auto eager_samples = time_repeated(config, [&] {
        double sum = 0;
        for (EntryHandle handle : handles) {
          const View<double>& view = eager[handle];
          for (std::size_t i = 0; i < view.size(); ++i) sum += view.data()[i];
        }
        eager_sum = sum;
        g_sink = sum;
      });
      const auto lazy_samples = time_repeated(config, [&] {
        double sum = 0;
        for (const ResolvedVariable& rv : resolved) {
          const View<double> view = lazy.get(rv);
          for (std::size_t i = 0; i < view.size(); ++i) sum += view.data()[i];
        }
        lazy_sum = sum;
        g_sink = sum;
      });
      if (raw_sum != eager_sum || raw_sum != lazy_sum) {
        throw Error(ErrorCode::kEvaluation, "access paths disagree at N=" + std::to_string(n) +
                                                ", rotors=" + std::to_string(r));
      }
      const double per = static_cast<double>(kAccessesPerRep);
      const double raw = percentile(raw_samples, 0.5) / per;
      const double e = percentile(eager_samples, 0.5) / per;
      const double l = percentile(lazy_samples, 0.5) / per;
      rows.push_back({n, r, "eager", raw, e, e / raw});
      rows.push_back({n, r, "lazy", raw, l, l / raw});
    }
  }
  return rows;
}

void write_csv(std::ostream& out, const std::vector<BuildRow>& rows) {
  out << kBuildCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.horizon << ',' << r.rotors << ',' << r.flavor << ',' << fmt(r.median_ns) << ',' << fmt(r.p90_ns)
        << '\n';
  }
}

void write_csv(std::ostream& out, const std::vector<AccessRow>& rows) {
  out << kAccessCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.horizon << ',' << r.rotors << ',' << r.flavor << ',' << fmt(r.raw_ns_per_access, "%.4f") << ','
        << fmt(r.map_ns_per_access, "%.4f") << ',' << fmt(r.ratio, "%.4f") << '\n';
  }
}

// ---------------------------------------------------------------------------
// Closed-loop demo

void DemoConfig::validate() const {
  params.validate();
  if (horizon == 0) throw Error(ErrorCode::kValidation, "horizon must be at least 1");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorCode::kValidation, "dt must be positive");
  if (steps == 0) throw Error(ErrorCode::kValidation, "steps must be at least 1");
  if (!initial_position.allFinite() || !target.allFinite() || !target_step.allFinite()) {
    throw Error(ErrorCode::kValidation, "positions must be finite");
  }
}

namespace {

// Drops the first interval of a solution and repeats the last state/input.
std::vector<double> shifted(const OcpInstance& inst, const std::vector<double>& solution) {
  std::vector<double> out = solution;
  const auto map = make_lazy_map(inst.decision, std::span<double>(out));
  for (std::size_t k = 0; k < inst.horizon; ++k) map.get({"x", k}).write(map.get({"x", k + 1}).read());
  for (std::size_t k = 0; k + 1 < inst.horizon; ++k) map.get({"u", k}).write(map.get({"u", k + 1}).read());
  return out;
}

}  // namespace

DemoResult run_quadrotor_demo(const DemoConfig& config) {
  config.validate();
  DemoResult result;
  DemoSummary& sum = result.summary;

  RigidBodyState<double> plant;
  plant.position = config.initial_position;
  plant.orientation.setIdentity();
  plant.linear_velocity.setZero();
  plant.angular_velocity.setZero();

  OcpInstance inst = make_quadrotor_instance(config.params, config.horizon, config.dt, plant, config.target);
  const QuadrotorModel model{config.params};
  Eigen::Vector3d target = config.target;
  std::vector<double> guess = initial_guess(inst);
  Eigen::VectorXd last_input = Eigen::VectorXd::Constant(4, config.params.hover_rotor_speed());

  auto record = [&](double t, const Eigen::VectorXd& u) {
    result.samples.push_back({t, plant, u});
    sum.max_quaternion_norm_error =
        std::max(sum.max_quaternion_norm_error, std::abs(plant.orientation.norm() - 1.0));
  };

  double total_seconds = 0.0;
  for (std::size_t step = 0; step < config.steps; ++step) {
    if (config.target_step_at && step == *config.target_step_at) {
      target = config.target_step;
      set_target_position(inst, target);
    }
    set_initial_state(inst, plant);
    SqpResult solved;
    const auto start = Clock::now();
    try {
      solved = solve(inst, guess, config.options);
    } catch (const Error& e) {
      sum.failed = true;
      sum.failure = "step " + std::to_string(step) + ": " + e.what();
      record(static_cast<double>(step) * config.dt, last_input);
      return result;
    }
    const double seconds = elapsed_ns(start) * 1e-9;
    total_seconds += seconds;
    sum.max_solve_seconds = std::max(sum.max_solve_seconds, seconds);
    sum.solves += 1;
    sum.total_iterations += solved.report.iterations;
    sum.max_iterations = std::max(sum.max_iterations, solved.report.iterations);
    sum.worst_final_defect = std::max(sum.worst_final_defect, solved.report.final_max_defect);
    sum.mean_solve_seconds = total_seconds / static_cast<double>(sum.solves);
    if (step == 0) {
      result.first_instance = inst;
      result.first_result = solved;
    }
    if (!converged(solved.report.termination)) {
      sum.failed = true;
      sum.failure = "step " + std::to_string(step) + ": solver stopped with " + to_string(solved.report.termination);
      record(static_cast<double>(step) * config.dt, last_input);
      return result;
    }

    const Trajectory traj = unpack_trajectory(inst, solved.solution);
    last_input = traj.inputs.front();
    record(static_cast<double>(step) * config.dt, last_input);
    plant = integrate_step<double>(plant, std::span<const double>(last_input.data(), 4), config.dt, model,
                                   inst.integrator);
    if (!plant.position.allFinite() || !plant.linear_velocity.allFinite() ||
        !plant.angular_velocity.allFinite() || !plant.orientation.coeffs().allFinite()) {
      sum.failed = true;
      sum.failure = "step " + std::to_string(step) + ": plant state is not finite";
      return result;
    }
    guess = shifted(inst, solved.solution);
  }
  // Final state, input held.
  record(static_cast<double>(config.steps) * config.dt, last_input);
  sum.terminal_position_error = (plant.position - target).norm();
  return result;
}

void write_csv(std::ostream& out, const std::vector<DemoSample>& samples) {
  out << kDemoCsvHeader << '\n';
  for (const auto& s : samples) {
    const auto& x = s.state;
    const auto& q = x.orientation.coeffs();
    out << fmt(s.t, "%.6g");
    for (int i = 0; i < 3; ++i) out << ',' << fmt(x.position[i], "%.17g");
    for (int i = 0; i < 4; ++i) out << ',' << fmt(q[i], "%.17g");
    for (int i = 0; i < 3; ++i) out << ',' << fmt(x.linear_velocity[i], "%.17g");
    for (int i = 0; i < 3; ++i) out << ',' << fmt(x.angular_velocity[i], "%.17g");
    for (Eigen::Index i = 0; i < 4; ++i) out << ',' << (i < s.input.size() ? fmt(s.input[i], "%.17g") : "");
    out << '\n';
  }
}

std::string summary_text(const DemoSummary& s) {
  std::ostringstream out;
  out << "solves: " << s.solves << '\n'
      << "iterations: total " << s.total_iterations << ", max " << s.max_iterations << '\n'
      << "solve time: mean " << fmt(s.mean_solve_seconds * 1e3, "%.3f") << " ms, max "
      << fmt(s.max_solve_seconds * 1e3, "%.3f") << " ms\n"
      << "worst final defect: " << fmt(s.worst_final_defect, "%.3e") << '\n'
      << "max |q| - 1: " << fmt(s.max_quaternion_norm_error, "%.3e") << '\n'
      << "terminal position error: " << fmt(s.terminal_position_error, "%.3e") << " m\n"
      << "status: " << (s.failed ? "FAILED (" + s.failure + ")" : std::string("ok")) << '\n';
  return out.str();
}

}  // namespace ocpvars
