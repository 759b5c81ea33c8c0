#include "ocpvars/sqp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <type_traits>

#include <Eigen/Cholesky>

#include "ocpvars/expr.hpp"
#include "ocpvars/fixtures.hpp"
#include "ocpvars/query.hpp"
#include "ocpvars/varmap.hpp"

namespace ocpvars {

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::kValidation, what); }

VariableExpr state_expr(const std::string& name) {
  return bind(name, concat({leaf("position", Kind::vector(3)), leaf("orientation", Kind::quaternion()),
                            leaf("linear_velocity", Kind::vector(3)), leaf("angular_velocity", Kind::vector(3))}));
}

VariableExpr input_expr(const DynamicsModel& model, const std::string& name) {
  if (const auto* srbd = std::get_if<SrbdModel>(&model)) {
    const auto leg = bind("leg_input", concat({leaf("force", Kind::vector(3)), leaf("relative_position", Kind::vector(3))}));
    return bind(name, replicate(srbd->params.legs(), leg));
  }
  return bind(name, replicate(4, leaf("rotor_speed", Kind::scalar())));
}

std::size_t model_input_size(const DynamicsModel& model) {
  return std::visit([](const auto& m) { return m.input_size(); }, model);
}

std::vector<double> packed(const RigidBodyState<double>& x) {
  std::vector<double> out(kStateSize);
  pack_state<double>(x, out);
  return out;
}

RigidBodyState<double> hover_at(const Eigen::Vector3d& target) {
  RigidBodyState<double> x;
  x.position = target;
  return x;
}

// x (+) d with d = (dp, dtheta, dv, dw).
template <class T>
RigidBodyState<T> retract_state(const RigidBodyState<double>& x, std::span<const T> d) {
  RigidBodyState<T> out;
  for (int i = 0; i < 3; ++i) {
    out.position[i] = T(x.position[i]) + d[static_cast<std::size_t>(i)];
    out.linear_velocity[i] = T(x.linear_velocity[i]) + d[static_cast<std::size_t>(6 + i)];
    out.angular_velocity[i] = T(x.angular_velocity[i]) + d[static_cast<std::size_t>(9 + i)];
  }
  out.orientation = x.orientation.template cast<T>() * rotation_exp<T>(Vec3<T>(d[3], d[4], d[5]));
  return out;
}

template <class T>
RigidBodyState<T> cast_state(const RigidBodyState<double>& x) {
  RigidBodyState<T> out;
  out.position = x.position.cast<T>();
  out.orientation = x.orientation.template cast<T>();
  out.linear_velocity = x.linear_velocity.cast<T>();
  out.angular_velocity = x.angular_velocity.cast<T>();
  return out;
}

// a (-) b
template <class T>
void state_difference(const RigidBodyState<T>& a, const RigidBodyState<T>& b, std::span<T> out) {
  const Vec3<T> dtheta = rotation_log<T>(b.orientation.conjugate() * a.orientation);
  for (int i = 0; i < 3; ++i) {
    const auto u = static_cast<std::size_t>(i);
    out[u] = a.position[i] - b.position[i];
    out[3 + u] = dtheta[i];
    out[6 + u] = a.linear_velocity[i] - b.linear_velocity[i];
    out[9 + u] = a.angular_velocity[i] - b.angular_velocity[i];
  }
}

std::size_t checked_horizon(std::size_t n) {
  if (n == 0) invalid("horizon must be at least 1");
  return n;
}

double max_abs(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

}  // namespace

// ---------------------------------------------------------------------------
// Instance

OcpInstance::OcpInstance(DynamicsModel m, std::size_t n, double step)
    : model(std::move(m)),
      horizon(n),
      dt(step),
      decision(decision_hierarchy(model, checked_horizon(horizon))),
      parameters(parameter_hierarchy(model, horizon)),
      parameter_values(parameters.size(), 0.0) {}

std::size_t OcpInstance::input_size() const { return model_input_size(model); }

std::string OcpInstance::model_name() const {
  return std::holds_alternative<QuadrotorModel>(model) ? "quadrotor" : "srbd";
}

void OcpInstance::validate() const {
  std::visit([](const auto& m) { m.params.validate(); }, model);
  if (horizon == 0) invalid("horizon must be at least 1");
  if (!(dt > 0.0) || !std::isfinite(dt)) invalid("dt must be positive");
  if (decision.size() != (horizon + 1) * kStateSize + horizon * input_size()) {
    invalid("decision hierarchy does not match the horizon and model");
  }
  if (parameter_values.size() != parameters.size()) {
    invalid("parameter buffer has " + std::to_string(parameter_values.size()) + " values, hierarchy needs " +
            std::to_string(parameters.size()));
  }
  const std::size_t m = input_size();
  if (weights.state.size() != 12 || weights.terminal.size() != 12 ||
      weights.input.size() != static_cast<Eigen::Index>(m)) {
    invalid("weight vectors must have 12, 12 and " + std::to_string(m) + " entries");
  }
  for (const Eigen::VectorXd* w : {&weights.state, &weights.terminal, &weights.input}) {
    if (!w->allFinite() || (w->array() < 0.0).any()) invalid("weights must be finite and non-negative");
  }
  if (input_lower.size() != static_cast<Eigen::Index>(m) || input_upper.size() != static_cast<Eigen::Index>(m)) {
    invalid("input bounds must have " + std::to_string(m) + " entries");
  }
  for (Eigen::Index i = 0; i < input_lower.size(); ++i) {
    if (std::isnan(input_lower(i)) || std::isnan(input_upper(i)) || input_lower(i) > input_upper(i)) {
      invalid("infeasible bounds on input " + std::to_string(i) + ": lower " + std::to_string(input_lower(i)) +
              " > upper " + std::to_string(input_upper(i)));
    }
  }
  for (double v : parameter_values) {
    if (!std::isfinite(v)) invalid("parameter buffer holds a non-finite value");
  }
}

Hierarchy decision_hierarchy(const DynamicsModel& model, std::size_t horizon) {
  if (const auto* srbd = std::get_if<SrbdModel>(&model)) {
    return fixtures::locomotion(horizon, srbd->params.legs()).decision_variables;
  }
  return fixtures::multirotor(horizon, 4).decision_variables;
}

Hierarchy parameter_hierarchy(const DynamicsModel& model, std::size_t horizon) {
  const auto X_ref = bind("X_ref", replicate(horizon + 1, state_expr("x_ref")));
  const auto U_ref = bind("U_ref", replicate(horizon, input_expr(model, "u_ref")));
  return build(bind("parameters", concat({state_expr("initial_state"), X_ref, U_ref})));
}

Hierarchy tangent_hierarchy(const DynamicsModel& model, std::size_t horizon) {
  const auto dx = bind("dx", concat({leaf("dp", Kind::vector(3)), leaf("dtheta", Kind::vector(3)),
                                     leaf("dv", Kind::vector(3)), leaf("dw", Kind::vector(3))}));
  const auto du = leaf("du", Kind::vector(model_input_size(model)));
  return build(bind("step", concat({bind("dX", replicate(horizon, dx)), bind("dU", replicate(horizon, du))})));
}

namespace {

void set_reference_inputs(OcpInstance& inst, const Eigen::VectorXd& u_ref) {
  auto params = make_lazy_map(inst.parameters, std::span<double>(inst.parameter_values));
  for (std::size_t k = 0; k < inst.horizon; ++k) {
    params.get({"u_ref", k}).write(std::span<const double>(u_ref.data(), static_cast<std::size_t>(u_ref.size())));
  }
}

}  // namespace

OcpInstance make_quadrotor_instance(const QuadrotorParams& params, std::size_t horizon, double dt,
                                    const RigidBodyState<double>& initial, const Eigen::Vector3d& target) {
  params.validate();
  OcpInstance inst = OcpInstance(QuadrotorModel{params}, horizon, dt);
  inst.weights.state.resize(12);
  inst.weights.state << 10, 10, 10, 1, 1, 1, 1, 1, 1, 0.1, 0.1, 0.1;
  inst.weights.terminal.resize(12);
  inst.weights.terminal << 1e5, 1e5, 1e5, 1e2, 1e2, 1e2, 1e2, 1e2, 1e2, 10, 10, 10;
  // Input weight large enough to dominate the thrust curvature the
  // Gauss-Newton model leaves out; smaller values stall the line search.
  inst.weights.input = Eigen::VectorXd::Constant(4, 1e-3);
  inst.input_lower = Eigen::VectorXd::Zero(4);
  inst.input_upper = Eigen::VectorXd::Constant(4, 400.0);
  set_initial_state(inst, initial);
  set_target_position(inst, target);
  set_reference_inputs(inst, Eigen::VectorXd::Constant(4, params.hover_rotor_speed()));
  inst.validate();
  return inst;
}

OcpInstance make_srbd_instance(const SrbdParams& params, std::size_t horizon, double dt,
                               const RigidBodyState<double>& initial, const Eigen::Vector3d& target) {
  params.validate();
  const std::size_t legs = params.legs();
  std::size_t in_contact = 0;
  for (int c : params.contact) in_contact += static_cast<std::size_t>(c);
  if (in_contact == 0) invalid("standing needs at least one leg in contact");

  OcpInstance inst = OcpInstance(SrbdModel{params}, horizon, dt);
  const std::size_t m = 6 * legs;
  inst.weights.state.resize(12);
  inst.weights.state << 10, 10, 10, 10, 10, 10, 1, 1, 1, 1, 1, 1;
  inst.weights.terminal = 100.0 * inst.weights.state;
  inst.weights.input.resize(static_cast<Eigen::Index>(m));
  inst.input_lower.resize(static_cast<Eigen::Index>(m));
  inst.input_upper.resize(static_cast<Eigen::Index>(m));
  Eigen::VectorXd u_ref(static_cast<Eigen::Index>(m));
  const double support = params.mass * params.gravity / static_cast<double>(in_contact);
  for (std::size_t leg = 0; leg < legs; ++leg) {
    // Feet on a rectangle under the body, alternating corners.
    const double sx = (leg % 2 == 0) ? 1.0 : -1.0;
    const double sy = (leg / 2 % 2 == 0) ? 1.0 : -1.0;
    const Eigen::Vector3d foot(0.2 * sx, 0.15 * sy, -0.3);
    const auto o = static_cast<Eigen::Index>(6 * leg);
    u_ref.segment<3>(o) = Eigen::Vector3d(0, 0, params.contact[leg] ? support : 0.0);
    u_ref.segment<3>(o + 3) = foot;
    inst.weights.input.segment<3>(o).setConstant(1e-4);
    inst.weights.input.segment<3>(o + 3).setConstant(1e2);
    inst.input_lower.segment<3>(o) = Eigen::Vector3d(-4 * support, -4 * support, 0.0);
    inst.input_upper.segment<3>(o) = Eigen::Vector3d(4 * support, 4 * support, 4 * support);
    inst.input_lower.segment<3>(o + 3) = foot.array() - 0.1;
    inst.input_upper.segment<3>(o + 3) = foot.array() + 0.1;
  }
  set_initial_state(inst, initial);
  set_target_position(inst, target);
  set_reference_inputs(inst, u_ref);
  inst.validate();
  return inst;
}

RigidBodyState<double> initial_state(const OcpInstance& instance) {
  std::vector<double> copy = instance.parameter_values;
  const auto params = make_lazy_map(instance.parameters, std::span<double>(copy));
  const auto values = params.get({"initial_state"}).read();
  return unpack_state<double>(values);
}

void set_initial_state(OcpInstance& instance, const RigidBodyState<double>& x0) {
  auto params = make_lazy_map(instance.parameters, std::span<double>(instance.parameter_values));
  params.get({"initial_state"}).write(packed(x0));
}

void set_target_position(OcpInstance& instance, const Eigen::Vector3d& target) {
  auto params = make_lazy_map(instance.parameters, std::span<double>(instance.parameter_values));
  const auto ref = packed(hover_at(target));
  for (std::size_t k = 0; k <= instance.horizon; ++k) params.get({"x_ref", k}).write(ref);
}

std::vector<double> initial_guess(const OcpInstance& instance) {
  std::vector<double> params_copy = instance.parameter_values;
  const auto params = make_lazy_map(instance.parameters, std::span<double>(params_copy));
  auto guess = make_eager_map(instance.decision);
  const auto x0 = params.get({"initial_state"}).read();
  for (std::size_t k = 0; k <= instance.horizon; ++k) guess.get({"x", k}).write(x0);
  for (std::size_t k = 0; k < instance.horizon; ++k) guess.get({"u", k}).write(params.get({"u_ref", k}).read());
  return {guess.buffer().begin(), guess.buffer().end()};
}

Trajectory unpack_trajectory(const OcpInstance& instance, std::span<const double> decision) {
  std::vector<double> copy(decision.begin(), decision.end());
  const auto map = make_lazy_map(instance.decision, std::span<double>(copy));
  Trajectory t;
  for (std::size_t k = 0; k <= instance.horizon; ++k) {
    t.states.push_back(unpack_state<double>(map.get({"x", k}).read()));
  }
  for (std::size_t k = 0; k < instance.horizon; ++k) t.inputs.push_back(map.get({"u", k}).span());
  return t;
}

// ---------------------------------------------------------------------------
// Transcription

Transcription::Transcription(const OcpInstance& instance)
    : instance_(&instance),
      horizon_(instance.horizon),
      inputs_(instance.input_size()),
      tangent_(tangent_hierarchy(instance.model, instance.horizon)) {
  instance.validate();
  for (std::size_t k = 0; k < horizon_; ++k) {
    state_columns_.push_back(resolve(tangent_, {"dx", k}).offset);
    input_columns_.push_back(resolve(tangent_, {"du", k}).offset);
  }
  std::vector<double> copy = instance.parameter_values;
  const auto params = make_lazy_map(instance.parameters, std::span<double>(copy));
  initial_ = unpack_state<double>(params.get({"initial_state"}).read());
  for (std::size_t k = 0; k <= horizon_; ++k) {
    state_refs_.push_back(unpack_state<double>(params.get({"x_ref", k}).read()));
  }
  for (std::size_t k = 0; k < horizon_; ++k) input_refs_.push_back(params.get({"u_ref", k}).span());
  sqrt_state_ = instance.weights.state.cwiseSqrt();
  sqrt_terminal_ = instance.weights.terminal.cwiseSqrt();
  sqrt_input_ = instance.weights.input.cwiseSqrt();
}

std::size_t Transcription::decision_size() const noexcept { return instance_->decision.size(); }

DiffFunction Transcription::interval_defect(const Trajectory& t, std::size_t k) const {
  const std::size_t m = inputs_;
  const RigidBodyState<double> xk = t.states.at(k);
  const RigidBodyState<double> xk1 = t.states.at(k + 1);
  const Eigen::VectorXd uk = t.inputs.at(k);
  const DynamicsModel model = instance_->model;
  const double dt = instance_->dt;
  const Integrator integrator = instance_->integrator;
  return DiffFunction(2 * kTangentSize + m, kTangentSize, [=](auto in, auto out) {
    using T = std::remove_const_t<typename decltype(in)::element_type>;
    const RigidBodyState<T> a = retract_state<T>(xk, in.first(kTangentSize));
    std::vector<T> u(m);
    for (std::size_t i = 0; i < m; ++i) u[i] = T(uk(static_cast<Eigen::Index>(i))) + in[kTangentSize + i];
    const RigidBodyState<T> next = std::visit(
        [&](const auto& mdl) { return integrate_step<T>(a, std::span<const T>(u), dt, mdl, integrator); }, model);
    const RigidBodyState<T> b = retract_state<T>(xk1, in.subspan(kTangentSize + m, kTangentSize));
    state_difference<T>(b, next, out);
  });
}

DiffFunction Transcription::stage_residual(const Trajectory& t, std::size_t k) const {
  if (k == 0 || k > horizon_) throw Error(ErrorCode::kIndexOutOfRange, "stage residuals exist for k = 1..N");
  const RigidBodyState<double> xk = t.states.at(k);
  const RigidBodyState<double> ref = state_refs_[k];
  const Eigen::VectorXd w = (k == horizon_) ? sqrt_terminal_ : sqrt_state_;
  return DiffFunction(kTangentSize, kTangentSize, [=](auto in, auto out) {
    using T = std::remove_const_t<typename decltype(in)::element_type>;
    const RigidBodyState<T> a = retract_state<T>(xk, in);
    state_difference<T>(a, cast_state<T>(ref), out);
    for (std::size_t i = 0; i < kTangentSize; ++i) out[i] = out[i] * w(static_cast<Eigen::Index>(i));
  });
}

Eigen::VectorXd Transcription::residuals(const Trajectory& t) const {
  Eigen::VectorXd r(static_cast<Eigen::Index>(residual_count()));
  const std::vector<double> zero(kTangentSize, 0.0);
  for (std::size_t k = 1; k <= horizon_; ++k) {
    const Eigen::VectorXd e = stage_residual(t, k).evaluate(zero);
    r.segment(static_cast<Eigen::Index>(state_column(k)), 12) = e;
  }
  for (std::size_t k = 0; k < horizon_; ++k) {
    r.segment(static_cast<Eigen::Index>(input_column(k)), static_cast<Eigen::Index>(inputs_)) =
        sqrt_input_.cwiseProduct(t.inputs[k] - input_refs_[k]);
  }
  return r;
}

double Transcription::cost(const Trajectory& t) const { return 0.5 * residuals(t).squaredNorm(); }

double Transcription::cost(std::span<const double> decision) const {
  return cost(unpack_trajectory(*instance_, decision));
}

Eigen::VectorXd Transcription::defects(const Trajectory& t) const {
  Eigen::VectorXd c(static_cast<Eigen::Index>(constraint_count()));
  const std::vector<double> zero(2 * kTangentSize + inputs_, 0.0);
  for (std::size_t k = 0; k < horizon_; ++k) {
    c.segment(static_cast<Eigen::Index>(kTangentSize * k), 12) = interval_defect(t, k).evaluate(zero);
  }
  return c;
}

Eigen::VectorXd Transcription::defects(std::span<const double> decision) const {
  return defects(unpack_trajectory(*instance_, decision));
}

Linearization Transcription::linearize(const Trajectory& t) const {
  const auto n = static_cast<Eigen::Index>(tangent_size());
  const auto p = static_cast<Eigen::Index>(constraint_count());
  const auto m = static_cast<Eigen::Index>(inputs_);
  Linearization lin;
  lin.residuals = residuals(t);
  lin.residual_jacobian = Eigen::MatrixXd::Zero(n, n);
  lin.defects.resize(p);
  lin.defect_jacobian = Eigen::MatrixXd::Zero(p, n);

  const std::vector<double> zero_state(kTangentSize, 0.0);
  for (std::size_t k = 1; k <= horizon_; ++k) {
    const auto col = static_cast<Eigen::Index>(state_column(k));
    lin.residual_jacobian.block(col, col, 12, 12) = jacobian(stage_residual(t, k), zero_state);
  }
  for (std::size_t k = 0; k < horizon_; ++k) {
    const auto col = static_cast<Eigen::Index>(input_column(k));
    lin.residual_jacobian.block(col, col, m, m) = sqrt_input_.asDiagonal();
  }

  const std::vector<double> zero_interval(2 * kTangentSize + inputs_, 0.0);
  for (std::size_t k = 0; k < horizon_; ++k) {
    const DiffFunction f = interval_defect(t, k);
    const auto row = static_cast<Eigen::Index>(kTangentSize * k);
    lin.defects.segment(row, 12) = f.evaluate(zero_interval);
    const Eigen::MatrixXd jac = jacobian(f, zero_interval);
    if (k > 0) lin.defect_jacobian.block(row, static_cast<Eigen::Index>(state_column(k)), 12, 12) = jac.leftCols(12);
    lin.defect_jacobian.block(row, static_cast<Eigen::Index>(input_column(k)), 12, m) = jac.middleCols(12, m);
    lin.defect_jacobian.block(row, static_cast<Eigen::Index>(state_column(k + 1)), 12, 12) = jac.rightCols(12);
  }
  return lin;
}

Trajectory Transcription::retract(const Trajectory& t, const Eigen::VectorXd& step, double alpha) const {
  if (step.size() != static_cast<Eigen::Index>(tangent_size())) {
    throw Error(ErrorCode::kSizeMismatch, "step has the wrong length");
  }
  Trajectory out = t;
  out.states[0] = initial_;
  for (std::size_t k = 1; k <= horizon_; ++k) {
    const Eigen::VectorXd d = alpha * step.segment(static_cast<Eigen::Index>(state_column(k)), 12);
    out.states[k] = retract_state<double>(t.states[k], std::span<const double>(d.data(), 12));
  }
  const Eigen::VectorXd& lo = instance_->input_lower;
  const Eigen::VectorXd& hi = instance_->input_upper;
  for (std::size_t k = 0; k < horizon_; ++k) {
    out.inputs[k] = t.inputs[k] + alpha * step.segment(static_cast<Eigen::Index>(input_column(k)),
                                                       static_cast<Eigen::Index>(inputs_));
    // The QP keeps steps inside the box; this only absorbs rounding at an
    // active bound.
    out.inputs[k] = out.inputs[k].cwiseMax(lo).cwiseMin(hi);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Solver

std::string to_string(Termination t) {
  switch (t) {
    case Termination::kKktTolerance: return "kkt-tolerance";
    case Termination::kFeasibleStationary: return "feasible-stationary";
    case Termination::kStepTolerance: return "step-tolerance";
    case Termination::kIterationLimit: return "iteration-limit";
    case Termination::kLineSearchFailure: return "line-search-failure";
  }
  return "unknown";
}

bool converged(Termination t) {
  return t == Termination::kKktTolerance || t == Termination::kFeasibleStationary ||
         t == Termination::kStepTolerance;
}

namespace {

// Iterate storage behind an eager map: views are precomputed, access by handle.
class EagerIterate {
 public:
  EagerIterate(const OcpInstance& inst, std::span<const double> init) : map_(inst.decision) {
    std::copy(init.begin(), init.end(), map_.buffer().begin());
    for (std::size_t k = 0; k <= inst.horizon; ++k) states_.push_back(map_.handle({"x", k}));
    for (std::size_t k = 0; k < inst.horizon; ++k) inputs_.push_back(map_.handle({"u", k}));
  }

  Trajectory read() const {
    Trajectory t;
    for (EntryHandle h : states_) t.states.push_back(unpack_state<double>(map_[h].read()));
    for (EntryHandle h : inputs_) t.inputs.push_back(map_[h].span());
    return t;
  }

  void write(const Trajectory& t) {
    for (std::size_t k = 0; k < states_.size(); ++k) map_[states_[k]].write(packed(t.states[k]));
    for (std::size_t k = 0; k < inputs_.size(); ++k) map_[inputs_[k]].span() = t.inputs[k];
  }

  std::vector<double> buffer() const { return {map_.buffer().begin(), map_.buffer().end()}; }

 private:
  EagerMap<double> map_;
  std::vector<EntryHandle> states_;
  std::vector<EntryHandle> inputs_;
};

// Iterate storage behind a lazy map over a caller-side vector.
class LazyIterate {
 public:
  LazyIterate(const OcpInstance& inst, std::span<const double> init)
      : storage_(init.begin(), init.end()), map_(inst.decision, std::span<double>(storage_)) {
    for (std::size_t k = 0; k <= inst.horizon; ++k) states_.push_back(resolve(inst.decision, {"x", k}));
    for (std::size_t k = 0; k < inst.horizon; ++k) inputs_.push_back(resolve(inst.decision, {"u", k}));
  }
  LazyIterate(const LazyIterate&) = delete;
  LazyIterate& operator=(const LazyIterate&) = delete;

  Trajectory read() const {
    Trajectory t;
    for (const auto& r : states_) t.states.push_back(unpack_state<double>(map_.get(r).read()));
    for (const auto& r : inputs_) t.inputs.push_back(map_.get(r).span());
    return t;
  }

  void write(const Trajectory& t) {
    for (std::size_t k = 0; k < states_.size(); ++k) map_.get(states_[k]).write(packed(t.states[k]));
    for (std::size_t k = 0; k < inputs_.size(); ++k) map_.get(inputs_[k]).span() = t.inputs[k];
  }

  std::vector<double> buffer() const { return storage_; }

 private:
  std::vector<double> storage_;
  LazyMap<double> map_;
  std::vector<ResolvedVariable> states_;
  std::vector<ResolvedVariable> inputs_;
};

struct ActiveBound {
  Eigen::Index column;
  Eigen::Index input;  // index within u_k, selects the bound value
  bool upper;
};

struct QpSolution {
  Eigen::VectorXd step;
  Eigen::VectorXd defect_multipliers;
  Eigen::VectorXd bound_multipliers;
  std::vector<ActiveBound> active;
};

// Equality-constrained QP  min 1/2 d'Hd + g'd  s.t.  A d + c = 0,  plus box
// bounds on the input components handled by an active set of equality rows.
// Each solve uses the range-space (Schur complement) factorization of the
// KKT system: H is block diagonal, S = A H^-1 A' is dense SPD.
class QpSolver {
 public:
  QpSolver(const Transcription& tr, const OcpInstance& inst) : tr_(tr), inst_(inst) {
    for (std::size_t k = 1; k <= inst.horizon; ++k) blocks_.push_back({tr.state_column(k), kTangentSize});
    for (std::size_t k = 0; k < inst.horizon; ++k) blocks_.push_back({tr.input_column(k), inst.input_size()});
  }

  QpSolution solve(const Linearization& lin, const Trajectory& t, double& regularization) {
    const Eigen::MatrixXd& jr = lin.residual_jacobian;
    const Eigen::VectorXd g = jr.transpose() * lin.residuals;
    factor_hessian(jr, regularization);
    const Eigen::VectorXd hg = apply_inverse(g);

    // Slack of each input component to its bounds: lo - u <= d <= hi - u.
    const auto n = static_cast<Eigen::Index>(tr_.tangent_size());
    const auto m = static_cast<Eigen::Index>(inst_.input_size());
    Eigen::VectorXd lower_room = Eigen::VectorXd::Constant(n, -std::numeric_limits<double>::infinity());
    Eigen::VectorXd upper_room = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
    std::vector<Eigen::Index> input_of(static_cast<std::size_t>(n), -1);
    for (std::size_t k = 0; k < inst_.horizon; ++k) {
      const auto col = static_cast<Eigen::Index>(tr_.input_column(k));
      for (Eigen::Index i = 0; i < m; ++i) {
        lower_room(col + i) = inst_.input_lower(i) - t.inputs[k](i);
        upper_room(col + i) = inst_.input_upper(i) - t.inputs[k](i);
        input_of[static_cast<std::size_t>(col + i)] = i;
      }
    }

    lower_room_ = lower_room;
    upper_room_ = upper_room;
    QpSolution sol;
    const std::size_t max_rounds = 4 * static_cast<std::size_t>(m) * inst_.horizon + 10;
    for (std::size_t round = 0; round < max_rounds; ++round) {
      solve_equality(lin, hg, lower_room, upper_room, sol, regularization);

      // Primal feasibility: add every violated bound.
      bool added = false;
      std::vector<bool> is_active(static_cast<std::size_t>(n), false);
      for (const auto& a : sol.active) is_active[static_cast<std::size_t>(a.column)] = true;
      for (Eigen::Index j = 0; j < n; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        if (input_of[ju] < 0 || is_active[ju]) continue;
        const double tol = 1e-10 * (1.0 + std::abs(inst_.input_upper(input_of[ju])));
        if (sol.step(j) < lower_room(j) - tol) {
          sol.active.push_back({j, input_of[ju], false});
          added = true;
        } else if (sol.step(j) > upper_room(j) + tol) {
          sol.active.push_back({j, input_of[ju], true});
          added = true;
        }
      }
      if (added) continue;

      // Dual feasibility: lower bounds need y <= 0, upper bounds y >= 0.
      Eigen::Index worst = -1;
      double worst_value = 1e-12;
      for (Eigen::Index a = 0; a < static_cast<Eigen::Index>(sol.active.size()); ++a) {
        const double y = sol.bound_multipliers(a);
        const double wrong = sol.active[static_cast<std::size_t>(a)].upper ? -y : y;
        if (wrong > worst_value) {
          worst_value = wrong;
          worst = a;
        }
      }
      if (worst < 0) break;
      sol.active.erase(sol.active.begin() + worst);
    }
    return sol;
  }

  Eigen::VectorXd gradient(const Linearization& lin) const {
    return lin.residual_jacobian.transpose() * lin.residuals;
  }

 private:
  void factor_hessian(const Eigen::MatrixXd& jr, double& regularization) {
    factors_.clear();
    double lambda = regularization;
    for (int attempt = 0; attempt < 40; ++attempt) {
      factors_.clear();
      bool ok = true;
      for (const auto& [col, size] : blocks_) {
        const auto c = static_cast<Eigen::Index>(col);
        const auto s = static_cast<Eigen::Index>(size);
        Eigen::MatrixXd block = jr.block(c, c, s, s).transpose() * jr.block(c, c, s, s);
        block.diagonal().array() += lambda;
        Eigen::LLT<Eigen::MatrixXd> llt(block);
        if (llt.info() != Eigen::Success || llt.matrixL().toDenseMatrix().diagonal().minCoeff() <= 1e-12) {
          ok = false;
          break;
        }
        factors_.push_back(std::move(llt));
      }
      if (ok) {
        regularization = lambda;
        return;
      }
      lambda = lambda == 0.0 ? 1e-8 : 10.0 * lambda;
    }
    throw Error(ErrorCode::kEvaluation, "Hessian could not be regularized");
  }

  template <class Derived>
  Eigen::MatrixXd apply_inverse(const Eigen::MatrixBase<Derived>& b) const {
    Eigen::MatrixXd out(b.rows(), b.cols());
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      const auto c = static_cast<Eigen::Index>(blocks_[i].first);
      const auto s = static_cast<Eigen::Index>(blocks_[i].second);
      out.middleRows(c, s) = factors_[i].solve(b.middleRows(c, s));
    }
    return out;
  }

  void solve_equality(const Linearization& lin, const Eigen::VectorXd& hg,
                      const Eigen::VectorXd& lower_room, const Eigen::VectorXd& upper_room, QpSolution& sol,
                      double& regularization) {
    const auto p = lin.defect_jacobian.rows();
    const auto n = lin.defect_jacobian.cols();
    const auto b = static_cast<Eigen::Index>(sol.active.size());
    Eigen::MatrixXd a(p + b, n);
    Eigen::VectorXd c(p + b);
    a.topRows(p) = lin.defect_jacobian;
    c.head(p) = lin.defects;
    a.bottomRows(b).setZero();
    for (Eigen::Index i = 0; i < b; ++i) {
      const ActiveBound& ab = sol.active[static_cast<std::size_t>(i)];
      a(p + i, ab.column) = 1.0;
      c(p + i) = -(ab.upper ? upper_room(ab.column) : lower_room(ab.column));
    }
    const Eigen::MatrixXd y_cols = apply_inverse(a.transpose());  // H^-1 A'
    Eigen::MatrixXd s = a * y_cols;
    Eigen::LLT<Eigen::MatrixXd> llt(s);
    double lambda = 0.0;
    while (llt.info() != Eigen::Success || llt.matrixL().toDenseMatrix().diagonal().minCoeff() <= 1e-14) {
      lambda = lambda == 0.0 ? 1e-10 * std::max(1.0, s.diagonal().maxCoeff()) : 10.0 * lambda;
      if (lambda > 1e6) throw Error(ErrorCode::kEvaluation, "KKT system could not be regularized");
      Eigen::MatrixXd shifted = s;
      shifted.diagonal().array() += lambda;
      llt.compute(shifted);
    }
    regularization = std::max(regularization, lambda);
    const Eigen::VectorXd y = llt.solve(c - a * hg);
    sol.step = -hg - y_cols * y;
    sol.defect_multipliers = y.head(p);
    sol.bound_multipliers = y.tail(b);
    last_columns_ = y_cols;
    last_schur_ = llt;
  }

 public:
  // Step removing `defects` from the constraints linearised at the current
  // iterate, minimal in the H metric, with active bounds held: -H^-1 A' S^-1 c.
  Eigen::VectorXd correction(const Eigen::VectorXd& defects) const {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(last_columns_.cols());
    rhs.head(defects.size()) = defects;
    return -last_columns_ * last_schur_.solve(rhs);
  }

  bool within_bounds(const Eigen::VectorXd& step) const {
    for (Eigen::Index j = 0; j < step.size(); ++j) {
      if (step(j) < lower_room_(j) - 1e-10 || step(j) > upper_room_(j) + 1e-10) return false;
    }
    return true;
  }

 private:
  Eigen::MatrixXd last_columns_;
  Eigen::LLT<Eigen::MatrixXd> last_schur_;
  Eigen::VectorXd lower_room_;
  Eigen::VectorXd upper_room_;

  const Transcription& tr_;
  const OcpInstance& inst_;
  std::vector<std::pair<std::size_t, std::size_t>> blocks_;
  std::vector<Eigen::LLT<Eigen::MatrixXd>> factors_;
};

double l1(const Eigen::VectorXd& v) { return v.cwiseAbs().sum(); }

template <class Iterate>
SqpResult run_sqp(const OcpInstance& inst, std::span<const double> guess, const SqpOptions& opt) {
  const Transcription tr(inst);
  if (guess.size() != inst.decision.size()) {
    throw Error(ErrorCode::kSizeMismatch, "guess has " + std::to_string(guess.size()) + " values, decision needs " +
                                              std::to_string(inst.decision.size()));
  }
  Iterate iterate(inst, guess);
  {
    Trajectory t = iterate.read();
    for (const auto& x : t.states) {
      if (std::abs(x.orientation.norm() - 1.0) > 1e-9) invalid("guess quaternions must be unit-norm");
    }
    for (const auto& u : t.inputs) {
      if ((u.array() < inst.input_lower.array()).any() || (u.array() > inst.input_upper.array()).any()) {
        invalid("guess inputs must lie inside the bounds");
      }
    }
    t.states[0] = initial_state(inst);
    iterate.write(t);
  }

  SqpReport report;
  QpSolver qp(tr, inst);
  Trajectory t = iterate.read();

  auto evaluate = [&](const Trajectory& traj, double& cost, Eigen::VectorXd& c) -> bool {
    try {
      cost = tr.cost(traj);
      c = tr.defects(traj);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kEvaluation || e.code() == ErrorCode::kDomain) return false;
      throw;
    }
    return std::isfinite(cost) && c.allFinite();
  };

  double cost = 0.0;
  Eigen::VectorXd c;
  if (!evaluate(t, cost, c)) throw SolverError("non-finite cost or defect at the initial guess", iterate.buffer());
  report.initial_max_defect = max_abs(c);

  Linearization lin = tr.linearize(t);
  double mu = -1.0;
  report.termination = Termination::kIterationLimit;

  for (int it = 0; it < opt.max_iterations; ++it) {
    const QpSolution sol = qp.solve(lin, t, report.regularization);
    ++report.iterations;
    const double step_norm = max_abs(sol.step);
    report.step_norm.push_back(step_norm);
    report.active_bounds.push_back(sol.active.size());

    const double c1 = l1(lin.defects);
    const Eigen::VectorXd g = qp.gradient(lin);
    const double y_inf = max_abs(sol.defect_multipliers);
    if (mu < 0.0) mu = std::max(10.0 * y_inf, 1.0);
    double slope = g.dot(sol.step) - mu * c1;
    for (int doubling = 0; doubling < 60 && (mu < y_inf || (c1 > 0.0 && slope >= 0.0)); ++doubling) {
      mu *= 2.0;
      slope = g.dot(sol.step) - mu * c1;
    }
    const double merit0 = cost + mu * c1;

    if (step_norm < opt.step_tolerance) {
      report.merit_before.push_back(merit0);
      report.merit.push_back(merit0);
      report.max_defect.push_back(max_abs(lin.defects));
      report.stationarity.push_back(std::numeric_limits<double>::quiet_NaN());
      report.step_length.push_back(0.0);
      report.termination = Termination::kStepTolerance;
      break;
    }

    // Full step, then a second-order correction of the full step (avoids the
    // Maratos effect of the l1 merit), then plain backtracking.
    double alpha = 1.0;
    double trial_cost = 0.0;
    Eigen::VectorXd trial_c;
    auto sufficient = [&](double a) { return trial_cost + mu * l1(trial_c) <= merit0 + opt.armijo * a * slope; };
    Trajectory trial = tr.retract(t, sol.step, 1.0);
    const bool full_ok = evaluate(trial, trial_cost, trial_c);
    bool accepted = full_ok && sufficient(1.0);
    if (!accepted && full_ok) {
      const Eigen::VectorXd corrected = sol.step + qp.correction(trial_c);
      if (qp.within_bounds(corrected)) {
        trial = tr.retract(t, corrected, 1.0);
        accepted = evaluate(trial, trial_cost, trial_c) && sufficient(1.0);
        if (accepted) ++report.second_order_corrections;
      }
    }
    while (!accepted && (alpha *= 0.5) >= opt.min_step_length) {
      trial = tr.retract(t, sol.step, alpha);
      accepted = evaluate(trial, trial_cost, trial_c) && sufficient(alpha);
    }
    report.merit_before.push_back(merit0);
    if (!accepted) {
      report.merit.push_back(merit0);
      report.max_defect.push_back(max_abs(lin.defects));
      report.stationarity.push_back(std::numeric_limits<double>::quiet_NaN());
      report.step_length.push_back(0.0);
      report.termination = Termination::kLineSearchFailure;
      break;
    }

    iterate.write(trial);
    t = iterate.read();
    cost = trial_cost;
    lin = tr.linearize(t);
    if (!std::isfinite(cost) || !lin.residual_jacobian.allFinite() || !lin.defect_jacobian.allFinite()) {
      throw SolverError("non-finite cost or derivative at iteration " + std::to_string(it), iterate.buffer());
    }

    // Stationarity of the Lagrangian at the new point with the QP multipliers.
    Eigen::VectorXd grad_l = qp.gradient(lin) + lin.defect_jacobian.transpose() * sol.defect_multipliers;
    for (std::size_t a = 0; a < sol.active.size(); ++a) {
      grad_l(sol.active[a].column) += sol.bound_multipliers(static_cast<Eigen::Index>(a));
    }
    const double stationarity = max_abs(grad_l);
    const double defect = max_abs(lin.defects);
    report.merit.push_back(cost + mu * l1(lin.defects));
    report.max_defect.push_back(defect);
    report.stationarity.push_back(stationarity);
    report.step_length.push_back(alpha);

    if (std::max(stationarity, defect) < opt.kkt_tolerance) {
      report.termination = Termination::kKktTolerance;
      break;
    }
    if (defect < opt.defect_tolerance && stationarity < opt.stationarity_tolerance) {
      report.termination = Termination::kFeasibleStationary;
      break;
    }
  }

  report.penalty = std::max(mu, 0.0);
  report.final_cost = cost;
  report.final_max_defect = max_abs(lin.defects);
  return {iterate.buffer(), std::move(report)};
}

}  // namespace

SqpResult solve(const OcpInstance& instance, std::span<const double> guess, const SqpOptions& options) {
  instance.validate();
  if (options.max_iterations < 1) invalid("max_iterations must be at least 1");
  if (options.flavor == MapFlavor::kEager) return run_sqp<EagerIterate>(instance, guess, options);
  return run_sqp<LazyIterate>(instance, guess, options);
}

}  // namespace ocpvars
