#pragma once

// Gauss-Newton SQP for multiple-shooting OCPs laid out by variable
// hierarchies.
//
// Decision buffer: X = (N+1) stacked states, U = N stacked inputs. The first
// state is pinned to the measured state held in the parameter buffer, so the
// optimiser moves x_1..x_N and u_0..u_{N-1}. Steps live in the tangent space
// (12 per state: dp, dtheta, dv, dw) and are applied by retraction,
// q <- q * Exp(dtheta), which keeps every orientation iterate unit-norm.
//
// Per-interval defect: c_k = x_{k+1} (-) step(x_k, u_k), where
// a (-) b = [p_a - p_b, Log(q_b^-1 * q_a), v_a - v_b, w_a - w_b].

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "ocpvars/derivatives.hpp"
#include "ocpvars/dynamics.hpp"
#include "ocpvars/error.hpp"
#include "ocpvars/hierarchy.hpp"

namespace ocpvars {

inline constexpr std::size_t kTangentSize = 12;

using DynamicsModel = std::variant<QuadrotorModel, SrbdModel>;

/// Diagonal least-squares weights. State weights are ordered like the
/// tangent: position, orientation, linear velocity, angular velocity.
struct TrackingWeights {
  Eigen::VectorXd state;     // 12, applied to x_1..x_{N-1}
  Eigen::VectorXd terminal;  // 12, applied to x_N
  Eigen::VectorXd input;     // one per input scalar
};

struct OcpInstance {
  // Builds the decision and parameter hierarchies for the model and horizon;
  // the parameter buffer starts zeroed, weights and bounds empty.
  OcpInstance(DynamicsModel model, std::size_t horizon, double dt);

  DynamicsModel model;
  std::size_t horizon = 0;
  double dt = 0.0;
  Integrator integrator = Integrator::kSemiImplicitEuler;
  Hierarchy decision;    // decision_variables <<= (X, U)
  Hierarchy parameters;  // parameters <<= (initial_state, X_ref, U_ref)
  std::vector<double> parameter_values;
  TrackingWeights weights;
  Eigen::VectorXd input_lower;
  Eigen::VectorXd input_upper;

  std::size_t input_size() const;
  std::string model_name() const;
  // Throws kValidation on the first inconsistency (sizes, signs, bounds).
  void validate() const;
};

// Hierarchies used by the instances; parameter layout:
//   parameters <<= (initial_state <<= x, X_ref <<= (N+1) * x_ref, U_ref <<= N * u_ref)
Hierarchy decision_hierarchy(const DynamicsModel& model, std::size_t horizon);
Hierarchy parameter_hierarchy(const DynamicsModel& model, std::size_t horizon);
// step <<= (dX <<= N * dx, dU <<= N * du), dx <<= (dp, dtheta, dv, dw)
Hierarchy tangent_hierarchy(const DynamicsModel& model, std::size_t horizon);

/// Quadrotor regulation to a hover at `target`, starting from `initial`.
/// References: hover at target for every stage, hover rotor speeds.
OcpInstance make_quadrotor_instance(const QuadrotorParams& params, std::size_t horizon, double dt,
                                    const RigidBodyState<double>& initial, const Eigen::Vector3d& target);

/// Quadruped standing regulation toward `target` with the SRBD model.
OcpInstance make_srbd_instance(const SrbdParams& params, std::size_t horizon, double dt,
                               const RigidBodyState<double>& initial, const Eigen::Vector3d& target);

// Parameter access by name.
RigidBodyState<double> initial_state(const OcpInstance& instance);
void set_initial_state(OcpInstance& instance, const RigidBodyState<double>& x0);
// Moves every state reference to a hover/stand at `target`.
void set_target_position(OcpInstance& instance, const Eigen::Vector3d& target);

/// Measured state repeated over the horizon, reference inputs.
std::vector<double> initial_guess(const OcpInstance& instance);

struct Trajectory {
  std::vector<RigidBodyState<double>> states;  // N+1
  std::vector<Eigen::VectorXd> inputs;         // N
};

Trajectory unpack_trajectory(const OcpInstance& instance, std::span<const double> decision);

struct Linearization {
  Eigen::VectorXd residuals;   // least-squares residuals r, cost = |r|^2 / 2
  Eigen::MatrixXd residual_jacobian;
  Eigen::VectorXd defects;     // 12 N
  Eigen::MatrixXd defect_jacobian;
};

/// The NLP over the single decision buffer.
class Transcription {
 public:
  explicit Transcription(const OcpInstance& instance);

  const OcpInstance& instance() const noexcept { return *instance_; }
  const Hierarchy& tangent() const noexcept { return tangent_; }
  std::size_t decision_size() const noexcept;
  std::size_t tangent_size() const noexcept { return tangent_.size(); }
  std::size_t constraint_count() const noexcept { return kTangentSize * horizon_; }
  std::size_t residual_count() const noexcept { return tangent_.size(); }

  double cost(const Trajectory& t) const;
  double cost(std::span<const double> decision) const;
  Eigen::VectorXd residuals(const Trajectory& t) const;
  Eigen::VectorXd defects(const Trajectory& t) const;
  Eigen::VectorXd defects(std::span<const double> decision) const;

  // Tangent-local functions whose Jacobians the solver consumes.
  //   interval_defect: (dx_k, du_k, dx_{k+1}) -> c_k, 24 + m inputs
  //   stage_residual:  dx_k -> weighted x_k (-) xref_k, 12 inputs, k = 1..N
  DiffFunction interval_defect(const Trajectory& t, std::size_t k) const;
  DiffFunction stage_residual(const Trajectory& t, std::size_t k) const;

  Linearization linearize(const Trajectory& t) const;

  // t (+) alpha * step, step ordered like tangent().
  Trajectory retract(const Trajectory& t, const Eigen::VectorXd& step, double alpha) const;

  // Column offsets of dx_k (k >= 1) and du_k in the tangent.
  std::size_t state_column(std::size_t k) const { return state_columns_.at(k - 1); }
  std::size_t input_column(std::size_t k) const { return input_columns_.at(k); }

 private:
  const OcpInstance* instance_;
  std::size_t horizon_;
  std::size_t inputs_;
  Hierarchy tangent_;
  std::vector<std::size_t> state_columns_;
  std::vector<std::size_t> input_columns_;
  RigidBodyState<double> initial_;
  std::vector<RigidBodyState<double>> state_refs_;
  std::vector<Eigen::VectorXd> input_refs_;
  Eigen::VectorXd sqrt_state_, sqrt_terminal_, sqrt_input_;
};

enum class MapFlavor { kEager, kLazy };

struct SqpOptions {
  MapFlavor flavor = MapFlavor::kEager;
  int max_iterations = 50;
  double kkt_tolerance = 1e-6;
  double defect_tolerance = 1e-8;
  double stationarity_tolerance = 1e-5;
  double step_tolerance = 1e-10;
  double armijo = 1e-4;
  double min_step_length = 1e-10;
};

enum class Termination {
  kKktTolerance,       // max(stationarity, defect) below kkt_tolerance
  kFeasibleStationary, // defect and stationarity below their tolerances
  kStepTolerance,      // QP step below step_tolerance
  kIterationLimit,
  kLineSearchFailure,
};

std::string to_string(Termination t);
bool converged(Termination t);

/// One entry per QP solved (per iteration), in order.
struct SqpReport {
  int iterations = 0;
  std::vector<double> merit;         // after the accepted step
  std::vector<double> merit_before;  // at the start of the iteration, same penalty
  std::vector<double> max_defect;    // after the accepted step
  std::vector<double> stationarity;  // after the accepted step, QP multipliers
  std::vector<double> step_norm;     // infinity norm of the full QP step
  std::vector<double> step_length;   // accepted line-search fraction
  std::vector<std::size_t> active_bounds;
  int second_order_corrections = 0;  // accepted corrected full steps
  double initial_max_defect = 0.0;
  double final_cost = 0.0;
  double final_max_defect = 0.0;
  double penalty = 0.0;         // final l1 merit weight
  double regularization = 0.0;  // largest lambda added to keep factorizations definite
  Termination termination = Termination::kIterationLimit;
};

struct SqpResult {
  std::vector<double> solution;
  SqpReport report;
};

/// Evaluation failure inside the solver; carries the offending iterate.
class SolverError : public Error {
 public:
  SolverError(const std::string& message, std::vector<double> iterate)
      : Error(ErrorCode::kEvaluation, message), iterate_(std::move(iterate)) {}
  const std::vector<double>& iterate() const noexcept { return iterate_; }

 private:
  std::vector<double> iterate_;
};

/// Requires a correctly sized guess with unit quaternions and inputs inside
/// the bounds; the first state of the guess is replaced by the measured state.
SqpResult solve(const OcpInstance& instance, std::span<const double> guess, const SqpOptions& options = {});

// Plain-text serialization: `key=value` header lines, a `---` line, then one
// %.17g value per line (parameter buffer or solution buffer).
std::string serialize_instance(const OcpInstance& instance);
OcpInstance deserialize_instance(const std::string& text);
std::string serialize_result(const SqpResult& result);
SqpResult deserialize_result(const std::string& text);

}  // namespace ocpvars
