#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "ocpvars/derivatives.hpp"
#include "ocpvars/dynamics.hpp"
#include "ocpvars/error.hpp"
#include "support/fd_oracle.hpp"

namespace ocpvars {
namespace {

using State = RigidBodyState<double>;

std::vector<double> hover_input(const QuadrotorParams& p = {}) { return std::vector<double>(4, p.hover_rotor_speed()); }

// Four feet in a rectangle under the body, each carrying a quarter of the weight.
std::vector<double> stance_input(const SrbdParams& p) {
  const double f = p.mass * p.gravity / 4.0;
  std::vector<double> u;
  for (double sx : {1.0, -1.0}) {
    for (double sy : {1.0, -1.0}) {
      for (double v : {0.0, 0.0, f, 0.2 * sx, 0.15 * sy, -0.3}) u.push_back(v);
    }
  }
  return u;
}

TEST(QuatStep, ZeroRateIsIdentity) {
  const auto q = quat_step<double>(Eigen::Quaterniond::Identity(), Eigen::Vector3d::Zero(), 0.01);
  EXPECT_EQ(q.coeffs(), Eigen::Quaterniond::Identity().coeffs());
}

TEST(QuatStep, HalfTurnYaw) {
  const auto q = quat_step<double>(Eigen::Quaterniond::Identity(), Eigen::Vector3d(0, 0, std::numbers::pi), 1.0);
  // Closed-form axis-angle: (sin(pi/2) * z, cos(pi/2)).
  const Eigen::Vector4d expected(0, 0, 1, 0);
  const double sign = q.coeffs().dot(expected) < 0 ? -1.0 : 1.0;
  EXPECT_LT((sign * q.coeffs() - expected).norm(), 1e-15);
}

TEST(QuatStep, MatchesAxisAngle) {
  std::mt19937 rng(11);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Vector3d w(n(rng), n(rng), n(rng));
    const double dt = 0.3;
    const Eigen::Quaterniond q0(Eigen::AngleAxisd(n(rng), Eigen::Vector3d(n(rng), n(rng), n(rng)).normalized()));
    const Eigen::Quaterniond expected = q0 * Eigen::Quaterniond(Eigen::AngleAxisd(w.norm() * dt, w.normalized()));
    const auto q = quat_step<double>(q0, w, dt);
    EXPECT_LT((q.coeffs() - expected.coeffs()).norm(), 1e-14);
  }
}

TEST(QuatStep, NormConservedPerStepAndOverLongRollouts) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::Quaterniond q = Eigen::Quaterniond::Identity();
  Eigen::Vector4d additive(0, 0, 0, 1);  // naive q += 0.5 q*(0,w) dt, for contrast
  const double dt = 0.05;
  for (int step = 0; step < 10000; ++step) {
    const Eigen::Vector3d w = 10.0 * Eigen::Vector3d(u(rng), u(rng), u(rng));
    const Eigen::Quaterniond before = q.normalized();
    const Eigen::Quaterniond one = quat_step<double>(before, w, dt);
    ASSERT_NEAR(one.norm(), 1.0, 1e-12);
    q = quat_step<double>(q, w, dt);
    ASSERT_NEAR(q.norm(), 1.0, 1e-9) << "step " << step;

    const Eigen::Quaterniond a(additive(3), additive(0), additive(1), additive(2));
    const Eigen::Quaterniond rate = a * Eigen::Quaterniond(0, w.x(), w.y(), w.z());
    additive += 0.5 * dt * rate.coeffs();
  }
  EXPECT_GT(std::abs(additive.norm() - 1.0), 1e-3);
}

TEST(QuatStep, LargeStepsUpToHalfTurnKeepNorm) {
  std::mt19937 rng(9);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 1000; ++trial) {
    Eigen::Vector3d w(n(rng), n(rng), n(rng));
    w *= std::numbers::pi * std::uniform_real_distribution<double>(0, 1)(rng) / w.norm();
    EXPECT_NEAR(quat_step<double>(Eigen::Quaterniond::Identity(), w, 1.0).norm(), 1.0, 1e-12);
  }
}

TEST(RotationLog, InvertsExpIncludingSmallAngles) {
  std::mt19937 rng(2);
  std::normal_distribution<double> n;
  for (double scale : {1e-12, 1e-7, 1e-4, 0.1, 1.0, 3.0}) {
    for (int trial = 0; trial < 50; ++trial) {
      Eigen::Vector3d theta(n(rng), n(rng), n(rng));
      theta *= scale / theta.norm();
      const Eigen::Vector3d back = rotation_log<double>(rotation_exp<double>(theta));
      EXPECT_LT((back - theta).norm(), 1e-14 + 1e-12 * scale);
    }
  }
  // Antipodal representation maps to the same rotation vector.
  const Eigen::Quaterniond q = rotation_exp<double>(Eigen::Vector3d(0.3, -0.2, 0.1));
  Eigen::Quaterniond neg;
  neg.coeffs() = -q.coeffs();
  EXPECT_LT((rotation_log<double>(neg) - Eigen::Vector3d(0.3, -0.2, 0.1)).norm(), 1e-15);
}

TEST(RotationLog, DifferentiableAtZero) {
  // d/dtheta Exp(theta) at 0 has vector part 0.5 I; d/dq Log(q) at identity is 2 I.
  for (int axis = 0; axis < 3; ++axis) {
    Vec3<Dual> theta = Vec3<Dual>::Zero();
    theta[axis].grad = 1.0;
    const Quat<Dual> q = rotation_exp<Dual>(theta);
    EXPECT_EQ(q.vec()[axis].grad, 0.5);
    EXPECT_EQ(q.w().grad, 0.0);

    Quat<Dual> id(Dual(1.0), Dual(0.0), Dual(0.0), Dual(0.0));
    id.vec()[axis].grad = 1.0;
    EXPECT_EQ(rotation_log<Dual>(id)[axis].grad, 2.0);
  }
}

TEST(Quadrotor, HoverBalancesGravity) {
  const QuadrotorParams p;
  const auto u = hover_input(p);
  const auto rates = quadrotor_dynamics<double>(State{}, u, p);
  EXPECT_LT(rates.linear_acceleration.norm(), 1e-12);
  EXPECT_LT(rates.angular_acceleration.norm(), 1e-12);
}

TEST(Quadrotor, RotorsOffIsFreeFall) {
  const QuadrotorParams p;
  const std::vector<double> u(4, 0.0);
  const auto rates = quadrotor_dynamics<double>(State{}, u, p);
  EXPECT_EQ(rates.linear_acceleration, Eigen::Vector3d(0, 0, -p.gravity));
  EXPECT_EQ(rates.angular_acceleration, Eigen::Vector3d::Zero());
}

TEST(Quadrotor, LeverArmMoment) {
  const QuadrotorParams p;
  const double w0 = p.hover_rotor_speed();
  const std::vector<double> u{w0 + 20.0, w0, w0 - 20.0, w0};
  const auto rates = quadrotor_dynamics<double>(State{}, u, p);
  // Rotor 1 on +x pushes up, rotor 3 on -x pushes less: negative pitch moment.
  const double t1 = p.thrust_coefficient * u[0] * u[0];
  const double t3 = p.thrust_coefficient * u[2] * u[2];
  const double tau_y = p.arm_length * (t3 - t1);
  const double tau_z = p.drag_coefficient * (u[0] * u[0] - u[1] * u[1] + u[2] * u[2] - u[3] * u[3]);
  EXPECT_NEAR(rates.angular_acceleration.x(), 0.0, 1e-12);
  EXPECT_NEAR(rates.angular_acceleration.y(), tau_y / p.inertia.y(), 1e-12);
  EXPECT_NEAR(rates.angular_acceleration.z(), tau_z / p.inertia.z(), 1e-12);
  EXPECT_LT(rates.angular_acceleration.y(), 0.0);
}

TEST(Quadrotor, ThrustFollowsAttitude) {
  const QuadrotorParams p;
  State x;
  x.orientation = Eigen::AngleAxisd(std::numbers::pi / 2, Eigen::Vector3d::UnitX());
  const auto rates = quadrotor_dynamics<double>(x, hover_input(p), p);
  // Body z now points along world -y.
  EXPECT_NEAR(rates.linear_acceleration.y(), -p.gravity, 1e-12);
  EXPECT_NEAR(rates.linear_acceleration.z(), -p.gravity, 1e-12);
}

TEST(Quadrotor, NegativeRotorSpeedIsDomainError) {
  const std::vector<double> u{100, -1, 100, 100};
  try {
    (void)quadrotor_dynamics<double>(State{}, u, QuadrotorParams{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDomain);
  }
}

TEST(Srbd, NoContactIsFreeFall) {
  SrbdParams p;
  p.contact = {0, 0, 0, 0};
  const auto u = stance_input(p);
  const auto rates = srbd_dynamics<double>(State{}, u, p);
  EXPECT_EQ(rates.linear_acceleration, Eigen::Vector3d(0, 0, -p.gravity));
  EXPECT_EQ(rates.angular_acceleration, Eigen::Vector3d::Zero());
}

TEST(Srbd, SymmetricStanceIsBalanced) {
  const SrbdParams p;
  const auto rates = srbd_dynamics<double>(State{}, stance_input(p), p);
  EXPECT_LT(rates.linear_acceleration.norm(), 1e-12);
  EXPECT_LT(rates.angular_acceleration.norm(), 1e-12);
}

TEST(Srbd, SingleLegTorqueIsCrossProduct) {
  SrbdParams p;
  p.contact = {1, 0, 0, 0};
  std::vector<double> u(24, 0.0);
  const Eigen::Vector3d r(0.2, 0, -0.3), f(0, 0, p.mass * p.gravity);
  for (int i = 0; i < 3; ++i) {
    u[static_cast<std::size_t>(i)] = f[i];
    u[static_cast<std::size_t>(3 + i)] = r[i];
  }
  // Stray values on a non-contact leg must be ignored.
  u[6] = 1e3;
  u[9] = 5.0;

  const auto level = srbd_dynamics<double>(State{}, u, p);
  const Eigen::Vector3d tau(r.y() * f.z() - r.z() * f.y(), r.z() * f.x() - r.x() * f.z(),
                            r.x() * f.y() - r.y() * f.x());
  EXPECT_LT((level.angular_acceleration - tau.cwiseQuotient(p.inertia)).norm(), 1e-12);
  EXPECT_LT(level.linear_acceleration.norm(), 1e-12);

  // Tilted body: the world force is expressed in body axes before the cross product.
  State tilted;
  tilted.orientation = Eigen::AngleAxisd(0.4, Eigen::Vector3d(1, 2, -1).normalized());
  const Eigen::Vector3d f_body = tilted.orientation.toRotationMatrix().transpose() * f;
  const auto rates = srbd_dynamics<double>(tilted, u, p);
  EXPECT_LT((rates.angular_acceleration - r.cross(f_body).cwiseQuotient(p.inertia)).norm(), 1e-12);
}

TEST(Srbd, GyroscopicTerm) {
  SrbdParams p;
  p.contact = {0, 0, 0, 0};
  State x;
  x.angular_velocity = Eigen::Vector3d(1.0, 2.0, 0.5);
  const auto rates = srbd_dynamics<double>(x, stance_input(p), p);
  const Eigen::Vector3d iw = p.inertia.cwiseProduct(x.angular_velocity);
  EXPECT_LT((rates.angular_acceleration + x.angular_velocity.cross(iw).cwiseQuotient(p.inertia)).norm(), 1e-12);
}

TEST(IntegrateStep, SemiImplicitKinematics) {
  const QuadrotorModel model;
  State x;
  x.position = Eigen::Vector3d(1, 2, 3);
  const std::vector<double> u(4, 0.0);
  const double dt = 0.1;
  const State next = integrate_step<double>(x, u, dt, model);
  const Eigen::Vector3d v_next(0, 0, -model.params.gravity * dt);
  EXPECT_EQ(next.linear_velocity, v_next);
  EXPECT_EQ(next.position, x.position + v_next * dt);
  EXPECT_EQ(next.orientation.coeffs(), x.orientation.coeffs());
}

TEST(IntegrateStep, HoverIsAFixedPoint) {
  const QuadrotorModel model;
  const auto u = hover_input(model.params);
  State x;
  x.position = Eigen::Vector3d(0.5, -1, 2);
  for (Integrator integrator : {Integrator::kSemiImplicitEuler, Integrator::kRk4}) {
    State s = x;
    for (int k = 0; k < 100; ++k) {
      const State next = integrate_step<double>(s, u, 0.05, model, integrator);
      ASSERT_LT((next.position - s.position).norm(), 1e-10);
      ASSERT_LT((next.linear_velocity - s.linear_velocity).norm(), 1e-10);
      ASSERT_LT((next.orientation.coeffs() - s.orientation.coeffs()).norm(), 1e-10);
      s = next;
    }
    EXPECT_LT((s.position - x.position).norm(), 1e-6);
  }
}

TEST(IntegrateStep, StanceIsAFixedPoint) {
  const SrbdModel model;
  const auto u = stance_input(model.params);
  State s;
  for (int k = 0; k < 100; ++k) {
    const State next = integrate_step<double>(s, u, 0.02, model);
    ASSERT_LT((next.position - s.position).norm(), 1e-10);
    ASSERT_LT((next.angular_velocity - s.angular_velocity).norm(), 1e-10);
    s = next;
  }
}

TEST(IntegrateStep, NormHeldAlongRandomRollouts) {
  const QuadrotorModel model;
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> speed(100, 200);
  for (Integrator integrator : {Integrator::kSemiImplicitEuler, Integrator::kRk4}) {
    State s;
    for (int k = 0; k < 2000; ++k) {
      const std::vector<double> u{speed(rng), speed(rng), speed(rng), speed(rng)};
      s = integrate_step<double>(s, u, 0.01, model, integrator);
      // Keep the rates bounded so the rollout stays meaningful.
      s.angular_velocity = s.angular_velocity.cwiseMax(-20.0).cwiseMin(20.0);
      ASSERT_NEAR(s.orientation.norm(), 1.0, 1e-9);
    }
  }
}

TEST(IntegrateStep, Rk4IsMoreAccurateThanEuler) {
  const QuadrotorModel model;
  const double w0 = model.params.hover_rotor_speed();
  const std::vector<double> u{w0 + 5, w0 - 3, w0 + 1, w0 + 2};
  State x0;
  x0.linear_velocity = Eigen::Vector3d(0.5, -0.2, 0.1);
  x0.angular_velocity = Eigen::Vector3d(0.3, 0.1, -0.4);
  const double horizon = 0.5;
  auto rollout = [&](double dt, Integrator integrator) {
    State s = x0;
    const int steps = static_cast<int>(std::lround(horizon / dt));
    for (int k = 0; k < steps; ++k) s = integrate_step<double>(s, u, dt, model, integrator);
    return s;
  };
  const State reference = rollout(1e-5, Integrator::kSemiImplicitEuler);
  const State euler = rollout(0.05, Integrator::kSemiImplicitEuler);
  const State rk4 = rollout(0.05, Integrator::kRk4);
  const double e_euler = (euler.position - reference.position).norm();
  const double e_rk4 = (rk4.position - reference.position).norm();
  EXPECT_LT(e_rk4, 0.1 * e_euler);
}

TEST(IntegrateStep, RejectsNonPositiveStep) {
  const std::vector<double> u(4, 0.0);
  EXPECT_THROW(integrate_step<double>(State{}, u, 0.0, QuadrotorModel{}), Error);
}

template <class Model>
DiffFunction rates_function(const Model& model) {
  return DiffFunction(kStateSize + model.input_size(), 6, [model](auto in, auto out) {
    const auto x = unpack_state(in.first(kStateSize));
    const auto r = model(x, in.subspan(kStateSize));
    for (int i = 0; i < 3; ++i) {
      out[static_cast<std::size_t>(i)] = r.linear_acceleration[i];
      out[static_cast<std::size_t>(3 + i)] = r.angular_acceleration[i];
    }
  });
}

template <class Model>
DiffFunction step_function(const Model& model, double dt) {
  return DiffFunction(kStateSize + model.input_size(), kStateSize, [model, dt](auto in, auto out) {
    const auto x = unpack_state(in.first(kStateSize));
    pack_state(integrate_step(x, in.subspan(kStateSize), dt, model), out);
  });
}

void expect_matches_fd(const DiffFunction& f, const std::vector<double>& at) {
  const Eigen::MatrixXd ad = jacobian(f, at);
  const Eigen::MatrixXd fd = testing::central_difference([&](const std::vector<double>& x) { return f.evaluate(x); }, at);
  EXPECT_LT(testing::relative_error(ad, fd), 1e-5);
}

TEST(DynamicsJacobian, QuadrotorMatchesFiniteDifferences) {
  const QuadrotorModel model;
  std::mt19937 rng(21);
  const DiffFunction rates = rates_function(model);
  const DiffFunction step = step_function(model, 0.05);
  for (int trial = 0; trial < 100; ++trial) {
    const auto at = testing::random_state_and_input(rng, 4, 50.0, 300.0);
    expect_matches_fd(rates, at);
    expect_matches_fd(step, at);
  }
  std::vector<double> hover(kStateSize, 0.0);
  hover[6] = 1.0;
  for (double w : hover_input()) hover.push_back(w);
  expect_matches_fd(rates, hover);
}

TEST(DynamicsJacobian, SrbdMatchesFiniteDifferences) {
  SrbdModel model;
  model.params.contact = {1, 0, 1, 1};
  std::mt19937 rng(22);
  const DiffFunction rates = rates_function(model);
  const DiffFunction step = step_function(model, 0.02);
  for (int trial = 0; trial < 100; ++trial) {
    auto at = testing::random_state_and_input(rng, 24, -1.0, 1.0);
    for (std::size_t leg = 0; leg < 4; ++leg) {
      for (std::size_t i = 0; i < 3; ++i) at[kStateSize + 6 * leg + i] *= 60.0;
    }
    expect_matches_fd(rates, at);
    expect_matches_fd(step, at);
  }
}

TEST(ParamsFile, ParsesCommentsAndOverrides) {
  const auto entries = parse_key_values("# test rig\nmass = 1.5\n\n  arm_length=0.25  # measured\ninertia_z = 3e-2\n");
  const QuadrotorParams p = quadrotor_params_from(entries);
  EXPECT_EQ(p.mass, 1.5);
  EXPECT_EQ(p.arm_length, 0.25);
  EXPECT_EQ(p.inertia.z(), 0.03);
  EXPECT_EQ(p.thrust_coefficient, QuadrotorParams{}.thrust_coefficient);

  const QuadrotorParams round = quadrotor_params_from(parse_key_values(to_key_values(p)));
  EXPECT_EQ(round.mass, p.mass);
  EXPECT_EQ(round.inertia, p.inertia);

  EXPECT_THROW(parse_key_values("mass 1.0\n"), Error);
  EXPECT_THROW(parse_key_values("mass = heavy\n"), Error);
  EXPECT_THROW(quadrotor_params_from(parse_key_values("rotor_count = 4\n")), Error);
  EXPECT_THROW(quadrotor_params_from(parse_key_values("mass = -1\n")), Error);
  EXPECT_THROW(read_key_values("/nonexistent/params.txt"), Error);
}

}  // namespace
}  // namespace ocpvars
