#pragma once

// Rigid-body models used by the MPC demos. Everything is templated on the
// scalar so the same code runs on doubles and on dual numbers.
//
// Conventions:
//   - world frame z points up, gravity is (0, 0, -g);
//   - orientation maps body to world, stored (x, y, z, w);
//   - angular velocity is expressed in the body frame;
//   - orientation is advanced on the group, q+ = q * Exp(w dt).

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "ocpvars/dual.hpp"
#include "ocpvars/error.hpp"

namespace ocpvars {

template <class T>
using Vec3 = Eigen::Matrix<T, 3, 1>;
template <class T>
using Quat = Eigen::Quaternion<T>;

/// Unit quaternion of the rotation vector `theta` (angle |theta| about
/// theta/|theta|), i.e. the quaternion exponential of theta / 2.
template <class T>
Quat<T> rotation_exp(const Vec3<T>& theta) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  const T sq = theta.squaredNorm();
  T w, s;
  if (value_of(sq) < 1e-8) {
    // Taylor series keeps the dual part exact at the origin.
    w = T(1.0) - sq / 8.0 + sq * sq / 384.0;
    s = T(0.5) - sq / 48.0 + sq * sq / 3840.0;
  } else {
    const T angle = sqrt(sq);
    w = cos(angle / 2.0);
    s = sin(angle / 2.0) / angle;
  }
  return Quat<T>(w, s * theta.x(), s * theta.y(), s * theta.z());
}

/// Rotation vector of q (inverse of rotation_exp on the short arc).
template <class T>
Vec3<T> rotation_log(const Quat<T>& q_in) {
  using std::atan2;
  using std::sqrt;
  Quat<T> q = q_in;
  if (value_of(q.w()) < 0.0) {
    q.coeffs() = -q.coeffs();
  }
  const Vec3<T> v = q.vec();
  const T n2 = v.squaredNorm();
  if (value_of(n2) < 1e-10 * value_of(q.w() * q.w())) {
    const T w2 = q.w() * q.w();
    return v * (T(2.0) / q.w() * (T(1.0) - n2 / (3.0 * w2)));
  }
  const T n = sqrt(n2);
  return v * (T(2.0) * atan2(n, q.w()) / n);
}

/// Lie-group step q * Exp(w dt): stays on the unit sphere without
/// renormalisation. Requires |q| = 1 and dt > 0.
template <class T>
Quat<T> quat_step(const Quat<T>& q, const Vec3<T>& angular_velocity, double dt) {
  const Vec3<T> theta = angular_velocity * T(dt);
  return q * rotation_exp<T>(theta);
}

template <class T>
struct RigidBodyState {
  Vec3<T> position = Vec3<T>::Zero();
  Quat<T> orientation = Quat<T>::Identity();
  Vec3<T> linear_velocity = Vec3<T>::Zero();
  Vec3<T> angular_velocity = Vec3<T>::Zero();
};

// Time derivatives of the velocities; position and orientation rates follow
// from the velocities themselves.
template <class T>
struct RigidBodyRates {
  Vec3<T> linear_acceleration;   // world frame
  Vec3<T> angular_acceleration;  // body frame
};

// Flat layout shared with the state hierarchies: p(3), q(x,y,z,w), v(3), w(3).
inline constexpr std::size_t kStateSize = 13;

template <class T>
RigidBodyState<T> unpack_state(std::span<const T> s) {
  if (s.size() != kStateSize) throw Error(ErrorCode::kSizeMismatch, "state takes 13 scalars");
  RigidBodyState<T> x;
  x.position = Vec3<T>(s[0], s[1], s[2]);
  x.orientation = Quat<T>(s[6], s[3], s[4], s[5]);
  x.linear_velocity = Vec3<T>(s[7], s[8], s[9]);
  x.angular_velocity = Vec3<T>(s[10], s[11], s[12]);
  return x;
}

template <class T>
void pack_state(const RigidBodyState<T>& x, std::span<T> s) {
  if (s.size() != kStateSize) throw Error(ErrorCode::kSizeMismatch, "state takes 13 scalars");
  for (int i = 0; i < 3; ++i) {
    s[i] = x.position[i];
    s[7 + i] = x.linear_velocity[i];
    s[10 + i] = x.angular_velocity[i];
  }
  for (int i = 0; i < 4; ++i) s[3 + i] = x.orientation.coeffs()[i];
}

struct QuadrotorParams {
  double mass = 1.0;                               // kg
  Eigen::Vector3d inertia{0.01, 0.01, 0.02};       // kg m^2, body principal axes
  double thrust_coefficient = 1e-4;                // N s^2
  double drag_coefficient = 2e-6;                  // N m s^2
  double arm_length = 0.2;                         // m
  double gravity = 9.81;                           // m/s^2, magnitude

  double hover_rotor_speed() const { return std::sqrt(mass * gravity / (4.0 * thrust_coefficient)); }
  void validate() const;
};

/// Plus-shaped quadrotor: rotor i sits at angle i*90 deg on the body x-y
/// plane (1 on +x, 2 on +y, 3 on -x, 4 on -y). Thrust k_f w_i^2 acts along
/// body z; rotors 1 and 3 produce yaw torque +k_m w^2, rotors 2 and 4 -k_m w^2.
template <class T>
RigidBodyRates<T> quadrotor_dynamics(const RigidBodyState<T>& x, std::span<const T> rotor_speeds,
                                     const QuadrotorParams& p) {
  if (rotor_speeds.size() != 4) {
    throw Error(ErrorCode::kSizeMismatch, "quadrotor takes 4 rotor speeds");
  }
  T thrust[4];
  T squared[4];
  for (std::size_t i = 0; i < 4; ++i) {
    if (value_of(rotor_speeds[i]) < 0.0) {
      throw Error(ErrorCode::kDomain, "rotor speed " + std::to_string(i) + " is negative");
    }
    squared[i] = rotor_speeds[i] * rotor_speeds[i];
    thrust[i] = p.thrust_coefficient * squared[i];
  }
  const T total = thrust[0] + thrust[1] + thrust[2] + thrust[3];
  const Vec3<T> torque(p.arm_length * (thrust[1] - thrust[3]), p.arm_length * (thrust[2] - thrust[0]),
                       p.drag_coefficient * (squared[0] - squared[1] + squared[2] - squared[3]));

  const Vec3<T> inertia = p.inertia.cast<T>();
  const Vec3<T>& w = x.angular_velocity;
  const Vec3<T> body_thrust(T(0.0), T(0.0), total / p.mass);

  RigidBodyRates<T> out;
  out.linear_acceleration = x.orientation * body_thrust;
  out.linear_acceleration.z() -= p.gravity;
  out.angular_acceleration = (torque - w.cross(inertia.cwiseProduct(w))).cwiseQuotient(inertia);
  return out;
}

struct SrbdParams {
  double mass = 12.0;                      // kg
  Eigen::Vector3d inertia{0.1, 0.25, 0.3}; // kg m^2, body principal axes
  double gravity = 9.81;
  std::vector<int> contact{1, 1, 1, 1};    // per leg, 0 or 1

  std::size_t legs() const { return contact.size(); }
  void validate() const;
};

/// Single rigid body driven by foot forces. Inputs per leg, in order:
/// force (world frame, 3) and foot position relative to the body (body
/// frame, 3). Legs without contact contribute nothing.
template <class T>
RigidBodyRates<T> srbd_dynamics(const RigidBodyState<T>& x, std::span<const T> inputs, const SrbdParams& p) {
  if (inputs.size() != 6 * p.legs()) {
    throw Error(ErrorCode::kSizeMismatch, "srbd takes 6 inputs per leg");
  }
  const Vec3<T> inertia = p.inertia.cast<T>();
  const Quat<T> world_to_body = x.orientation.conjugate();
  Vec3<T> force_sum = Vec3<T>::Zero();
  Vec3<T> torque = Vec3<T>::Zero();
  for (std::size_t leg = 0; leg < p.legs(); ++leg) {
    if (p.contact[leg] == 0) {
      continue;
    }
    const Vec3<T> f(inputs[6 * leg], inputs[6 * leg + 1], inputs[6 * leg + 2]);
    const Vec3<T> r(inputs[6 * leg + 3], inputs[6 * leg + 4], inputs[6 * leg + 5]);
    force_sum += f;
    torque += r.cross(world_to_body * f);
  }
  const Vec3<T>& w = x.angular_velocity;
  RigidBodyRates<T> out;
  out.linear_acceleration = force_sum / p.mass;
  out.linear_acceleration.z() -= p.gravity;
  out.angular_acceleration = (torque - w.cross(inertia.cwiseProduct(w))).cwiseQuotient(inertia);
  return out;
}

struct QuadrotorModel {
  QuadrotorParams params;

  std::size_t input_size() const { return 4; }
  template <class T>
  RigidBodyRates<T> operator()(const RigidBodyState<T>& x, std::span<const T> u) const {
    return quadrotor_dynamics(x, u, params);
  }
};

struct SrbdModel {
  SrbdParams params;

  std::size_t input_size() const { return 6 * params.legs(); }
  template <class T>
  RigidBodyRates<T> operator()(const RigidBodyState<T>& x, std::span<const T> u) const {
    return srbd_dynamics(x, u, params);
  }
};

enum class Integrator {
  kSemiImplicitEuler,
  // Classic RK4 weights on the velocity rates; orientation is advanced once
  // on the group with the RK-weighted body rate, so it stays unit-norm.
  kRk4,
};

template <class T, class Model>
RigidBodyState<T> integrate_step(const RigidBodyState<T>& x, std::span<const T> u, double dt, const Model& model,
                                 Integrator integrator = Integrator::kSemiImplicitEuler) {
  if (!(dt > 0.0)) {
    throw Error(ErrorCode::kValidation, "time step must be positive");
  }
  RigidBodyState<T> next;
  if (integrator == Integrator::kSemiImplicitEuler) {
    const RigidBodyRates<T> rates = model(x, u);
    next.linear_velocity = x.linear_velocity + rates.linear_acceleration * T(dt);
    next.angular_velocity = x.angular_velocity + rates.angular_acceleration * T(dt);
    next.position = x.position + next.linear_velocity * T(dt);
    next.orientation = quat_step(x.orientation, next.angular_velocity, dt);
    return next;
  }

  // Stage state x + h * (rates of stage s).
  auto stage = [&](const RigidBodyState<T>& s, const RigidBodyRates<T>& r, double h) {
    RigidBodyState<T> out;
    out.position = x.position + s.linear_velocity * T(h);
    out.orientation = quat_step(x.orientation, s.angular_velocity, h);
    out.linear_velocity = x.linear_velocity + r.linear_acceleration * T(h);
    out.angular_velocity = x.angular_velocity + r.angular_acceleration * T(h);
    return out;
  };
  const RigidBodyRates<T> k1 = model(x, u);
  const RigidBodyState<T> s2 = stage(x, k1, dt / 2);
  const RigidBodyRates<T> k2 = model(s2, u);
  const RigidBodyState<T> s3 = stage(s2, k2, dt / 2);
  const RigidBodyRates<T> k3 = model(s3, u);
  const RigidBodyState<T> s4 = stage(s3, k3, dt);
  const RigidBodyRates<T> k4 = model(s4, u);

  const T sixth(dt / 6.0);
  next.position = x.position + (x.linear_velocity + 2.0 * s2.linear_velocity + 2.0 * s3.linear_velocity +
                                s4.linear_velocity) * sixth;
  next.linear_velocity = x.linear_velocity + (k1.linear_acceleration + 2.0 * k2.linear_acceleration +
                                              2.0 * k3.linear_acceleration + k4.linear_acceleration) * sixth;
  next.angular_velocity = x.angular_velocity + (k1.angular_acceleration + 2.0 * k2.angular_acceleration +
                                                2.0 * k3.angular_acceleration + k4.angular_acceleration) * sixth;
  const Vec3<T> mean_rate = (x.angular_velocity + 2.0 * s2.angular_velocity + 2.0 * s3.angular_velocity +
                             s4.angular_velocity) / 6.0;
  next.orientation = quat_step(x.orientation, mean_rate, dt);
  return next;
}

// Parameter files: one `key = value` per line, `#` starts a comment.
std::vector<std::pair<std::string, double>> read_key_values(const std::string& path);
std::vector<std::pair<std::string, double>> parse_key_values(const std::string& text);
QuadrotorParams quadrotor_params_from(const std::vector<std::pair<std::string, double>>& entries);
std::string to_key_values(const QuadrotorParams& params);

}  // namespace ocpvars
