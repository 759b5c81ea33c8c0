#include "ocpvars/fixtures.hpp"

#include "ocpvars/sugar.hpp"

namespace ocpvars::fixtures {

Multirotor multirotor(std::size_t horizon, std::size_t rotors) {
  const auto position = leaf("position", Kind::vector(3));
  const auto orientation = leaf("orientation", Kind::quaternion());
  const auto linear_velocity = leaf("linear_velocity", Kind::vector(3));
  const auto angular_velocity = leaf("angular_velocity", Kind::vector(3));
  const auto rotor_speed = leaf("rotor_speed", Kind::scalar());

  const auto x = bind("x", concat({position, orientation, linear_velocity, angular_velocity}));
  const auto X = bind("X", replicate(horizon + 1, x));
  const auto u = bind("u", replicate(rotors, rotor_speed));
  const auto U = bind("U", replicate(horizon, u));
  const auto decision_variables = bind("decision_variables", concat({X, U}));
  return {build(x), build(X), build(u), build(U), build(decision_variables)};
}

Multirotor multirotor_macros(std::size_t horizon, std::size_t rotors) {
  const std::size_t N = horizon;
  const std::size_t NUM_ROTORS = rotors;

  OCPVARS_VARIABLE(position, 3);
  OCPVARS_VARIABLE(orientation, Q);
  OCPVARS_VARIABLE(linear_velocity, 3);
  OCPVARS_VARIABLE(b_angular_velocity, 3);
  OCPVARS_VARIABLE(rotor_speed, 1);

  OCPVARS_VARIABLE(x) <<= (position, orientation, linear_velocity, b_angular_velocity);
  OCPVARS_VARIABLE(X) <<= (N + 1) * x;
  OCPVARS_VARIABLE(u) <<= NUM_ROTORS * rotor_speed;
  OCPVARS_VARIABLE(U) <<= N * u;
  OCPVARS_VARIABLE(decision_variables) <<= (X, U);
  return {build(x), build(X), build(u), build(U), build(decision_variables)};
}

Locomotion locomotion(std::size_t horizon, std::size_t legs) {
  const std::size_t N = horizon;
  const std::size_t NUM_LEGS = legs;

  OCPVARS_VARIABLE(position, 3);
  OCPVARS_VARIABLE(orientation, Q);
  OCPVARS_VARIABLE(linear_velocity, 3);
  OCPVARS_VARIABLE(angular_velocity, 3);
  OCPVARS_VARIABLE(force, 3);
  OCPVARS_VARIABLE(relative_position, 3);

  OCPVARS_VARIABLE(leg_input) <<= (force, relative_position);
  OCPVARS_VARIABLE(x) <<= (position, orientation, linear_velocity, angular_velocity);
  OCPVARS_VARIABLE(X) <<= (N + 1) * x;
  OCPVARS_VARIABLE(u) <<= NUM_LEGS * leg_input;
  OCPVARS_VARIABLE(U) <<= N * u;
  OCPVARS_VARIABLE(decision_variables) <<= (X, U);
  return {build(leg_input), build(x), build(X), build(u), build(U), build(decision_variables)};
}

LocoManipulation loco_manipulation(std::size_t horizon, std::size_t robots, std::size_t legs) {
  const std::size_t N = horizon;
  const std::size_t NUM_ROBOTS = robots;
  const std::size_t NUM_LEGS = legs;

  OCPVARS_VARIABLE(position, 3);
  OCPVARS_VARIABLE(orientation, Q);
  OCPVARS_VARIABLE(linear_velocity, 3);
  OCPVARS_VARIABLE(angular_velocity, 3);
  OCPVARS_VARIABLE(force, 3);
  OCPVARS_VARIABLE(relative_position, 3);
  OCPVARS_VARIABLE(torque, 3);

  OCPVARS_VARIABLE(leg_input) <<= (force, relative_position);
  OCPVARS_VARIABLE(arm_input) <<= (force, torque);
  OCPVARS_VARIABLE(robot_input) <<= (NUM_LEGS * leg_input, arm_input);
  OCPVARS_VARIABLE(payload_state) <<= (position, orientation, linear_velocity, angular_velocity);
  OCPVARS_VARIABLE(robot_state) <<= (position, orientation, linear_velocity, angular_velocity);
  OCPVARS_VARIABLE(x) <<= (payload_state, NUM_ROBOTS * robot_state);
  OCPVARS_VARIABLE(X) <<= (N + 1) * x;
  OCPVARS_VARIABLE(u) <<= NUM_ROBOTS * robot_input;
  OCPVARS_VARIABLE(U) <<= N * u;
  OCPVARS_VARIABLE(decision_variables) <<= (X, U);
  return {build(leg_input), build(arm_input),     build(robot_input), build(payload_state),
          build(robot_state), build(x),           build(X),           build(u),
          build(U),         build(decision_variables)};
}

}  // namespace ocpvars::fixtures
