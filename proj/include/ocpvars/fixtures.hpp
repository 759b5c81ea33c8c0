#pragma once

#include <cstddef>

#include "ocpvars/hierarchy.hpp"

namespace ocpvars::fixtures {

// Decision variables of a multirotor OCP: N+1 stacked states
// (position, orientation, linear_velocity, angular_velocity) and N stacked
// inputs of `rotors` rotor speeds.
struct Multirotor {
  Hierarchy x, X, u, U, decision_variables;
};
Multirotor multirotor(std::size_t horizon = 30, std::size_t rotors = 4);

// Same structure spelled with the operator/macro sugar; the angular velocity
// leaf is called b_angular_velocity there.
Multirotor multirotor_macros(std::size_t horizon = 30, std::size_t rotors = 4);

// Quadruped locomotion with the single rigid body model: per-leg force and
// relative foot position.
struct Locomotion {
  Hierarchy leg_input, x, X, u, U, decision_variables;
};
Locomotion locomotion(std::size_t horizon = 30, std::size_t legs = 4);

// Collaborative loco-manipulation: a payload state plus `robots` robot states,
// each robot with legs and an arm.
struct LocoManipulation {
  Hierarchy leg_input, arm_input, robot_input, payload_state, robot_state, x, X, u, U,
      decision_variables;
};
LocoManipulation loco_manipulation(std::size_t horizon = 10, std::size_t robots = 2,
                                   std::size_t legs = 4);

}  // namespace ocpvars::fixtures
