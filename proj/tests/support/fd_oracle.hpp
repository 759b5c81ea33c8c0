#pragma once

// Central finite differences, written independently of the dual-number code.

#include <cstddef>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace ocpvars::testing {

using PlainFunction = std::function<Eigen::VectorXd(const std::vector<double>&)>;

inline Eigen::MatrixXd central_difference(const PlainFunction& f, const std::vector<double>& at, double h = 1e-6) {
  const Eigen::VectorXd f0 = f(at);
  Eigen::MatrixXd jac(f0.size(), static_cast<Eigen::Index>(at.size()));
  std::vector<double> x = at;
  for (std::size_t j = 0; j < at.size(); ++j) {
    x[j] = at[j] + h;
    const Eigen::VectorXd plus = f(x);
    x[j] = at[j] - h;
    const Eigen::VectorXd minus = f(x);
    x[j] = at[j];
    jac.col(static_cast<Eigen::Index>(j)) = (plus - minus) / (2.0 * h);
  }
  return jac;
}

// ||a - b||_F / max(||b||_F, 1): relative for large Jacobians, absolute for
// near-zero ones where a pure relative measure is meaningless.
inline double relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).norm() / std::max(b.norm(), 1.0);
}

// Random point: state (13, unit quaternion) followed by `inputs` values
// drawn uniformly from [lo, hi].
inline std::vector<double> random_state_and_input(std::mt19937& rng, std::size_t inputs, double lo, double hi) {
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::Vector4d q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  std::vector<double> x{n(rng), n(rng), n(rng), q(0), q(1), q(2), q(3),
                        n(rng), n(rng), n(rng), n(rng), n(rng), n(rng)};
  for (std::size_t i = 0; i < inputs; ++i) x.push_back(u(rng));
  return x;
}

}  // namespace ocpvars::testing
