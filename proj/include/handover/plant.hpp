// Copyright 2026 The handover-sim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef HANDOVER__PLANT_HPP_
#define HANDOVER__PLANT_HPP_

#include <Eigen/Dense>

namespace handover
{

/// Single-track vehicle parameters. Cornering stiffness is per tire.
struct VehicleParams
{
  double a{1.0};       // front axle to CG [m]
  double b{1.5};       // rear axle to CG [m]
  double m{1270.0};    // [kg]
  double Iz{1443.1};   // [kg m^2]
  double Cf{30000.0};  // [N/rad]
  double Cr{30000.0};  // [N/rad]
};

void validate(const VehicleParams & p);

// Lateral state [d_y, v_y, psi, omega], output [d_y, psi].
struct LateralState
{
  double d_y{0.0};
  double v_y{0.0};
  double psi{0.0};
  double omega{0.0};

  Eigen::Vector4d vec() const { return {d_y, v_y, psi, omega}; }
  static LateralState from(const Eigen::Ref<const Eigen::VectorXd> & x);
};

// Longitudinal state [d_x, v_x], output equal to the state.
struct LongitudinalState
{
  double d_x{0.0};  // gap to the target [m]
  double v_x{0.0};  // host speed [m/s]

  Eigen::Vector2d vec() const { return {d_x, v_x}; }
  static LongitudinalState from(const Eigen::Ref<const Eigen::VectorXd> & x);
  bool collided() const { return d_x <= 0.0; }
};

/// x' = A x + B1 u1 + B2 u2 + Bw w,  z = C x
struct ContinuousModel
{
  Eigen::MatrixXd A;
  Eigen::MatrixXd B1;
  Eigen::MatrixXd B2;
  Eigen::MatrixXd Bw;
  Eigen::MatrixXd C;
};

/// x(k+1) = A x(k) + B1 u1(k) + B2 u2(k) + Bw w(k),  z(k) = C x(k)
struct DiscreteJointModel
{
  Eigen::MatrixXd A;
  Eigen::MatrixXd B1;
  Eigen::MatrixXd B2;
  Eigen::MatrixXd Bw;
  Eigen::MatrixXd C;
  double step_time{0.0};

  Eigen::Index state_dim() const { return A.rows(); }
  Eigen::Index input_dim() const { return B1.cols(); }
  Eigen::Index disturbance_dim() const { return Bw.cols(); }
  Eigen::Index output_dim() const { return C.rows(); }
};

/// Throws std::invalid_argument on inconsistent block sizes.
void validate(const ContinuousModel & model);
void validate(const DiscreteJointModel & model);

/// Bicycle model linearised about constant longitudinal speed `vx`.
/// Steering input is the front wheel angle; there is no disturbance input.
/// Throws std::domain_error for vx <= 0.
ContinuousModel lateral_continuous(const VehicleParams & params, double vx);

/// Gap/speed model driven by acceleration; the disturbance is the target
/// speed.
ContinuousModel longitudinal_continuous();

/// Zero-order-hold discretisation via the exponential of the augmented
/// matrix [[A, B1, B2, Bw], [0, 0, 0, 0]] * T.
DiscreteJointModel discretize(const ContinuousModel & cont, double step_time);

Eigen::VectorXd step_plant(
  const DiscreteJointModel & model, const Eigen::Ref<const Eigen::VectorXd> & x,
  const Eigen::Ref<const Eigen::VectorXd> & u1, const Eigen::Ref<const Eigen::VectorXd> & u2,
  const Eigen::Ref<const Eigen::VectorXd> & w);

Eigen::VectorXd output(const DiscreteJointModel & model, const Eigen::Ref<const Eigen::VectorXd> & x);

struct ActuatorLimits
{
  double max_steer{0.3};  // [rad]
  double min_accel{-7.0};  // [m/s^2]
  double max_accel{3.0};
};

double saturate_steer(double delta, const ActuatorLimits & limits);
double saturate_accel(double accel, const ActuatorLimits & limits);

}  // namespace handover

#endif  // HANDOVER__PLANT_HPP_
