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

///////////////////////////////////////////////////////////////////////////////
//
// Two-player non-cooperative MPC on a shared linear plant.
//
// Over a preview horizon Np the stacked outputs are
//
//     Z = Psi x + Theta1 U1 + Theta2 U2 + Xi D
//
// where U1 (driver) and U2 (active safety system) hold Nu input moves each;
// moves beyond Nu repeat the last one, and so does the disturbance D.
// Player i minimises
//
//     V_i = |Z - T_i|^2_{Q_i} + |U_i|^2_{R_i}
//
// with the other player's sequence taken as given. Each best response is
// linear, U_i = F_i (T_i - Psi x - Theta_j U_j - Xi D), so the open-loop
// Nash equilibrium is the fixed point
//
//     [U1; U2] = (I - L)^-1 M ([T1; T2] - [Psi; Psi] x - [Xi; Xi] D)
//
// with M = blkdiag(F1, F2) and L = [[0, -F1 Theta2], [-F2 Theta1, 0]]. It
// exists and is unique iff I - L is invertible. Only the first move of each
// player is applied before the horizon recedes.
//
///////////////////////////////////////////////////////////////////////////////

#ifndef HANDOVER__GAME_MPC_HPP_
#define HANDOVER__GAME_MPC_HPP_

#include "handover/plant.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace handover
{

struct PredictionMatrices
{
  Eigen::MatrixXd Psi;
  Eigen::MatrixXd Theta1;
  Eigen::MatrixXd Theta2;
  Eigen::MatrixXd Xi;
  int Np{0};
  int Nu{0};
  Eigen::Index output_dim{0};
  Eigen::Index input_dim{0};
  Eigen::Index disturbance_dim{0};
};

/// Throws std::invalid_argument unless Np >= Nu >= 1.
PredictionMatrices build_prediction(const DiscreteJointModel & model, int Np, int Nu);

/// Stacked outputs for a given state, input sequences and disturbance.
Eigen::VectorXd predict(
  const PredictionMatrices & pred, const Eigen::VectorXd & x, const Eigen::VectorXd & U1,
  const Eigen::VectorXd & U2, const Eigen::VectorXd & D);

struct ConfidenceWeights
{
  Eigen::MatrixXd Q1;
  Eigen::MatrixXd Q2;
  Eigen::MatrixXd R1;
  Eigen::MatrixXd R2;
};

/// Q_i = blkdiag(diag(kappa_i(k+1), lambda_i(k+1)), ..., diag(kappa_i(k+Np),
/// lambda_i(k+Np))), R_i = r_i I. All horizons must have the same length;
/// negative weights or r_i <= 0 throw std::invalid_argument.
ConfidenceWeights build_confidence(
  std::span<const double> kappa1, std::span<const double> kappa2,
  std::span<const double> lambda1, std::span<const double> lambda2, double r1, double r2,
  Eigen::Index control_size);

/// Constant dynamic factors.
ConfidenceWeights build_confidence(
  std::span<const double> kappa1, std::span<const double> kappa2, double lambda1, double lambda2,
  double r1, double r2, Eigen::Index control_size);

/// Moving window of Np per-step targets, oldest first.
struct TargetTrajectory
{
  Eigen::VectorXd stacked;
  Eigen::Index block_dim{0};

  int horizon() const { return block_dim == 0 ? 0 : static_cast<int>(stacked.size() / block_dim); }
  Eigen::VectorXd block(int i) const { return stacked.segment(i * block_dim, block_dim); }
};

TargetTrajectory make_targets(const std::vector<Eigen::VectorXd> & blocks);
TargetTrajectory constant_targets(const Eigen::VectorXd & target, int horizon);

/// Drop the oldest block and append `new_target`.
TargetTrajectory shift_targets(const TargetTrajectory & traj, const Eigen::VectorXd & new_target);

/// (Theta^T Q Theta + R)^-1 Theta^T Q, evaluated as the pseudo-inverse of
/// the square-root stack [S_Q Theta; S_R] applied to [S_Q; 0].
Eigen::MatrixXd response_gain(
  const Eigen::MatrixXd & Theta, const Eigen::MatrixXd & Q, const Eigen::MatrixXd & R);

// Singular or worse-conditioned I - L is reported as non-existence.
inline constexpr double kMaxCouplingCondition = 1e12;

struct NashGains
{
  Eigen::MatrixXd F1;
  Eigen::MatrixXd F2;
  Eigen::MatrixXd L;
  Eigen::MatrixXd M;
  Eigen::MatrixXd K;   // (I - L)^-1 M, empty when !exists
  Eigen::MatrixXd K1;  // first-move rows of K for the driver
  Eigen::MatrixXd K2;  // first-move rows of K for the system
  bool exists{false};
  double condition{0.0};
};

NashGains nash_gains(const PredictionMatrices & pred, const ConfidenceWeights & weights);

/// The joint stationarity matrix of both players' first-order conditions.
Eigen::MatrixXd coupling_matrix(const PredictionMatrices & pred, const ConfidenceWeights & weights);

struct NashSolution
{
  Eigen::VectorXd U1_star;
  Eigen::VectorXd U2_star;
  Eigen::VectorXd u_D;
  Eigen::VectorXd u_A;
  bool exists{false};
  double condition{0.0};
};

NashSolution nash_solve(
  const PredictionMatrices & pred, const ConfidenceWeights & weights, const TargetTrajectory & T1,
  const TargetTrajectory & T2, const Eigen::VectorXd & x, const Eigen::VectorXd & D);

/// Player i's cost for the given sequences.
double player_cost(
  const PredictionMatrices & pred, const ConfidenceWeights & weights, int player,
  const TargetTrajectory & target, const Eigen::VectorXd & x, const Eigen::VectorXd & U1,
  const Eigen::VectorXd & U2, const Eigen::VectorXd & D);

enum class LambdaMode : std::uint8_t {
  // lambda_i used as given at every step.
  Constant,
  // lambda_i(k) = lambda_i * kappa_i(k) / A, so a player holding no
  // privilege exerts no tracking pressure at all.
  PrivilegeScaled,
};

struct ControllerSettings
{
  int Np{10};
  int Nu{10};
  double lambda1{2.0};
  double lambda2{2.0};
  double r1{1.0};
  double r2{1.0};
  double total_privilege{0.1};
  LambdaMode lambda_mode{LambdaMode::PrivilegeScaled};
};

struct RecedingOutput
{
  Eigen::VectorXd u_D;
  Eigen::VectorXd u_A;
  NashSolution solution;
};

/// Receding-horizon game controller holding the two target windows.
class RecedingController
{
public:
  RecedingController(
    const DiscreteJointModel & model, const ControllerSettings & settings, TargetTrajectory driver,
    TargetTrajectory system);

  /// Shifts in the targets for step k + Np, rebuilds the confidence weights
  /// from the privilege horizon (kappa at k+1 ... k+Np) and returns the first
  /// Nash moves. On non-existence the returned inputs are empty.
  RecedingOutput step(
    const Eigen::VectorXd & x, const Eigen::VectorXd & D, const Eigen::VectorXd & driver_target,
    const Eigen::VectorXd & system_target, std::span<const double> kappa1_horizon,
    std::span<const double> kappa2_horizon);

  const PredictionMatrices & prediction() const { return pred_; }
  const TargetTrajectory & driver_targets() const { return driver_; }
  const TargetTrajectory & system_targets() const { return system_; }
  const ControllerSettings & settings() const { return settings_; }

  ConfidenceWeights weights_for(
    std::span<const double> kappa1_horizon, std::span<const double> kappa2_horizon) const;

private:
  ControllerSettings settings_;
  PredictionMatrices pred_;
  TargetTrajectory driver_;
  TargetTrajectory system_;
};

}  // namespace handover

#endif  // HANDOVER__GAME_MPC_HPP_
