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

#include "handover/game_mpc.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

namespace handover
{

namespace
{

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Lower block-triangular response of the stacked outputs to a held input
// sequence through input matrix B.
MatrixXd stacked_response(
  const std::vector<MatrixXd> & powers, const MatrixXd & C, const MatrixXd & B, int Np, int Nu)
{
  const Index p = C.rows();
  const Index l = B.cols();
  MatrixXd out = MatrixXd::Zero(p * Np, l * Nu);
  if (l == 0) {
    return out;
  }
  // Markov parameters C A^m B, m = 0 .. Np-1.
  std::vector<MatrixXd> markov;
  markov.reserve(static_cast<std::size_t>(Np));
  for (int m = 0; m < Np; ++m) {
    markov.push_back(C * powers[static_cast<std::size_t>(m)] * B);
  }
  for (int i = 0; i < Np; ++i) {
    for (int j = 0; j < Nu - 1 && j <= i; ++j) {
      out.block(i * p, j * l, p, l) = markov[static_cast<std::size_t>(i - j)];
    }
    // Last move is held to the end of the horizon.
    const int last = Nu - 1;
    if (i >= last) {
      MatrixXd acc = MatrixXd::Zero(p, l);
      for (int m = 0; m <= i - last; ++m) {
        acc += markov[static_cast<std::size_t>(m)];
      }
      out.block(i * p, last * l, p, l) = acc;
    }
  }
  return out;
}

MatrixXd symmetric_sqrt_factor(const MatrixXd & W)
{
  if (W.isDiagonal(0.0)) {
    return W.diagonal().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  }
  // S^T S = W for a general positive semi-definite W.
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(W);
  return eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
         eig.eigenvectors().transpose();
}

void check_weights(std::span<const double> values, const char * what)
{
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument(std::string("build_confidence: negative or non-finite ") + what);
    }
  }
}

VectorXd error_stack(
  const PredictionMatrices & pred, const TargetTrajectory & target, const VectorXd & x,
  const VectorXd & D)
{
  VectorXd e = target.stacked - pred.Psi * x;
  if (D.size() > 0) {
    e -= pred.Xi * D;
  }
  return e;
}

void check_problem(
  const PredictionMatrices & pred, const ConfidenceWeights & w, const TargetTrajectory & T1,
  const TargetTrajectory & T2, const VectorXd & x, const VectorXd & D)
{
  const Index rows = pred.Psi.rows();
  if (T1.stacked.size() != rows || T2.stacked.size() != rows) {
    throw std::invalid_argument("nash_solve: target length does not match the horizon");
  }
  if (x.size() != pred.Psi.cols() || D.size() != pred.Xi.cols()) {
    throw std::invalid_argument("nash_solve: state or disturbance size mismatch");
  }
  if (w.Q1.rows() != rows || w.Q2.rows() != rows || w.R1.rows() != pred.Theta1.cols() ||
      w.R2.rows() != pred.Theta2.cols()) {
    throw std::invalid_argument("nash_solve: weight sizes do not match the horizon");
  }
}

}  // namespace

PredictionMatrices build_prediction(const DiscreteJointModel & model, int Np, int Nu)
{
  validate(model);
  if (Nu < 1 || Np < Nu) {
    throw std::invalid_argument("build_prediction: require Np >= Nu >= 1");
  }
  const Index n = model.state_dim();
  const Index p = model.output_dim();

  std::vector<MatrixXd> powers;
  powers.reserve(static_cast<std::size_t>(Np) + 1);
  powers.push_back(MatrixXd::Identity(n, n));
  for (int i = 1; i <= Np; ++i) {
    powers.push_back(model.A * powers.back());
  }

  PredictionMatrices pred;
  pred.Np = Np;
  pred.Nu = Nu;
  pred.output_dim = p;
  pred.input_dim = model.input_dim();
  pred.disturbance_dim = model.disturbance_dim();
  pred.Psi.resize(p * Np, n);
  for (int i = 0; i < Np; ++i) {
    pred.Psi.block(i * p, 0, p, n) = model.C * powers[static_cast<std::size_t>(i) + 1];
  }
  pred.Theta1 = stacked_response(powers, model.C, model.B1, Np, Nu);
  pred.Theta2 = stacked_response(powers, model.C, model.B2, Np, Nu);
  pred.Xi = stacked_response(powers, model.C, model.Bw, Np, Nu);
  return pred;
}

Eigen::VectorXd predict(
  const PredictionMatrices & pred, const Eigen::VectorXd & x, const Eigen::VectorXd & U1,
  const Eigen::VectorXd & U2, const Eigen::VectorXd & D)
{
  VectorXd z = pred.Psi * x + pred.Theta1 * U1 + pred.Theta2 * U2;
  if (D.size() > 0) {
    z += pred.Xi * D;
  }
  return z;
}

ConfidenceWeights build_confidence(
  std::span<const double> kappa1, std::span<const double> kappa2,
  std::span<const double> lambda1, std::span<const double> lambda2, double r1, double r2,
  Eigen::Index control_size)
{
  const auto np = kappa1.size();
  if (kappa2.size() != np || lambda1.size() != np || lambda2.size() != np || np == 0) {
    throw std::invalid_argument("build_confidence: horizons must be non-empty and equally long");
  }
  check_weights(kappa1, "kappa1");
  check_weights(kappa2, "kappa2");
  check_weights(lambda1, "lambda1");
  check_weights(lambda2, "lambda2");
  if (!(r1 > 0.0) || !(r2 > 0.0)) {
    throw std::invalid_argument("build_confidence: input weights must be > 0");
  }
  if (control_size < 1) {
    throw std::invalid_argument("build_confidence: control size must be >= 1");
  }

  const auto rows = static_cast<Index>(2 * np);
  VectorXd q1(rows);
  VectorXd q2(rows);
  for (std::size_t i = 0; i < np; ++i) {
    const auto r = static_cast<Index>(2 * i);
    q1(r) = kappa1[i];
    q1(r + 1) = lambda1[i];
    q2(r) = kappa2[i];
    q2(r + 1) = lambda2[i];
  }
  ConfidenceWeights w;
  w.Q1 = q1.asDiagonal();
  w.Q2 = q2.asDiagonal();
  w.R1 = MatrixXd::Identity(control_size, control_size) * r1;
  w.R2 = MatrixXd::Identity(control_size, control_size) * r2;
  return w;
}

ConfidenceWeights build_confidence(
  std::span<const double> kappa1, std::span<const double> kappa2, double lambda1, double lambda2,
  double r1, double r2, Eigen::Index control_size)
{
  const std::vector<double> l1(kappa1.size(), lambda1);
  const std::vector<double> l2(kappa1.size(), lambda2);
  return build_confidence(kappa1, kappa2, l1, l2, r1, r2, control_size);
}

TargetTrajectory make_targets(const std::vector<Eigen::VectorXd> & blocks)
{
  if (blocks.empty()) {
    throw std::invalid_argument("make_targets: need at least one block");
  }
  const Index dim = blocks.front().size();
  TargetTrajectory t;
  t.block_dim = dim;
  t.stacked.resize(dim * static_cast<Index>(blocks.size()));
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (blocks[i].size() != dim) {
      throw std::invalid_argument("make_targets: blocks differ in size");
    }
    t.stacked.segment(static_cast<Index>(i) * dim, dim) = blocks[i];
  }
  return t;
}

TargetTrajectory constant_targets(const Eigen::VectorXd & target, int horizon)
{
  return make_targets(std::vector<VectorXd>(static_cast<std::size_t>(horizon), target));
}

TargetTrajectory shift_targets(const TargetTrajectory & traj, const Eigen::VectorXd & new_target)
{
  if (new_target.size() != traj.block_dim || traj.block_dim == 0) {
    throw std::invalid_argument("shift_targets: target dimension mismatch");
  }
  const Index n = traj.stacked.size();
  const Index d = traj.block_dim;
  TargetTrajectory out = traj;
  out.stacked.head(n - d) = traj.stacked.tail(n - d);
  out.stacked.tail(d) = new_target;
  return out;
}

Eigen::MatrixXd response_gain(
  const Eigen::MatrixXd & Theta, const Eigen::MatrixXd & Q, const Eigen::MatrixXd & R)
{
  const Index rows = Theta.rows();
  const Index cols = Theta.cols();
  if (Q.rows() != rows || Q.cols() != rows || R.rows() != cols || R.cols() != cols) {
    throw std::invalid_argument("response_gain: weight sizes do not match Theta");
  }
  const MatrixXd SQ = symmetric_sqrt_factor(Q);
  const MatrixXd SR = symmetric_sqrt_factor(R);

  MatrixXd lhs(rows + cols, cols);
  lhs << SQ * Theta, SR;
  MatrixXd rhs = MatrixXd::Zero(rows + cols, rows);
  rhs.topRows(rows) = SQ;
  return lhs.completeOrthogonalDecomposition().solve(rhs);
}

Eigen::MatrixXd coupling_matrix(const PredictionMatrices & pred, const ConfidenceWeights & w)
{
  const MatrixXd & T1 = pred.Theta1;
  const MatrixXd & T2 = pred.Theta2;
  const Index n1 = T1.cols();
  const Index n2 = T2.cols();
  MatrixXd P(n1 + n2, n1 + n2);
  P.topLeftCorner(n1, n1) = T1.transpose() * w.Q1 * T1 + w.R1;
  P.topRightCorner(n1, n2) = T1.transpose() * w.Q1 * T2;
  P.bottomLeftCorner(n2, n1) = T2.transpose() * w.Q2 * T1;
  P.bottomRightCorner(n2, n2) = T2.transpose() * w.Q2 * T2 + w.R2;
  return P;
}

NashGains nash_gains(const PredictionMatrices & pred, const ConfidenceWeights & weights)
{
  NashGains g;
  g.F1 = response_gain(pred.Theta1, weights.Q1, weights.R1);
  g.F2 = response_gain(pred.Theta2, weights.Q2, weights.R2);

  const Index n1 = g.F1.rows();
  const Index n2 = g.F2.rows();
  const Index m1 = g.F1.cols();
  const Index m2 = g.F2.cols();

  g.L = MatrixXd::Zero(n1 + n2, n1 + n2);
  g.L.topRightCorner(n1, n2) = -g.F1 * pred.Theta2;
  g.L.bottomLeftCorner(n2, n1) = -g.F2 * pred.Theta1;

  g.M = MatrixXd::Zero(n1 + n2, m1 + m2);
  g.M.topLeftCorner(n1, m1) = g.F1;
  g.M.bottomRightCorner(n2, m2) = g.F2;

  const MatrixXd I_minus_L = MatrixXd::Identity(n1 + n2, n1 + n2) - g.L;
  const Eigen::PartialPivLU<MatrixXd> lu(I_minus_L);
  const double rcond = lu.rcond();
  g.condition = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
  g.exists = std::isfinite(g.condition) && g.condition <= kMaxCouplingCondition;
  if (!g.exists) {
    return g;
  }
  g.K = lu.solve(g.M);
  const Index l = pred.input_dim;
  g.K1 = g.K.topRows(l);
  g.K2 = g.K.middleRows(n1, l);
  return g;
}

NashSolution nash_solve(
  const PredictionMatrices & pred, const ConfidenceWeights & weights, const TargetTrajectory & T1,
  const TargetTrajectory & T2, const Eigen::VectorXd & x, const Eigen::VectorXd & D)
{
  check_problem(pred, weights, T1, T2, x, D);
  const NashGains g = nash_gains(pred, weights);

  NashSolution sol;
  sol.exists = g.exists;
  sol.condition = g.condition;
  if (!g.exists) {
    return sol;
  }
  VectorXd errors(T1.stacked.size() + T2.stacked.size());
  errors << error_stack(pred, T1, x, D), error_stack(pred, T2, x, D);

  const VectorXd U = g.K * errors;
  const Index n1 = pred.Theta1.cols();
  sol.U1_star = U.head(n1);
  sol.U2_star = U.tail(U.size() - n1);
  sol.u_D = g.K1 * errors;
  sol.u_A = g.K2 * errors;
  return sol;
}

double player_cost(
  const PredictionMatrices & pred, const ConfidenceWeights & weights, int player,
  const TargetTrajectory & target, const Eigen::VectorXd & x, const Eigen::VectorXd & U1,
  const Eigen::VectorXd & U2, const Eigen::VectorXd & D)
{
  const VectorXd e = predict(pred, x, U1, U2, D) - target.stacked;
  const MatrixXd & Q = player == 1 ? weights.Q1 : weights.Q2;
  const MatrixXd & R = player == 1 ? weights.R1 : weights.R2;
  const VectorXd & U = player == 1 ? U1 : U2;
  return e.dot(Q * e) + U.dot(R * U);
}

RecedingController::RecedingController(
  const DiscreteJointModel & model, const ControllerSettings & settings, TargetTrajectory driver,
  TargetTrajectory system)
: settings_(settings),
  pred_(build_prediction(model, settings.Np, settings.Nu)),
  driver_(std::move(driver)),
  system_(std::move(system))
{
  if (driver_.block_dim != pred_.output_dim || system_.block_dim != pred_.output_dim ||
      driver_.horizon() != settings_.Np || system_.horizon() != settings_.Np) {
    throw std::invalid_argument("RecedingController: target windows do not match the horizon");
  }
  if (!(settings_.total_privilege > 0.0)) {
    throw std::invalid_argument("RecedingController: total privilege must be > 0");
  }
}

ConfidenceWeights RecedingController::weights_for(
  std::span<const double> kappa1_horizon, std::span<const double> kappa2_horizon) const
{
  const auto np = static_cast<std::size_t>(settings_.Np);
  if (kappa1_horizon.size() != np || kappa2_horizon.size() != np) {
    throw std::invalid_argument("RecedingController: privilege horizon must have Np entries");
  }
  std::vector<double> l1(np, settings_.lambda1);
  std::vector<double> l2(np, settings_.lambda2);
  if (settings_.lambda_mode == LambdaMode::PrivilegeScaled) {
    for (std::size_t i = 0; i < np; ++i) {
      l1[i] *= kappa1_horizon[i] / settings_.total_privilege;
      l2[i] *= kappa2_horizon[i] / settings_.total_privilege;
    }
  }
  return build_confidence(
    kappa1_horizon, kappa2_horizon, l1, l2, settings_.r1, settings_.r2,
    pred_.Theta1.cols());
}

RecedingOutput RecedingController::step(
  const Eigen::VectorXd & x, const Eigen::VectorXd & D, const Eigen::VectorXd & driver_target,
  const Eigen::VectorXd & system_target, std::span<const double> kappa1_horizon,
  std::span<const double> kappa2_horizon)
{
  driver_ = shift_targets(driver_, driver_target);
  system_ = shift_targets(system_, system_target);
  const ConfidenceWeights w = weights_for(kappa1_horizon, kappa2_horizon);

  RecedingOutput out;
  out.solution = nash_solve(pred_, w, driver_, system_, x, D);
  if (out.solution.exists) {
    out.u_D = out.solution.u_D;
    out.u_A = out.solution.u_A;
  }
  return out;
}

}  // namespace handover
