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

#include "handover/plant.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <stdexcept>
#include <string>

namespace handover
{

void validate(const VehicleParams & p)
{
  if (!(p.a > 0 && p.b > 0 && p.m > 0 && p.Iz > 0 && p.Cf > 0 && p.Cr > 0)) {
    throw std::invalid_argument("vehicle params: all parameters must be positive");
  }
}

LateralState LateralState::from(const Eigen::Ref<const Eigen::VectorXd> & x)
{
  if (x.size() != 4) {
    throw std::invalid_argument("lateral state: expected 4 entries");
  }
  return {x(0), x(1), x(2), x(3)};
}

LongitudinalState LongitudinalState::from(const Eigen::Ref<const Eigen::VectorXd> & x)
{
  if (x.size() != 2) {
    throw std::invalid_argument("longitudinal state: expected 2 entries");
  }
  return {x(0), x(1)};
}

namespace
{

void check_blocks(
  const Eigen::MatrixXd & A, const Eigen::MatrixXd & B1, const Eigen::MatrixXd & B2,
  const Eigen::MatrixXd & Bw, const Eigen::MatrixXd & C)
{
  const auto n = A.rows();
  if (A.cols() != n || n == 0) {
    throw std::invalid_argument("model: A must be square and non-empty");
  }
  if (B1.rows() != n || B2.rows() != n || Bw.rows() != n) {
    throw std::invalid_argument("model: B1, B2 and Bw must have one row per state");
  }
  if (B1.cols() != B2.cols()) {
    throw std::invalid_argument("model: both players need the same input dimension");
  }
  if (C.cols() != n) {
    throw std::invalid_argument("model: C must have one column per state");
  }
}

}  // namespace

void validate(const ContinuousModel & model)
{
  check_blocks(model.A, model.B1, model.B2, model.Bw, model.C);
}

void validate(const DiscreteJointModel & model)
{
  check_blocks(model.A, model.B1, model.B2, model.Bw, model.C);
  if (!(model.step_time > 0.0)) {
    throw std::invalid_argument("model: step time must be > 0");
  }
}

ContinuousModel lateral_continuous(const VehicleParams & p, double vx)
{
  validate(p);
  if (!(vx > 0.0)) {
    throw std::domain_error("lateral model: longitudinal speed must be > 0");
  }
  const double a11 = -(2.0 * p.Cf + 2.0 * p.Cr) / (p.m * vx);
  const double a12 = -vx - (2.0 * p.a * p.Cf - 2.0 * p.b * p.Cr) / (p.m * vx);
  const double a21 = -(2.0 * p.a * p.Cf - 2.0 * p.b * p.Cr) / (p.Iz * vx);
  const double a22 = -(2.0 * p.a * p.a * p.Cf + 2.0 * p.b * p.b * p.Cr) / (p.Iz * vx);
  const double b1 = 2.0 * p.Cf / p.m;
  const double b2 = 2.0 * p.a * p.Cf / p.Iz;

  ContinuousModel m;
  m.A.resize(4, 4);
  // d_y' = v_y + vx * psi
  m.A << 0, 1, vx, 0,
         0, a11, 0, a12,
         0, 0, 0, 1,
         0, a21, 0, a22;
  m.B1.resize(4, 1);
  m.B1 << 0, b1, 0, b2;
  m.B2 = m.B1;
  m.Bw = Eigen::MatrixXd::Zero(4, 0);
  m.C.resize(2, 4);
  m.C << 1, 0, 0, 0,
         0, 0, 1, 0;
  return m;
}

ContinuousModel longitudinal_continuous()
{
  ContinuousModel m;
  m.A.resize(2, 2);
  m.A << 0, -1,
         0, 0;
  m.B1.resize(2, 1);
  m.B1 << 0, 1;
  m.B2 = m.B1;
  m.Bw.resize(2, 1);
  m.Bw << 1, 0;
  m.C = Eigen::MatrixXd::Identity(2, 2);
  return m;
}

DiscreteJointModel discretize(const ContinuousModel & cont, double step_time)
{
  validate(cont);
  if (!(step_time > 0.0)) {
    throw std::invalid_argument("discretize: step time must be > 0");
  }
  const auto n = cont.A.rows();
  const auto l = cont.B1.cols();
  const auto nw = cont.Bw.cols();
  const auto total = n + 2 * l + nw;

  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(total, total);
  aug.block(0, 0, n, n) = cont.A;
  aug.block(0, n, n, l) = cont.B1;
  aug.block(0, n + l, n, l) = cont.B2;
  aug.block(0, n + 2 * l, n, nw) = cont.Bw;

  const Eigen::MatrixXd phi = (aug * step_time).exp();
  if (!phi.allFinite()) {
    throw std::domain_error("discretize: matrix exponential is not finite");
  }

  DiscreteJointModel d;
  d.A = phi.block(0, 0, n, n);
  d.B1 = phi.block(0, n, n, l);
  d.B2 = phi.block(0, n + l, n, l);
  d.Bw = phi.block(0, n + 2 * l, n, nw);
  d.C = cont.C;
  d.step_time = step_time;
  return d;
}

Eigen::VectorXd step_plant(
  const DiscreteJointModel & model, const Eigen::Ref<const Eigen::VectorXd> & x,
  const Eigen::Ref<const Eigen::VectorXd> & u1, const Eigen::Ref<const Eigen::VectorXd> & u2,
  const Eigen::Ref<const Eigen::VectorXd> & w)
{
  if (x.size() != model.state_dim() || u1.size() != model.input_dim() ||
      u2.size() != model.input_dim() || w.size() != model.disturbance_dim()) {
    throw std::invalid_argument("step_plant: dimension mismatch");
  }
  Eigen::VectorXd next = model.A * x + model.B1 * u1 + model.B2 * u2;
  if (w.size() > 0) {
    next += model.Bw * w;
  }
  return next;
}

Eigen::VectorXd output(const DiscreteJointModel & model, const Eigen::Ref<const Eigen::VectorXd> & x)
{
  if (x.size() != model.state_dim()) {
    throw std::invalid_argument("output: dimension mismatch");
  }
  return model.C * x;
}

double saturate_steer(double delta, const ActuatorLimits & limits)
{
  return std::clamp(delta, -limits.max_steer, limits.max_steer);
}

double saturate_accel(double accel, const ActuatorLimits & limits)
{
  return std::clamp(accel, limits.min_accel, limits.max_accel);
}

}  // namespace handover
