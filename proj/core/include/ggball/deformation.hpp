/*
Copyright 2026 The GGBall Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS-IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#pragma once

#include <array>
#include <span>
#include <vector>

#include "ggball/types.hpp"

// Gaussian-basis temporal deformation of ball attributes:
//
//   H(t) = sum_n omega_n exp(-(t - theta_n)^2 / (2 sigma_n^2))
//   a0(t) = a0 (1 + H_a0(t)),  p0(t) = p0 (1 + H_p0(t)),  mu(t) per CoordMode.
namespace ggball {

/// exp(-(t - theta)^2 / (2 sigma^2)). Throws std::domain_error if sigma <= 0.
double eval_basis(double t, double theta, double sigma);

/// Weighted basis sum. Throws std::domain_error on length mismatch or sigma <= 0.
double eval_H(double t, std::span<const double> omega, std::span<const double> theta,
              std::span<const double> sigma);

/// Instantaneous attributes of one ball.
struct BallStateAtT {
  double a0_t = 1.0;
  double p0_t = 0.0;
  Vec3 mu_t;
};

BallStateAtT ball_state_at(const GaussBall& ball, const DeformField& deform, double t,
                           CoordMode mode);

/// Partials of one output channel (a0_t, p0_t, mu_x_t, ...) of ball_state_at.
/// The output depends on a single baseline scalar and on one omega row and
/// one theta/sigma row; the row indices are recorded so callers can scatter.
struct ChannelJacobian {
  double value = 0.0;
  double d_base = 0.0;        // w.r.t. the channel's baseline scalar
  std::size_t omega_row = 0;  // which omega row d_omega refers to
  std::size_t basis_row = 0;  // which theta/sigma row d_theta/d_sigma refer to
  std::vector<double> d_omega;
  std::vector<double> d_theta;
  std::vector<double> d_sigma;
};

/// Full Jacobian of ball_state_at, one entry per output channel in
/// (a0, p0, mu_x, mu_y, mu_z) order.
using BallStateJacobian = std::array<ChannelJacobian, kChannels>;

BallStateJacobian ball_state_grad(const GaussBall& ball, const DeformField& deform, double t,
                                  CoordMode mode);

/// Gradient accumulator for one ball's learnable parameters, laid out like
/// GaussBall and DeformField.
struct BallGrad {
  double p0 = 0.0;
  double a0 = 0.0;
  Vec3 mu;
  std::vector<double> theta;
  std::vector<double> sigma;
  std::vector<double> omega;

  void reset(const DeformField& layout);
};

/// Vector-Jacobian product of ball_state_at: given dL/d(a0_t, p0_t, mu_t)
/// in channel order, adds dL/d(parameters) into `out`. Avoids materializing
/// the Jacobian; the inner loop shares one basis evaluation across channels.
void ball_state_vjp(const GaussBall& ball, const DeformField& deform, double t, CoordMode mode,
                    const std::array<double, kChannels>& upstream, BallGrad& out);

}  // namespace ggball
