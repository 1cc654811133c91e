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

#include <cstdint>
#include <span>
#include <vector>

#include "ggball/deformation.hpp"
#include "ggball/types.hpp"

// Closed-form pressure radiated by a Gaussian ball with zero initial
// particle velocity, observed by ideal point detectors:
//
//   p(R, t) = p0 / (2R) [ (R - vt) g(R - vt) + (R + vt) g(R + vt) ],
//   g(s) = exp(-s^2 / (2 a0^2)).
namespace ggball {

double pressure_kernel(double R, double t, double p0, double a0, double v);

struct KernelPartials {
  double d_p0 = 0.0;
  double d_a0 = 0.0;
  double d_R = 0.0;
};

KernelPartials pressure_kernel_grad(double R, double t, double p0, double a0, double v);

struct RadiatorOptions {
  /// Evaluate every sample of every (ball, sensor) pair with both terms.
  /// Otherwise only samples within 6 a0 of the arrival time are visited,
  /// which drops contributions below exp(-18) of the pair's peak.
  bool exact = false;
};

/// Superposition of every ball's kernel at every sensor sample.
/// Throws std::domain_error naming the pair if a ball sits on a sensor.
TraceBuffer forward_frame(std::span<const BallStateAtT> states, const SensorArray& array,
                          RadiatorOptions opts = {});

/// dL/d(a0_t, p0_t, mu_t) for one ball, L = 1/2 ||residual||^2.
struct StateGrad {
  double a0 = 0.0;
  double p0 = 0.0;
  Vec3 mu;
};

/// Adjoint of forward_frame: per-ball gradients of 1/2 ||residual||^2 where
/// residual = forward_frame(states) - observed.
std::vector<StateGrad> state_gradients(std::span<const BallStateAtT> states,
                                       const SensorArray& array, const TraceBuffer& residual,
                                       RadiatorOptions opts = {});

/// Per-frame ball states, with a0_t clamped to a floor. Clamped balls carry
/// no a0 gradient.
struct FrameStates {
  std::vector<BallStateAtT> states;
  std::vector<std::uint8_t> a0_clamped;
};

FrameStates frame_states(const DynamicCloud& cloud, double t, double a0_floor);

/// Adds d(1/2 ||residual||^2)/d(parameter) for every baseline attribute and
/// every (omega, theta, sigma) entry into `grads` (one BallGrad per ball,
/// already sized). Composes state_gradients with ball_state_vjp.
void accumulate_frame_grads(const DynamicCloud& cloud, double t, const FrameStates& fs,
                            const SensorArray& array, const TraceBuffer& residual,
                            RadiatorOptions opts, std::vector<BallGrad>& grads);

struct TimeWindow {
  double t_start = 0.0;
  std::size_t n_samples = 2;
};

/// Acquisition window that covers every ball of std <= margin_a0 inside
/// roi: [(R_min - r_roi - 6 margin) / v, (R_max + r_roi + 6 margin) / v],
/// centered, with at least two samples. Throws std::domain_error if the roi
/// reaches the sensor sphere.
TimeWindow compute_time_window(std::span<const Vec3> positions, double sound_speed,
                               double sample_rate, const Box& roi, double margin_a0);

}  // namespace ggball
