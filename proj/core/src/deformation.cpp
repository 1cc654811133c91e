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

#include "ggball/deformation.hpp"

#include <cmath>
#include <stdexcept>

namespace ggball {

namespace {

// Which omega row drives output channel c under the given mode.
std::size_t omega_row_for(std::size_t c, CoordMode mode) {
  if (mode == CoordMode::ScalarMultiplicative && c > index(Channel::MuX)) {
    return index(Channel::MuX);
  }
  return c;
}

double base_value(const GaussBall& ball, std::size_t c) {
  switch (c) {
    case 0:
      return ball.a0;
    case 1:
      return ball.p0;
    default:
      return ball.mu[c - 2];
  }
}

bool additive(std::size_t c, CoordMode mode) {
  return mode == CoordMode::Additive && c >= index(Channel::MuX);
}

double h_of(const DeformField& d, std::size_t row, std::size_t basis_row, double t) {
  const std::size_t n = d.n_basis;
  double h = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = d.omega[row * n + i];
    if (w == 0.0) continue;
    h += w * eval_basis(t, d.theta[basis_row * n + i], d.sigma[basis_row * n + i]);
  }
  return h;
}

}  // namespace

double eval_basis(double t, double theta, double sigma) {
  if (!(sigma > 0.0)) throw std::domain_error("eval_basis: sigma must be > 0");
  const double u = (t - theta) / sigma;
  return std::exp(-0.5 * u * u);
}

double eval_H(double t, std::span<const double> omega, std::span<const double> theta,
              std::span<const double> sigma) {
  if (omega.size() != theta.size() || omega.size() != sigma.size()) {
    throw std::domain_error("eval_H: omega/theta/sigma lengths differ");
  }
  double h = 0.0;
  for (std::size_t n = 0; n < omega.size(); ++n) {
    h += omega[n] * eval_basis(t, theta[n], sigma[n]);
  }
  return h;
}

BallStateAtT ball_state_at(const GaussBall& ball, const DeformField& deform, double t,
                           CoordMode mode) {
  // Skipping zero weights keeps omega = 0 bit-exact: value * (1 + 0.0) == value.
  std::array<double, kChannels> h{};
  for (std::size_t c = 0; c < kChannels; ++c) {
    const std::size_t row = omega_row_for(c, mode);
    if (row != c) {
      h[c] = h[row];
      continue;
    }
    h[c] = h_of(deform, row, deform.basis_row(row), t);
  }
  BallStateAtT s;
  s.a0_t = ball.a0 * (1.0 + h[0]);
  s.p0_t = ball.p0 * (1.0 + h[1]);
  for (std::size_t i = 0; i < 3; ++i) {
    s.mu_t[i] = additive(i + 2, mode) ? ball.mu[i] + h[i + 2] : ball.mu[i] * (1.0 + h[i + 2]);
  }
  return s;
}

BallStateJacobian ball_state_grad(const GaussBall& ball, const DeformField& deform, double t,
                                  CoordMode mode) {
  deform.validate();
  const std::size_t n = deform.n_basis;
  BallStateJacobian jac;
  for (std::size_t c = 0; c < kChannels; ++c) {
    ChannelJacobian& j = jac[c];
    j.omega_row = omega_row_for(c, mode);
    j.basis_row = deform.basis_row(j.omega_row);
    j.d_omega.assign(n, 0.0);
    j.d_theta.assign(n, 0.0);
    j.d_sigma.assign(n, 0.0);

    const double base = base_value(ball, c);
    const bool add = additive(c, mode);
    // d(value)/dH: 1 in additive mode, base otherwise.
    const double scale = add ? 1.0 : base;
    double h = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double w = deform.omega[j.omega_row * n + i];
      const double th = deform.theta[j.basis_row * n + i];
      const double sg = deform.sigma[j.basis_row * n + i];
      const double b = eval_basis(t, th, sg);
      const double dt = t - th;
      h += w * b;
      j.d_omega[i] = scale * b;
      j.d_theta[i] = scale * w * b * dt / (sg * sg);
      j.d_sigma[i] = scale * w * b * dt * dt / (sg * sg * sg);
    }
    j.value = add ? base + h : base * (1.0 + h);
    j.d_base = add ? 1.0 : 1.0 + h;
  }
  return jac;
}

void BallGrad::reset(const DeformField& layout) {
  p0 = 0.0;
  a0 = 0.0;
  mu = {};
  theta.assign(layout.theta.size(), 0.0);
  sigma.assign(layout.sigma.size(), 0.0);
  omega.assign(layout.omega.size(), 0.0);
}

void ball_state_vjp(const GaussBall& ball, const DeformField& deform, double t, CoordMode mode,
                    const std::array<double, kChannels>& upstream, BallGrad& out) {
  const std::size_t n = deform.n_basis;

  // Fold upstream grads onto the omega rows that produce them. g_h[row] is
  // dL/dH_row; base grads are accumulated once H is known.
  std::array<double, kChannels> g_h{};
  for (std::size_t c = 0; c < kChannels; ++c) {
    const double scale = additive(c, mode) ? 1.0 : base_value(ball, c);
    g_h[omega_row_for(c, mode)] += upstream[c] * scale;
  }

  std::array<double, kChannels> h{};
  for (std::size_t row = 0; row < kChannels; ++row) {
    if (mode == CoordMode::ScalarMultiplicative && row > index(Channel::MuX)) continue;
    const std::size_t brow = deform.basis_row(row);
    const double g = g_h[row];
    for (std::size_t i = 0; i < n; ++i) {
      const double w = deform.omega[row * n + i];
      const double th = deform.theta[brow * n + i];
      const double sg = deform.sigma[brow * n + i];
      const double dt = t - th;
      const double u = dt / sg;
      const double b = std::exp(-0.5 * u * u);
      h[row] += w * b;
      out.omega[row * n + i] += g * b;
      if (w != 0.0 && g != 0.0) {
        const double gwb = g * w * b;
        out.theta[brow * n + i] += gwb * dt / (sg * sg);
        out.sigma[brow * n + i] += gwb * dt * dt / (sg * sg * sg);
      }
    }
  }

  for (std::size_t c = 0; c < kChannels; ++c) {
    const double hc = h[omega_row_for(c, mode)];
    const double d_base = additive(c, mode) ? 1.0 : 1.0 + hc;
    const double g = upstream[c] * d_base;
    switch (c) {
      case 0:
        out.a0 += g;
        break;
      case 1:
        out.p0 += g;
        break;
      default:
        out.mu[c - 2] += g;
        break;
    }
  }
}

}  // namespace ggball
