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

#include "ggball/radiator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ggball {

namespace {

constexpr double kSupport = 6.0;  // in units of a0
constexpr double kMinDistance = 1e-12;

void check_kernel_args(double R, double a0, double v) {
  if (!(R > 0.0)) throw std::domain_error("pressure_kernel: R must be > 0");
  if (!(a0 > 0.0)) throw std::domain_error("pressure_kernel: a0 must be > 0");
  if (!(v > 0.0)) throw std::domain_error("pressure_kernel: v must be > 0");
}

// Serial pre-pass so the parallel loops below never throw.
void check_separation(std::span<const BallStateAtT> states, const SensorArray& array) {
  for (std::size_t b = 0; b < states.size(); ++b) {
    for (std::size_t m = 0; m < array.size(); ++m) {
      if (norm(states[b].mu_t - array.position(m)) <= kMinDistance) {
        throw std::domain_error("ball " + std::to_string(b) + " coincides with sensor " +
                                std::to_string(m));
      }
    }
  }
}

// Sample range [lo, hi) where |R - v t_j| <= 6 a0.
struct Span {
  std::size_t lo = 0;
  std::size_t hi = 0;
};

Span support(double R, double a0, const SensorArray& array) {
  const double v = array.sound_speed();
  const double fs = array.sample_rate();
  const double t_first = (R - kSupport * a0) / v;
  const double t_last = (R + kSupport * a0) / v;
  const double j_first = std::ceil((t_first - array.t_start()) * fs);
  const double j_last = std::floor((t_last - array.t_start()) * fs);
  const double n = static_cast<double>(array.n_samples());
  Span s;
  s.lo = static_cast<std::size_t>(std::clamp(j_first, 0.0, n));
  s.hi = static_cast<std::size_t>(std::clamp(j_last + 1.0, 0.0, n));
  if (s.hi < s.lo) s.hi = s.lo;
  return s;
}

// The near-field term (R + vt) g(R + vt) only matters when R < 6 a0; such
// pairs take the exact path.
bool needs_exact(double R, double a0, const SensorArray& array) {
  return R + array.sound_speed() * array.t_start() < kSupport * a0;
}

// Visits (j, s_j, g(s_j)) over the support window using the recurrence
// g_{j+1} = g_j q_j, q_{j+1} = q_j c for a Gaussian on a uniform grid.
template <typename Fn>
void for_each_support_sample(double R, double a0, const SensorArray& array, Fn&& fn) {
  const Span sp = support(R, a0, array);
  if (sp.lo >= sp.hi) return;
  const double h = array.sound_speed() * array.dt();
  const double inv_a2 = 1.0 / (a0 * a0);
  const double s_lo = R - array.sound_speed() * array.sample_time(sp.lo);
  double g = std::exp(-0.5 * s_lo * s_lo * inv_a2);
  double q = std::exp((s_lo * h - 0.5 * h * h) * inv_a2);
  const double c = std::exp(-h * h * inv_a2);
  for (std::size_t j = sp.lo; j < sp.hi; ++j) {
    const double s = s_lo - static_cast<double>(j - sp.lo) * h;
    fn(j, s, g);
    g *= q;
    q *= c;
  }
}

// Visits (j, s_j, g(s_j), u_j, g(u_j)) over every sample.
template <typename Fn>
void for_each_sample_exact(double R, double a0, const SensorArray& array, Fn&& fn) {
  const double v = array.sound_speed();
  const double inv_a2 = 1.0 / (a0 * a0);
  for (std::size_t j = 0; j < array.n_samples(); ++j) {
    const double vt = v * array.sample_time(j);
    const double s = R - vt;
    const double u = R + vt;
    fn(j, s, std::exp(-0.5 * s * s * inv_a2), u, std::exp(-0.5 * u * u * inv_a2));
  }
}

}  // namespace

double pressure_kernel(double R, double t, double p0, double a0, double v) {
  check_kernel_args(R, a0, v);
  const double s = R - v * t;
  const double u = R + v * t;
  const double inv_2a2 = 0.5 / (a0 * a0);
  return p0 / (2.0 * R) * (s * std::exp(-s * s * inv_2a2) + u * std::exp(-u * u * inv_2a2));
}

KernelPartials pressure_kernel_grad(double R, double t, double p0, double a0, double v) {
  check_kernel_args(R, a0, v);
  const double s = R - v * t;
  const double u = R + v * t;
  const double a2 = a0 * a0;
  const double gs = std::exp(-0.5 * s * s / a2);
  const double gu = std::exp(-0.5 * u * u / a2);
  const double shape = s * gs + u * gu;  // p / (p0 / 2R)
  KernelPartials k;
  k.d_p0 = shape / (2.0 * R);
  k.d_a0 = p0 / (2.0 * R) * (s * s * s * gs + u * u * u * gu) / (a2 * a0);
  k.d_R = -p0 * shape / (2.0 * R * R) +
          p0 / (2.0 * R) * (gs * (1.0 - s * s / a2) + gu * (1.0 - u * u / a2));
  return k;
}

TraceBuffer forward_frame(std::span<const BallStateAtT> states, const SensorArray& array,
                          RadiatorOptions opts) {
  const std::size_t M = array.size();
  TraceBuffer out(M, array.n_samples());
  const auto n_balls = static_cast<std::ptrdiff_t>(states.size());
  check_separation(states, array);

  // Each sensor row is written by one worker and summed in ball order, so
  // the result does not depend on the thread count.
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t mi = 0; mi < static_cast<std::ptrdiff_t>(M); ++mi) {
    const auto m = static_cast<std::size_t>(mi);
    auto row = out.row(m);
    const Vec3 pos = array.position(m);
    for (std::ptrdiff_t b = 0; b < n_balls; ++b) {
      const BallStateAtT& st = states[static_cast<std::size_t>(b)];
      const double R = norm(st.mu_t - pos);
      if (st.p0_t == 0.0 && !opts.exact) continue;
      const double amp = st.p0_t / (2.0 * R);
      if (opts.exact || needs_exact(R, st.a0_t, array)) {
        for_each_sample_exact(R, st.a0_t, array,
                              [&](std::size_t j, double s, double gs, double u, double gu) {
                                row[j] += amp * (s * gs + u * gu);
                              });
      } else {
        for_each_support_sample(R, st.a0_t, array,
                                [&](std::size_t j, double s, double g) { row[j] += amp * s * g; });
      }
    }
  }
  return out;
}

std::vector<StateGrad> state_gradients(std::span<const BallStateAtT> states,
                                       const SensorArray& array, const TraceBuffer& residual,
                                       RadiatorOptions opts) {
  if (residual.n_sensors() != array.size() || residual.n_samples() != array.n_samples()) {
    throw std::invalid_argument("state_gradients: residual shape does not match the array");
  }
  check_separation(states, array);
  std::vector<StateGrad> grads(states.size());
  const std::size_t M = array.size();

  // One worker per ball, sensors summed in index order: deterministic.
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t bi = 0; bi < static_cast<std::ptrdiff_t>(states.size()); ++bi) {
    const auto b = static_cast<std::size_t>(bi);
    const BallStateAtT& st = states[b];
    const double a = st.a0_t;
    const double a2 = a * a;
    StateGrad g;
    for (std::size_t m = 0; m < M; ++m) {
      const Vec3 d = st.mu_t - array.position(m);
      const double R = norm(d);
      auto r = residual.row(m);
      // sum r*f*g, sum r*f^3*g, sum r*g*(1 - f^2/a^2) over f in {s, u}
      double s1 = 0.0;
      double s3 = 0.0;
      double c1 = 0.0;
      if (opts.exact || needs_exact(R, a, array)) {
        for_each_sample_exact(R, a, array,
                              [&](std::size_t j, double s, double gs, double u, double gu) {
                                const double rj = r[j];
                                s1 += rj * (s * gs + u * gu);
                                s3 += rj * (s * s * s * gs + u * u * u * gu);
                                c1 += rj * (gs * (1.0 - s * s / a2) + gu * (1.0 - u * u / a2));
                              });
      } else {
        for_each_support_sample(R, a, array, [&](std::size_t j, double s, double gs) {
          const double rg = r[j] * gs;
          s1 += rg * s;
          s3 += rg * s * s * s;
          c1 += rg * (1.0 - s * s / a2);
        });
      }
      const double inv_2R = 0.5 / R;
      g.p0 += s1 * inv_2R;
      g.a0 += st.p0_t * s3 * inv_2R / (a2 * a);
      const double dR = -st.p0_t * s1 * inv_2R / R + st.p0_t * c1 * inv_2R;
      g.mu += (dR / R) * d;
    }
    grads[b] = g;
  }
  return grads;
}

FrameStates frame_states(const DynamicCloud& cloud, double t, double a0_floor) {
  FrameStates fs;
  fs.states.resize(cloud.size());
  fs.a0_clamped.assign(cloud.size(), 0);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    BallStateAtT s = ball_state_at(cloud.balls()[i], cloud.deforms()[i], t, cloud.coord_mode());
    if (s.a0_t < a0_floor) {
      s.a0_t = a0_floor;
      fs.a0_clamped[i] = 1;
    }
    fs.states[i] = s;
  }
  return fs;
}

void accumulate_frame_grads(const DynamicCloud& cloud, double t, const FrameStates& fs,
                            const SensorArray& array, const TraceBuffer& residual,
                            RadiatorOptions opts, std::vector<BallGrad>& grads) {
  if (grads.size() != cloud.size() || fs.states.size() != cloud.size()) {
    throw std::invalid_argument("accumulate_frame_grads: size mismatch");
  }
  const std::vector<StateGrad> sg = state_gradients(fs.states, array, residual, opts);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t bi = 0; bi < static_cast<std::ptrdiff_t>(cloud.size()); ++bi) {
    const auto b = static_cast<std::size_t>(bi);
    const StateGrad& g = sg[b];
    const std::array<double, kChannels> upstream{fs.a0_clamped[b] ? 0.0 : g.a0, g.p0, g.mu.x,
                                                 g.mu.y, g.mu.z};
    ball_state_vjp(cloud.balls()[b], cloud.deforms()[b], t, cloud.coord_mode(), upstream,
                   grads[b]);
  }
}

TimeWindow compute_time_window(std::span<const Vec3> positions, double sound_speed,
                               double sample_rate, const Box& roi, double margin_a0) {
  if (positions.empty()) throw std::domain_error("time window: no sensors");
  if (!(sound_speed > 0.0) || !(sample_rate > 0.0)) {
    throw std::domain_error("time window: sound_speed and sample_rate must be > 0");
  }
  double r_min = norm(positions.front());
  double r_max = r_min;
  for (const Vec3& p : positions) {
    r_min = std::min(r_min, norm(p));
    r_max = std::max(r_max, norm(p));
  }
  const double r_roi = roi.max_radius();
  if (r_roi >= r_min) {
    throw std::domain_error("time window: roi radius " + std::to_string(r_roi) +
                            " mm reaches the sensor sphere at " + std::to_string(r_min) + " mm");
  }
  const double t_lo = (r_min - r_roi - kSupport * margin_a0) / sound_speed;
  const double t_hi = (r_max + r_roi + kSupport * margin_a0) / sound_speed;
  TimeWindow w;
  const double width = (t_hi - t_lo) * sample_rate;
  w.n_samples = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(width - 1e-9)) + 1);
  const double center = 0.5 * (t_lo + t_hi);
  w.t_start = center - 0.5 * static_cast<double>(w.n_samples - 1) / sample_rate;
  return w;
}

}  // namespace ggball
