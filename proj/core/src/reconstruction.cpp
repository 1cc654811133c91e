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

#include "ggball/reconstruction.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

namespace ggball {

namespace {

constexpr double kNoBound = -std::numeric_limits<double>::infinity();

void check_finite(const ParamGroup& g) {
  for (std::size_t i = 0; i < g.grad.size(); ++i) {
    if (!std::isfinite(g.grad[i])) {
      throw std::runtime_error("non-finite gradient in parameter group '" + g.name +
                               "' at index " + std::to_string(i));
    }
  }
}

// The fitting problem shared by both stages.
struct FitData {
  std::vector<TraceBuffer> frames;
  std::vector<double> times;
};

class Trainer {
 public:
  Trainer(DynamicCloud cloud, const SensorArray& array, const ReconConfig& cfg,
          std::string_view stage)
      : cloud_(std::move(cloud)), groups_(cloud_, cfg), array_(array), cfg_(cfg), stage_(stage) {
    state_.rng.seed(cfg.seed);
  }

  const DynamicCloud& cloud() const { return cloud_; }
  const TrainState& state() const { return state_; }

  double step(const FitData& data, const ProgressFn& progress) {
    const int iter = state_.iter;
    for (std::size_t g = 0; g < kGroups; ++g) {
      state_.lr[g] =
          scheduled_lr(groups_.all()[g].initial_lr, iter, cfg_.step_size, cfg_.drop_rate);
    }

    std::vector<std::size_t> selected;
    if (cfg_.frame_batch == FrameBatch::RandomSingle && data.frames.size() > 1) {
      std::uniform_int_distribution<std::size_t> pick(0, data.frames.size() - 1);
      selected.push_back(pick(state_.rng));
    } else {
      for (std::size_t k = 0; k < data.frames.size(); ++k) selected.push_back(k);
    }

    grads_.resize(cloud_.size());
    for (std::size_t b = 0; b < cloud_.size(); ++b) grads_[b].reset(cloud_.deforms()[b]);

    const RadiatorOptions ropts{.exact = cfg_.exact};
    double loss = 0.0;
    for (std::size_t k : selected) {
      const double t = data.times[k];
      const FrameStates fs = frame_states(cloud_, t, cfg_.a0_floor);
      TraceBuffer residual = forward_frame(fs.states, array_, ropts);
      auto& r = residual.data();
      const auto& obs = data.frames[k].data();
      for (std::size_t i = 0; i < r.size(); ++i) r[i] -= obs[i];
      double frame_loss = 0.0;
      for (double x : r) frame_loss += x * x;
      loss += 0.5 * frame_loss;
      accumulate_frame_grads(cloud_, t, fs, array_, residual, ropts, grads_);
    }
    if (!std::isfinite(loss)) {
      throw std::runtime_error(std::string(stage_) + ": non-finite loss at iteration " +
                               std::to_string(iter));
    }

    groups_.load_grads(grads_);
    for (std::size_t g = 0; g < kGroups; ++g) {
      ParamGroup& group = groups_.all()[g];
      if (cfg_.optimizer == OptimizerKind::Adam) {
        adam_step(group, state_.lr[g], iter + 1);
      } else {
        sgd_step(group, state_.lr[g]);
      }
    }
    groups_.store(cloud_);

    state_.loss_history.push_back(loss);
    if (progress) progress({stage_, iter, loss, state_.lr, cloud_.size()});
    ++state_.iter;
    return loss;
  }

  /// Removes balls with p0 <= prune_fraction * max p0.
  void prune() {
    double peak = 0.0;
    for (const GaussBall& b : cloud_.balls()) peak = std::max(peak, b.p0);
    const double threshold = cfg_.prune_fraction * peak;
    std::vector<std::uint8_t> mask(cloud_.size(), 1);
    std::vector<GaussBall> balls;
    std::vector<DeformField> deforms;
    for (std::size_t i = 0; i < cloud_.size(); ++i) {
      if (cloud_.balls()[i].p0 <= threshold) {
        mask[i] = 0;
        continue;
      }
      balls.push_back(cloud_.balls()[i]);
      deforms.push_back(cloud_.deforms()[i]);
    }
    if (balls.size() == cloud_.size()) return;
    groups_.keep(mask);
    cloud_ = DynamicCloud(std::move(balls), std::move(deforms), cloud_.coord_mode());
  }

 private:
  DynamicCloud cloud_;
  ParamGroups groups_;
  const SensorArray& array_;
  const ReconConfig& cfg_;
  std::string_view stage_;
  TrainState state_;
  std::vector<BallGrad> grads_;
};

}  // namespace

double l2_loss(std::span<const double> predicted, std::span<const double> observed) {
  if (predicted.size() != observed.size()) {
    throw std::invalid_argument("l2_loss: shape mismatch (" + std::to_string(predicted.size()) +
                                " vs " + std::to_string(observed.size()) + ")");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = predicted[i] - observed[i];
    acc += d * d;
  }
  return 0.5 * acc;
}

double l2_loss(const TraceBuffer& predicted, const TraceBuffer& observed) {
  if (predicted.n_sensors() != observed.n_sensors() ||
      predicted.n_samples() != observed.n_samples()) {
    throw std::invalid_argument("l2_loss: trace buffers differ in shape");
  }
  return l2_loss(predicted.data(), observed.data());
}

double scheduled_lr(double initial, int iter, int step_size, double drop_rate) {
  return initial * std::pow(drop_rate, static_cast<double>(iter / step_size));
}

void adam_step(ParamGroup& group, double lr, long step, const AdamHyper& hyper) {
  check_finite(group);
  const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < group.value.size(); ++i) {
    const double g = group.grad[i];
    group.m[i] = hyper.beta1 * group.m[i] + (1.0 - hyper.beta1) * g;
    group.v[i] = hyper.beta2 * group.v[i] + (1.0 - hyper.beta2) * g * g;
    const double m_hat = group.m[i] / bc1;
    const double v_hat = group.v[i] / bc2;
    group.value[i] -= lr * m_hat / (std::sqrt(v_hat) + hyper.eps);
    group.value[i] = std::max(group.value[i], group.lower[i]);
  }
}

void sgd_step(ParamGroup& group, double lr) {
  check_finite(group);
  for (std::size_t i = 0; i < group.value.size(); ++i) {
    group.value[i] = std::max(group.value[i] - lr * group.grad[i], group.lower[i]);
  }
}

ParamGroups::ParamGroups(const DynamicCloud& cloud, const ReconConfig& cfg)
    : n_balls_(cloud.size()),
      n_basis_(cloud.n_basis()),
      basis_rows_(cloud.empty() ? 1 : cloud.deforms().front().basis_rows()) {
  const std::array<double, kGroups> lrs{cfg.lr.coords, cfg.lr.pressure, cfg.lr.std,
                                        cfg.lr.deform};
  const std::size_t deform_stride = kChannels * n_basis_ + 2 * basis_rows_ * n_basis_;
  const std::array<std::size_t, kGroups> strides{3, 1, 1, deform_stride};
  for (std::size_t g = 0; g < kGroups; ++g) {
    ParamGroup& p = groups_[g];
    p.name = std::string(kGroupNames[g]);
    p.initial_lr = lrs[g];
    p.stride = strides[g];
    const std::size_t n = p.stride * n_balls_;
    p.value.resize(n);
    p.grad.assign(n, 0.0);
    p.m.assign(n, 0.0);
    p.v.assign(n, 0.0);
    p.lower.assign(n, kNoBound);
  }
  const std::size_t n_omega = kChannels * n_basis_;
  const std::size_t n_theta = basis_rows_ * n_basis_;
  for (std::size_t b = 0; b < n_balls_; ++b) {
    const GaussBall& ball = cloud.balls()[b];
    const DeformField& d = cloud.deforms()[b];
    for (std::size_t a = 0; a < 3; ++a) groups_[0].value[3 * b + a] = ball.mu[a];
    groups_[1].value[b] = ball.p0;
    groups_[1].lower[b] = cfg.p0_floor;
    groups_[2].value[b] = ball.a0;
    groups_[2].lower[b] = cfg.a0_floor;
    double* dv = groups_[3].value.data() + b * deform_stride;
    double* dl = groups_[3].lower.data() + b * deform_stride;
    std::copy(d.omega.begin(), d.omega.end(), dv);
    std::copy(d.theta.begin(), d.theta.end(), dv + n_omega);
    std::copy(d.sigma.begin(), d.sigma.end(), dv + n_omega + n_theta);
    std::fill(dl + n_omega + n_theta, dl + n_omega + 2 * n_theta, cfg.sigma_floor);
  }
}

void ParamGroups::load_grads(const std::vector<BallGrad>& grads) {
  if (grads.size() != n_balls_) throw std::invalid_argument("load_grads: ball count mismatch");
  const std::size_t n_omega = kChannels * n_basis_;
  const std::size_t n_theta = basis_rows_ * n_basis_;
  const std::size_t ds = groups_[3].stride;
  for (std::size_t b = 0; b < n_balls_; ++b) {
    const BallGrad& g = grads[b];
    for (std::size_t a = 0; a < 3; ++a) groups_[0].grad[3 * b + a] = g.mu[a];
    groups_[1].grad[b] = g.p0;
    groups_[2].grad[b] = g.a0;
    double* dg = groups_[3].grad.data() + b * ds;
    std::copy(g.omega.begin(), g.omega.end(), dg);
    std::copy(g.theta.begin(), g.theta.end(), dg + n_omega);
    std::copy(g.sigma.begin(), g.sigma.end(), dg + n_omega + n_theta);
  }
}

void ParamGroups::store(DynamicCloud& cloud) const {
  const std::size_t n_omega = kChannels * n_basis_;
  const std::size_t n_theta = basis_rows_ * n_basis_;
  const std::size_t ds = groups_[3].stride;
  for (std::size_t b = 0; b < n_balls_; ++b) {
    GaussBall& ball = cloud.balls()[b];
    DeformField& d = cloud.deforms()[b];
    for (std::size_t a = 0; a < 3; ++a) ball.mu[a] = groups_[0].value[3 * b + a];
    ball.p0 = groups_[1].value[b];
    ball.a0 = groups_[2].value[b];
    const double* dv = groups_[3].value.data() + b * ds;
    std::copy(dv, dv + n_omega, d.omega.begin());
    std::copy(dv + n_omega, dv + n_omega + n_theta, d.theta.begin());
    std::copy(dv + n_omega + n_theta, dv + n_omega + 2 * n_theta, d.sigma.begin());
  }
}

void ParamGroups::keep(const std::vector<std::uint8_t>& mask) {
  if (mask.size() != n_balls_) throw std::invalid_argument("keep: mask length mismatch");
  std::size_t kept = 0;
  for (ParamGroup& g : groups_) {
    kept = 0;
    for (std::size_t b = 0; b < n_balls_; ++b) {
      if (!mask[b]) continue;
      for (std::size_t s = 0; s < g.stride; ++s) {
        const std::size_t from = b * g.stride + s;
        const std::size_t to = kept * g.stride + s;
        g.value[to] = g.value[from];
        g.grad[to] = g.grad[from];
        g.m[to] = g.m[from];
        g.v[to] = g.v[from];
        g.lower[to] = g.lower[from];
      }
      ++kept;
    }
    const std::size_t n = kept * g.stride;
    g.value.resize(n);
    g.grad.resize(n);
    g.m.resize(n);
    g.v.resize(n);
    g.lower.resize(n);
  }
  n_balls_ = kept;
}

std::string to_json_line(const ProgressRecord& rec) {
  std::ostringstream os;
  os << std::setprecision(17) << "{\"stage\":\"" << rec.stage << "\",\"iter\":" << rec.iter
     << ",\"loss\":" << rec.loss << ",\"balls\":" << rec.n_balls << ",\"lr\":{";
  for (std::size_t g = 0; g < kGroups; ++g) {
    os << (g ? "," : "") << "\"" << kGroupNames[g] << "\":" << rec.lr[g];
  }
  os << "}}";
  return os.str();
}

std::vector<GaussBall> init_lattice(const Box& roi, double pitch, double p0) {
  if (!(pitch > 0.0)) throw std::invalid_argument("init_lattice: pitch must be > 0");
  if (roi.empty()) throw std::invalid_argument("init_lattice: empty roi");
  const Vec3 c = roi.center();
  std::array<long, 3> lo{}, hi{};
  for (std::size_t a = 0; a < 3; ++a) {
    lo[a] = static_cast<long>(std::ceil((roi.lo[a] - c[a]) / pitch - 1e-9));
    hi[a] = static_cast<long>(std::floor((roi.hi[a] - c[a]) / pitch + 1e-9));
  }
  std::vector<GaussBall> out;
  for (long i = lo[0]; i <= hi[0]; ++i) {
    for (long j = lo[1]; j <= hi[1]; ++j) {
      for (long k = lo[2]; k <= hi[2]; ++k) {
        const Vec3 p = c + pitch * Vec3{static_cast<double>(i), static_cast<double>(j),
                                        static_cast<double>(k)};
        out.push_back({p0, 0.5 * pitch, p});
      }
    }
  }
  return out;
}

std::size_t select_reference_frame(const ReconConfig& cfg, std::size_t n_frames) {
  if (n_frames == 0) throw std::invalid_argument("reference frame: no frames");
  if (cfg.random_reference) {
    std::mt19937_64 rng(cfg.seed);
    return std::uniform_int_distribution<std::size_t>(0, n_frames - 1)(rng);
  }
  const auto k = static_cast<std::size_t>(cfg.reference_frame);
  if (k >= n_frames) {
    throw std::invalid_argument("reference frame " + std::to_string(k) + " out of range for " +
                                std::to_string(n_frames) + " frames");
  }
  return k;
}

StaticResult static_reconstruct(const TraceBuffer& observed, const SensorArray& array,
                                const Box& roi, const ReconConfig& cfg,
                                const ProgressFn& progress) {
  cfg.validate();
  if (observed.n_sensors() != array.size() || observed.n_samples() != array.n_samples()) {
    throw std::invalid_argument("static_reconstruct: observed traces do not match the array");
  }
  double peak = 0.0;
  for (double v : observed.data()) peak = std::max(peak, std::abs(v));
  std::vector<GaussBall> init = init_lattice(roi, cfg.init_pitch, cfg.init_p0_fraction * peak);

  Trainer trainer(DynamicCloud::from_static(std::move(init), 0, true, cfg.coord_mode), array, cfg,
                  "static");
  const FitData data{{observed}, {0.0}};
  for (int it = 0; it < cfg.static_iters; ++it) {
    trainer.step(data, progress);
    if ((it + 1) % cfg.prune_every == 0) {
      trainer.prune();
      if (trainer.cloud().empty()) {
        throw std::runtime_error("static_reconstruct: every ball was pruned at iteration " +
                                 std::to_string(it) + "; lower prune_fraction");
      }
    }
  }
  return {trainer.cloud().balls(), trainer.state().loss_history};
}

DynamicResult dynamic_reconstruct(const SignalSet& observed, const SensorArray& array,
                                  std::vector<GaussBall> init, const ReconConfig& cfg,
                                  const ProgressFn& progress) {
  cfg.validate();
  observed.check_matches(array);
  if (init.empty()) throw std::invalid_argument("dynamic_reconstruct: empty initial cloud");
  if (observed.n_frames() < 2) {
    throw std::invalid_argument("dynamic_reconstruct: need at least two frames");
  }
  FitData data;
  data.times = observed.frame_times();
  for (std::size_t k = 0; k < observed.n_frames(); ++k) data.frames.push_back(observed.frame(k));

  Trainer trainer(
      DynamicCloud::from_static(std::move(init), cfg.n_basis, cfg.shared_basis, cfg.coord_mode),
      array, cfg, "4d");
  for (int it = 0; it < cfg.dynamic_iters; ++it) trainer.step(data, progress);
  return {trainer.cloud(), trainer.state().loss_history};
}

VoxelGrid ubp_reconstruct(const TraceBuffer& observed, const SensorArray& array,
                          const GridSpec& grid) {
  if (observed.n_sensors() != array.size() || observed.n_samples() != array.n_samples()) {
    throw std::invalid_argument("ubp: observed traces do not match the array");
  }
  const std::size_t M = array.size();
  const std::size_t T = array.n_samples();
  const double v = array.sound_speed();
  const double fs = array.sample_rate();

  // Time-of-flight coverage over the grid's bounding box.
  const Box bounds{grid.origin, grid.center(grid.dims[0] - 1, grid.dims[1] - 1, grid.dims[2] - 1)};
  double tof_min = std::numeric_limits<double>::infinity();
  double tof_max = 0.0;
  for (std::size_t m = 0; m < M; ++m) {
    const Vec3 p = array.position(m);
    Vec3 nearest;
    for (std::size_t a = 0; a < 3; ++a) nearest[a] = std::clamp(p[a], bounds.lo[a], bounds.hi[a]);
    double far = 0.0;
    for (int corner = 0; corner < 8; ++corner) {
      const Vec3 q{(corner & 1) ? bounds.hi.x : bounds.lo.x,
                   (corner & 2) ? bounds.hi.y : bounds.lo.y,
                   (corner & 4) ? bounds.hi.z : bounds.lo.z};
      far = std::max(far, norm(q - p));
    }
    tof_min = std::min(tof_min, norm(nearest - p) / v);
    tof_max = std::max(tof_max, far / v);
  }
  const double t_first = array.t_start();
  const double t_last = array.sample_time(T - 1);
  if (tof_min < t_first || tof_max > t_last) {
    std::ostringstream msg;
    msg << "ubp: sample window [" << t_first << ", " << t_last << "] us misses times of flight ["
        << tof_min << ", " << tof_max << "] us (short by " << std::max(0.0, t_first - tof_min)
        << " us at the start, " << std::max(0.0, tof_max - t_last) << " us at the end)";
    throw std::domain_error(msg.str());
  }

  // Back-projection term per sensor, central-difference derivative.
  TraceBuffer b(M, T);
  for (std::size_t m = 0; m < M; ++m) {
    auto p = observed.row(m);
    auto out = b.row(m);
    for (std::size_t j = 0; j < T; ++j) {
      double dp = 0.0;
      if (j == 0) {
        dp = (p[1] - p[0]) * fs;
      } else if (j == T - 1) {
        dp = (p[T - 1] - p[T - 2]) * fs;
      } else {
        dp = 0.5 * (p[j + 1] - p[j - 1]) * fs;
      }
      out[j] = 2.0 * p[j] - 2.0 * array.sample_time(j) * dp;
    }
  }

  VoxelGrid vol(grid);
  const double w = 1.0 / static_cast<double>(M);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(grid.dims[0]); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    for (std::size_t j = 0; j < grid.dims[1]; ++j) {
      for (std::size_t k = 0; k < grid.dims[2]; ++k) {
        const Vec3 x = grid.center(i, j, k);
        double acc = 0.0;
        for (std::size_t m = 0; m < M; ++m) {
          const double pos = (norm(x - array.position(m)) / v - t_first) * fs;
          const double fl = std::floor(pos);
          auto j0 = static_cast<std::size_t>(std::max(0.0, fl));
          if (j0 >= T - 1) j0 = T - 2;
          const double frac = pos - static_cast<double>(j0);
          acc += (1.0 - frac) * b.at(m, j0) + frac * b.at(m, j0 + 1);
        }
        vol.at(i, j, k) = w * acc;
      }
    }
  }
  return vol;
}

}  // namespace ggball
