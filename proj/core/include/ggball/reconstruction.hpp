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
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ggball/deformation.hpp"
#include "ggball/radiator.hpp"
#include "ggball/types.hpp"

namespace ggball {

/// 1/2 sum (predicted - observed)^2. Throws std::invalid_argument on shape mismatch.
double l2_loss(std::span<const double> predicted, std::span<const double> observed);
double l2_loss(const TraceBuffer& predicted, const TraceBuffer& observed);

/// initial * drop_rate^floor(iter / step_size).
double scheduled_lr(double initial, int iter, int step_size, double drop_rate);

enum class Group : std::size_t { Coords = 0, Pressure = 1, Std = 2, Deform = 3 };
inline constexpr std::size_t kGroups = 4;
inline constexpr std::array<std::string_view, kGroups> kGroupNames{"coords", "pressure", "std",
                                                                   "deform"};

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One optimizer parameter group: a flat buffer with `stride` scalars per
/// ball, its gradient, Adam moments and per-scalar lower bounds.
struct ParamGroup {
  std::string name;
  double initial_lr = 0.0;
  std::size_t stride = 0;
  std::vector<double> value;
  std::vector<double> grad;
  std::vector<double> m;
  std::vector<double> v;
  std::vector<double> lower;

  std::size_t size() const { return value.size(); }
};

/// Adam update with bias correction (step is 1-based), then clamp to
/// `lower`. Throws std::runtime_error naming the group on a non-finite gradient.
void adam_step(ParamGroup& group, double lr, long step, const AdamHyper& hyper = {});
/// Plain gradient descent, same clamping and error behavior.
void sgd_step(ParamGroup& group, double lr);

/// The four learnable groups (coords, pressure, std, deform) of a cloud.
/// Every learnable scalar of the cloud lives in exactly one group.
class ParamGroups {
 public:
  ParamGroups(const DynamicCloud& cloud, const ReconConfig& cfg);

  ParamGroup& operator[](Group g) { return groups_[static_cast<std::size_t>(g)]; }
  const ParamGroup& operator[](Group g) const { return groups_[static_cast<std::size_t>(g)]; }
  std::array<ParamGroup, kGroups>& all() { return groups_; }

  std::size_t n_balls() const { return n_balls_; }
  void load_grads(const std::vector<BallGrad>& grads);
  void store(DynamicCloud& cloud) const;
  /// Drops balls whose mask entry is 0, moments included.
  void keep(const std::vector<std::uint8_t>& mask);

 private:
  std::array<ParamGroup, kGroups> groups_;
  std::size_t n_balls_ = 0;
  std::size_t n_basis_ = 0;
  std::size_t basis_rows_ = 1;
};

struct TrainState {
  int iter = 0;
  std::array<double, kGroups> lr{};
  std::vector<double> loss_history;
  std::mt19937_64 rng;
};

/// One line of training progress. `loss` is evaluated before the update.
struct ProgressRecord {
  std::string_view stage;
  int iter = 0;
  double loss = 0.0;
  std::array<double, kGroups> lr{};
  std::size_t n_balls = 0;
};
using ProgressFn = std::function<void(const ProgressRecord&)>;

/// Formats a record as one JSON line (no trailing newline).
std::string to_json_line(const ProgressRecord& rec);

/// Uniform lattice centered in roi at the given pitch, a0 = pitch / 2.
std::vector<GaussBall> init_lattice(const Box& roi, double pitch, double p0);

/// config.reference_frame, or a seeded random frame when random_reference is set.
std::size_t select_reference_frame(const ReconConfig& cfg, std::size_t n_frames);

struct StaticResult {
  std::vector<GaussBall> balls;
  std::vector<double> loss;
};

/// Lattice init, optimizer on (p0, a0, mu) against one frame, pruning of
/// balls below prune_fraction * max p0 every prune_every iterations.
/// Throws std::runtime_error if no ball survives.
StaticResult static_reconstruct(const TraceBuffer& observed, const SensorArray& array,
                                const Box& roi, const ReconConfig& cfg,
                                const ProgressFn& progress = {});

struct DynamicResult {
  DynamicCloud cloud;
  std::vector<double> loss;
};

/// Attaches identity deformation fields to `init` and fits baseline
/// attributes and deformation parameters jointly against every frame.
DynamicResult dynamic_reconstruct(const SignalSet& observed, const SensorArray& array,
                                  std::vector<GaussBall> init, const ReconConfig& cfg,
                                  const ProgressFn& progress = {});

/// Universal back-projection with b(t) = 2 p(t) - 2 t dp/dt and uniform
/// weights 1/M. Throws std::domain_error if the sample window misses some
/// voxel's time of flight.
VoxelGrid ubp_reconstruct(const TraceBuffer& observed, const SensorArray& array,
                          const GridSpec& grid);

}  // namespace ggball
