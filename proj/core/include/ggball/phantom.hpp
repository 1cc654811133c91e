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
#include <string_view>
#include <vector>

#include "ggball/types.hpp"

namespace ggball {

/// Golden-angle lattice: z_i = 1 - (2i + 1)/m, phi_i = 2 pi i (1 - 1/golden),
/// scaled to `radius`. Throws std::domain_error for m == 0 or radius <= 0.
std::vector<Vec3> fibonacci_sphere(std::size_t m, double radius);

enum class PhantomKind { Heart, Vascular, Custom };
std::string_view to_string(PhantomKind kind);
PhantomKind phantom_kind_from_string(std::string_view name);

/// Three static plates plus a Gaussian-weighted ellipsoid cluster at
/// `center` that pulses with 1 + A sin(2 pi k / (K - 1)).
struct HeartParams {
  std::vector<Box> slabs;
  double slab_p0 = 1.0;
  Vec3 center;
  Vec3 semi_axes{4.8, 4.0, 3.2};  // lattice points inside are kept; p0 std = semi_axis / 2
  double ellipsoid_p0 = 1.0;
  double pulsation = 0.3;
  bool pulse_amplitude = true;
  bool pulse_extent = true;
};

/// Random binary tube tree with Murray's-law radius decay. Tubes widen by
/// (1 + dilation k/(K-1)) about their centerlines and brighten by
/// (1 + amplitude_growth k/(K-1)).
struct VascularParams {
  Vec3 root{0.0, 0.0, -9.6};
  Vec3 direction{0.0, 0.0, 1.0};
  double root_radius = 1.2;
  double segment_length = 7.0;
  double length_decay = 0.8;
  int depth = 4;
  double branch_angle_deg = 35.0;
  double p0 = 1.0;
  double dilation = 0.25;
  double amplitude_growth = 0.5;
};

struct PhantomSpec {
  PhantomKind kind = PhantomKind::Heart;
  Box region = Box::cube(25.6);
  std::size_t n_frames = 17;
  double pitch = 0.4;  // lattice pitch; each ball has a0 = pitch / 2
  std::uint64_t seed = 0;
  HeartParams heart;
  VascularParams vascular;
  std::vector<GaussBall> custom;  // static balls for kind == Custom

  /// Desk-scale heart: region +-12.8 mm, 1.6 mm pitch, ~200 balls.
  static PhantomSpec desk_heart(std::size_t n_frames = 8);
  /// Desk-scale vascular tree in the same region.
  static PhantomSpec desk_vascular(std::size_t n_frames = 8);
  /// Heart at the original scale: region +-25.6 mm.
  static PhantomSpec full_heart(std::size_t n_frames = 17);

  void validate() const;
};

/// Ground truth: one ball list per frame plus the voxelized frames.
struct Phantom {
  std::vector<std::vector<GaussBall>> frames;
  std::vector<VoxelGrid> grids;
};

/// Throws std::invalid_argument when any ball leaves the region at any frame.
Phantom build_phantom(const PhantomSpec& spec, const GridSpec& grid);

/// Ball lists only, without voxelization.
std::vector<std::vector<GaussBall>> phantom_frames(const PhantomSpec& spec);

/// Forward-simulates every frame and adds i.i.d. N(0, noise_std^2) noise.
SignalSet simulate_dataset(const std::vector<std::vector<GaussBall>>& frames,
                           const SensorArray& array, double noise_std, std::uint64_t seed);

}  // namespace ggball
