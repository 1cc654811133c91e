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
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ggball/deformation.hpp"
#include "ggball/types.hpp"

namespace ggball {

struct VoxelizeOptions {
  bool exact = false;  // otherwise each ball is truncated at 6 a0
};

/// V(x) = sum_b p0_b exp(-|x - mu_b|^2 / (2 a0_b^2)) at voxel centers.
VoxelGrid voxelize(std::span<const BallStateAtT> states, const GridSpec& grid,
                   VoxelizeOptions opts = {});

/// States of undeformed balls.
std::vector<BallStateAtT> static_states(std::span<const GaussBall> balls);

enum class MapAxis { XY, YZ, XZ };
inline constexpr std::array<MapAxis, 3> kMapAxes{MapAxis::XY, MapAxis::YZ, MapAxis::XZ};
std::string_view to_string(MapAxis axis);

/// Maximum amplitude projection. XY drops z (rows = x, cols = y), YZ drops
/// x (rows = y, cols = z), XZ drops y (rows = x, cols = z).
struct MapImage {
  MapAxis axis = MapAxis::XY;
  std::size_t rows = 0;
  std::size_t cols = 0;
  double pitch = 1.0;
  std::vector<double> values;

  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

MapImage map_project(const VoxelGrid& grid, MapAxis axis);

struct SsimOptions {
  std::size_t window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

/// Mean SSIM over all fully-covered window positions, after scaling both
/// images by their joint maximum. The window shrinks to the largest odd
/// size that fits when an image is smaller than it. Throws
/// std::invalid_argument on dimension mismatch.
double ssim(const MapImage& a, const MapImage& b, const SsimOptions& opts = {});

/// SSIM of two images already on the [0, dynamic_range] scale.
double ssim_raw(std::span<const double> a, std::span<const double> b, std::size_t rows,
                std::size_t cols, const SsimOptions& opts = {});

/// One frame of the comparison table: SSIM per MAP axis, per method.
struct SsimRow {
  std::size_t frame = 0;
  std::array<double, 3> recon{};
  std::array<double, 3> ubp{};
};

struct SsimTable {
  std::vector<SsimRow> rows;
  bool has_ubp = false;

  /// One JSON object per line.
  std::string to_jsonl() const;
  /// Aligned columns for terminals.
  std::string to_text() const;
};

/// SSIM of every frame's MAPs against ground truth. ubp may be empty.
SsimTable eval_report(const std::vector<VoxelGrid>& recon, const std::vector<VoxelGrid>& truth,
                      const std::vector<VoxelGrid>& ubp, const SsimOptions& opts = {});

/// 16-bit grayscale PNG, values mapped linearly from [0, scale] (clipped).
/// scale <= 0 means the image's own maximum.
void write_png16(const MapImage& image, const std::filesystem::path& path, double scale = 0.0);

}  // namespace ggball
