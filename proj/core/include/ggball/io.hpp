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
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ggball/evaluation.hpp"
#include "ggball/phantom.hpp"
#include "ggball/types.hpp"

// On-disk formats. All integers and floats are little-endian; there is no
// padding anywhere.
//
// Tensor file:
//   "PAT1" | u32 version (1) | u32 dtype (1 = f32) | u32 rank | u64 dims[rank]
//   | f32 payload[prod(dims)], row-major
//
// Cloud file:
//   "GGB1" | u32 version (1) | u64 ball count | u32 n_basis
//   | u32 descriptor length | descriptor bytes
//   | per ball: f32 p0, a0, mu[3], theta[R*N], sigma[R*N], omega[5*N]
// The descriptor reads "a0,p0,mu_x,mu_y,mu_z;basis=<shared|independent>;coords=<mode>"
// and R is 1 for shared bases, 5 otherwise.
namespace ggball {

/// Malformed or mismatched input file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kTensorVersion = 1;
inline constexpr std::uint32_t kCloudVersion = 1;
inline constexpr std::uint32_t kDtypeF32 = 1;

struct Tensor {
  std::vector<std::uint64_t> dims;
  std::vector<float> data;
};

std::vector<std::uint8_t> encode_tensor(std::span<const std::uint64_t> dims,
                                        std::span<const double> values);
Tensor decode_tensor(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_cloud(const DynamicCloud& cloud);
DynamicCloud decode_cloud(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

void write_tensor(const std::filesystem::path& path, std::span<const std::uint64_t> dims,
                  std::span<const double> values);
Tensor read_tensor(const std::filesystem::path& path);

void write_cloud(const std::filesystem::path& path, const DynamicCloud& cloud);
DynamicCloud read_cloud(const std::filesystem::path& path);

/// Signal sets travel as (M, K, T) tensors; frame times are k / (K - 1).
void write_signals(const std::filesystem::path& path, const SignalSet& signals);
SignalSet read_signals(const std::filesystem::path& path);

void write_grid(const std::filesystem::path& path, const VoxelGrid& grid);
/// The tensor carries only dims; geometry comes from the run config.
VoxelGrid read_grid(const std::filesystem::path& path, const GridSpec& expected);

struct ArrayConfig {
  std::size_t m = 128;
  double radius = 30.0;
  double sound_speed = 1.5;
  double sample_rate = 5.0;
  double margin_a0 = 1.0;  // largest ball std the time window must cover, mm
  double noise_std = 0.0;
};

struct EvalConfig {
  double voxel_pitch = 0.4;
  SsimOptions ssim;
};

struct IoConfig {
  std::string phantom_dir = "phantom";
  std::string signals = "signals/signals.pat";
  std::string static_cloud = "static/static.ggb";
  std::string dynamic_cloud = "recon4d/cloud.ggb";
  std::string ubp_dir = "ubp";
};

/// Everything a run needs. Serializes to JSON with every default expanded.
struct RunConfig {
  std::string preset = "desk-heart";
  ArrayConfig array;
  PhantomSpec phantom;
  ReconConfig recon;
  EvalConfig eval;
  IoConfig io;
  std::uint64_t seed = 0;

  /// Named starting points: desk-heart, desk-vascular, full-heart, full-vascular.
  static RunConfig preset_named(std::string_view name);
};

/// Parses JSON text on top of the named preset (key "preset", default
/// desk-heart). Unknown keys anywhere throw std::invalid_argument.
RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::filesystem::path& path);
/// Fully-resolved config as pretty-printed JSON.
std::string dump_run_config(const RunConfig& cfg);
/// FNV-1a 64 over dump_run_config, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

/// Fibonacci sphere sized and timed from the config's phantom region.
SensorArray make_array(const RunConfig& cfg);
/// Evaluation grid covering the phantom region.
GridSpec make_grid(const RunConfig& cfg);

}  // namespace ggball
