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
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

// Shared domain types. Units throughout: mm, microseconds, mm/us.
namespace ggball {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double& operator[](std::size_t i) { return i == 0 ? x : (i == 1 ? y : z); }
  double operator[](std::size_t i) const { return i == 0 ? x : (i == 1 ? y : z); }

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
  friend Vec3 operator*(Vec3 a, double s) { return s * a; }
  Vec3& operator+=(Vec3 o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }

/// Axis-aligned box, closed on both ends.
struct Box {
  Vec3 lo;
  Vec3 hi;

  bool empty() const { return !(lo.x <= hi.x && lo.y <= hi.y && lo.z <= hi.z); }
  bool contains(Vec3 p) const {
    return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z &&
           p.z <= hi.z;
  }
  Vec3 center() const { return 0.5 * (lo + hi); }
  /// Largest distance from the origin to any point of the box.
  double max_radius() const;
  static Box cube(double half) { return {{-half, -half, -half}, {half, half, half}}; }
};

/// One spherical Gaussian source. Kept as a plain aggregate because the
/// optimizer owns and mutates these values; use validate_cloud() to check them.
struct GaussBall {
  double p0 = 0.0;  // peak initial pressure
  double a0 = 1.0;  // standard deviation, mm
  Vec3 mu;          // center, mm

  friend bool operator==(const GaussBall&, const GaussBall&) = default;
};

/// Deformable channels, in the fixed order used by DeformField::omega and
/// every file format.
enum class Channel : std::size_t { A0 = 0, P0 = 1, MuX = 2, MuY = 3, MuZ = 4 };
inline constexpr std::size_t kChannels = 5;
inline constexpr std::array<std::string_view, kChannels> kChannelNames{"a0", "p0", "mu_x",
                                                                       "mu_y", "mu_z"};
inline constexpr std::size_t index(Channel c) { return static_cast<std::size_t>(c); }

/// How position channels deform.
///   Multiplicative:        mu_i(t) = mu_i (1 + H_i(t))
///   Additive:              mu_i(t) = mu_i + H_i(t)   (H in mm)
///   ScalarMultiplicative:  mu(t) = mu (1 + H(t)) with a single H stored in the mu_x row
enum class CoordMode { Multiplicative, Additive, ScalarMultiplicative };

std::string_view to_string(CoordMode mode);
CoordMode coord_mode_from_string(std::string_view name);

/// Gaussian-basis temporal curves for one ball. omega has one row per
/// channel (kChannels x n_basis, row-major). theta/sigma hold one row shared
/// by all channels, or one row per channel when shared_basis is false.
struct DeformField {
  std::size_t n_basis = 0;
  bool shared_basis = true;
  std::vector<double> theta;
  std::vector<double> sigma;
  std::vector<double> omega;

  std::size_t basis_rows() const { return shared_basis ? 1 : kChannels; }
  std::size_t basis_row(std::size_t channel) const { return shared_basis ? 0 : channel; }

  std::span<const double> omega_row(std::size_t c) const {
    return {omega.data() + c * n_basis, n_basis};
  }
  std::span<const double> theta_row(std::size_t c) const {
    return {theta.data() + basis_row(c) * n_basis, n_basis};
  }
  std::span<const double> sigma_row(std::size_t c) const {
    return {sigma.data() + basis_row(c) * n_basis, n_basis};
  }

  /// Zero weights, centers evenly spaced on [0, 1], widths of two spacings.
  static DeformField identity(std::size_t n_basis, bool shared_basis = true);

  /// Throws std::invalid_argument on inconsistent sizes or sigma <= 0.
  void validate() const;

  friend bool operator==(const DeformField&, const DeformField&) = default;
};

/// Baseline balls plus their index-aligned deformation fields.
class DynamicCloud {
 public:
  DynamicCloud() = default;
  DynamicCloud(std::vector<GaussBall> balls, std::vector<DeformField> deforms,
               CoordMode mode = CoordMode::Multiplicative);
  /// Static cloud: every ball gets an identity field with n_basis bases.
  static DynamicCloud from_static(std::vector<GaussBall> balls, std::size_t n_basis,
                                  bool shared_basis = true,
                                  CoordMode mode = CoordMode::Multiplicative);

  std::size_t size() const { return balls_.size(); }
  bool empty() const { return balls_.empty(); }
  std::size_t n_basis() const { return deforms_.empty() ? 0 : deforms_.front().n_basis; }
  CoordMode coord_mode() const { return mode_; }

  const std::vector<GaussBall>& balls() const { return balls_; }
  const std::vector<DeformField>& deforms() const { return deforms_; }
  std::vector<GaussBall>& balls() { return balls_; }
  std::vector<DeformField>& deforms() { return deforms_; }

  friend bool operator==(const DynamicCloud&, const DynamicCloud&) = default;

 private:
  std::vector<GaussBall> balls_;
  std::vector<DeformField> deforms_;
  CoordMode mode_ = CoordMode::Multiplicative;
};

struct Violation {
  std::size_t index = 0;
  std::string field;
  std::string message;
};

/// Diagnostic pass over a cloud: non-positive a0, negative p0, bad deform
/// fields, and baseline centers outside roi. Empty result means valid.
std::vector<Violation> validate_cloud(const DynamicCloud& cloud, const Box& roi);

/// Detector positions plus acoustic and sampling parameters.
class SensorArray {
 public:
  SensorArray(std::vector<Vec3> positions, double sound_speed, double sample_rate,
              std::size_t n_samples, double t_start);
  /// Same as the constructor, additionally requiring all positions to share
  /// one radius (1e-9 relative).
  static SensorArray spherical(std::vector<Vec3> positions, double sound_speed,
                               double sample_rate, std::size_t n_samples, double t_start);

  std::size_t size() const { return positions_.size(); }
  const std::vector<Vec3>& positions() const { return positions_; }
  const Vec3& position(std::size_t m) const { return positions_[m]; }
  double sound_speed() const { return sound_speed_; }
  double sample_rate() const { return sample_rate_; }
  double dt() const { return 1.0 / sample_rate_; }
  std::size_t n_samples() const { return n_samples_; }
  double t_start() const { return t_start_; }
  double sample_time(std::size_t j) const {
    return t_start_ + static_cast<double>(j) / sample_rate_;
  }
  double min_radius() const;
  double max_radius() const;

 private:
  std::vector<Vec3> positions_;
  double sound_speed_;
  double sample_rate_;
  std::size_t n_samples_;
  double t_start_;
};

/// Per-sensor traces for one frame, M x T row-major.
class TraceBuffer {
 public:
  TraceBuffer() = default;
  TraceBuffer(std::size_t n_sensors, std::size_t n_samples)
      : n_sensors_(n_sensors), n_samples_(n_samples), data_(n_sensors * n_samples, 0.0) {}

  std::size_t n_sensors() const { return n_sensors_; }
  std::size_t n_samples() const { return n_samples_; }
  std::span<double> row(std::size_t m) { return {data_.data() + m * n_samples_, n_samples_}; }
  std::span<const double> row(std::size_t m) const {
    return {data_.data() + m * n_samples_, n_samples_};
  }
  double& at(std::size_t m, std::size_t j) { return data_[m * n_samples_ + j]; }
  double at(std::size_t m, std::size_t j) const { return data_[m * n_samples_ + j]; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  friend bool operator==(const TraceBuffer&, const TraceBuffer&) = default;

 private:
  std::size_t n_sensors_ = 0;
  std::size_t n_samples_ = 0;
  std::vector<double> data_;
};

/// Multi-frame sensor data, M x K x T row-major, with normalized frame times.
class SignalSet {
 public:
  SignalSet() = default;
  SignalSet(std::size_t n_sensors, std::size_t n_frames, std::size_t n_samples,
            std::vector<double> data, std::vector<double> frame_times);
  /// Zero-filled set with frame_times k / (K - 1).
  SignalSet(std::size_t n_sensors, std::size_t n_frames, std::size_t n_samples);

  static std::vector<double> normalized_frame_times(std::size_t n_frames);

  std::size_t n_sensors() const { return n_sensors_; }
  std::size_t n_frames() const { return n_frames_; }
  std::size_t n_samples() const { return n_samples_; }
  const std::vector<double>& frame_times() const { return frame_times_; }
  const std::vector<double>& data() const { return data_; }

  double& at(std::size_t m, std::size_t k, std::size_t j) {
    return data_[(m * n_frames_ + k) * n_samples_ + j];
  }
  double at(std::size_t m, std::size_t k, std::size_t j) const {
    return data_[(m * n_frames_ + k) * n_samples_ + j];
  }

  TraceBuffer frame(std::size_t k) const;
  void set_frame(std::size_t k, const TraceBuffer& traces);
  /// Throws when M or T disagree with the array.
  void check_matches(const SensorArray& array) const;

  friend bool operator==(const SignalSet&, const SignalSet&) = default;

 private:
  std::size_t n_sensors_ = 0;
  std::size_t n_frames_ = 0;
  std::size_t n_samples_ = 0;
  std::vector<double> data_;
  std::vector<double> frame_times_;
};

/// Regular voxel lattice. Voxel (i, j, k) has its center at origin + spacing * (i, j, k).
struct GridSpec {
  Vec3 origin;
  double spacing = 1.0;
  std::array<std::size_t, 3> dims{0, 0, 0};

  std::size_t count() const { return dims[0] * dims[1] * dims[2]; }
  Vec3 center(std::size_t i, std::size_t j, std::size_t k) const {
    return origin + spacing * Vec3{static_cast<double>(i), static_cast<double>(j),
                                   static_cast<double>(k)};
  }
  /// Voxel centers tiling a box at the given pitch, first center half a
  /// pitch inside the lower corner.
  static GridSpec covering(const Box& box, double spacing);

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

class VoxelGrid {
 public:
  VoxelGrid() = default;
  explicit VoxelGrid(GridSpec spec);
  VoxelGrid(GridSpec spec, std::vector<double> values);

  const GridSpec& spec() const { return spec_; }
  const std::array<std::size_t, 3>& dims() const { return spec_.dims; }
  std::size_t flat(std::size_t i, std::size_t j, std::size_t k) const {
    return (i * spec_.dims[1] + j) * spec_.dims[2] + k;
  }
  double& at(std::size_t i, std::size_t j, std::size_t k) { return values_[flat(i, j, k)]; }
  double at(std::size_t i, std::size_t j, std::size_t k) const { return values_[flat(i, j, k)]; }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

 private:
  GridSpec spec_;
  std::vector<double> values_;
};

struct LearningRates {
  double coords = 5e-7;
  double pressure = 5e-4;
  double std = 5e-7;
  double deform = 5e-6;
};

enum class OptimizerKind { Adam, Sgd };
enum class FrameBatch { Full, RandomSingle };

/// Hyperparameters of both reconstruction stages.
struct ReconConfig {
  LearningRates lr;
  int step_size = 160;
  double drop_rate = 0.1;
  int static_iters = 480;
  int dynamic_iters = 480;
  double prune_fraction = 1e-3;  // of the current max p0
  int prune_every = 40;
  std::size_t n_basis = 65;
  bool shared_basis = true;
  CoordMode coord_mode = CoordMode::Multiplicative;
  double a0_floor = 1e-3;
  double p0_floor = 0.0;
  double sigma_floor = 1e-4;
  double init_pitch = 2.0;            // static-stage lattice pitch, mm
  double init_p0_fraction = 1e-3;     // of the peak |signal|
  FrameBatch frame_batch = FrameBatch::Full;
  int reference_frame = 0;
  bool random_reference = false;
  OptimizerKind optimizer = OptimizerKind::Adam;
  bool exact = false;  // disable support truncation in the radiator
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

}  // namespace ggball
