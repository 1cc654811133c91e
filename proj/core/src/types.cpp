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

#include "ggball/types.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace ggball {

double Box::max_radius() const {
  double best = 0.0;
  for (int corner = 0; corner < 8; ++corner) {
    const Vec3 p{(corner & 1) ? hi.x : lo.x, (corner & 2) ? hi.y : lo.y,
                 (corner & 4) ? hi.z : lo.z};
    best = std::max(best, norm(p));
  }
  return best;
}

std::string_view to_string(CoordMode mode) {
  switch (mode) {
    case CoordMode::Multiplicative:
      return "multiplicative";
    case CoordMode::Additive:
      return "additive";
    case CoordMode::ScalarMultiplicative:
      return "scalar-multiplicative";
  }
  return "multiplicative";
}

CoordMode coord_mode_from_string(std::string_view name) {
  if (name == "multiplicative") return CoordMode::Multiplicative;
  if (name == "additive") return CoordMode::Additive;
  if (name == "scalar-multiplicative") return CoordMode::ScalarMultiplicative;
  throw std::invalid_argument("unknown coord mode: " + std::string(name));
}

DeformField DeformField::identity(std::size_t n_basis, bool shared_basis) {
  DeformField d;
  d.n_basis = n_basis;
  d.shared_basis = shared_basis;
  const std::size_t rows = d.basis_rows();
  d.theta.resize(rows * n_basis);
  d.sigma.resize(rows * n_basis);
  d.omega.assign(kChannels * n_basis, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t n = 0; n < n_basis; ++n) {
      if (n_basis == 1) {
        d.theta[r * n_basis + n] = 0.5;
        d.sigma[r * n_basis + n] = 1.0;
      } else {
        const double spacing = 1.0 / static_cast<double>(n_basis - 1);
        d.theta[r * n_basis + n] = static_cast<double>(n) * spacing;
        d.sigma[r * n_basis + n] = 2.0 * spacing;
      }
    }
  }
  return d;
}

void DeformField::validate() const {
  const std::size_t expect = basis_rows() * n_basis;
  if (theta.size() != expect || sigma.size() != expect) {
    throw std::invalid_argument("deform field: theta/sigma length " +
                                std::to_string(theta.size()) + "/" +
                                std::to_string(sigma.size()) + ", expected " +
                                std::to_string(expect));
  }
  if (omega.size() != kChannels * n_basis) {
    throw std::invalid_argument("deform field: omega length " + std::to_string(omega.size()) +
                                ", expected " + std::to_string(kChannels * n_basis));
  }
  for (double s : sigma) {
    if (!(s > 0.0)) throw std::invalid_argument("deform field: sigma must be > 0");
  }
}

DynamicCloud::DynamicCloud(std::vector<GaussBall> balls, std::vector<DeformField> deforms,
                           CoordMode mode)
    : balls_(std::move(balls)), deforms_(std::move(deforms)), mode_(mode) {
  if (balls_.size() != deforms_.size()) {
    throw std::invalid_argument("dynamic cloud: " + std::to_string(balls_.size()) +
                                " balls but " + std::to_string(deforms_.size()) +
                                " deform fields");
  }
  for (const auto& d : deforms_) {
    if (d.n_basis != deforms_.front().n_basis || d.shared_basis != deforms_.front().shared_basis) {
      throw std::invalid_argument("dynamic cloud: deform fields disagree on basis layout");
    }
  }
}

DynamicCloud DynamicCloud::from_static(std::vector<GaussBall> balls, std::size_t n_basis,
                                       bool shared_basis, CoordMode mode) {
  std::vector<DeformField> deforms(balls.size(), DeformField::identity(n_basis, shared_basis));
  return DynamicCloud(std::move(balls), std::move(deforms), mode);
}

std::vector<Violation> validate_cloud(const DynamicCloud& cloud, const Box& roi) {
  std::vector<Violation> out;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const GaussBall& b = cloud.balls()[i];
    if (!(b.a0 > 0.0)) out.push_back({i, "a0", "standard deviation must be > 0"});
    if (!(b.p0 >= 0.0)) out.push_back({i, "p0", "pressure must be >= 0"});
    if (!std::isfinite(b.mu.x) || !std::isfinite(b.mu.y) || !std::isfinite(b.mu.z)) {
      out.push_back({i, "mu", "center is not finite"});
    } else if (!roi.contains(b.mu)) {
      out.push_back({i, "mu", "center outside region of interest"});
    }
    try {
      cloud.deforms()[i].validate();
    } catch (const std::invalid_argument& e) {
      out.push_back({i, "deform", e.what()});
    }
  }
  return out;
}

SensorArray::SensorArray(std::vector<Vec3> positions, double sound_speed, double sample_rate,
                         std::size_t n_samples, double t_start)
    : positions_(std::move(positions)),
      sound_speed_(sound_speed),
      sample_rate_(sample_rate),
      n_samples_(n_samples),
      t_start_(t_start) {
  if (!(sound_speed_ > 0.0)) throw std::invalid_argument("sensor array: sound_speed must be > 0");
  if (!(sample_rate_ > 0.0)) throw std::invalid_argument("sensor array: sample_rate must be > 0");
  if (n_samples_ < 2) throw std::invalid_argument("sensor array: n_samples must be >= 2");
  if (!std::isfinite(t_start_)) throw std::invalid_argument("sensor array: t_start not finite");
}

SensorArray SensorArray::spherical(std::vector<Vec3> positions, double sound_speed,
                                   double sample_rate, std::size_t n_samples, double t_start) {
  SensorArray array(std::move(positions), sound_speed, sample_rate, n_samples, t_start);
  if (!array.positions_.empty()) {
    const double r0 = norm(array.positions_.front());
    for (const Vec3& p : array.positions_) {
      if (std::abs(norm(p) - r0) > 1e-9 * r0) {
        throw std::invalid_argument("sensor array: positions are not on a common sphere");
      }
    }
  }
  return array;
}

double SensorArray::min_radius() const {
  double r = positions_.empty() ? 0.0 : norm(positions_.front());
  for (const Vec3& p : positions_) r = std::min(r, norm(p));
  return r;
}

double SensorArray::max_radius() const {
  double r = 0.0;
  for (const Vec3& p : positions_) r = std::max(r, norm(p));
  return r;
}

std::vector<double> SignalSet::normalized_frame_times(std::size_t n_frames) {
  std::vector<double> t(n_frames, 0.0);
  for (std::size_t k = 0; k < n_frames && n_frames > 1; ++k) {
    t[k] = static_cast<double>(k) / static_cast<double>(n_frames - 1);
  }
  return t;
}

SignalSet::SignalSet(std::size_t n_sensors, std::size_t n_frames, std::size_t n_samples,
                     std::vector<double> data, std::vector<double> frame_times)
    : n_sensors_(n_sensors),
      n_frames_(n_frames),
      n_samples_(n_samples),
      data_(std::move(data)),
      frame_times_(std::move(frame_times)) {
  if (data_.size() != n_sensors_ * n_frames_ * n_samples_) {
    throw std::invalid_argument("signal set: data length does not match M x K x T");
  }
  if (frame_times_.size() != n_frames_) {
    throw std::invalid_argument("signal set: need one frame time per frame");
  }
  for (std::size_t k = 1; k < n_frames_; ++k) {
    if (!(frame_times_[k] > frame_times_[k - 1])) {
      throw std::invalid_argument("signal set: frame times must be strictly increasing");
    }
  }
  if (n_frames_ >= 2 && (frame_times_.front() != 0.0 || frame_times_.back() != 1.0)) {
    throw std::invalid_argument("signal set: frame times must span [0, 1]");
  }
}

SignalSet::SignalSet(std::size_t n_sensors, std::size_t n_frames, std::size_t n_samples)
    : SignalSet(n_sensors, n_frames, n_samples,
                std::vector<double>(n_sensors * n_frames * n_samples, 0.0),
                normalized_frame_times(n_frames)) {}

TraceBuffer SignalSet::frame(std::size_t k) const {
  if (k >= n_frames_) throw std::out_of_range("signal set: frame index out of range");
  TraceBuffer out(n_sensors_, n_samples_);
  for (std::size_t m = 0; m < n_sensors_; ++m) {
    const double* src = data_.data() + (m * n_frames_ + k) * n_samples_;
    std::copy(src, src + n_samples_, out.row(m).begin());
  }
  return out;
}

void SignalSet::set_frame(std::size_t k, const TraceBuffer& traces) {
  if (k >= n_frames_) throw std::out_of_range("signal set: frame index out of range");
  if (traces.n_sensors() != n_sensors_ || traces.n_samples() != n_samples_) {
    throw std::invalid_argument("signal set: trace buffer shape mismatch");
  }
  for (std::size_t m = 0; m < n_sensors_; ++m) {
    auto row = traces.row(m);
    std::copy(row.begin(), row.end(), data_.begin() + (m * n_frames_ + k) * n_samples_);
  }
}

void SignalSet::check_matches(const SensorArray& array) const {
  if (n_sensors_ != array.size() || n_samples_ != array.n_samples()) {
    throw std::invalid_argument("signal set: shape (" + std::to_string(n_sensors_) + ", " +
                                std::to_string(n_samples_) + ") does not match array (" +
                                std::to_string(array.size()) + ", " +
                                std::to_string(array.n_samples()) + ")");
  }
}

GridSpec GridSpec::covering(const Box& box, double spacing) {
  if (!(spacing > 0.0)) throw std::invalid_argument("grid: spacing must be > 0");
  GridSpec g;
  g.spacing = spacing;
  for (std::size_t a = 0; a < 3; ++a) {
    const double extent = box.hi[a] - box.lo[a];
    const auto n = static_cast<std::size_t>(std::max(1.0, std::round(extent / spacing)));
    g.dims[a] = n;
    // Center the lattice inside the box.
    g.origin[a] = box.center()[a] - 0.5 * spacing * static_cast<double>(n - 1);
  }
  return g;
}

VoxelGrid::VoxelGrid(GridSpec spec) : VoxelGrid(spec, std::vector<double>(spec.count(), 0.0)) {}

VoxelGrid::VoxelGrid(GridSpec spec, std::vector<double> values)
    : spec_(spec), values_(std::move(values)) {
  if (!(spec_.spacing > 0.0)) throw std::invalid_argument("voxel grid: spacing must be > 0");
  if (values_.size() != spec_.count()) {
    throw std::invalid_argument("voxel grid: values length does not match dims");
  }
}

void ReconConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw std::invalid_argument(std::string("recon config: ") + name + " must be > 0");
  };
  positive(lr.coords, "lr.coords");
  positive(lr.pressure, "lr.pressure");
  positive(lr.std, "lr.std");
  positive(lr.deform, "lr.deform");
  if (!(drop_rate > 0.0 && drop_rate <= 1.0)) {
    throw std::invalid_argument("recon config: drop_rate must be in (0, 1]");
  }
  if (step_size < 1) throw std::invalid_argument("recon config: step_size must be >= 1");
  if (static_iters < 0 || dynamic_iters < 0) {
    throw std::invalid_argument("recon config: iteration counts must be >= 0");
  }
  if (prune_every < 1) throw std::invalid_argument("recon config: prune_every must be >= 1");
  if (prune_fraction < 0.0 || prune_fraction >= 1.0) {
    throw std::invalid_argument("recon config: prune_fraction must be in [0, 1)");
  }
  if (n_basis < 1) throw std::invalid_argument("recon config: n_basis must be >= 1");
  positive(a0_floor, "a0_floor");
  positive(sigma_floor, "sigma_floor");
  if (p0_floor < 0.0) throw std::invalid_argument("recon config: p0_floor must be >= 0");
  positive(init_pitch, "init_pitch");
  positive(init_p0_fraction, "init_p0_fraction");
  if (reference_frame < 0) throw std::invalid_argument("recon config: reference_frame must be >= 0");
}

}  // namespace ggball
