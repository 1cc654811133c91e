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

#include "ggball/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "ggball/evaluation.hpp"
#include "ggball/radiator.hpp"

namespace ggball {

namespace {

constexpr double kLatticeEps = 1e-9;

double schedule_phase(std::size_t k, std::size_t n_frames) {
  if (n_frames < 2) return 0.0;
  return static_cast<double>(k) / static_cast<double>(n_frames - 1);
}

// Lattice points pitch * (i, j, l) inside a closed box.
std::vector<Vec3> lattice_in_box(const Box& box, double pitch) {
  std::vector<Vec3> out;
  std::array<long, 3> lo{}, hi{};
  for (std::size_t a = 0; a < 3; ++a) {
    lo[a] = static_cast<long>(std::ceil(box.lo[a] / pitch - kLatticeEps));
    hi[a] = static_cast<long>(std::floor(box.hi[a] / pitch + kLatticeEps));
  }
  for (long i = lo[0]; i <= hi[0]; ++i) {
    for (long j = lo[1]; j <= hi[1]; ++j) {
      for (long l = lo[2]; l <= hi[2]; ++l) {
        out.push_back(pitch * Vec3{static_cast<double>(i), static_cast<double>(j),
                                   static_cast<double>(l)});
      }
    }
  }
  return out;
}

struct HeartBall {
  GaussBall ball;
  bool pulsing = false;
};

std::vector<HeartBall> heart_base(const PhantomSpec& spec) {
  const HeartParams& h = spec.heart;
  const double a0 = 0.5 * spec.pitch;
  std::vector<HeartBall> out;
  for (const Box& slab : h.slabs) {
    for (const Vec3& p : lattice_in_box(slab, spec.pitch)) {
      out.push_back({{h.slab_p0, a0, p}, false});
    }
  }
  const Box bounds{h.center - h.semi_axes, h.center + h.semi_axes};
  for (const Vec3& p : lattice_in_box(bounds, spec.pitch)) {
    const Vec3 d = p - h.center;
    double r2 = 0.0;
    for (std::size_t a = 0; a < 3; ++a) r2 += (d[a] / h.semi_axes[a]) * (d[a] / h.semi_axes[a]);
    if (r2 > 1.0 + kLatticeEps) continue;
    // Gaussian profile with std = semi_axis / 2.
    out.push_back({{h.ellipsoid_p0 * std::exp(-2.0 * r2), a0, p}, true});
  }
  return out;
}

std::vector<std::vector<GaussBall>> heart_frames(const PhantomSpec& spec) {
  const HeartParams& h = spec.heart;
  const std::vector<HeartBall> base = heart_base(spec);
  std::vector<std::vector<GaussBall>> frames(spec.n_frames);
  for (std::size_t k = 0; k < spec.n_frames; ++k) {
    // One full period over the sequence; the last frame repeats the first exactly.
    const double phase = std::fmod(schedule_phase(k, spec.n_frames), 1.0);
    const double s = 1.0 + h.pulsation * std::sin(2.0 * std::numbers::pi * phase);
    const double amp = h.pulse_amplitude ? s : 1.0;
    const double ext = h.pulse_extent ? s : 1.0;
    auto& f = frames[k];
    f.reserve(base.size());
    for (const HeartBall& hb : base) {
      GaussBall b = hb.ball;
      if (hb.pulsing) {
        b.p0 *= amp;
        b.a0 *= ext;
        b.mu = h.center + ext * (b.mu - h.center);
      }
      f.push_back(b);
    }
  }
  return frames;
}

struct Segment {
  Vec3 a;
  Vec3 b;
  double radius = 0.0;
  bool root = false;
};

Vec3 normalized(Vec3 v) { return (1.0 / norm(v)) * v; }

Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

// Any unit vector perpendicular to d.
Vec3 perpendicular(Vec3 d) {
  const Vec3 helper = std::abs(d.x) < 0.9 ? Vec3{1.0, 0.0, 0.0} : Vec3{0.0, 1.0, 0.0};
  return normalized(cross(d, helper));
}

Box shrink(const Box& b, double margin) {
  return {b.lo + Vec3{margin, margin, margin}, b.hi - Vec3{margin, margin, margin}};
}

void grow_tree(const VascularParams& p, const Box& inner, Vec3 start, Vec3 dir, double radius,
               double length, int depth, bool root, std::mt19937_64& rng,
               std::vector<Segment>& out) {
  // Shorten until the segment end stays inside the region.
  double len = length;
  while (len > 1e-3 && !inner.contains(start + len * dir)) len *= 0.8;
  if (len <= 1e-3) return;
  const Vec3 end = start + len * dir;
  out.push_back({start, end, radius, root});
  if (depth <= 0) return;

  std::uniform_real_distribution<double> spin(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> jitter(0.8, 1.2);
  const double child_radius = radius / std::cbrt(2.0);
  const double angle = p.branch_angle_deg * std::numbers::pi / 180.0;
  const Vec3 e1 = perpendicular(dir);
  const Vec3 e2 = cross(dir, e1);
  const double phi = spin(rng);
  const Vec3 side = std::cos(phi) * e1 + std::sin(phi) * e2;
  for (double sign : {1.0, -1.0}) {
    const double a = angle * jitter(rng);
    const Vec3 child = normalized(std::cos(a) * dir + (sign * std::sin(a)) * side);
    grow_tree(p, inner, end, child, child_radius, length * p.length_decay, depth - 1, false, rng,
              out);
  }
}

struct TubeBall {
  Vec3 axis_point;
  Vec3 offset;
};

std::vector<std::vector<GaussBall>> vascular_frames(const PhantomSpec& spec) {
  const VascularParams& p = spec.vascular;
  std::mt19937_64 rng(spec.seed);
  std::vector<Segment> segments;
  const double margin = 0.5 * spec.pitch * (1.0 + p.dilation) + p.root_radius * (1.0 + p.dilation);
  grow_tree(p, shrink(spec.region, margin), p.root, normalized(p.direction), p.root_radius,
            p.segment_length, p.depth, true, rng, segments);

  std::vector<TubeBall> tube;
  for (const Segment& s : segments) {
    const Vec3 d = s.b - s.a;
    const double len = norm(d);
    const Vec3 dir = (1.0 / len) * d;
    const Vec3 e1 = perpendicular(dir);
    const Vec3 e2 = cross(dir, e1);
    const auto steps = static_cast<long>(std::ceil(len / spec.pitch - kLatticeEps));
    const long reach = static_cast<long>(std::floor(s.radius / spec.pitch + kLatticeEps));
    // Children skip their first point: it coincides with the parent's end.
    for (long i = s.root ? 0 : 1; i <= steps; ++i) {
      const Vec3 c = s.a + (static_cast<double>(i) / static_cast<double>(steps)) * d;
      for (long u = -reach; u <= reach; ++u) {
        for (long w = -reach; w <= reach; ++w) {
          const double du = static_cast<double>(u) * spec.pitch;
          const double dw = static_cast<double>(w) * spec.pitch;
          if (du * du + dw * dw > s.radius * s.radius + kLatticeEps) continue;
          tube.push_back({c, du * e1 + dw * e2});
        }
      }
    }
  }

  std::vector<std::vector<GaussBall>> frames(spec.n_frames);
  for (std::size_t k = 0; k < spec.n_frames; ++k) {
    const double phase = schedule_phase(k, spec.n_frames);
    const double widen = 1.0 + p.dilation * phase;
    const double amp = p.p0 * (1.0 + p.amplitude_growth * phase);
    auto& f = frames[k];
    f.reserve(tube.size());
    for (const TubeBall& t : tube) {
      f.push_back({amp, 0.5 * spec.pitch * widen, t.axis_point + widen * t.offset});
    }
  }
  return frames;
}

}  // namespace

std::vector<Vec3> fibonacci_sphere(std::size_t m, double radius) {
  if (m == 0) throw std::domain_error("fibonacci_sphere: need at least one point");
  if (!(radius > 0.0)) throw std::domain_error("fibonacci_sphere: radius must be > 0");
  const double golden = 0.5 * (1.0 + std::sqrt(5.0));
  const double turn = 2.0 * std::numbers::pi * (1.0 - 1.0 / golden);
  const double md = static_cast<double>(m);
  std::vector<Vec3> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double id = static_cast<double>(i);
    const double z = 1.0 - (2.0 * id + 1.0) / md;
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = turn * id;
    out[i] = radius * Vec3{rho * std::cos(phi), rho * std::sin(phi), z};
  }
  return out;
}

std::string_view to_string(PhantomKind kind) {
  switch (kind) {
    case PhantomKind::Heart:
      return "heart";
    case PhantomKind::Vascular:
      return "vascular";
    case PhantomKind::Custom:
      return "custom";
  }
  return "heart";
}

PhantomKind phantom_kind_from_string(std::string_view name) {
  if (name == "heart") return PhantomKind::Heart;
  if (name == "vascular") return PhantomKind::Vascular;
  if (name == "custom") return PhantomKind::Custom;
  throw std::invalid_argument("unknown phantom kind: " + std::string(name));
}

PhantomSpec PhantomSpec::desk_heart(std::size_t n_frames) {
  PhantomSpec s;
  s.kind = PhantomKind::Heart;
  s.region = Box::cube(12.8);
  s.n_frames = n_frames;
  s.pitch = 1.6;
  s.heart.slabs = {
      {{-6.4, -3.2, -9.6}, {6.4, 3.2, -9.6}},  // normal to z
      {{-9.6, -6.4, -3.2}, {-9.6, 6.4, 3.2}},  // normal to x
      {{-3.2, 9.6, -6.4}, {3.2, 9.6, 6.4}},    // normal to y
  };
  s.heart.semi_axes = {4.8, 4.0, 3.2};
  return s;
}

PhantomSpec PhantomSpec::desk_vascular(std::size_t n_frames) {
  PhantomSpec s;
  s.kind = PhantomKind::Vascular;
  s.region = Box::cube(12.8);
  s.n_frames = n_frames;
  s.pitch = 1.6;
  s.seed = 7;
  s.vascular.root_radius = 1.8;
  return s;
}

PhantomSpec PhantomSpec::full_heart(std::size_t n_frames) {
  PhantomSpec s = desk_heart(n_frames);
  s.region = Box::cube(25.6);
  s.pitch = 0.8;
  for (Box& b : s.heart.slabs) {
    b.lo = 2.0 * b.lo;
    b.hi = 2.0 * b.hi;
  }
  s.heart.semi_axes = 2.0 * s.heart.semi_axes;
  return s;
}

void PhantomSpec::validate() const {
  if (n_frames < 1) throw std::invalid_argument("phantom: n_frames must be >= 1");
  if (region.empty()) throw std::invalid_argument("phantom: region is empty");
  if (!(pitch > 0.0)) throw std::invalid_argument("phantom: pitch must be > 0");
  if (kind == PhantomKind::Heart) {
    for (const Box& b : heart.slabs) {
      if (b.empty()) throw std::invalid_argument("phantom: empty slab");
    }
    if (!(heart.semi_axes.x > 0.0 && heart.semi_axes.y > 0.0 && heart.semi_axes.z > 0.0)) {
      throw std::invalid_argument("phantom: ellipsoid semi-axes must be > 0");
    }
    if (heart.pulsation < 0.0 || heart.pulsation >= 1.0) {
      throw std::invalid_argument("phantom: pulsation must be in [0, 1)");
    }
  }
  if (kind == PhantomKind::Vascular) {
    if (vascular.depth < 0) throw std::invalid_argument("phantom: depth must be >= 0");
    if (!(vascular.root_radius > 0.0) || !(vascular.segment_length > 0.0)) {
      throw std::invalid_argument("phantom: root_radius and segment_length must be > 0");
    }
    if (!region.contains(vascular.root)) {
      throw std::invalid_argument("phantom: vascular root lies outside the region");
    }
  }
}

std::vector<std::vector<GaussBall>> phantom_frames(const PhantomSpec& spec) {
  spec.validate();
  std::vector<std::vector<GaussBall>> frames;
  switch (spec.kind) {
    case PhantomKind::Heart:
      frames = heart_frames(spec);
      break;
    case PhantomKind::Vascular:
      frames = vascular_frames(spec);
      break;
    case PhantomKind::Custom:
      frames.assign(spec.n_frames, spec.custom);
      break;
  }
  for (std::size_t k = 0; k < frames.size(); ++k) {
    for (std::size_t i = 0; i < frames[k].size(); ++i) {
      const GaussBall& b = frames[k][i];
      if (!spec.region.contains(b.mu)) {
        throw std::invalid_argument("phantom: ball " + std::to_string(i) + " at frame " +
                                    std::to_string(k) + " lies outside the region");
      }
      if (!(b.a0 > 0.0) || b.p0 < 0.0) {
        throw std::invalid_argument("phantom: ball " + std::to_string(i) +
                                    " has a0 <= 0 or p0 < 0");
      }
    }
  }
  return frames;
}

Phantom build_phantom(const PhantomSpec& spec, const GridSpec& grid) {
  Phantom ph;
  ph.frames = phantom_frames(spec);
  ph.grids.reserve(ph.frames.size());
  for (const auto& f : ph.frames) {
    ph.grids.push_back(voxelize(static_states(f), grid, {.exact = true}));
  }
  return ph;
}

SignalSet simulate_dataset(const std::vector<std::vector<GaussBall>>& frames,
                           const SensorArray& array, double noise_std, std::uint64_t seed) {
  if (noise_std < 0.0) throw std::invalid_argument("simulate: noise_std must be >= 0");
  SignalSet out(array.size(), frames.size(), array.n_samples());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, noise_std > 0.0 ? noise_std : 1.0);
  for (std::size_t k = 0; k < frames.size(); ++k) {
    TraceBuffer traces = forward_frame(static_states(frames[k]), array);
    if (noise_std > 0.0) {
      for (double& v : traces.data()) v += noise(rng);
    }
    out.set_frame(k, traces);
  }
  return out;
}

}  // namespace ggball
