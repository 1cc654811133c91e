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

#include "doctest.h"
#include "ggball/evaluation.hpp"
#include "ggball/phantom.hpp"
#include "ggball/radiator.hpp"
#include "oracles.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

using namespace ggball;

namespace {

double l2_diff(const VoxelGrid& a, const VoxelGrid& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) {
    const double d = a.values()[i] - b.values()[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

double heart_scale(std::size_t k, std::size_t K, double pulsation) {
  return 1.0 + pulsation * std::sin(2.0 * std::numbers::pi * k / (K - 1));
}

}  // namespace

TEST_CASE("fibonacci sphere") {
  const auto one = fibonacci_sphere(1, 5.0);
  REQUIRE(one.size() == 1);
  CHECK(norm(one[0]) == doctest::Approx(5.0));

  for (const Vec3& p : fibonacci_sphere(1024, 60.0)) {
    CHECK(std::abs(norm(p) - 60.0) <= 1e-9 * 60.0);
  }

  const std::size_t m = 512;
  const double ideal = std::sqrt(8.0 * std::numbers::pi / (std::sqrt(3.0) * m));
  const double got = oracle::min_angle(fibonacci_sphere(m, 1.0));
  CHECK(std::abs(got - ideal) <= 0.25 * ideal);

  CHECK_THROWS_AS(fibonacci_sphere(0, 1.0), std::domain_error);
  CHECK_THROWS_AS(fibonacci_sphere(4, 0.0), std::domain_error);
}

TEST_CASE("desk heart phantom") {
  const PhantomSpec spec = PhantomSpec::desk_heart(8);
  const auto frames = phantom_frames(spec);
  REQUIRE(frames.size() == 8);
  CHECK(frames[0].size() >= 150);
  CHECK(frames[0].size() <= 250);
  for (const auto& f : frames) {
    CHECK(f.size() == frames[0].size());
    for (const GaussBall& b : f) CHECK(spec.region.contains(b.mu));
  }
  // The schedule returns to its start after a full period.
  CHECK(frames.front() == frames.back());
  CHECK_FALSE(frames[1] == frames[0]);
}

TEST_CASE("full-scale heart covers the original scene") {
  const PhantomSpec spec = PhantomSpec::full_heart(17);
  CHECK(spec.n_frames == 17);
  CHECK(spec.region.lo.x == -25.6);
  CHECK(spec.region.hi.z == 25.6);
  CHECK(phantom_frames(spec).size() == 17);
}

TEST_CASE("zero pulsation gives a static scene") {
  PhantomSpec spec = PhantomSpec::desk_heart(5);
  spec.heart.pulsation = 0.0;
  const auto frames = phantom_frames(spec);
  for (const auto& f : frames) CHECK(f == frames[0]);
}

TEST_CASE("single frame") {
  const auto frames = phantom_frames(PhantomSpec::desk_heart(1));
  CHECK(frames.size() == 1);
}

TEST_CASE("frame differences follow the schedule increment") {
  // Lipschitz constant of V(s) from a finely sampled schedule; coarse frame
  // differences may not exceed it by more than discretization slack.
  PhantomSpec spec = PhantomSpec::desk_heart(8);
  const GridSpec grid = GridSpec::covering(spec.region, 0.8);
  const Phantom coarse = build_phantom(spec, grid);

  PhantomSpec fine_spec = spec;
  fine_spec.n_frames = 57;
  const Phantom fine = build_phantom(fine_spec, grid);
  double lipschitz = 0.0;
  for (std::size_t k = 0; k + 1 < fine.grids.size(); ++k) {
    const double ds = std::abs(heart_scale(k + 1, 57, 0.3) - heart_scale(k, 57, 0.3));
    if (ds < 1e-3) continue;
    lipschitz = std::max(lipschitz, l2_diff(fine.grids[k + 1], fine.grids[k]) / ds);
  }
  REQUIRE(lipschitz > 0.0);
  for (std::size_t k = 0; k + 1 < coarse.grids.size(); ++k) {
    const double ds = std::abs(heart_scale(k + 1, 8, 0.3) - heart_scale(k, 8, 0.3));
    CHECK(l2_diff(coarse.grids[k + 1], coarse.grids[k]) <= 1.05 * lipschitz * ds + 1e-12);
  }
}

TEST_CASE("vascular phantom") {
  const PhantomSpec spec = PhantomSpec::desk_vascular(4);
  const auto a = phantom_frames(spec);
  const auto b = phantom_frames(spec);
  CHECK(a == b);
  REQUIRE_FALSE(a[0].empty());
  // Tubes widen and brighten monotonically.
  for (std::size_t k = 0; k + 1 < a.size(); ++k) {
    CHECK(a[k + 1][0].a0 > a[k][0].a0);
    CHECK(a[k + 1][0].p0 > a[k][0].p0);
  }
  PhantomSpec other = spec;
  other.seed = spec.seed + 1;
  CHECK_FALSE(phantom_frames(other)[0] == a[0]);
}

TEST_CASE("phantom validation") {
  PhantomSpec spec = PhantomSpec::desk_heart(3);
  spec.heart.semi_axes = {20.0, 20.0, 20.0};
  spec.heart.center = {10.0, 0.0, 0.0};
  CHECK_THROWS_AS(phantom_frames(spec), std::invalid_argument);

  PhantomSpec bad = PhantomSpec::desk_heart(0);
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("simulate_dataset") {
  const std::vector<Vec3> pos = fibonacci_sphere(32, 30.0);
  const TimeWindow w = compute_time_window(pos, 1.5, 5.0, Box::cube(12.8), 1.2);
  const SensorArray arr = SensorArray::spherical(pos, 1.5, 5.0, w.n_samples, w.t_start);

  SUBCASE("empty phantom, no noise") {
    const SignalSet s = simulate_dataset({{}, {}}, arr, 0.0, 1);
    CHECK(s.n_frames() == 2);
    for (double x : s.data()) CHECK(x == 0.0);
  }
  SUBCASE("static phantom gives bit-identical frames") {
    PhantomSpec spec = PhantomSpec::desk_heart(4);
    spec.heart.pulsation = 0.0;
    const SignalSet s = simulate_dataset(phantom_frames(spec), arr, 0.0, 1);
    for (std::size_t k = 1; k < 4; ++k) CHECK(s.frame(k) == s.frame(0));
  }
  SUBCASE("noise level") {
    const std::vector<std::vector<GaussBall>> frames{{{1.0, 0.8, {1.0, 2.0, -1.0}}}};
    const SignalSet clean = simulate_dataset(frames, arr, 0.0, 0);
    double peak = 0.0;
    std::size_t dominant = 0;
    for (std::size_t m = 0; m < arr.size(); ++m) {
      for (std::size_t j = 0; j < arr.n_samples(); ++j) {
        if (std::abs(clean.at(m, 0, j)) > peak) {
          peak = std::abs(clean.at(m, 0, j));
          dominant = m;
        }
      }
    }
    const SignalSet noisy = simulate_dataset(frames, arr, 0.01 * peak, 5);
    double var = 0.0;
    for (std::size_t j = 0; j < arr.n_samples(); ++j) {
      const double n = noisy.at(dominant, 0, j) - clean.at(dominant, 0, j);
      var += n * n;
    }
    var /= static_cast<double>(arr.n_samples());
    const double snr_db = 20.0 * std::log10(peak / std::sqrt(var));
    CHECK(snr_db == doctest::Approx(40.0).epsilon(1.0 / 40.0));

    CHECK(simulate_dataset(frames, arr, 0.01 * peak, 5) == noisy);
    CHECK_FALSE(simulate_dataset(frames, arr, 0.01 * peak, 6) == noisy);
    CHECK_THROWS_AS(simulate_dataset(frames, arr, -1.0, 5), std::invalid_argument);
  }
}
