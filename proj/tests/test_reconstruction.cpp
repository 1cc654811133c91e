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
#include "ggball/io.hpp"
#include "ggball/phantom.hpp"
#include "ggball/reconstruction.hpp"
#include "json.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

using namespace ggball;

namespace {

SensorArray desk_array(std::size_t m, const Box& roi) {
  const auto pos = fibonacci_sphere(m, 30.0);
  const TimeWindow w = compute_time_window(pos, 1.5, 5.0, roi, 1.2);
  return SensorArray::spherical(pos, 1.5, 5.0, w.n_samples, w.t_start);
}

ParamGroup scalar_group(double value, double lower = -std::numeric_limits<double>::infinity()) {
  ParamGroup g;
  g.name = "pressure";
  g.stride = 1;
  g.value = {value};
  g.grad = {0.0};
  g.m = {0.0};
  g.v = {0.0};
  g.lower = {lower};
  return g;
}

}  // namespace

TEST_CASE("l2_loss") {
  const std::vector<double> a{1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<double> b = a;
  CHECK(l2_loss(a, a) == 0.0);
  for (double& x : b) x += 1.0;
  CHECK(l2_loss(b, a) == 4.0);
  CHECK_THROWS_AS(l2_loss(a, std::vector<double>(7)), std::invalid_argument);

  std::mt19937_64 rng(4);
  std::normal_distribution<double> n;
  std::vector<double> p(5000), o(5000);
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = n(rng);
    o[i] = n(rng);
  }
  CHECK(l2_loss(p, o) == doctest::Approx(oracle::l2_naive(p, o)).epsilon(1e-12));
  CHECK_THROWS_AS(l2_loss(TraceBuffer(2, 3), TraceBuffer(3, 2)), std::invalid_argument);
}

TEST_CASE("adam_step") {
  SUBCASE("zero gradient is a fixed point") {
    ParamGroup g = scalar_group(0.7);
    adam_step(g, 0.1, 1);
    CHECK(g.value[0] == 0.7);
  }
  SUBCASE("unit gradient moves by about lr on the first step") {
    ParamGroup g = scalar_group(1.0);
    g.grad[0] = 1.0;
    adam_step(g, 0.1, 1);
    CHECK(g.value[0] == doctest::Approx(0.9).epsilon(1e-6));
  }
  SUBCASE("lower bound clamps") {
    ParamGroup g = scalar_group(0.05, 0.0);
    g.grad[0] = 1.0;
    adam_step(g, 0.1, 1);
    CHECK(g.value[0] == 0.0);
    ParamGroup s = scalar_group(0.05, 0.01);
    s.grad[0] = 1.0;
    sgd_step(s, 1.0);
    CHECK(s.value[0] == 0.01);
  }
  SUBCASE("non-finite gradient names the group") {
    ParamGroup g = scalar_group(1.0);
    g.grad[0] = std::numeric_limits<double>::quiet_NaN();
    try {
      adam_step(g, 0.1, 1);
      FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()).find("pressure") != std::string::npos);
    }
    CHECK_THROWS_AS(sgd_step(g, 0.1), std::runtime_error);
  }
}

TEST_CASE("learning-rate schedule") {
  for (double lr : {5e-7, 5e-4, 5e-6}) {
    CHECK(scheduled_lr(lr, 0, 160, 0.1) == lr);
    CHECK(scheduled_lr(lr, 159, 160, 0.1) == lr);
    CHECK(scheduled_lr(lr, 160, 160, 0.1) == lr * 0.1);
    CHECK(scheduled_lr(lr, 320, 160, 0.1) == lr * std::pow(0.1, 2.0));
  }
}

TEST_CASE("parameter groups cover every learnable scalar once") {
  std::vector<GaussBall> balls{{1.0, 0.5, {1, 2, 3}}, {2.0, 0.7, {-1, 0, 1}}};
  for (bool shared : {true, false}) {
    DynamicCloud c = DynamicCloud::from_static(balls, 4, shared);
    c.deforms()[1].omega[3] = 0.25;
    ReconConfig cfg;
    cfg.n_basis = 4;
    ParamGroups pg(c, cfg);
    const std::size_t rows = shared ? 1 : kChannels;
    const std::size_t per_ball = 3 + 1 + 1 + kChannels * 4 + 2 * rows * 4;
    std::size_t total = 0;
    for (const ParamGroup& g : pg.all()) total += g.size();
    CHECK(total == per_ball * balls.size());
    CHECK(pg[Group::Coords].stride == 3);
    CHECK(pg[Group::Deform].lower[kChannels * 4] == -std::numeric_limits<double>::infinity());
    CHECK(pg[Group::Deform].lower[kChannels * 4 + rows * 4] == cfg.sigma_floor);

    DynamicCloud out = DynamicCloud::from_static(std::vector<GaussBall>(2), 4, shared);
    pg.store(out);
    CHECK(out == c);

    pg.keep({0, 1});
    CHECK(pg.n_balls() == 1);
    CHECK(pg[Group::Pressure].value == std::vector<double>{2.0});
    CHECK(pg[Group::Deform].value[3] == 0.25);
  }
}

TEST_CASE("progress lines are JSON") {
  ProgressRecord r{"static", 160, 0.5, {1e-3, 2e-3, 3e-3, 4e-3}, 12};
  const auto j = nlohmann::json::parse(to_json_line(r));
  CHECK(j["stage"] == "static");
  CHECK(j["iter"] == 160);
  CHECK(j["balls"] == 12);
  CHECK(j["lr"]["deform"].get<double>() == 4e-3);
}

TEST_CASE("init lattice") {
  const auto l = init_lattice(Box::cube(2.0), 1.0, 0.3);
  CHECK(l.size() == 125);
  for (const GaussBall& b : l) {
    CHECK(b.a0 == 0.5);
    CHECK(b.p0 == 0.3);
  }
  // Sites are anchored at the roi center.
  const auto off = init_lattice({{0.0, 0.0, 0.0}, {3.0, 3.0, 3.0}}, 1.0, 1.0);
  REQUIRE(off.size() == 27);
  CHECK(std::count_if(off.begin(), off.end(), [](const GaussBall& b) { return b.mu == Vec3{1.5, 1.5, 1.5}; }) == 1);
  CHECK(init_lattice({{1.0, 1.0, 1.0}, {3.0, 3.0, 3.0}}, 2.0, 1.0).size() == 1);
  CHECK_THROWS(init_lattice(Box::cube(1.0), 0.0, 1.0));
}

TEST_CASE("reference frame selection") {
  ReconConfig cfg;
  CHECK(select_reference_frame(cfg, 8) == 0);
  cfg.reference_frame = 3;
  CHECK(select_reference_frame(cfg, 8) == 3);
  CHECK_THROWS(select_reference_frame(cfg, 3));
  cfg.random_reference = true;
  cfg.seed = 9;
  const std::size_t k = select_reference_frame(cfg, 8);
  CHECK(k < 8);
  CHECK(select_reference_frame(cfg, 8) == k);
}

TEST_CASE("static reconstruction of a single ball") {
  const Box roi = Box::cube(4.0);
  const SensorArray arr = desk_array(64, roi);
  // Near a lattice site of the 1.6 mm init grid; a ball midway between
  // sites ends up shared by several neighbors.
  const GaussBall truth{1.0, 0.8, {1.7, 0.1, -1.5}};
  const TraceBuffer obs = forward_frame(static_states(std::vector<GaussBall>{truth}), arr);
  const ReconConfig cfg = RunConfig::preset_named("desk-heart").recon;

  std::vector<std::size_t> sizes;
  const StaticResult r = static_reconstruct(obs, arr, roi, cfg, [&](const ProgressRecord& p) {
    sizes.push_back(p.n_balls);
  });
  CHECK(sizes.size() == static_cast<std::size_t>(cfg.static_iters));
  CHECK(std::is_sorted(sizes.rbegin(), sizes.rend()));
  const GaussBall& top = *std::max_element(
      r.balls.begin(), r.balls.end(), [](const GaussBall& a, const GaussBall& b) { return a.p0 < b.p0; });
  CHECK(norm(top.mu - truth.mu) < 0.5 * truth.a0);
  CHECK(std::abs(top.p0 - truth.p0) < 0.1 * truth.p0);
  CHECK(r.loss.back() < 1e-3 * r.loss.front());
}

TEST_CASE("static reconstruction of null data prunes everything") {
  const Box roi = Box::cube(3.0);
  const SensorArray arr = desk_array(16, roi);
  ReconConfig cfg = RunConfig::preset_named("desk-heart").recon;
  cfg.static_iters = 40;
  try {
    static_reconstruct(TraceBuffer(arr.size(), arr.n_samples()), arr, roi, cfg);
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("prune_fraction") != std::string::npos);
  }
}

TEST_CASE("dynamic reconstruction, two frames") {
  const Box roi = Box::cube(4.0);
  const SensorArray arr = desk_array(32, roi);
  std::vector<std::vector<GaussBall>> frames{{{1.0, 0.8, {0.0, 0.0, 0.0}}, {0.6, 0.8, {1.6, 1.6, 0.0}}},
                                             {{1.3, 0.9, {0.0, 0.0, 0.0}}, {0.6, 0.8, {1.8, 1.8, 0.0}}}};
  const SignalSet s = simulate_dataset(frames, arr, 0.0, 0);
  ReconConfig cfg = RunConfig::preset_named("desk-heart").recon;
  cfg.n_basis = 5;
  cfg.lr.deform = 2e-2;
  const DynamicResult r = dynamic_reconstruct(s, arr, frames[0], cfg);
  CHECK(r.loss.size() == static_cast<std::size_t>(cfg.dynamic_iters));
  CHECK(r.loss.back() <= 0.1 * r.loss.front());
  CHECK(r.cloud.size() == 2);
  CHECK(r.cloud.n_basis() == 5);

  const DynamicResult again = dynamic_reconstruct(s, arr, frames[0], cfg);
  CHECK(again.cloud == r.cloud);

  CHECK_THROWS_AS(dynamic_reconstruct(s, arr, {}, cfg), std::invalid_argument);
  const SignalSet one = simulate_dataset({frames[0]}, arr, 0.0, 0);
  CHECK_THROWS_AS(dynamic_reconstruct(one, arr, frames[0], cfg), std::invalid_argument);
}

TEST_CASE("random single-frame batches are seeded") {
  const Box roi = Box::cube(4.0);
  const SensorArray arr = desk_array(16, roi);
  std::vector<std::vector<GaussBall>> frames{{{1.0, 0.8, {}}}, {{1.2, 0.8, {}}}, {{1.4, 0.8, {}}}};
  const SignalSet s = simulate_dataset(frames, arr, 0.0, 0);
  ReconConfig cfg = RunConfig::preset_named("desk-heart").recon;
  cfg.n_basis = 3;
  cfg.dynamic_iters = 30;
  cfg.frame_batch = FrameBatch::RandomSingle;
  cfg.seed = 1;
  const DynamicResult a = dynamic_reconstruct(s, arr, frames[0], cfg);
  const DynamicResult b = dynamic_reconstruct(s, arr, frames[0], cfg);
  CHECK(a.cloud == b.cloud);
  cfg.seed = 2;
  CHECK_FALSE(dynamic_reconstruct(s, arr, frames[0], cfg).cloud == a.cloud);
}

TEST_CASE("ubp") {
  const Box roi = Box::cube(4.0);
  const SensorArray arr = desk_array(128, roi);
  const GridSpec grid = GridSpec::covering(roi, 0.4);
  SUBCASE("zero traces give a zero grid") {
    const VoxelGrid v = ubp_reconstruct(TraceBuffer(arr.size(), arr.n_samples()), arr, grid);
    for (double x : v.values()) CHECK(x == 0.0);
  }
  SUBCASE("centered ball peaks at the center") {
    const TraceBuffer obs =
        forward_frame(static_states(std::vector<GaussBall>{{1.0, 0.8, {}}}), arr);
    const VoxelGrid v = ubp_reconstruct(obs, arr, grid);
    const auto it = std::max_element(v.values().begin(), v.values().end());
    const std::size_t flat = static_cast<std::size_t>(it - v.values().begin());
    const std::size_t i = flat / (grid.dims[1] * grid.dims[2]);
    const std::size_t j = (flat / grid.dims[2]) % grid.dims[1];
    const std::size_t k = flat % grid.dims[2];
    CHECK(norm(grid.center(i, j, k)) <= grid.spacing * std::sqrt(3.0) + 1e-12);
  }
  SUBCASE("window that misses the grid is reported") {
    const SensorArray narrow = SensorArray::spherical(fibonacci_sphere(8, 30.0), 1.5, 5.0, 10,
                                                      19.0);
    try {
      ubp_reconstruct(TraceBuffer(8, 10), narrow, grid);
      FAIL("expected an exception");
    } catch (const std::domain_error& e) {
      CHECK(std::string(e.what()).find("short by") != std::string::npos);
    }
  }
}

TEST_CASE("desk heart with a sparse 64-sensor array") {
  RunConfig cfg = RunConfig::preset_named("desk-heart");
  cfg.array.m = 64;
  cfg.phantom.n_frames = 4;
  const GridSpec grid = make_grid(cfg);
  const Phantom ph = build_phantom(cfg.phantom, grid);
  const SensorArray arr = make_array(cfg);
  const SignalSet s = simulate_dataset(ph.frames, arr, 0.0, 0);
  std::vector<double> loss;
  std::vector<std::size_t> sizes;
  const StaticResult st = static_reconstruct(s.frame(0), arr, cfg.phantom.region, cfg.recon,
                                             [&](const ProgressRecord& p) {
                                               loss.push_back(p.loss);
                                               sizes.push_back(p.n_balls);
                                             });
  // Trend, not per step: every loss is at least as low as the one 50 iterations earlier.
  for (std::size_t i = 50; i < loss.size(); ++i) CHECK(loss[i] <= loss[i - 50]);
  CHECK(std::is_sorted(sizes.rbegin(), sizes.rend()));
  const DynamicResult dy = dynamic_reconstruct(s, arr, st.balls, cfg.recon);
  std::vector<VoxelGrid> recon, ubp;
  for (std::size_t k = 0; k < s.n_frames(); ++k) {
    std::vector<BallStateAtT> states;
    for (std::size_t b = 0; b < dy.cloud.size(); ++b) {
      states.push_back(ball_state_at(dy.cloud.balls()[b], dy.cloud.deforms()[b],
                                     s.frame_times()[k], dy.cloud.coord_mode()));
    }
    recon.push_back(voxelize(states, grid));
    ubp.push_back(ubp_reconstruct(s.frame(k), arr, grid));
  }
  const SsimTable t = eval_report(recon, ph.grids, ubp);
  for (const SsimRow& row : t.rows) {
    for (std::size_t a = 0; a < 3; ++a) CHECK(row.recon[a] > row.ubp[a]);
  }
}
