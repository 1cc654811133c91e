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
#include "ggball/types.hpp"

#include <stdexcept>

using namespace ggball;

TEST_CASE("box geometry") {
  const Box b = Box::cube(2.0);
  CHECK_FALSE(b.empty());
  CHECK(b.contains({2.0, -2.0, 2.0}));
  CHECK_FALSE(b.contains({2.0001, 0.0, 0.0}));
  CHECK(b.center() == Vec3{});
  CHECK(b.max_radius() == doctest::Approx(std::sqrt(12.0)));
  CHECK(Box{{1, 0, 0}, {0, 1, 1}}.empty());
}

TEST_CASE("validate_cloud") {
  const Box roi = Box::cube(1.0);
  SUBCASE("empty cloud has no violations") { CHECK(validate_cloud(DynamicCloud{}, roi).empty()); }
  SUBCASE("a0 = 0 is reported for index 0") {
    const auto v = validate_cloud(DynamicCloud::from_static({{1.0, 0.0, {}}}, 3), roi);
    REQUIRE(v.size() == 1);
    CHECK(v[0].index == 0);
    CHECK(v[0].field == "a0");
  }
  SUBCASE("corner of roi is inside") {
    CHECK(validate_cloud(DynamicCloud::from_static({{1.0, 0.5, {1.0, 1.0, -1.0}}}, 3), roi)
              .empty());
  }
  SUBCASE("center outside roi and negative p0") {
    const auto v = validate_cloud(DynamicCloud::from_static({{-1.0, 0.5, {0, 0, 3}}}, 2), roi);
    CHECK(v.size() == 2);
  }
  SUBCASE("bad deform field") {
    DynamicCloud c = DynamicCloud::from_static({{1.0, 0.5, {}}}, 2);
    c.deforms()[0].sigma[1] = 0.0;
    const auto v = validate_cloud(c, roi);
    REQUIRE(v.size() == 1);
    CHECK(v[0].field == "deform");
  }
}

TEST_CASE("identity deformation layout") {
  const DeformField d = DeformField::identity(5);
  CHECK(d.basis_rows() == 1);
  CHECK(d.omega.size() == kChannels * 5);
  CHECK(d.theta.size() == 5);
  CHECK(d.theta.front() == 0.0);
  CHECK(d.theta.back() == 1.0);
  CHECK(d.sigma[2] == doctest::Approx(0.5));
  for (double w : d.omega) CHECK(w == 0.0);

  const DeformField ind = DeformField::identity(4, false);
  CHECK(ind.theta.size() == kChannels * 4);
  CHECK(ind.theta_row(3)[1] == doctest::Approx(1.0 / 3.0));

  const DeformField one = DeformField::identity(1);
  CHECK(one.theta[0] == 0.5);
  CHECK(one.sigma[0] == 1.0);
  CHECK_NOTHROW(one.validate());

  DeformField bad = d;
  bad.omega.pop_back();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("dynamic cloud construction") {
  std::vector<GaussBall> balls(2);
  CHECK_THROWS_AS(DynamicCloud(balls, {DeformField::identity(3)}), std::invalid_argument);
  CHECK_THROWS_AS(DynamicCloud(balls, {DeformField::identity(3), DeformField::identity(4)}),
                  std::invalid_argument);
  const DynamicCloud c = DynamicCloud::from_static(balls, 3, false, CoordMode::Additive);
  CHECK(c.size() == 2);
  CHECK(c.n_basis() == 3);
  CHECK(c.coord_mode() == CoordMode::Additive);
}

TEST_CASE("coord mode names round trip") {
  for (CoordMode m : {CoordMode::Multiplicative, CoordMode::Additive,
                      CoordMode::ScalarMultiplicative}) {
    CHECK(coord_mode_from_string(to_string(m)) == m);
  }
  CHECK_THROWS_AS(coord_mode_from_string("affine"), std::invalid_argument);
}

TEST_CASE("sensor array") {
  std::vector<Vec3> pos{{10, 0, 0}, {0, 10, 0}};
  const SensorArray a = SensorArray::spherical(pos, 1.5, 4.0, 10, 2.0);
  CHECK(a.sample_time(4) == doctest::Approx(3.0));
  CHECK(a.dt() == 0.25);
  CHECK(a.min_radius() == doctest::Approx(10.0));
  CHECK_THROWS(SensorArray::spherical({{10, 0, 0}, {0, 11, 0}}, 1.5, 4.0, 10, 0.0));
  CHECK_THROWS(SensorArray(pos, 0.0, 4.0, 10, 0.0));
  CHECK_THROWS(SensorArray(pos, 1.5, -1.0, 10, 0.0));
  CHECK_THROWS(SensorArray(pos, 1.5, 4.0, 1, 0.0));
}

TEST_CASE("signal set layout") {
  SignalSet s(3, 4, 5);
  CHECK(s.frame_times() == std::vector<double>{0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0});
  TraceBuffer t(3, 5);
  t.at(2, 4) = 7.0;
  s.set_frame(1, t);
  CHECK(s.at(2, 1, 4) == 7.0);
  CHECK(s.data()[(2 * 4 + 1) * 5 + 4] == 7.0);
  CHECK(s.frame(1) == t);
  CHECK(s.frame(0) == TraceBuffer(3, 5));

  CHECK_THROWS(SignalSet(1, 2, 2, std::vector<double>(4), {0.0, 0.5}));
  CHECK_THROWS(SignalSet(1, 2, 2, std::vector<double>(3), {0.0, 1.0}));
  CHECK_NOTHROW(SignalSet(1, 2, 2, std::vector<double>(4), {0.0, 1.0}));
  CHECK(SignalSet::normalized_frame_times(1) == std::vector<double>{0.0});
}

TEST_CASE("grid covering a box") {
  const GridSpec g = GridSpec::covering(Box::cube(12.8), 0.4);
  CHECK(g.dims == std::array<std::size_t, 3>{64, 64, 64});
  CHECK(g.origin.x == doctest::Approx(-12.6));
  CHECK(g.center(63, 0, 0).x == doctest::Approx(12.6));
  VoxelGrid v(g);
  v.at(1, 2, 3) = 5.0;
  CHECK(v.values()[(1 * 64 + 2) * 64 + 3] == 5.0);
  CHECK_THROWS(VoxelGrid(g, std::vector<double>(5)));
}

TEST_CASE("recon config validation") {
  ReconConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.lr.coords == 5e-7);
  CHECK(c.lr.pressure == 5e-4);
  CHECK(c.lr.std == 5e-7);
  CHECK(c.lr.deform == 5e-6);
  CHECK(c.step_size == 160);
  CHECK(c.drop_rate == 0.1);
  c.drop_rate = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.n_basis = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}
