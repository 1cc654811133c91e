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
#include "ggball/io.hpp"
#include "json.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

using namespace ggball;
namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "ggball_test_cli";

int run(const std::string& args) {
  const std::string cmd = std::string(GGBALL_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_config(const std::string& name, const std::string& json) {
  const fs::path p = kRoot / (name + ".json");
  fs::create_directories(kRoot);
  std::ofstream(p) << json;
  return p;
}

// One ball, 16 sensors, two frames: the whole pipeline in a few seconds.
const char* kTiny = R"({
  "array": {"m": 16},
  "phantom": {"kind": "custom", "region": {"lo": [-2, -2, -2], "hi": [2, 2, 2]}, "n_frames": 2,
              "custom": [{"p0": 1.0, "a0": 0.8, "mu": [0.2, 0.0, 0.0]}]},
  "recon": {"static_iters": 60, "dynamic_iters": 20, "n_basis": 4},
  "eval": {"voxel_pitch": 0.4}
})";

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    out[fs::relative(e.path(), dir).string()] = ss.str();
  }
  return out;
}

}  // namespace

TEST_CASE("full pipeline on a tiny run") {
  const fs::path cfg = write_config("tiny", kTiny);
  const fs::path out = kRoot / "tiny";
  fs::remove_all(out);
  const std::string common = " --config " + cfg.string() + " --out " + out.string();
  REQUIRE(run("phantom" + common) == 0);
  REQUIRE(run("simulate" + common) == 0);
  REQUIRE(run("recon-static" + common) == 0);
  REQUIRE(run("recon-4d" + common) == 0);
  REQUIRE(run("ubp" + common) == 0);
  REQUIRE(run("eval" + common) == 0);

  for (const char* f : {"phantom/frame_000.ggb", "phantom/frame_001.pat", "signals/signals.pat",
                        "static/static.ggb", "static/loss.jsonl", "recon4d/cloud.ggb",
                        "ubp/frame_001.pat", "eval/ssim.jsonl", "eval/ssim.txt",
                        "eval/maps/frame_000_XY_truth.png", "eval/maps/frame_001_XZ_ubp.png"}) {
    CHECK_MESSAGE(fs::exists(out / f), f);
  }
  for (const char* d : {"phantom", "signals", "static", "recon4d", "ubp", "eval"}) {
    CHECK(fs::exists(out / d / "config.resolved.json"));
    std::ifstream in(out / d / "meta.json");
    const auto meta = nlohmann::json::parse(in);
    CHECK(meta["config_hash"] == config_hash(load_run_config(cfg)));
    CHECK(meta.contains("cloud_format_version"));
  }
  const DynamicCloud c = read_cloud(out / "recon4d/cloud.ggb");
  CHECK(c.n_basis() == 4);
  CHECK_FALSE(c.empty());

  std::ifstream loss(out / "static/loss.jsonl");
  std::string line;
  int n = 0;
  while (std::getline(loss, line)) {
    CHECK(nlohmann::json::parse(line)["iter"] == n);
    ++n;
  }
  CHECK(n == 60);
}

TEST_CASE("bad input exits 2") {
  const fs::path out = kRoot / "bad";
  fs::remove_all(out);
  const fs::path good = write_config("tiny", kTiny);
  CHECK(run("recon-static --config " + good.string() + " --out " + out.string()) == 2);
  CHECK(run("recon-4d --config " + good.string() + " --signals " + (out / "none.pat").string() +
            " --out " + out.string()) == 2);
  CHECK(run("phantom --config " + (kRoot / "absent.json").string() + " --out " + out.string()) == 2);
  const fs::path unknown = write_config("unknown", R"({"recon": {"iters": 5}})");
  CHECK(run("phantom --config " + unknown.string() + " --out " + out.string()) == 2);
  const fs::path broken = write_config("broken", "{\"array\": ");
  CHECK(run("phantom --config " + broken.string() + " --out " + out.string()) == 2);
  CHECK(run("no-such-command") == 2);

  fs::create_directories(out / "signals");
  std::ofstream(out / "signals" / "signals.pat") << "not a tensor";
  CHECK(run("ubp --config " + good.string() + " --out " + out.string()) == 2);
}

TEST_CASE("phantom command") {
  SUBCASE("same seed twice gives identical directories") {
    const fs::path cfg = write_config("vasc", R"({"preset": "desk-vascular", "phantom": {"n_frames": 3},
                                               "eval": {"voxel_pitch": 0.8}})");
    fs::remove_all(kRoot / "a");
    fs::remove_all(kRoot / "b");
    REQUIRE(run("phantom --seed 3 --config " + cfg.string() + " --out " + (kRoot / "a").string()) == 0);
    REQUIRE(run("phantom --seed 3 --config " + cfg.string() + " --out " + (kRoot / "b").string()) == 0);
    const auto a = snapshot(kRoot / "a"), b = snapshot(kRoot / "b");
    CHECK(a.size() == 3 * 2 + 2);
    CHECK(a == b);
  }
  SUBCASE("heart with 17 frames") {
    const fs::path cfg = write_config("h17", R"({"phantom": {"n_frames": 17}, "eval": {"voxel_pitch": 0.8}})");
    fs::remove_all(kRoot / "h17");
    REQUIRE(run("phantom --config " + cfg.string() + " --out " + (kRoot / "h17").string()) == 0);
    const RunConfig rc = load_run_config(cfg);
    for (int k = 0; k < 17; ++k) {
      char name[32];
      std::snprintf(name, sizeof name, "frame_%03d.pat", k);
      CHECK_NOTHROW(read_grid(kRoot / "h17" / "phantom" / name, make_grid(rc)));
    }
    CHECK_FALSE(fs::exists(kRoot / "h17" / "phantom" / "frame_017.pat"));
  }
  SUBCASE("single frame") {
    const fs::path cfg = write_config("h1", R"({"phantom": {"n_frames": 1}, "eval": {"voxel_pitch": 0.8}})");
    fs::remove_all(kRoot / "h1");
    REQUIRE(run("phantom --config " + cfg.string() + " --out " + (kRoot / "h1").string()) == 0);
    CHECK(fs::exists(kRoot / "h1" / "phantom" / "frame_000.pat"));
    CHECK_FALSE(fs::exists(kRoot / "h1" / "phantom" / "frame_001.pat"));
  }
}
