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

// ggball: command-line driver for phantom generation, simulation,
// reconstruction and evaluation.

#include <omp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ggball/evaluation.hpp"
#include "ggball/io.hpp"
#include "ggball/phantom.hpp"
#include "ggball/radiator.hpp"
#include "ggball/reconstruction.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace ggball;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitBadInput = 2;

// Missing or unusable input; maps to exit code 2.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config;
  std::string out = "run";
  std::optional<std::uint64_t> seed;
  int threads = 0;
  bool deterministic = false;
};

struct Inputs {
  std::string phantom;
  std::string signals;
  std::string init;
  std::string cloud;
  std::string ubp;
  std::optional<long> frame;
};

fs::path require(const fs::path& p) {
  if (!fs::exists(p)) throw InputError("missing input: " + p.string());
  return p;
}

std::string frame_name(std::size_t k, std::string_view ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%03zu", k);
  return std::string(buf) + std::string(ext);
}

void write_text(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::trunc);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + p.string());
}

void write_meta(const fs::path& dir, std::string_view command, const RunConfig& cfg) {
  write_text(dir / "config.resolved.json", dump_run_config(cfg));
  nlohmann::json meta = {
      {"command", command},
      {"config_hash", config_hash(cfg)},
      {"seed", cfg.seed},
      {"tensor_format_version", kTensorVersion},
      {"cloud_format_version", kCloudVersion},
  };
  write_text(dir / "meta.json", meta.dump(2) + "\n");
}

RunConfig resolve_config(const Common& c) {
  RunConfig cfg = c.config.empty() ? RunConfig::preset_named("desk-heart")
                                   : load_run_config(require(c.config));
  if (c.seed) {
    cfg.seed = *c.seed;
    cfg.recon.seed = *c.seed;
  }
  int threads = c.deterministic ? 1 : c.threads;
  if (threads > 0) omp_set_num_threads(threads);
  return cfg;
}

fs::path input_or(const std::string& flag, const fs::path& fallback) {
  return flag.empty() ? fallback : fs::path(flag);
}

// Progress goes to stdout and to a loss log next to the output.
class ProgressLog {
 public:
  explicit ProgressLog(const fs::path& path) : file_(path, std::ios::trunc) {
    if (!file_) throw std::runtime_error("cannot open " + path.string());
  }
  ProgressFn fn() {
    return [this](const ProgressRecord& r) {
      const std::string line = to_json_line(r);
      std::cout << line << "\n";
      file_ << line << "\n";
    };
  }

 private:
  std::ofstream file_;
};

std::vector<std::vector<GaussBall>> read_truth(const fs::path& dir, std::size_t n_frames) {
  std::vector<std::vector<GaussBall>> frames;
  for (std::size_t k = 0; k < n_frames; ++k) {
    frames.push_back(read_cloud(require(dir / frame_name(k, ".ggb"))).balls());
  }
  return frames;
}

SignalSet load_signals(const fs::path& p, const SensorArray& array) {
  SignalSet s = read_signals(require(p));
  try {
    s.check_matches(array);
  } catch (const std::exception& e) {
    throw InputError(p.string() + ": " + e.what());
  }
  return s;
}

int cmd_phantom(const Common& c) {
  const RunConfig cfg = resolve_config(c);
  const fs::path dir = fs::path(c.out) / cfg.io.phantom_dir;
  const Phantom ph = build_phantom(cfg.phantom, make_grid(cfg));
  for (std::size_t k = 0; k < ph.frames.size(); ++k) {
    write_cloud(dir / frame_name(k, ".ggb"), DynamicCloud::from_static(ph.frames[k], 0));
    const VoxelGrid& g = ph.grids[k];
    write_grid(dir / frame_name(k, ".pat"), g);
  }
  write_meta(dir, "phantom", cfg);
  std::cout << "{\"phantom_frames\":" << ph.frames.size() << ",\"balls\":"
            << (ph.frames.empty() ? 0 : ph.frames.front().size()) << "}\n";
  return kExitOk;
}

int cmd_simulate(const Common& c, const Inputs& in) {
  const RunConfig cfg = resolve_config(c);
  const fs::path out = fs::path(c.out) / cfg.io.signals;
  const auto frames =
      read_truth(input_or(in.phantom, fs::path(c.out) / cfg.io.phantom_dir), cfg.phantom.n_frames);
  const SensorArray array = make_array(cfg);
  const SignalSet s = simulate_dataset(frames, array, cfg.array.noise_std, cfg.seed);
  write_signals(out, s);
  write_meta(out.parent_path(), "simulate", cfg);
  std::cout << "{\"sensors\":" << s.n_sensors() << ",\"frames\":" << s.n_frames()
            << ",\"samples\":" << s.n_samples() << "}\n";
  return kExitOk;
}

int cmd_recon_static(const Common& c, const Inputs& in) {
  const RunConfig cfg = resolve_config(c);
  const fs::path out = fs::path(c.out) / cfg.io.static_cloud;
  const SensorArray array = make_array(cfg);
  const SignalSet s = load_signals(input_or(in.signals, fs::path(c.out) / cfg.io.signals), array);
  const std::size_t k = in.frame ? static_cast<std::size_t>(*in.frame)
                                 : select_reference_frame(cfg.recon, s.n_frames());
  if (k >= s.n_frames()) throw InputError("frame " + std::to_string(k) + " out of range");
  fs::create_directories(out.parent_path());
  ProgressLog log(out.parent_path() / "loss.jsonl");
  const StaticResult r =
      static_reconstruct(s.frame(k), array, cfg.phantom.region, cfg.recon, log.fn());
  write_cloud(out, DynamicCloud::from_static(r.balls, 0, true, cfg.recon.coord_mode));
  write_meta(out.parent_path(), "recon-static", cfg);
  return kExitOk;
}

int cmd_recon_4d(const Common& c, const Inputs& in) {
  const RunConfig cfg = resolve_config(c);
  const fs::path out = fs::path(c.out) / cfg.io.dynamic_cloud;
  const SensorArray array = make_array(cfg);
  const SignalSet s = load_signals(input_or(in.signals, fs::path(c.out) / cfg.io.signals), array);
  const DynamicCloud init =
      read_cloud(require(input_or(in.init, fs::path(c.out) / cfg.io.static_cloud)));
  fs::create_directories(out.parent_path());
  ProgressLog log(out.parent_path() / "loss.jsonl");
  const DynamicResult r = dynamic_reconstruct(s, array, init.balls(), cfg.recon, log.fn());
  write_cloud(out, r.cloud);
  write_meta(out.parent_path(), "recon-4d", cfg);
  return kExitOk;
}

int cmd_ubp(const Common& c, const Inputs& in) {
  const RunConfig cfg = resolve_config(c);
  const fs::path dir = fs::path(c.out) / cfg.io.ubp_dir;
  const SensorArray array = make_array(cfg);
  const SignalSet s = load_signals(input_or(in.signals, fs::path(c.out) / cfg.io.signals), array);
  const GridSpec grid = make_grid(cfg);
  std::vector<std::size_t> frames;
  if (in.frame) {
    if (*in.frame < 0 || static_cast<std::size_t>(*in.frame) >= s.n_frames()) {
      throw InputError("frame " + std::to_string(*in.frame) + " out of range");
    }
    frames.push_back(static_cast<std::size_t>(*in.frame));
  } else {
    for (std::size_t k = 0; k < s.n_frames(); ++k) frames.push_back(k);
  }
  for (std::size_t k : frames) {
    write_grid(dir / frame_name(k, ".pat"), ubp_reconstruct(s.frame(k), array, grid));
  }
  write_meta(dir, "ubp", cfg);
  return kExitOk;
}

int cmd_eval(const Common& c, const Inputs& in) {
  const RunConfig cfg = resolve_config(c);
  const fs::path dir = fs::path(c.out) / "eval";
  const GridSpec grid = make_grid(cfg);
  const std::size_t K = cfg.phantom.n_frames;
  const DynamicCloud cloud =
      read_cloud(require(input_or(in.cloud, fs::path(c.out) / cfg.io.dynamic_cloud)));
  const fs::path phantom_dir = input_or(in.phantom, fs::path(c.out) / cfg.io.phantom_dir);
  const fs::path ubp_dir = input_or(in.ubp, fs::path(c.out) / cfg.io.ubp_dir);
  const std::vector<double> times = SignalSet::normalized_frame_times(K);

  std::vector<VoxelGrid> truth, recon, ubp;
  for (std::size_t k = 0; k < K; ++k) {
    truth.push_back(read_grid(require(phantom_dir / frame_name(k, ".pat")), grid));
    std::vector<BallStateAtT> states;
    for (std::size_t b = 0; b < cloud.size(); ++b) {
      states.push_back(
          ball_state_at(cloud.balls()[b], cloud.deforms()[b], times[k], cloud.coord_mode()));
    }
    recon.push_back(voxelize(states, grid));
  }
  // UBP is optional: compared only when every frame is present.
  bool have_ubp = !in.ubp.empty() || fs::exists(ubp_dir);
  for (std::size_t k = 0; have_ubp && k < K; ++k) {
    const fs::path p = ubp_dir / frame_name(k, ".pat");
    if (!fs::exists(p)) {
      if (!in.ubp.empty()) require(p);
      have_ubp = false;
      ubp.clear();
      break;
    }
    ubp.push_back(read_grid(p, grid));
  }

  const SsimTable table = eval_report(recon, truth, ubp, cfg.eval.ssim);
  write_text(dir / "ssim.jsonl", table.to_jsonl());
  write_text(dir / "ssim.txt", table.to_text());
  for (std::size_t k = 0; k < K; ++k) {
    for (MapAxis axis : kMapAxes) {
      const std::string stem = frame_name(k, "_") + std::string(to_string(axis));
      const MapImage truth_map = map_project(truth[k], axis);
      const MapImage recon_map = map_project(recon[k], axis);
      write_png16(truth_map, dir / "maps" / (stem + "_truth.png"));
      write_png16(recon_map, dir / "maps" / (stem + "_4d.png"));
      const std::array<std::uint64_t, 2> dims{recon_map.rows, recon_map.cols};
      write_tensor(dir / "maps" / (stem + "_4d.pat"), dims, recon_map.values);
      if (!ubp.empty()) write_png16(map_project(ubp[k], axis), dir / "maps" / (stem + "_ubp.png"));
    }
  }
  write_meta(dir, "eval", cfg);
  std::cout << table.to_text();
  return kExitOk;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "Run configuration (JSON)");
  sub->add_option("--out", c.out, "Run directory")->capture_default_str();
  sub->add_option("--seed", c.seed, "Override the config seed");
  sub->add_option("--threads", c.threads, "Worker threads, 0 = all cores")
      ->check(CLI::NonNegativeNumber);
  sub->add_flag("--deterministic", c.deterministic, "Single thread");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic Gaussian-ball photoacoustic reconstruction"};
  app.require_subcommand(1);
  Common common;
  Inputs in;

  auto* phantom = app.add_subcommand("phantom", "Ground-truth clouds and voxel grids");
  add_common(phantom, common);

  auto* simulate = app.add_subcommand("simulate", "Forward-simulate sensor data");
  add_common(simulate, common);
  simulate->add_option("--phantom", in.phantom, "Phantom directory");

  auto* recon_static = app.add_subcommand("recon-static", "Static reconstruction of one frame");
  add_common(recon_static, common);
  recon_static->add_option("--signals", in.signals, "Signal tensor");
  recon_static->add_option("--frame", in.frame, "Frame index (default: reference frame)")
      ->check(CLI::NonNegativeNumber);

  auto* recon_4d = app.add_subcommand("recon-4d", "Dynamic reconstruction of all frames");
  add_common(recon_4d, common);
  recon_4d->add_option("--signals", in.signals, "Signal tensor");
  recon_4d->add_option("--init", in.init, "Static cloud");

  auto* ubp = app.add_subcommand("ubp", "Universal back-projection");
  add_common(ubp, common);
  ubp->add_option("--signals", in.signals, "Signal tensor");
  ubp->add_option("--frame", in.frame, "Frame index (default: all frames)");

  auto* eval = app.add_subcommand("eval", "SSIM table and MAP images");
  add_common(eval, common);
  eval->add_option("--cloud", in.cloud, "Dynamic cloud");
  eval->add_option("--phantom", in.phantom, "Phantom directory");
  eval->add_option("--ubp", in.ubp, "UBP directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitBadInput;
  }

  try {
    if (*phantom) return cmd_phantom(common);
    if (*simulate) return cmd_simulate(common, in);
    if (*recon_static) return cmd_recon_static(common, in);
    if (*recon_4d) return cmd_recon_4d(common, in);
    if (*ubp) return cmd_ubp(common, in);
    if (*eval) return cmd_eval(common, in);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitRuntime;
}
