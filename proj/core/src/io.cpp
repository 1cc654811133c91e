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

#include "ggball/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "ggball/radiator.hpp"
#include "json.hpp"

namespace ggball {

namespace {

using nlohmann::json;

constexpr char kTensorMagic[4] = {'P', 'A', 'T', '1'};
constexpr char kCloudMagic[4] = {'G', 'G', 'B', '1'};
constexpr std::string_view kChannelOrder = "a0,p0,mu_x,mu_y,mu_z";

class ByteWriter {
 public:
  void raw(const char* p, std::size_t n) { out_.insert(out_.end(), p, p + n); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(double v) { u32(std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) throw FormatError("truncated file");
  }
  void magic(const char (&expect)[4]) {
    need(4);
    if (std::memcmp(in_.data() + pos_, expect, 4) != 0) {
      throw FormatError("bad magic, expected " + std::string(expect, 4));
    }
    pos_ += 4;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

std::string descriptor(const DynamicCloud& cloud) {
  const bool shared = cloud.empty() || cloud.deforms().front().shared_basis;
  return std::string(kChannelOrder) + ";basis=" + (shared ? "shared" : "independent") +
         ";coords=" + std::string(to_string(cloud.coord_mode()));
}

// --- strict JSON access -----------------------------------------------------

class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw std::invalid_argument("config: '" + path_ + "' must be an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  template <typename T>
  void get(const char* key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw std::invalid_argument("config: bad value for '" + path_ + "." + key + "': " +
                                  e.what());
    }
  }

  void vec3(const char* key, Vec3& out) {
    if (!j_.contains(key)) return;
    std::array<double, 3> a{out.x, out.y, out.z};
    get(key, a);
    out = {a[0], a[1], a[2]};
  }

  void box(const char* key, Box& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    out = parse_box(j_.at(key), path_ + "." + key);
  }

  static Box parse_box(const json& j, const std::string& path) {
    Section s(j, path);
    Box b;
    s.vec3("lo", b.lo);
    s.vec3("hi", b.hi);
    if (!j.contains("lo") || !j.contains("hi")) {
      throw std::invalid_argument("config: '" + path + "' needs lo and hi");
    }
    s.finish();
    return b;
  }

  Section child(const char* key) {
    seen_.insert(key);
    return Section(j_.at(key), path_ + "." + key);
  }

  const json& at(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) {
        throw std::invalid_argument("config: unknown key '" + path_ + "." + key + "'");
      }
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

json vec3_json(Vec3 v) { return json::array({v.x, v.y, v.z}); }
json box_json(const Box& b) { return {{"lo", vec3_json(b.lo)}, {"hi", vec3_json(b.hi)}}; }

std::string frame_batch_name(FrameBatch b) {
  return b == FrameBatch::Full ? "full" : "random-single";
}
FrameBatch frame_batch_from(const std::string& s) {
  if (s == "full") return FrameBatch::Full;
  if (s == "random-single") return FrameBatch::RandomSingle;
  throw std::invalid_argument("config: unknown frame_batch '" + s + "'");
}
std::string optimizer_name(OptimizerKind k) { return k == OptimizerKind::Adam ? "adam" : "sgd"; }
OptimizerKind optimizer_from(const std::string& s) {
  if (s == "adam") return OptimizerKind::Adam;
  if (s == "sgd") return OptimizerKind::Sgd;
  throw std::invalid_argument("config: unknown optimizer '" + s + "'");
}

void read_phantom(Section s, PhantomSpec& p) {
  std::string kind(to_string(p.kind));
  s.get("kind", kind);
  p.kind = phantom_kind_from_string(kind);
  s.box("region", p.region);
  s.get("n_frames", p.n_frames);
  s.get("pitch", p.pitch);
  s.get("seed", p.seed);
  if (s.has("heart")) {
    Section h = s.child("heart");
    if (h.has("slabs")) {
      const json& arr = h.at("slabs");
      if (!arr.is_array()) throw std::invalid_argument("config: phantom.heart.slabs must be a list");
      p.heart.slabs.clear();
      for (std::size_t i = 0; i < arr.size(); ++i) {
        p.heart.slabs.push_back(
            Section::parse_box(arr[i], "phantom.heart.slabs[" + std::to_string(i) + "]"));
      }
    }
    h.get("slab_p0", p.heart.slab_p0);
    h.vec3("center", p.heart.center);
    h.vec3("semi_axes", p.heart.semi_axes);
    h.get("ellipsoid_p0", p.heart.ellipsoid_p0);
    h.get("pulsation", p.heart.pulsation);
    h.get("pulse_amplitude", p.heart.pulse_amplitude);
    h.get("pulse_extent", p.heart.pulse_extent);
    h.finish();
  }
  if (s.has("vascular")) {
    Section v = s.child("vascular");
    v.vec3("root", p.vascular.root);
    v.vec3("direction", p.vascular.direction);
    v.get("root_radius", p.vascular.root_radius);
    v.get("segment_length", p.vascular.segment_length);
    v.get("length_decay", p.vascular.length_decay);
    v.get("depth", p.vascular.depth);
    v.get("branch_angle_deg", p.vascular.branch_angle_deg);
    v.get("p0", p.vascular.p0);
    v.get("dilation", p.vascular.dilation);
    v.get("amplitude_growth", p.vascular.amplitude_growth);
    v.finish();
  }
  if (s.has("custom")) {
    const json& arr = s.at("custom");
    if (!arr.is_array()) throw std::invalid_argument("config: phantom.custom must be a list");
    p.custom.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Section b(arr[i], "phantom.custom[" + std::to_string(i) + "]");
      GaussBall ball;
      b.get("p0", ball.p0);
      b.get("a0", ball.a0);
      b.vec3("mu", ball.mu);
      b.finish();
      p.custom.push_back(ball);
    }
  }
  s.finish();
}

void read_recon(Section s, ReconConfig& r) {
  if (s.has("lr")) {
    Section lr = s.child("lr");
    lr.get("coords", r.lr.coords);
    lr.get("pressure", r.lr.pressure);
    lr.get("std", r.lr.std);
    lr.get("deform", r.lr.deform);
    lr.finish();
  }
  s.get("step_size", r.step_size);
  s.get("drop_rate", r.drop_rate);
  s.get("static_iters", r.static_iters);
  s.get("dynamic_iters", r.dynamic_iters);
  s.get("prune_fraction", r.prune_fraction);
  s.get("prune_every", r.prune_every);
  s.get("n_basis", r.n_basis);
  s.get("shared_basis", r.shared_basis);
  std::string mode(to_string(r.coord_mode));
  s.get("coord_mode", mode);
  r.coord_mode = coord_mode_from_string(mode);
  s.get("a0_floor", r.a0_floor);
  s.get("p0_floor", r.p0_floor);
  s.get("sigma_floor", r.sigma_floor);
  s.get("init_pitch", r.init_pitch);
  s.get("init_p0_fraction", r.init_p0_fraction);
  std::string batch = frame_batch_name(r.frame_batch);
  s.get("frame_batch", batch);
  r.frame_batch = frame_batch_from(batch);
  s.get("reference_frame", r.reference_frame);
  s.get("random_reference", r.random_reference);
  std::string opt = optimizer_name(r.optimizer);
  s.get("optimizer", opt);
  r.optimizer = optimizer_from(opt);
  s.get("exact", r.exact);
  s.finish();
}

json phantom_json(const PhantomSpec& p) {
  json slabs = json::array();
  for (const Box& b : p.heart.slabs) slabs.push_back(box_json(b));
  json custom = json::array();
  for (const GaussBall& b : p.custom) {
    custom.push_back({{"p0", b.p0}, {"a0", b.a0}, {"mu", vec3_json(b.mu)}});
  }
  return {
      {"kind", std::string(to_string(p.kind))},
      {"region", box_json(p.region)},
      {"n_frames", p.n_frames},
      {"pitch", p.pitch},
      {"seed", p.seed},
      {"heart",
       {{"slabs", slabs},
        {"slab_p0", p.heart.slab_p0},
        {"center", vec3_json(p.heart.center)},
        {"semi_axes", vec3_json(p.heart.semi_axes)},
        {"ellipsoid_p0", p.heart.ellipsoid_p0},
        {"pulsation", p.heart.pulsation},
        {"pulse_amplitude", p.heart.pulse_amplitude},
        {"pulse_extent", p.heart.pulse_extent}}},
      {"vascular",
       {{"root", vec3_json(p.vascular.root)},
        {"direction", vec3_json(p.vascular.direction)},
        {"root_radius", p.vascular.root_radius},
        {"segment_length", p.vascular.segment_length},
        {"length_decay", p.vascular.length_decay},
        {"depth", p.vascular.depth},
        {"branch_angle_deg", p.vascular.branch_angle_deg},
        {"p0", p.vascular.p0},
        {"dilation", p.vascular.dilation},
        {"amplitude_growth", p.vascular.amplitude_growth}}},
      {"custom", custom},
  };
}

json recon_json(const ReconConfig& r) {
  return {
      {"lr",
       {{"coords", r.lr.coords},
        {"pressure", r.lr.pressure},
        {"std", r.lr.std},
        {"deform", r.lr.deform}}},
      {"step_size", r.step_size},
      {"drop_rate", r.drop_rate},
      {"static_iters", r.static_iters},
      {"dynamic_iters", r.dynamic_iters},
      {"prune_fraction", r.prune_fraction},
      {"prune_every", r.prune_every},
      {"n_basis", r.n_basis},
      {"shared_basis", r.shared_basis},
      {"coord_mode", std::string(to_string(r.coord_mode))},
      {"a0_floor", r.a0_floor},
      {"p0_floor", r.p0_floor},
      {"sigma_floor", r.sigma_floor},
      {"init_pitch", r.init_pitch},
      {"init_p0_fraction", r.init_p0_fraction},
      {"frame_batch", frame_batch_name(r.frame_batch)},
      {"reference_frame", r.reference_frame},
      {"random_reference", r.random_reference},
      {"optimizer", optimizer_name(r.optimizer)},
      {"exact", r.exact},
  };
}

// Learning rates and schedule for the desk presets, in this library's units
// (mm, unit-peak pressure), tuned on the desk phantoms. The bare
// ReconConfig defaults keep the original-scale rates.
ReconConfig desk_recon() {
  ReconConfig r;
  r.lr = {2e-2, 5e-2, 1e-2, 1e-3};
  r.static_iters = 480;
  r.dynamic_iters = 160;
  r.prune_fraction = 1e-2;
  r.init_pitch = 1.6;
  r.a0_floor = 0.05;
  return r;
}

}  // namespace

std::vector<std::uint8_t> encode_tensor(std::span<const std::uint64_t> dims,
                                        std::span<const double> values) {
  std::uint64_t count = 1;
  for (std::uint64_t d : dims) count *= d;
  if (count != values.size()) {
    throw std::invalid_argument("encode_tensor: dims product " + std::to_string(count) +
                                " != value count " + std::to_string(values.size()));
  }
  ByteWriter w;
  w.raw(kTensorMagic, 4);
  w.u32(kTensorVersion);
  w.u32(kDtypeF32);
  w.u32(static_cast<std::uint32_t>(dims.size()));
  for (std::uint64_t d : dims) w.u64(d);
  for (double v : values) w.f32(v);
  return w.take();
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.magic(kTensorMagic);
  const std::uint32_t version = r.u32();
  if (version != kTensorVersion) {
    throw FormatError("tensor: unsupported version " + std::to_string(version));
  }
  const std::uint32_t dtype = r.u32();
  if (dtype != kDtypeF32) throw FormatError("tensor: unsupported dtype " + std::to_string(dtype));
  const std::uint32_t rank = r.u32();
  Tensor t;
  std::uint64_t count = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    t.dims.push_back(r.u64());
    count *= t.dims.back();
  }
  if (r.remaining() != 4 * count) {
    throw FormatError("tensor: payload is " + std::to_string(r.remaining()) + " bytes, dims need " +
                      std::to_string(4 * count));
  }
  t.data.resize(count);
  for (float& v : t.data) v = r.f32();
  return t;
}

std::vector<std::uint8_t> encode_cloud(const DynamicCloud& cloud) {
  ByteWriter w;
  w.raw(kCloudMagic, 4);
  w.u32(kCloudVersion);
  w.u64(cloud.size());
  w.u32(static_cast<std::uint32_t>(cloud.n_basis()));
  const std::string desc = descriptor(cloud);
  w.u32(static_cast<std::uint32_t>(desc.size()));
  w.raw(desc.data(), desc.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const GaussBall& b = cloud.balls()[i];
    const DeformField& d = cloud.deforms()[i];
    w.f32(b.p0);
    w.f32(b.a0);
    w.f32(b.mu.x);
    w.f32(b.mu.y);
    w.f32(b.mu.z);
    for (double v : d.theta) w.f32(v);
    for (double v : d.sigma) w.f32(v);
    for (double v : d.omega) w.f32(v);
  }
  return w.take();
}

DynamicCloud decode_cloud(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.magic(kCloudMagic);
  const std::uint32_t version = r.u32();
  if (version != kCloudVersion) {
    throw FormatError("cloud: unsupported version " + std::to_string(version));
  }
  const std::uint64_t count = r.u64();
  const std::uint32_t n_basis = r.u32();
  const std::string desc = r.str(r.u32());

  // "<channels>;basis=...;coords=..."
  std::vector<std::string> parts;
  std::stringstream ss(desc);
  for (std::string part; std::getline(ss, part, ';');) parts.push_back(part);
  if (parts.size() != 3 || parts[0] != kChannelOrder || parts[1].rfind("basis=", 0) != 0 ||
      parts[2].rfind("coords=", 0) != 0) {
    throw FormatError("cloud: unrecognized descriptor '" + desc + "'");
  }
  const std::string basis = parts[1].substr(6);
  if (basis != "shared" && basis != "independent") {
    throw FormatError("cloud: unknown basis layout '" + basis + "'");
  }
  const bool shared = basis == "shared";
  CoordMode mode;
  try {
    mode = coord_mode_from_string(parts[2].substr(7));
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("cloud: ") + e.what());
  }

  const std::uint64_t rows = shared ? 1 : kChannels;
  const std::uint64_t per_ball = 5 + 2 * rows * n_basis + kChannels * n_basis;
  if (r.remaining() != 4 * per_ball * count) {
    throw FormatError("cloud: payload is " + std::to_string(r.remaining()) + " bytes, expected " +
                      std::to_string(4 * per_ball * count));
  }
  std::vector<GaussBall> balls(count);
  std::vector<DeformField> deforms(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    GaussBall& b = balls[i];
    b.p0 = r.f32();
    b.a0 = r.f32();
    b.mu = {r.f32(), r.f32(), r.f32()};
    DeformField& d = deforms[i];
    d.n_basis = n_basis;
    d.shared_basis = shared;
    d.theta.resize(rows * n_basis);
    d.sigma.resize(rows * n_basis);
    d.omega.resize(kChannels * n_basis);
    for (double& v : d.theta) v = r.f32();
    for (double& v : d.sigma) v = r.f32();
    for (double& v : d.omega) v = r.f32();
  }
  return DynamicCloud(std::move(balls), std::move(deforms), mode);
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_tensor(const std::filesystem::path& path, std::span<const std::uint64_t> dims,
                  std::span<const double> values) {
  write_bytes(path, encode_tensor(dims, values));
}

Tensor read_tensor(const std::filesystem::path& path) {
  try {
    return decode_tensor(read_bytes(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_cloud(const std::filesystem::path& path, const DynamicCloud& cloud) {
  write_bytes(path, encode_cloud(cloud));
}

DynamicCloud read_cloud(const std::filesystem::path& path) {
  try {
    return decode_cloud(read_bytes(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_signals(const std::filesystem::path& path, const SignalSet& s) {
  const std::array<std::uint64_t, 3> dims{s.n_sensors(), s.n_frames(), s.n_samples()};
  write_tensor(path, dims, s.data());
}

SignalSet read_signals(const std::filesystem::path& path) {
  const Tensor t = read_tensor(path);
  if (t.dims.size() != 3) throw FormatError(path.string() + ": signals must be rank 3 (M, K, T)");
  std::vector<double> data(t.data.begin(), t.data.end());
  return SignalSet(t.dims[0], t.dims[1], t.dims[2], std::move(data),
                   SignalSet::normalized_frame_times(t.dims[1]));
}

void write_grid(const std::filesystem::path& path, const VoxelGrid& grid) {
  const std::array<std::uint64_t, 3> dims{grid.dims()[0], grid.dims()[1], grid.dims()[2]};
  write_tensor(path, dims, grid.values());
}

VoxelGrid read_grid(const std::filesystem::path& path, const GridSpec& expected) {
  const Tensor t = read_tensor(path);
  if (t.dims.size() != 3 || t.dims[0] != expected.dims[0] || t.dims[1] != expected.dims[1] ||
      t.dims[2] != expected.dims[2]) {
    throw FormatError(path.string() + ": grid dims do not match the configured grid");
  }
  return VoxelGrid(expected, std::vector<double>(t.data.begin(), t.data.end()));
}

RunConfig RunConfig::preset_named(std::string_view name) {
  RunConfig c;
  c.preset = std::string(name);
  if (name == "desk-heart" || name == "desk-vascular") {
    c.array = {};
    c.array.margin_a0 = 1.2;
    c.phantom = name == "desk-heart" ? PhantomSpec::desk_heart(8) : PhantomSpec::desk_vascular(8);
    c.recon = desk_recon();
    c.eval.voxel_pitch = 0.4;
  } else if (name == "full-heart" || name == "full-vascular") {
    c.array.m = name == "full-heart" ? 1024 : 512;
    c.array.radius = 60.0;
    c.array.sample_rate = 10.0;
    c.array.margin_a0 = 0.6;
    c.phantom = PhantomSpec::full_heart(17);
    if (name == "full-vascular") {
      c.phantom.kind = PhantomKind::Vascular;
      c.phantom.vascular.root = {0.0, 0.0, -19.2};
      c.phantom.vascular.segment_length = 14.0;
      c.phantom.vascular.root_radius = 2.4;
      c.phantom.seed = 7;
    }
    c.recon = ReconConfig{};
    c.eval.voxel_pitch = 0.2;
  } else {
    throw std::invalid_argument("unknown preset '" + std::string(name) + "'");
  }
  return c;
}

RunConfig parse_run_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
  }
  Section root(j, "config");
  std::string preset = "desk-heart";
  root.get("preset", preset);
  RunConfig c = RunConfig::preset_named(preset);
  root.get("seed", c.seed);
  if (root.has("array")) {
    Section a = root.child("array");
    a.get("m", c.array.m);
    a.get("radius", c.array.radius);
    a.get("sound_speed", c.array.sound_speed);
    a.get("sample_rate", c.array.sample_rate);
    a.get("margin_a0", c.array.margin_a0);
    a.get("noise_std", c.array.noise_std);
    a.finish();
  }
  if (root.has("phantom")) read_phantom(root.child("phantom"), c.phantom);
  if (root.has("recon")) read_recon(root.child("recon"), c.recon);
  if (root.has("eval")) {
    Section e = root.child("eval");
    e.get("voxel_pitch", c.eval.voxel_pitch);
    if (e.has("ssim")) {
      Section s = e.child("ssim");
      s.get("window", c.eval.ssim.window);
      s.get("sigma", c.eval.ssim.sigma);
      s.get("k1", c.eval.ssim.k1);
      s.get("k2", c.eval.ssim.k2);
      s.get("dynamic_range", c.eval.ssim.dynamic_range);
      s.finish();
    }
    e.finish();
  }
  if (root.has("io")) {
    Section io = root.child("io");
    io.get("phantom_dir", c.io.phantom_dir);
    io.get("signals", c.io.signals);
    io.get("static_cloud", c.io.static_cloud);
    io.get("dynamic_cloud", c.io.dynamic_cloud);
    io.get("ubp_dir", c.io.ubp_dir);
    io.finish();
  }
  root.finish();

  c.recon.seed = c.seed;
  c.recon.validate();
  c.phantom.validate();
  if (c.array.m < 1) throw std::invalid_argument("config: array.m must be >= 1");
  if (!(c.array.radius > 0.0)) throw std::invalid_argument("config: array.radius must be > 0");
  if (!(c.eval.voxel_pitch > 0.0)) throw std::invalid_argument("config: eval.voxel_pitch must be > 0");
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string dump_run_config(const RunConfig& c) {
  json j = {
      {"preset", c.preset},
      {"seed", c.seed},
      {"array",
       {{"m", c.array.m},
        {"radius", c.array.radius},
        {"sound_speed", c.array.sound_speed},
        {"sample_rate", c.array.sample_rate},
        {"margin_a0", c.array.margin_a0},
        {"noise_std", c.array.noise_std}}},
      {"phantom", phantom_json(c.phantom)},
      {"recon", recon_json(c.recon)},
      {"eval",
       {{"voxel_pitch", c.eval.voxel_pitch},
        {"ssim",
         {{"window", c.eval.ssim.window},
          {"sigma", c.eval.ssim.sigma},
          {"k1", c.eval.ssim.k1},
          {"k2", c.eval.ssim.k2},
          {"dynamic_range", c.eval.ssim.dynamic_range}}}}},
      {"io",
       {{"phantom_dir", c.io.phantom_dir},
        {"signals", c.io.signals},
        {"static_cloud", c.io.static_cloud},
        {"dynamic_cloud", c.io.dynamic_cloud},
        {"ubp_dir", c.io.ubp_dir}}},
  };
  return j.dump(2) + "\n";
}

std::string config_hash(const RunConfig& cfg) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : dump_run_config(cfg)) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

SensorArray make_array(const RunConfig& cfg) {
  std::vector<Vec3> pos = fibonacci_sphere(cfg.array.m, cfg.array.radius);
  const TimeWindow w = compute_time_window(pos, cfg.array.sound_speed, cfg.array.sample_rate,
                                           cfg.phantom.region, cfg.array.margin_a0);
  return SensorArray::spherical(std::move(pos), cfg.array.sound_speed, cfg.array.sample_rate,
                                w.n_samples, w.t_start);
}

GridSpec make_grid(const RunConfig& cfg) {
  return GridSpec::covering(cfg.phantom.region, cfg.eval.voxel_pitch);
}

}  // namespace ggball
