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

#include "ggball/evaluation.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace ggball {

namespace {

constexpr double kSupport = 6.0;

// Inclusive voxel index range along one axis within `reach` of `center`.
bool axis_range(const GridSpec& g, std::size_t axis, double center, double reach,
                std::size_t& lo, std::size_t& hi) {
  const double n = static_cast<double>(g.dims[axis]);
  const double first = std::ceil((center - reach - g.origin[axis]) / g.spacing);
  const double last = std::floor((center + reach - g.origin[axis]) / g.spacing);
  if (last < 0.0 || first > n - 1.0 || last < first) return false;
  lo = static_cast<std::size_t>(std::max(first, 0.0));
  hi = static_cast<std::size_t>(std::min(last, n - 1.0));
  return true;
}

std::vector<double> gaussian_window(std::size_t size, double sigma) {
  std::vector<double> w(size);
  const double c = 0.5 * static_cast<double>(size - 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < size; ++i) {
    const double d = static_cast<double>(i) - c;
    w[i] = std::exp(-0.5 * d * d / (sigma * sigma));
    sum += w[i];
  }
  for (double& x : w) x /= sum;
  return w;
}

// Separable "valid" filtering: out is (rows - n + 1) x (cols - n + 1).
std::vector<double> filter_valid(const std::vector<double>& img, std::size_t rows,
                                 std::size_t cols, const std::vector<double>& w) {
  const std::size_t n = w.size();
  const std::size_t orows = rows - n + 1;
  const std::size_t ocols = cols - n + 1;
  std::vector<double> tmp(rows * ocols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < ocols; ++c) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += w[k] * img[r * cols + c + k];
      tmp[r * ocols + c] = acc;
    }
  }
  std::vector<double> out(orows * ocols, 0.0);
  for (std::size_t r = 0; r < orows; ++r) {
    for (std::size_t c = 0; c < ocols; ++c) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += w[k] * tmp[(r + k) * ocols + c];
      out[r * ocols + c] = acc;
    }
  }
  return out;
}

std::string fixed(double v, int precision) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

}  // namespace

std::vector<BallStateAtT> static_states(std::span<const GaussBall> balls) {
  std::vector<BallStateAtT> out(balls.size());
  for (std::size_t i = 0; i < balls.size(); ++i) {
    out[i] = {balls[i].a0, balls[i].p0, balls[i].mu};
  }
  return out;
}

VoxelGrid voxelize(std::span<const BallStateAtT> states, const GridSpec& grid,
                   VoxelizeOptions opts) {
  VoxelGrid out(grid);
  const std::size_t nx = grid.dims[0];
  const std::size_t ny = grid.dims[1];
  const std::size_t nz = grid.dims[2];

  // Parallel over x-slabs; each slab sums balls in index order.
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(nx); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const double x = grid.origin.x + grid.spacing * static_cast<double>(i);
    for (const BallStateAtT& b : states) {
      if (b.p0_t == 0.0) continue;
      const double inv_2a2 = 0.5 / (b.a0_t * b.a0_t);
      std::size_t j0 = 0, j1 = ny - 1, k0 = 0, k1 = nz - 1;
      if (!opts.exact) {
        const double reach = kSupport * b.a0_t;
        if (std::abs(x - b.mu_t.x) > reach) continue;
        if (!axis_range(grid, 1, b.mu_t.y, reach, j0, j1)) continue;
        if (!axis_range(grid, 2, b.mu_t.z, reach, k0, k1)) continue;
      }
      const double dx = x - b.mu_t.x;
      const double ex = b.p0_t * std::exp(-dx * dx * inv_2a2);
      for (std::size_t j = j0; j <= j1; ++j) {
        const double dy = grid.origin.y + grid.spacing * static_cast<double>(j) - b.mu_t.y;
        const double exy = ex * std::exp(-dy * dy * inv_2a2);
        double* row = &out.at(i, j, 0);
        for (std::size_t k = k0; k <= k1; ++k) {
          const double dz = grid.origin.z + grid.spacing * static_cast<double>(k) - b.mu_t.z;
          row[k] += exy * std::exp(-dz * dz * inv_2a2);
        }
      }
    }
  }
  return out;
}

std::string_view to_string(MapAxis axis) {
  switch (axis) {
    case MapAxis::XY:
      return "XY";
    case MapAxis::YZ:
      return "YZ";
    case MapAxis::XZ:
      return "XZ";
  }
  return "XY";
}

MapImage map_project(const VoxelGrid& grid, MapAxis axis) {
  const auto [nx, ny, nz] = grid.dims();
  MapImage img;
  img.axis = axis;
  img.pitch = grid.spec().spacing;
  switch (axis) {
    case MapAxis::XY:
      img.rows = nx;
      img.cols = ny;
      break;
    case MapAxis::YZ:
      img.rows = ny;
      img.cols = nz;
      break;
    case MapAxis::XZ:
      img.rows = nx;
      img.cols = nz;
      break;
  }
  img.values.assign(img.rows * img.cols, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t j = 0; j < ny; ++j) {
      for (std::size_t k = 0; k < nz; ++k) {
        const double v = grid.at(i, j, k);
        std::size_t idx = 0;
        switch (axis) {
          case MapAxis::XY:
            idx = i * ny + j;
            break;
          case MapAxis::YZ:
            idx = j * nz + k;
            break;
          case MapAxis::XZ:
            idx = i * nz + k;
            break;
        }
        img.values[idx] = std::max(img.values[idx], v);
      }
    }
  }
  return img;
}

double ssim_raw(std::span<const double> a, std::span<const double> b, std::size_t rows,
                std::size_t cols, const SsimOptions& opts) {
  if (a.size() != rows * cols || b.size() != rows * cols) {
    throw std::invalid_argument("ssim: image sizes do not match dims");
  }
  if (rows == 0 || cols == 0) throw std::invalid_argument("ssim: empty image");
  std::size_t n = std::min({opts.window, rows, cols});
  if (n % 2 == 0) --n;
  const std::vector<double> w = gaussian_window(n, opts.sigma);

  const std::vector<double> x(a.begin(), a.end());
  const std::vector<double> y(b.begin(), b.end());
  std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto mx = filter_valid(x, rows, cols, w);
  const auto my = filter_valid(y, rows, cols, w);
  const auto mxx = filter_valid(xx, rows, cols, w);
  const auto myy = filter_valid(yy, rows, cols, w);
  const auto mxy = filter_valid(xy, rows, cols, w);

  const double c1 = std::pow(opts.k1 * opts.dynamic_range, 2);
  const double c2 = std::pow(opts.k2 * opts.dynamic_range, 2);
  double total = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double vx = mxx[i] - mx[i] * mx[i];
    const double vy = myy[i] - my[i] * my[i];
    const double cxy = mxy[i] - mx[i] * my[i];
    total += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cxy + c2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
  }
  return total / static_cast<double>(mx.size());
}

double ssim(const MapImage& a, const MapImage& b, const SsimOptions& opts) {
  if (a.rows != b.rows || a.cols != b.cols) {
    throw std::invalid_argument("ssim: image dims differ (" + std::to_string(a.rows) + "x" +
                                std::to_string(a.cols) + " vs " + std::to_string(b.rows) + "x" +
                                std::to_string(b.cols) + ")");
  }
  double peak = 0.0;
  for (double v : a.values) peak = std::max(peak, v);
  for (double v : b.values) peak = std::max(peak, v);
  if (peak <= 0.0) return ssim_raw(a.values, b.values, a.rows, a.cols, opts);
  const double scale = opts.dynamic_range / peak;
  std::vector<double> na(a.values.size()), nb(b.values.size());
  for (std::size_t i = 0; i < na.size(); ++i) {
    na[i] = a.values[i] * scale;
    nb[i] = b.values[i] * scale;
  }
  return ssim_raw(na, nb, a.rows, a.cols, opts);
}

SsimTable eval_report(const std::vector<VoxelGrid>& recon, const std::vector<VoxelGrid>& truth,
                      const std::vector<VoxelGrid>& ubp, const SsimOptions& opts) {
  if (recon.size() != truth.size() || (!ubp.empty() && ubp.size() != truth.size())) {
    throw std::invalid_argument("eval_report: frame counts differ (recon " +
                                std::to_string(recon.size()) + ", truth " +
                                std::to_string(truth.size()) + ", ubp " +
                                std::to_string(ubp.size()) + ")");
  }
  SsimTable table;
  table.has_ubp = !ubp.empty();
  for (std::size_t k = 0; k < truth.size(); ++k) {
    SsimRow row;
    row.frame = k;
    for (std::size_t a = 0; a < 3; ++a) {
      const MapImage t = map_project(truth[k], kMapAxes[a]);
      row.recon[a] = ssim(map_project(recon[k], kMapAxes[a]), t, opts);
      if (table.has_ubp) row.ubp[a] = ssim(map_project(ubp[k], kMapAxes[a]), t, opts);
    }
    table.rows.push_back(row);
  }
  return table;
}

std::string SsimTable::to_jsonl() const {
  std::ostringstream os;
  os << std::setprecision(17);
  for (const SsimRow& r : rows) {
    os << "{\"frame\":" << r.frame << ",\"method\":\"4d\",\"xy\":" << r.recon[0]
       << ",\"yz\":" << r.recon[1] << ",\"xz\":" << r.recon[2] << "}\n";
    if (has_ubp) {
      os << "{\"frame\":" << r.frame << ",\"method\":\"ubp\",\"xy\":" << r.ubp[0]
         << ",\"yz\":" << r.ubp[1] << ",\"xz\":" << r.ubp[2] << "}\n";
    }
  }
  return os.str();
}

std::string SsimTable::to_text() const {
  std::ostringstream os;
  os << std::left << std::setw(8) << "frame";
  if (has_ubp) os << std::setw(30) << "UBP (XY / YZ / XZ)";
  os << "4D (XY / YZ / XZ)\n";
  for (const SsimRow& r : rows) {
    os << std::left << std::setw(8) << r.frame + 1;
    if (has_ubp) {
      os << std::setw(30)
         << (fixed(r.ubp[0], 4) + "  " + fixed(r.ubp[1], 4) + "  " + fixed(r.ubp[2], 4));
    }
    os << fixed(r.recon[0], 4) << "  " << fixed(r.recon[1], 4) << "  " << fixed(r.recon[2], 4)
       << "\n";
  }
  return os.str();
}

void write_png16(const MapImage& image, const std::filesystem::path& path, double scale) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (scale <= 0.0) {
    for (double v : image.values) scale = std::max(scale, v);
    if (scale <= 0.0) scale = 1.0;
  }
  // PNG stores 16-bit samples big-endian.
  std::vector<png_byte> pixels(2 * image.rows * image.cols);
  std::vector<png_bytep> rows(image.rows);
  for (std::size_t r = 0; r < image.rows; ++r) {
    rows[r] = pixels.data() + 2 * r * image.cols;
    for (std::size_t c = 0; c < image.cols; ++c) {
      const double v = std::clamp(image.at(r, c) / scale, 0.0, 1.0);
      const auto q = static_cast<std::uint16_t>(std::lround(v * 65535.0));
      rows[r][2 * c] = static_cast<png_byte>(q >> 8);
      rows[r][2 * c + 1] = static_cast<png_byte>(q & 0xff);
    }
  }

  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.string().c_str(), "wb"), &std::fclose);
  if (!fp) throw std::runtime_error("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng initialization failed");
  }
  // Nothing with a destructor may be created between setjmp and the last png call.
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng failed writing " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.cols),
               static_cast<png_uint_32>(image.rows), 16, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace ggball
