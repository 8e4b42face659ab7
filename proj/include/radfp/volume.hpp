#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "radfp/error.hpp"

namespace radfp {

/// Volume dimensions, depth-major: (depth, height, width).
struct Dims {
  int d = 0;
  int h = 0;
  int w = 0;

  std::int64_t count() const {
    return static_cast<std::int64_t>(d) * h * w;
  }
  bool operator==(const Dims&) const = default;

  std::string str() const {
    return std::to_string(d) + "x" + std::to_string(h) + "x" +
           std::to_string(w);
  }
};

/// One 3D scalar image. Voxels are stored row-major, depth-major:
/// index = (z * h + y) * w + x. Spacing is (depth, height, width) in mm
/// and is informational only.
struct Volume {
  Dims dims;
  std::vector<double> voxels;
  std::array<double, 3> spacing{1.0, 1.0, 1.0};

  Volume() = default;
  Volume(Dims dm, double fill = 0.0)
      : dims(dm), voxels(static_cast<std::size_t>(dm.count()), fill) {
    if (dm.d <= 0 || dm.h <= 0 || dm.w <= 0)
      throw invalid_argument("volume dims must be positive, got " + dm.str());
  }
  Volume(Dims dm, std::vector<double> v) : dims(dm), voxels(std::move(v)) {
    if (dm.d <= 0 || dm.h <= 0 || dm.w <= 0)
      throw invalid_argument("volume dims must be positive, got " + dm.str());
    if (static_cast<std::int64_t>(voxels.size()) != dm.count())
      throw invalid_argument("voxel count " + std::to_string(voxels.size()) +
                             " does not match dims " + dm.str());
  }

  double& at(int z, int y, int x) {
    return voxels[(static_cast<std::size_t>(z) * dims.h + y) * dims.w + x];
  }
  double at(int z, int y, int x) const {
    return voxels[(static_cast<std::size_t>(z) * dims.h + y) * dims.w + x];
  }

  std::int64_t size() const { return dims.count(); }

  double voxel_volume() const { return spacing[0] * spacing[1] * spacing[2]; }

  bool all_finite() const {
    for (double v : voxels)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

/// Fractional region-of-interest crop. Fractions apply per axis in (0, 1];
/// the crop is centered unless explicit start offsets are given.
struct RoiSpec {
  std::array<double, 3> fractions{1.0, 1.0, 1.0};  // (f_d, f_h, f_w)
  bool centered = true;
  std::array<int, 3> start{0, 0, 0};  // used when centered == false

  static RoiSpec fractional(double fd, double fh, double fw) {
    RoiSpec s;
    s.fractions = {fd, fh, fw};
    return s;
  }
};

/// Non-overlapping patch grid; the standard configurations use
/// n in {1, 2, 3} per axis.
struct PatchGrid {
  int nd = 1;
  int nh = 1;
  int nw = 1;

  int patch_count() const { return nd * nh * nw; }
  bool standard() const {
    auto ok = [](int n) { return n >= 1 && n <= 3; };
    return ok(nd) && ok(nh) && ok(nw) && nd == nh && nh == nw;
  }
  bool operator==(const PatchGrid&) const = default;
  std::string str() const {
    return std::to_string(nd) + "x" + std::to_string(nh) + "x" +
           std::to_string(nw);
  }
};

/// Trilinear resize with corner-aligned sampling. Resizing to the current
/// dims reproduces the input exactly.
inline Volume resize_trilinear(const Volume& v, Dims target) {
  if (target.d <= 0 || target.h <= 0 || target.w <= 0)
    throw invalid_argument("resize target must be positive, got " +
                           target.str());
  if (target == v.dims) return v;

  Volume out(target);
  out.spacing = v.spacing;

  // Corner-aligned source coordinate for output index t; a single output
  // sample lands on the source center.
  auto src_coord = [](int t, int n_out, int n_in) -> double {
    if (n_out == 1) return (n_in - 1) / 2.0;
    return static_cast<double>(n_in - 1) * t / (n_out - 1);
  };

  for (int z = 0; z < target.d; ++z) {
    double fz = src_coord(z, target.d, v.dims.d);
    int z0 = static_cast<int>(fz);
    int z1 = std::min(z0 + 1, v.dims.d - 1);
    double tz = fz - z0;
    for (int y = 0; y < target.h; ++y) {
      double fy = src_coord(y, target.h, v.dims.h);
      int y0 = static_cast<int>(fy);
      int y1 = std::min(y0 + 1, v.dims.h - 1);
      double ty = fy - y0;
      for (int x = 0; x < target.w; ++x) {
        double fx = src_coord(x, target.w, v.dims.w);
        int x0 = static_cast<int>(fx);
        int x1 = std::min(x0 + 1, v.dims.w - 1);
        double tx = fx - x0;

        double c000 = v.at(z0, y0, x0), c001 = v.at(z0, y0, x1);
        double c010 = v.at(z0, y1, x0), c011 = v.at(z0, y1, x1);
        double c100 = v.at(z1, y0, x0), c101 = v.at(z1, y0, x1);
        double c110 = v.at(z1, y1, x0), c111 = v.at(z1, y1, x1);

        double c00 = c000 + (c001 - c000) * tx;
        double c01 = c010 + (c011 - c010) * tx;
        double c10 = c100 + (c101 - c100) * tx;
        double c11 = c110 + (c111 - c110) * tx;
        double c0 = c00 + (c01 - c00) * ty;
        double c1 = c10 + (c11 - c10) * ty;
        out.at(z, y, x) = c0 + (c1 - c0) * tz;
      }
    }
  }
  return out;
}

/// Crop a subvolume. dims_out = floor(fraction * dim), at least 1 per axis;
/// centered start = floor((dim - roi_dim) / 2).
inline Volume extract_roi(const Volume& v, const RoiSpec& spec) {
  std::array<int, 3> in{v.dims.d, v.dims.h, v.dims.w};
  std::array<int, 3> out{};
  std::array<int, 3> start{};
  for (int a = 0; a < 3; ++a) {
    double f = spec.fractions[a];
    if (!(f > 0.0 && f <= 1.0))
      throw invalid_argument("roi fraction out of (0,1]: " +
                             std::to_string(f));
    out[a] = std::max(1, static_cast<int>(std::floor(f * in[a])));
    start[a] = spec.centered ? (in[a] - out[a]) / 2 : spec.start[a];
    if (start[a] < 0 || start[a] + out[a] > in[a])
      throw invalid_argument("roi exceeds volume on axis " +
                             std::to_string(a) + ": start " +
                             std::to_string(start[a]) + " size " +
                             std::to_string(out[a]) + " vs " +
                             std::to_string(in[a]));
  }

  Volume roi(Dims{out[0], out[1], out[2]});
  roi.spacing = v.spacing;
  for (int z = 0; z < out[0]; ++z)
    for (int y = 0; y < out[1]; ++y)
      for (int x = 0; x < out[2]; ++x)
        roi.at(z, y, x) = v.at(start[0] + z, start[1] + y, start[2] + x);
  return roi;
}

/// Patch cell boundaries: cut(i) = round(dim * i / n). Exact tiling with
/// near-equal cells, never an empty cell while dim >= n.
inline std::vector<int> patch_cuts(int dim, int n) {
  std::vector<int> cuts(n + 1);
  for (int i = 0; i <= n; ++i)
    cuts[i] = static_cast<int>(
        std::llround(static_cast<double>(dim) * i / n));
  return cuts;
}

/// Half-open voxel ranges of one patch cell, in ROI coordinates.
struct PatchRegion {
  std::array<int, 3> begin{};
  std::array<int, 3> end{};
};

/// Region of patch j (zero-based, depth-major: j = z*nh*nw + y*nw + x).
inline PatchRegion patch_region(Dims roi_dims, const PatchGrid& grid, int j) {
  if (j < 0 || j >= grid.patch_count())
    throw invalid_argument("patch index " + std::to_string(j) +
                           " out of range for grid " + grid.str());
  std::array<int, 3> in{roi_dims.d, roi_dims.h, roi_dims.w};
  std::array<int, 3> n{grid.nd, grid.nh, grid.nw};
  for (int a = 0; a < 3; ++a)
    if (in[a] < n[a])
      throw invalid_argument("grid dim " + std::to_string(n[a]) +
                             " exceeds roi dim " + std::to_string(in[a]));
  int pz = j / (grid.nh * grid.nw);
  int py = (j / grid.nw) % grid.nh;
  int px = j % grid.nw;
  std::array<int, 3> cell{pz, py, px};
  PatchRegion r;
  for (int a = 0; a < 3; ++a) {
    auto cuts = patch_cuts(in[a], n[a]);
    r.begin[a] = cuts[cell[a]];
    r.end[a] = cuts[cell[a] + 1];
  }
  return r;
}

/// Split the ROI into grid.patch_count() non-overlapping volumes that tile
/// it exactly. Ordering is depth-major, then height, then width.
inline std::vector<Volume> decompose_patches(const Volume& roi,
                                             const PatchGrid& grid) {
  std::vector<Volume> patches;
  patches.reserve(grid.patch_count());
  for (int j = 0; j < grid.patch_count(); ++j) {
    PatchRegion r = patch_region(roi.dims, grid, j);
    Volume p(Dims{r.end[0] - r.begin[0], r.end[1] - r.begin[1],
                  r.end[2] - r.begin[2]});
    p.spacing = roi.spacing;
    for (int z = r.begin[0]; z < r.end[0]; ++z)
      for (int y = r.begin[1]; y < r.end[1]; ++y)
        for (int x = r.begin[2]; x < r.end[2]; ++x)
          p.at(z - r.begin[0], y - r.begin[1], x - r.begin[2]) =
              roi.at(z, y, x);
    patches.push_back(std::move(p));
  }
  return patches;
}

}  // namespace radfp
