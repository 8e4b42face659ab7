#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "radfp/error.hpp"
#include "radfp/volume.hpp"

namespace radfp {

/// A patch quantized to integer gray levels in 1..n_levels via min-max
/// equal-width binning. A constant patch collapses to a single level.
struct DiscretizedPatch {
  Dims dims;
  std::vector<int> levels;  // same layout as Volume::voxels
  int n_levels = 1;

  int at(int z, int y, int x) const {
    return levels[(static_cast<std::size_t>(z) * dims.h + y) * dims.w + x];
  }
  std::int64_t size() const { return dims.count(); }
};

inline DiscretizedPatch discretize(const Volume& patch, int n_bins) {
  if (n_bins < 1)
    throw invalid_argument("n_bins must be >= 1, got " +
                           std::to_string(n_bins));
  if (patch.voxels.empty()) throw invalid_argument("empty patch");

  auto [mn_it, mx_it] =
      std::minmax_element(patch.voxels.begin(), patch.voxels.end());
  const double mn = *mn_it, mx = *mx_it;

  DiscretizedPatch dp;
  dp.dims = patch.dims;
  dp.levels.resize(patch.voxels.size());

  if (mx == mn) {
    std::fill(dp.levels.begin(), dp.levels.end(), 1);
    dp.n_levels = 1;
    return dp;
  }

  const double width = (mx - mn) / n_bins;
  for (std::size_t i = 0; i < patch.voxels.size(); ++i) {
    int bin = static_cast<int>((patch.voxels[i] - mn) / width) + 1;
    dp.levels[i] = std::clamp(bin, 1, n_bins);
  }
  dp.n_levels = n_bins;
  return dp;
}

/// The 13 unique direction offsets at distance 1 in 3-D (one per +/- pair),
/// as (dz, dy, dx). Order is fixed so per-direction outputs are stable.
inline const std::vector<std::array<int, 3>>& texture_directions() {
  static const std::vector<std::array<int, 3>> dirs = {
      {0, 0, 1},  {0, 1, -1},  {0, 1, 0},  {0, 1, 1},  {1, -1, -1},
      {1, -1, 0}, {1, -1, 1},  {1, 0, -1}, {1, 0, 0},  {1, 0, 1},
      {1, 1, -1}, {1, 1, 0},   {1, 1, 1},
  };
  return dirs;
}

/// All 26 neighbor offsets (the 13 directions and their negations).
inline const std::vector<std::array<int, 3>>& neighbor_offsets_26() {
  static const std::vector<std::array<int, 3>> offs = [] {
    std::vector<std::array<int, 3>> v;
    for (const auto& d : texture_directions()) {
      v.push_back(d);
      v.push_back({-d[0], -d[1], -d[2]});
    }
    return v;
  }();
  return offs;
}

inline bool in_bounds(const Dims& d, int z, int y, int x) {
  return z >= 0 && z < d.d && y >= 0 && y < d.h && x >= 0 && x < d.w;
}

}  // namespace radfp
