#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "radfp/discretize.hpp"

namespace radfp {

/// NGTDM accumulators: for level i (1-based), n[i-1] voxels of that level
/// and s[i-1] = sum over those voxels of |i - mean(valid 26-neighbors)|.
struct NgtdmTable {
  std::vector<double> s;
  std::vector<std::int64_t> n;
  std::int64_t n_valid = 0;  // voxels with at least one neighbor
};

inline NgtdmTable ngtdm_table(const DiscretizedPatch& dp) {
  const Dims d = dp.dims;
  NgtdmTable t;
  t.s.assign(static_cast<std::size_t>(dp.n_levels), 0.0);
  t.n.assign(static_cast<std::size_t>(dp.n_levels), 0);

  for (int z = 0; z < d.d; ++z)
    for (int y = 0; y < d.h; ++y)
      for (int x = 0; x < d.w; ++x) {
        double sum = 0.0;
        int cnt = 0;
        for (const auto& o : neighbor_offsets_26()) {
          int nz = z + o[0], ny = y + o[1], nx = x + o[2];
          if (!in_bounds(d, nz, ny, nx)) continue;
          sum += dp.at(nz, ny, nx);
          ++cnt;
        }
        if (cnt == 0) continue;  // single-voxel patch
        int level = dp.at(z, y, x);
        t.s[static_cast<std::size_t>(level - 1)] +=
            std::abs(level - sum / cnt);
        ++t.n[static_cast<std::size_t>(level - 1)];
        ++t.n_valid;
      }
  return t;
}

/// Coarseness, Contrast, Busyness, Complexity, Strength. Degenerate
/// denominators: Coarseness is capped at 1e6 and the others fall back
/// to 0, keeping every output finite.
inline std::array<double, 5> ngtdm_features(const DiscretizedPatch& dp) {
  constexpr double kCoarsenessCap = 1e6;
  NgtdmTable t = ngtdm_table(dp);
  if (t.n_valid == 0) return {kCoarsenessCap, 0.0, 0.0, 0.0, 0.0};

  const int ng = dp.n_levels;
  const double nv = static_cast<double>(t.n_valid);
  std::vector<double> p(static_cast<std::size_t>(ng), 0.0);
  int n_present = 0;
  double sum_ps = 0.0, sum_s = 0.0;
  for (int i = 0; i < ng; ++i) {
    p[static_cast<std::size_t>(i)] = static_cast<double>(t.n[i]) / nv;
    if (t.n[i] > 0) ++n_present;
    sum_ps += p[static_cast<std::size_t>(i)] * t.s[static_cast<std::size_t>(i)];
    sum_s += t.s[static_cast<std::size_t>(i)];
  }

  double coarseness =
      sum_ps > 0.0 ? std::min(kCoarsenessCap, 1.0 / sum_ps) : kCoarsenessCap;

  double contrast = 0.0, busyness_den = 0.0, complexity = 0.0,
         strength_num = 0.0;
  for (int i = 1; i <= ng; ++i) {
    double pi = p[static_cast<std::size_t>(i - 1)];
    if (pi == 0.0) continue;
    double si = t.s[static_cast<std::size_t>(i - 1)];
    for (int j = 1; j <= ng; ++j) {
      double pj = p[static_cast<std::size_t>(j - 1)];
      if (pj == 0.0) continue;
      double sj = t.s[static_cast<std::size_t>(j - 1)];
      double diff = static_cast<double>(i - j);
      contrast += pi * pj * diff * diff;
      if (i != j) {
        busyness_den += std::abs(i * pi - j * pj);
        complexity += std::abs(diff) * (pi * si + pj * sj) / (pi + pj);
        strength_num += (pi + pj) * diff * diff;
      }
    }
  }

  contrast = n_present > 1
                 ? contrast / (n_present * (n_present - 1.0)) * (sum_s / nv)
                 : 0.0;
  double busyness = busyness_den > 0.0 ? sum_ps / busyness_den : 0.0;
  complexity /= nv;
  double strength = sum_s > 0.0 ? strength_num / sum_s : 0.0;

  return {coarseness, contrast, busyness, complexity, strength};
}

}  // namespace radfp
