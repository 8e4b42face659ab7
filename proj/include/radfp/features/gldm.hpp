#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "radfp/discretize.hpp"

namespace radfp {

/// Gray level dependence matrix: counts[g][j-1] = voxels with level g whose
/// dependence size is j, where j = 1 + number of 26-neighbors with equal
/// level. Every voxel contributes one cell, so the mass equals the voxel
/// count.
struct DependenceMatrix {
  int ng = 0;
  int max_dep = 27;
  std::vector<std::int64_t> counts;

  std::int64_t& at(int g, int dep) {
    return counts[static_cast<std::size_t>(g - 1) * max_dep + (dep - 1)];
  }
  std::int64_t at(int g, int dep) const {
    return counts[static_cast<std::size_t>(g - 1) * max_dep + (dep - 1)];
  }
};

inline DependenceMatrix gldm_counts(const DiscretizedPatch& dp) {
  const Dims d = dp.dims;
  DependenceMatrix m;
  m.ng = dp.n_levels;
  m.counts.assign(static_cast<std::size_t>(m.ng) * m.max_dep, 0);

  for (int z = 0; z < d.d; ++z)
    for (int y = 0; y < d.h; ++y)
      for (int x = 0; x < d.w; ++x) {
        int level = dp.at(z, y, x);
        int dep = 1;
        for (const auto& o : neighbor_offsets_26()) {
          int nz = z + o[0], ny = y + o[1], nx = x + o[2];
          if (in_bounds(d, nz, ny, nx) && dp.at(nz, ny, nx) == level) ++dep;
        }
        ++m.at(level, dep);
      }
  return m;
}

inline std::array<double, 14> gldm_features(const DiscretizedPatch& dp) {
  DependenceMatrix m = gldm_counts(dp);

  double nz = 0.0;
  std::vector<double> per_level(static_cast<std::size_t>(m.ng), 0.0);
  std::vector<double> per_dep(static_cast<std::size_t>(m.max_dep), 0.0);
  for (int g = 1; g <= m.ng; ++g)
    for (int j = 1; j <= m.max_dep; ++j) {
      double c = static_cast<double>(m.at(g, j));
      if (c == 0.0) continue;
      nz += c;
      per_level[static_cast<std::size_t>(g - 1)] += c;
      per_dep[static_cast<std::size_t>(j - 1)] += c;
    }

  double sde = 0.0, lde = 0.0, lgle = 0.0, hgle = 0.0, sdlgle = 0.0,
         sdhgle = 0.0, ldlgle = 0.0, ldhgle = 0.0, mu_g = 0.0, mu_j = 0.0,
         entropy = 0.0;
  for (int g = 1; g <= m.ng; ++g)
    for (int j = 1; j <= m.max_dep; ++j) {
      double c = static_cast<double>(m.at(g, j));
      if (c == 0.0) continue;
      double g2 = double(g) * g, j2 = double(j) * j;
      sde += c / j2;
      lde += c * j2;
      lgle += c / g2;
      hgle += c * g2;
      sdlgle += c / (g2 * j2);
      sdhgle += c * g2 / j2;
      ldlgle += c * j2 / g2;
      ldhgle += c * g2 * j2;
      double p = c / nz;
      mu_g += p * g;
      mu_j += p * j;
      entropy -= p * std::log2(p);
    }

  double glv = 0.0, dv = 0.0;
  for (int g = 1; g <= m.ng; ++g)
    for (int j = 1; j <= m.max_dep; ++j) {
      double c = static_cast<double>(m.at(g, j));
      if (c == 0.0) continue;
      double p = c / nz;
      glv += p * (g - mu_g) * (g - mu_g);
      dv += p * (j - mu_j) * (j - mu_j);
    }

  double gln = 0.0;
  for (double c : per_level) gln += c * c;
  double dn = 0.0;
  for (double c : per_dep) dn += c * c;

  return {
      sde / nz,        // SmallDependenceEmphasis
      lde / nz,        // LargeDependenceEmphasis
      gln / nz,        // GrayLevelNonUniformity
      dn / nz,         // DependenceNonUniformity
      dn / (nz * nz),  // DependenceNonUniformityNormalized
      glv,             // GrayLevelVariance
      dv,              // DependenceVariance
      entropy,         // DependenceEntropy
      lgle / nz,       // LowGrayLevelEmphasis
      hgle / nz,       // HighGrayLevelEmphasis
      sdlgle / nz,     // SmallDependenceLowGrayLevelEmphasis
      sdhgle / nz,     // SmallDependenceHighGrayLevelEmphasis
      ldlgle / nz,     // LargeDependenceLowGrayLevelEmphasis
      ldhgle / nz,     // LargeDependenceHighGrayLevelEmphasis
  };
}

}  // namespace radfp
