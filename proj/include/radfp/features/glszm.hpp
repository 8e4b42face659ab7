#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "radfp/discretize.hpp"

namespace radfp {

/// Gray level size zone matrix: counts[g][s-1] = number of 26-connected
/// zones of level g with exactly s voxels. Direction-free by construction.
struct SizeZoneMatrix {
  int ng = 0;
  std::int64_t max_size = 0;
  std::vector<std::int64_t> counts;

  std::int64_t& at(int g, std::int64_t s) {
    return counts[static_cast<std::size_t>(g - 1) * max_size + (s - 1)];
  }
  std::int64_t at(int g, std::int64_t s) const {
    return counts[static_cast<std::size_t>(g - 1) * max_size + (s - 1)];
  }
};

inline SizeZoneMatrix glszm_counts(const DiscretizedPatch& dp) {
  const Dims d = dp.dims;
  SizeZoneMatrix m;
  m.ng = dp.n_levels;
  m.max_size = d.count();
  m.counts.assign(static_cast<std::size_t>(m.ng) * m.max_size, 0);

  std::vector<std::uint8_t> visited(static_cast<std::size_t>(d.count()), 0);
  std::vector<std::array<int, 3>> stack;
  auto idx = [&](int z, int y, int x) {
    return (static_cast<std::size_t>(z) * d.h + y) * d.w + x;
  };

  for (int z = 0; z < d.d; ++z)
    for (int y = 0; y < d.h; ++y)
      for (int x = 0; x < d.w; ++x) {
        if (visited[idx(z, y, x)]) continue;
        const int level = dp.at(z, y, x);
        std::int64_t size = 0;
        stack.push_back({z, y, x});
        visited[idx(z, y, x)] = 1;
        while (!stack.empty()) {
          auto [cz, cy, cx] = stack.back();
          stack.pop_back();
          ++size;
          for (const auto& o : neighbor_offsets_26()) {
            int nz = cz + o[0], ny = cy + o[1], nx = cx + o[2];
            if (!in_bounds(d, nz, ny, nx) || visited[idx(nz, ny, nx)] ||
                dp.at(nz, ny, nx) != level)
              continue;
            visited[idx(nz, ny, nx)] = 1;
            stack.push_back({nz, ny, nx});
          }
        }
        ++m.at(level, size);
      }
  return m;
}

inline std::array<double, 16> glszm_features(const DiscretizedPatch& dp) {
  SizeZoneMatrix m = glszm_counts(dp);

  double n_zones = 0.0;
  const double n_vox = static_cast<double>(dp.size());
  std::vector<double> per_level(static_cast<std::size_t>(m.ng), 0.0);
  std::vector<double> per_size(static_cast<std::size_t>(m.max_size), 0.0);
  for (int g = 1; g <= m.ng; ++g)
    for (std::int64_t s = 1; s <= m.max_size; ++s) {
      double c = static_cast<double>(m.at(g, s));
      if (c == 0.0) continue;
      n_zones += c;
      per_level[static_cast<std::size_t>(g - 1)] += c;
      per_size[static_cast<std::size_t>(s - 1)] += c;
    }

  double sae = 0.0, lae = 0.0, lglze = 0.0, hglze = 0.0, salgle = 0.0,
         sahgle = 0.0, lalgle = 0.0, lahgle = 0.0, mu_g = 0.0, mu_s = 0.0,
         entropy = 0.0;
  for (int g = 1; g <= m.ng; ++g)
    for (std::int64_t s = 1; s <= m.max_size; ++s) {
      double c = static_cast<double>(m.at(g, s));
      if (c == 0.0) continue;
      double g2 = double(g) * g, s2 = double(s) * double(s);
      sae += c / s2;
      lae += c * s2;
      lglze += c / g2;
      hglze += c * g2;
      salgle += c / (g2 * s2);
      sahgle += c * g2 / s2;
      lalgle += c * s2 / g2;
      lahgle += c * g2 * s2;
      double p = c / n_zones;
      mu_g += p * g;
      mu_s += p * static_cast<double>(s);
      entropy -= p * std::log2(p);
    }

  double glv = 0.0, zv = 0.0;
  for (int g = 1; g <= m.ng; ++g)
    for (std::int64_t s = 1; s <= m.max_size; ++s) {
      double c = static_cast<double>(m.at(g, s));
      if (c == 0.0) continue;
      double p = c / n_zones;
      glv += p * (g - mu_g) * (g - mu_g);
      zv += p * (static_cast<double>(s) - mu_s) * (static_cast<double>(s) - mu_s);
    }

  double gln = 0.0;
  for (double c : per_level) gln += c * c;
  double szn = 0.0;
  for (double c : per_size) szn += c * c;

  return {
      sae / n_zones,              // SmallAreaEmphasis
      lae / n_zones,              // LargeAreaEmphasis
      gln / n_zones,              // GrayLevelNonUniformity
      gln / (n_zones * n_zones),  // GrayLevelNonUniformityNormalized
      szn / n_zones,              // SizeZoneNonUniformity
      szn / (n_zones * n_zones),  // SizeZoneNonUniformityNormalized
      n_zones / n_vox,            // ZonePercentage
      glv,                        // GrayLevelVariance
      zv,                         // ZoneVariance
      entropy,                    // ZoneEntropy
      lglze / n_zones,            // LowGrayLevelZoneEmphasis
      hglze / n_zones,            // HighGrayLevelZoneEmphasis
      salgle / n_zones,           // SmallAreaLowGrayLevelEmphasis
      sahgle / n_zones,           // SmallAreaHighGrayLevelEmphasis
      lalgle / n_zones,           // LargeAreaLowGrayLevelEmphasis
      lahgle / n_zones,           // LargeAreaHighGrayLevelEmphasis
  };
}

}  // namespace radfp
