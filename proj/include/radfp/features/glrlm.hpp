#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "radfp/discretize.hpp"

namespace radfp {

/// Gray level run length matrix for one direction: counts[g][l-1] = number
/// of maximal runs of level g with length l along lines in that direction.
struct RunLengthMatrix {
  int ng = 0;
  int max_len = 0;
  std::vector<std::int64_t> counts;

  std::int64_t& at(int g, int len) {
    return counts[static_cast<std::size_t>(g - 1) * max_len + (len - 1)];
  }
  std::int64_t at(int g, int len) const {
    return counts[static_cast<std::size_t>(g - 1) * max_len + (len - 1)];
  }
};

inline RunLengthMatrix glrlm_counts(const DiscretizedPatch& dp,
                                    const std::array<int, 3>& dir) {
  const Dims d = dp.dims;
  RunLengthMatrix m;
  m.ng = dp.n_levels;
  m.max_len = std::max(d.d, std::max(d.h, d.w));
  m.counts.assign(static_cast<std::size_t>(m.ng) * m.max_len, 0);

  // Walk each line from its entry voxel (where stepping backwards leaves
  // the patch) and split it into maximal equal-level runs.
  for (int z = 0; z < d.d; ++z)
    for (int y = 0; y < d.h; ++y)
      for (int x = 0; x < d.w; ++x) {
        if (in_bounds(d, z - dir[0], y - dir[1], x - dir[2])) continue;
        int cz = z, cy = y, cx = x;
        int level = dp.at(cz, cy, cx);
        int run = 1;
        while (in_bounds(d, cz + dir[0], cy + dir[1], cx + dir[2])) {
          cz += dir[0];
          cy += dir[1];
          cx += dir[2];
          int next = dp.at(cz, cy, cx);
          if (next == level) {
            ++run;
          } else {
            ++m.at(level, run);
            level = next;
            run = 1;
          }
        }
        ++m.at(level, run);
      }
  return m;
}

namespace detail {

inline std::array<double, 16> glrlm_features_from_matrix(
    const RunLengthMatrix& m) {
  double n_runs = 0.0, n_vox = 0.0;
  std::vector<double> per_level(static_cast<std::size_t>(m.ng), 0.0);
  std::vector<double> per_len(static_cast<std::size_t>(m.max_len), 0.0);
  for (int g = 1; g <= m.ng; ++g)
    for (int l = 1; l <= m.max_len; ++l) {
      double c = static_cast<double>(m.at(g, l));
      if (c == 0.0) continue;
      n_runs += c;
      n_vox += c * l;
      per_level[static_cast<std::size_t>(g - 1)] += c;
      per_len[static_cast<std::size_t>(l - 1)] += c;
    }

  double sre = 0.0, lre = 0.0, lglre = 0.0, hglre = 0.0, srlgle = 0.0,
         srhgle = 0.0, lrlgle = 0.0, lrhgle = 0.0, mu_g = 0.0, mu_l = 0.0,
         entropy = 0.0;
  for (int g = 1; g <= m.ng; ++g)
    for (int l = 1; l <= m.max_len; ++l) {
      double c = static_cast<double>(m.at(g, l));
      if (c == 0.0) continue;
      double g2 = double(g) * g, l2 = double(l) * l;
      sre += c / l2;
      lre += c * l2;
      lglre += c / g2;
      hglre += c * g2;
      srlgle += c / (g2 * l2);
      srhgle += c * g2 / l2;
      lrlgle += c * l2 / g2;
      lrhgle += c * g2 * l2;
      double p = c / n_runs;
      mu_g += p * g;
      mu_l += p * l;
      entropy -= p * std::log2(p);
    }

  double glv = 0.0, rv = 0.0;
  for (int g = 1; g <= m.ng; ++g)
    for (int l = 1; l <= m.max_len; ++l) {
      double c = static_cast<double>(m.at(g, l));
      if (c == 0.0) continue;
      double p = c / n_runs;
      glv += p * (g - mu_g) * (g - mu_g);
      rv += p * (l - mu_l) * (l - mu_l);
    }

  double gln = 0.0;
  for (double c : per_level) gln += c * c;
  double rln = 0.0;
  for (double c : per_len) rln += c * c;

  return {
      sre / n_runs,            // ShortRunEmphasis
      lre / n_runs,            // LongRunEmphasis
      gln / n_runs,            // GrayLevelNonUniformity
      gln / (n_runs * n_runs),  // GrayLevelNonUniformityNormalized
      rln / n_runs,            // RunLengthNonUniformity
      rln / (n_runs * n_runs),  // RunLengthNonUniformityNormalized
      n_runs / n_vox,          // RunPercentage
      glv,                     // GrayLevelVariance
      rv,                      // RunVariance
      entropy,                 // RunEntropy
      lglre / n_runs,          // LowGrayLevelRunEmphasis
      hglre / n_runs,          // HighGrayLevelRunEmphasis
      srlgle / n_runs,         // ShortRunLowGrayLevelEmphasis
      srhgle / n_runs,         // ShortRunHighGrayLevelEmphasis
      lrlgle / n_runs,         // LongRunLowGrayLevelEmphasis
      lrhgle / n_runs,         // LongRunHighGrayLevelEmphasis
  };
}

}  // namespace detail

/// GLRLM features averaged over the 13 directions. A non-empty patch has
/// at least one run in every direction.
inline std::array<double, 16> glrlm_features(const DiscretizedPatch& dp) {
  std::array<double, 16> acc{};
  const auto& dirs = texture_directions();
  for (const auto& dir : dirs) {
    auto f = detail::glrlm_features_from_matrix(glrlm_counts(dp, dir));
    for (std::size_t i = 0; i < f.size(); ++i) acc[i] += f[i];
  }
  for (double& v : acc) v /= static_cast<double>(dirs.size());
  return acc;
}

}  // namespace radfp
