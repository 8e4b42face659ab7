// Independent brute-force constructions and direct-formula evaluators used
// to cross-check the radiomics engine. Everything here is written from the
// matrix/feature definitions, not from the library implementation: GLCM by
// exhaustive voxel-pair enumeration, GLRLM by per-voxel run identification,
// GLSZM by BFS flood fill, NGTDM/GLDM by explicit neighbor loops, and the
// feature formulas evaluated term by term. The only shared component is the
// discretization operator itself, which is the library's definition of the
// gray-level domain.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "radfp/discretize.hpp"
#include "radfp/volume.hpp"

namespace oracle {

using radfp::DiscretizedPatch;
using radfp::Dims;
using radfp::Volume;

// Same canonical direction list as the library documents (13 unique
// distance-1 offsets), restated here.
inline std::vector<std::array<int, 3>> directions13() {
  std::vector<std::array<int, 3>> dirs;
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (dz == 0 && dy == 0 && dx == 0) continue;
        // keep one of each +/- pair: first nonzero component positive
        if (dz > 0 || (dz == 0 && dy > 0) || (dz == 0 && dy == 0 && dx > 0))
          dirs.push_back({dz, dy, dx});
      }
  return dirs;
}

inline bool inside(const Dims& d, int z, int y, int x) {
  return z >= 0 && z < d.d && y >= 0 && y < d.h && x >= 0 && x < d.w;
}

// ---------------------------------------------------------------------
// Matrix constructions
// ---------------------------------------------------------------------

/// GLCM by enumerating every ordered pair of voxels and testing whether
/// their coordinate difference equals the offset.
inline std::vector<std::int64_t> glcm_counts(const DiscretizedPatch& dp,
                                             const std::array<int, 3>& dir) {
  const Dims d = dp.dims;
  const int ng = dp.n_levels;
  std::vector<std::int64_t> counts(static_cast<std::size_t>(ng) * ng, 0);
  for (int z1 = 0; z1 < d.d; ++z1)
    for (int y1 = 0; y1 < d.h; ++y1)
      for (int x1 = 0; x1 < d.w; ++x1)
        for (int z2 = 0; z2 < d.d; ++z2)
          for (int y2 = 0; y2 < d.h; ++y2)
            for (int x2 = 0; x2 < d.w; ++x2) {
              if (z2 - z1 != dir[0] || y2 - y1 != dir[1] || x2 - x1 != dir[2])
                continue;
              int a = dp.at(z1, y1, x1) - 1;
              int b = dp.at(z2, y2, x2) - 1;
              ++counts[static_cast<std::size_t>(a) * ng + b];
              ++counts[static_cast<std::size_t>(b) * ng + a];
            }
  return counts;
}

/// GLRLM by asking, for every voxel, whether it starts a maximal run, and
/// if so how long that run is.
inline std::map<std::pair<int, int>, std::int64_t> glrlm_runs(
    const DiscretizedPatch& dp, const std::array<int, 3>& dir) {
  const Dims d = dp.dims;
  std::map<std::pair<int, int>, std::int64_t> runs;  // (level, length)
  for (int z = 0; z < d.d; ++z)
    for (int y = 0; y < d.h; ++y)
      for (int x = 0; x < d.w; ++x) {
        int level = dp.at(z, y, x);
        // run start: predecessor missing or different level
        int pz = z - dir[0], py = y - dir[1], px = x - dir[2];
        if (inside(d, pz, py, px) && dp.at(pz, py, px) == level) continue;
        int len = 1;
        int cz = z + dir[0], cy = y + dir[1], cx = x + dir[2];
        while (inside(d, cz, cy, cx) && dp.at(cz, cy, cx) == level) {
          ++len;
          cz += dir[0];
          cy += dir[1];
          cx += dir[2];
        }
        ++runs[{level, len}];
      }
  return runs;
}

/// GLSZM zones by BFS flood fill with explicit 26-neighborhood loops.
inline std::map<std::pair<int, std::int64_t>, std::int64_t> glszm_zones(
    const DiscretizedPatch& dp) {
  const Dims d = dp.dims;
  std::vector<char> seen(static_cast<std::size_t>(d.count()), 0);
  auto id = [&](int z, int y, int x) {
    return (static_cast<std::size_t>(z) * d.h + y) * d.w + x;
  };
  std::map<std::pair<int, std::int64_t>, std::int64_t> zones;
  for (int z = 0; z < d.d; ++z)
    for (int y = 0; y < d.h; ++y)
      for (int x = 0; x < d.w; ++x) {
        if (seen[id(z, y, x)]) continue;
        int level = dp.at(z, y, x);
        std::int64_t size = 0;
        std::deque<std::array<int, 3>> queue{{z, y, x}};
        seen[id(z, y, x)] = 1;
        while (!queue.empty()) {
          auto [cz, cy, cx] = queue.front();
          queue.pop_front();
          ++size;
          for (int dz = -1; dz <= 1; ++dz)
            for (int dy = -1; dy <= 1; ++dy)
              for (int dx = -1; dx <= 1; ++dx) {
                if (dz == 0 && dy == 0 && dx == 0) continue;
                int nz = cz + dz, ny = cy + dy, nx = cx + dx;
                if (!inside(d, nz, ny, nx) || seen[id(nz, ny, nx)]) continue;
                if (dp.at(nz, ny, nx) != level) continue;
                seen[id(nz, ny, nx)] = 1;
                queue.push_back({nz, ny, nx});
              }
        }
        ++zones[{level, size}];
      }
  return zones;
}

/// GLDM dependence counts with explicit neighbor loops.
inline std::map<std::pair<int, int>, std::int64_t> gldm_cells(
    const DiscretizedPatch& dp) {
  const Dims d = dp.dims;
  std::map<std::pair<int, int>, std::int64_t> cells;  // (level, dep size)
  for (int z = 0; z < d.d; ++z)
    for (int y = 0; y < d.h; ++y)
      for (int x = 0; x < d.w; ++x) {
        int level = dp.at(z, y, x);
        int dep = 1;
        for (int dz = -1; dz <= 1; ++dz)
          for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
              if (dz == 0 && dy == 0 && dx == 0) continue;
              int nz = z + dz, ny = y + dy, nx = x + dx;
              if (inside(d, nz, ny, nx) && dp.at(nz, ny, nx) == level) ++dep;
            }
        ++cells[{level, dep}];
      }
  return cells;
}

struct NgtdmRow {
  double s = 0.0;
  std::int64_t n = 0;
};

inline std::pair<std::vector<NgtdmRow>, std::int64_t> ngtdm_rows(
    const DiscretizedPatch& dp) {
  const Dims d = dp.dims;
  std::vector<NgtdmRow> rows(static_cast<std::size_t>(dp.n_levels));
  std::int64_t n_valid = 0;
  for (int z = 0; z < d.d; ++z)
    for (int y = 0; y < d.h; ++y)
      for (int x = 0; x < d.w; ++x) {
        double acc = 0.0;
        int cnt = 0;
        for (int dz = -1; dz <= 1; ++dz)
          for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
              if (dz == 0 && dy == 0 && dx == 0) continue;
              int nz = z + dz, ny = y + dy, nx = x + dx;
              if (!inside(d, nz, ny, nx)) continue;
              acc += dp.at(nz, ny, nx);
              ++cnt;
            }
        if (cnt == 0) continue;
        int level = dp.at(z, y, x);
        rows[static_cast<std::size_t>(level - 1)].s +=
            std::abs(level - acc / cnt);
        rows[static_cast<std::size_t>(level - 1)].n += 1;
        ++n_valid;
      }
  return {rows, n_valid};
}

// ---------------------------------------------------------------------
// Direct formula evaluation
// ---------------------------------------------------------------------

inline double lg2(double v) { return std::log2(v); }

inline double pctl(std::vector<double> sorted, double p) {
  // linear interpolation on rank = (n-1) p / 100
  const std::size_t n = sorted.size();
  double rank = (static_cast<double>(n) - 1.0) * p / 100.0;
  auto lo = static_cast<std::size_t>(std::floor(rank));
  if (lo + 1 >= n) return sorted[n - 1];
  return sorted[lo] + (rank - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

inline std::array<double, 19> first_order(const std::vector<double>& vals,
                                          const std::vector<int>& levels,
                                          int ng, double voxel_volume) {
  const double n = static_cast<double>(vals.size());
  std::vector<double> sorted = vals;
  std::sort(sorted.begin(), sorted.end());

  double energy = 0.0;
  for (double v : vals) energy += v * v;
  double mean = 0.0;
  for (double v : vals) mean += v;
  mean /= n;

  double var = 0.0, m3 = 0.0, m4 = 0.0, mad = 0.0;
  for (double v : vals) {
    var += std::pow(v - mean, 2.0);
    m3 += std::pow(v - mean, 3.0);
    m4 += std::pow(v - mean, 4.0);
    mad += std::abs(v - mean);
  }
  var /= n;
  m3 /= n;
  m4 /= n;
  mad /= n;

  double p10 = pctl(sorted, 10), p90 = pctl(sorted, 90);
  std::vector<double> band;
  for (double v : vals)
    if (v >= p10 && v <= p90) band.push_back(v);
  double rmad = 0.0;
  if (!band.empty()) {
    double bm = 0.0;
    for (double v : band) bm += v;
    bm /= static_cast<double>(band.size());
    for (double v : band) rmad += std::abs(v - bm);
    rmad /= static_cast<double>(band.size());
  }

  std::vector<double> hist(static_cast<std::size_t>(ng), 0.0);
  for (int lev : levels) hist[static_cast<std::size_t>(lev - 1)] += 1.0 / n;
  double entropy = 0.0, uniformity = 0.0;
  for (double p : hist) {
    if (p > 0.0) entropy -= p * lg2(p);
    uniformity += p * p;
  }

  return {energy,
          voxel_volume * energy,
          entropy,
          sorted.front(),
          p10,
          p90,
          sorted.back(),
          mean,
          pctl(sorted, 50),
          pctl(sorted, 75) - pctl(sorted, 25),
          sorted.back() - sorted.front(),
          mad,
          rmad,
          std::sqrt(energy / n),
          std::sqrt(var),
          var > 0.0 ? (m3 / n * n) / std::pow(var, 1.5) * (n / n) : 0.0,
          var > 0.0 ? m4 / (var * var) : 0.0,
          var,
          uniformity};
}

/// Otsu mask restated from the definition: 128 equal-width bins over
/// [min, max]; choose the split maximizing the between-class variance of
/// the level histogram (smallest split on ties); foreground = level above
/// the split; constant or unsplittable patches use the full mask.
inline std::vector<std::uint8_t> otsu_mask(const Volume& patch) {
  const int bins = 128;
  auto [mn_it, mx_it] =
      std::minmax_element(patch.voxels.begin(), patch.voxels.end());
  double mn = *mn_it, mx = *mx_it;
  std::vector<std::uint8_t> mask(patch.voxels.size(), 1);
  if (mx == mn) return mask;

  std::vector<int> lev(patch.voxels.size());
  double width = (mx - mn) / bins;
  for (std::size_t i = 0; i < patch.voxels.size(); ++i) {
    int b = 1 + static_cast<int>((patch.voxels[i] - mn) / width);
    lev[i] = std::min(bins, std::max(1, b));
  }

  double best = -1.0;
  int best_s = 0;
  const double n = static_cast<double>(lev.size());
  for (int s = 1; s < bins; ++s) {
    double w0 = 0.0, sum0 = 0.0, w1 = 0.0, sum1 = 0.0;
    for (int l : lev) {
      if (l <= s) {
        w0 += 1.0;
        sum0 += l;
      } else {
        w1 += 1.0;
        sum1 += l;
      }
    }
    if (w0 == 0.0 || w1 == 0.0) continue;
    double mu0 = sum0 / w0, mu1 = sum1 / w1;
    double between = (w0 / n) * (w1 / n) * (mu0 - mu1) * (mu0 - mu1);
    // compare on the unnormalized scale the library uses
    double score = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
    (void)between;
    if (score > best) {
      best = score;
      best_s = s;
    }
  }
  if (best_s == 0) return mask;
  for (std::size_t i = 0; i < lev.size(); ++i)
    mask[i] = lev[i] > best_s ? 1 : 0;
  return mask;
}

inline std::array<double, 16> shape(const Volume& patch,
                                    const std::vector<std::uint8_t>& mask) {
  const Dims d = patch.dims;
  const double sd = patch.spacing[0], sh = patch.spacing[1],
               sw = patch.spacing[2];
  auto at_mask = [&](int z, int y, int x) {
    return inside(d, z, y, x) &&
           mask[(static_cast<std::size_t>(z) * d.h + y) * d.w + x];
  };

  std::vector<std::array<int, 3>> fg;
  for (int z = 0; z < d.d; ++z)
    for (int y = 0; y < d.h; ++y)
      for (int x = 0; x < d.w; ++x)
        if (at_mask(z, y, x)) fg.push_back({z, y, x});

  const double nv = static_cast<double>(fg.size());
  const double volume = nv * sd * sh * sw;

  double area = 0.0;
  for (auto [z, y, x] : fg) {
    if (!at_mask(z - 1, y, x)) area += sh * sw;
    if (!at_mask(z + 1, y, x)) area += sh * sw;
    if (!at_mask(z, y - 1, x)) area += sd * sw;
    if (!at_mask(z, y + 1, x)) area += sd * sw;
    if (!at_mask(z, y, x - 1)) area += sd * sh;
    if (!at_mask(z, y, x + 1)) area += sd * sh;
  }

  // all-pairs diameters over every foreground voxel
  double d3 = 0.0, dslice = 0.0, dcol = 0.0, drow = 0.0;
  for (std::size_t a = 0; a < fg.size(); ++a)
    for (std::size_t b = a + 1; b < fg.size(); ++b) {
      double dz = (fg[a][0] - fg[b][0]) * sd;
      double dy = (fg[a][1] - fg[b][1]) * sh;
      double dx = (fg[a][2] - fg[b][2]) * sw;
      d3 = std::max(d3, dz * dz + dy * dy + dx * dx);
      if (fg[a][0] == fg[b][0]) dslice = std::max(dslice, dy * dy + dx * dx);
      if (fg[a][2] == fg[b][2]) dcol = std::max(dcol, dz * dz + dy * dy);
      if (fg[a][1] == fg[b][1]) drow = std::max(drow, dz * dz + dx * dx);
    }

  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (auto [z, y, x] : fg) mean += Eigen::Vector3d(z * sd, y * sh, x * sw);
  mean /= nv;
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (auto [z, y, x] : fg) {
    Eigen::Vector3d v = Eigen::Vector3d(z * sd, y * sh, x * sw) - mean;
    cov += v * v.transpose();
  }
  cov /= nv;
  Eigen::EigenSolver<Eigen::Matrix3d> es(cov);
  std::array<double, 3> lam{es.eigenvalues()[0].real(),
                            es.eigenvalues()[1].real(),
                            es.eigenvalues()[2].real()};
  std::sort(lam.begin(), lam.end());
  for (double& l : lam) l = std::max(0.0, l);

  const double pi = 3.14159265358979323846;
  const double sphere_area = std::cbrt(36.0 * pi * volume * volume);

  return {volume,
          area,
          area / volume,
          sphere_area / area,
          volume / (std::sqrt(pi) * std::pow(area, 1.5)),
          36.0 * pi * volume * volume / std::pow(area, 3.0),
          area / sphere_area,
          std::sqrt(d3),
          std::sqrt(dslice),
          std::sqrt(dcol),
          std::sqrt(drow),
          4.0 * std::sqrt(lam[2]),
          4.0 * std::sqrt(lam[1]),
          4.0 * std::sqrt(lam[0]),
          lam[2] > 0.0 ? std::sqrt(lam[1] / lam[2]) : 1.0,
          lam[2] > 0.0 ? std::sqrt(lam[0] / lam[2]) : 1.0};
}

inline std::array<double, 24> glcm_features_one(
    const std::vector<std::int64_t>& counts, int ng) {
  std::int64_t total = 0;
  for (auto c : counts) total += c;
  std::vector<double> p(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i)
    p[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
  auto P = [&](int i, int j) {
    return p[static_cast<std::size_t>(i - 1) * ng + (j - 1)];
  };

  std::vector<double> px(static_cast<std::size_t>(ng) + 1, 0.0),
      py(static_cast<std::size_t>(ng) + 1, 0.0);
  for (int i = 1; i <= ng; ++i)
    for (int j = 1; j <= ng; ++j) {
      px[static_cast<std::size_t>(i)] += P(i, j);
      py[static_cast<std::size_t>(j)] += P(i, j);
    }

  double mux = 0.0, muy = 0.0;
  for (int i = 1; i <= ng; ++i) {
    mux += i * px[static_cast<std::size_t>(i)];
    muy += i * py[static_cast<std::size_t>(i)];
  }
  double sx = 0.0, sy = 0.0, hx = 0.0, hy = 0.0;
  for (int i = 1; i <= ng; ++i) {
    sx += (i - mux) * (i - mux) * px[static_cast<std::size_t>(i)];
    sy += (i - muy) * (i - muy) * py[static_cast<std::size_t>(i)];
    if (px[static_cast<std::size_t>(i)] > 0)
      hx -= px[static_cast<std::size_t>(i)] * lg2(px[static_cast<std::size_t>(i)]);
    if (py[static_cast<std::size_t>(i)] > 0)
      hy -= py[static_cast<std::size_t>(i)] * lg2(py[static_cast<std::size_t>(i)]);
  }

  double f_autoc = 0, f_javg = mux, f_prom = 0, f_shade = 0, f_tend = 0,
         f_contrast = 0, f_energy = 0, f_entropy = 0, f_idm = 0, f_idmn = 0,
         f_id = 0, f_idn = 0, f_iv = 0, f_maxp = 0, f_ss = 0;
  double hxy1 = 0, hxy2 = 0, corr_acc = 0;
  for (int i = 1; i <= ng; ++i)
    for (int j = 1; j <= ng; ++j) {
      double v = P(i, j);
      f_autoc += i * j * v;
      f_prom += std::pow(i + j - mux - muy, 4.0) * v;
      f_shade += std::pow(i + j - mux - muy, 3.0) * v;
      f_tend += std::pow(i + j - mux - muy, 2.0) * v;
      f_contrast += (i - j) * (i - j) * v;
      f_energy += v * v;
      f_idm += v / (1.0 + (i - j) * (i - j));
      f_idmn += v / (1.0 + std::pow(static_cast<double>(i - j) / ng, 2.0));
      f_id += v / (1.0 + std::abs(i - j));
      f_idn += v / (1.0 + std::abs(i - j) / static_cast<double>(ng));
      if (i != j) f_iv += v / ((i - j) * (i - j));
      f_maxp = std::max(f_maxp, v);
      f_ss += (i - mux) * (i - mux) * v;
      corr_acc += i * j * v;
      if (v > 0) {
        f_entropy -= v * lg2(v);
        hxy1 -= v * lg2(px[static_cast<std::size_t>(i)] *
                        py[static_cast<std::size_t>(j)]);
      }
      double q = px[static_cast<std::size_t>(i)] * py[static_cast<std::size_t>(j)];
      if (q > 0) hxy2 -= q * lg2(q);
    }

  double f_corr =
      (sx > 0 && sy > 0) ? (corr_acc - mux * muy) / std::sqrt(sx * sy) : 1.0;

  double f_davg = 0, f_dent = 0, f_dvar = 0;
  for (int k = 0; k <= ng - 1; ++k) {
    double pk = 0;
    for (int i = 1; i <= ng; ++i)
      for (int j = 1; j <= ng; ++j)
        if (std::abs(i - j) == k) pk += P(i, j);
    f_davg += k * pk;
    if (pk > 0) f_dent -= pk * lg2(pk);
  }
  for (int k = 0; k <= ng - 1; ++k) {
    double pk = 0;
    for (int i = 1; i <= ng; ++i)
      for (int j = 1; j <= ng; ++j)
        if (std::abs(i - j) == k) pk += P(i, j);
    f_dvar += (k - f_davg) * (k - f_davg) * pk;
  }

  double f_savg = 0, f_sent = 0;
  for (int k = 2; k <= 2 * ng; ++k) {
    double pk = 0;
    for (int i = 1; i <= ng; ++i)
      for (int j = 1; j <= ng; ++j)
        if (i + j == k) pk += P(i, j);
    f_savg += k * pk;
    if (pk > 0) f_sent -= pk * lg2(pk);
  }

  double hmax = std::max(hx, hy);
  double f_imc1 = hmax > 0 ? (f_entropy - hxy1) / hmax : 0.0;
  double f_imc2 = std::sqrt(
      std::max(0.0, 1.0 - std::exp(-2.0 * std::max(0.0, hxy2 - f_entropy))));

  // MCC via the general eigen problem on Q directly.
  double f_mcc = 1.0;
  {
    std::vector<int> occ;
    for (int i = 1; i <= ng; ++i)
      if (px[static_cast<std::size_t>(i)] > 0) occ.push_back(i);
    if (occ.size() >= 2) {
      const int m = static_cast<int>(occ.size());
      Eigen::MatrixXd Q(m, m);
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
          double acc = 0.0;
          for (int kk = 0; kk < m; ++kk)
            acc += P(occ[static_cast<std::size_t>(a)], occ[static_cast<std::size_t>(kk)]) *
                   P(occ[static_cast<std::size_t>(b)], occ[static_cast<std::size_t>(kk)]) /
                   (px[static_cast<std::size_t>(occ[static_cast<std::size_t>(a)])] *
                    py[static_cast<std::size_t>(occ[static_cast<std::size_t>(kk)])]);
          Q(a, b) = acc;
        }
      Eigen::EigenSolver<Eigen::MatrixXd> es(Q);
      std::vector<double> eigs;
      for (int a = 0; a < m; ++a) eigs.push_back(es.eigenvalues()[a].real());
      std::sort(eigs.begin(), eigs.end(), std::greater<>());
      f_mcc = std::sqrt(std::max(0.0, eigs[1]));
    }
  }

  return {f_autoc, f_javg, f_prom,  f_shade, f_tend, f_contrast,
          f_corr,  f_davg, f_dent,  f_dvar,  f_energy, f_entropy,
          f_imc1,  f_imc2, f_idm,   f_idmn,  f_id,     f_idn,
          f_iv,    f_maxp, f_savg,  f_sent,  f_ss,     f_mcc};
}

inline std::array<double, 24> glcm_features(const DiscretizedPatch& dp) {
  std::array<double, 24> acc{};
  int valid = 0;
  for (const auto& dir : directions13()) {
    auto counts = glcm_counts(dp, dir);
    std::int64_t total = 0;
    for (auto c : counts) total += c;
    if (total == 0) continue;
    auto f = glcm_features_one(counts, dp.n_levels);
    for (std::size_t i = 0; i < f.size(); ++i) acc[i] += f[i];
    ++valid;
  }
  for (double& v : acc) v /= valid;
  return acc;
}

template <typename MapT>
inline std::array<double, 16> size_distribution_features16(const MapT& cells,
                                                           double n_vox) {
  // shared 16-feature pattern of GLRLM (level, length) / GLSZM (level, size)
  double nr = 0.0;
  std::map<int, double> by_level;
  std::map<std::int64_t, double> by_size;
  for (const auto& [key, c] : cells) {
    nr += static_cast<double>(c);
    by_level[static_cast<int>(key.first)] += static_cast<double>(c);
    by_size[static_cast<std::int64_t>(key.second)] += static_cast<double>(c);
  }

  double sre = 0, lre = 0, lgl = 0, hgl = 0, srl = 0, srh = 0, lrl = 0,
         lrh = 0, mug = 0, mus = 0, ent = 0;
  for (const auto& [key, c] : cells) {
    double g = static_cast<double>(key.first);
    double s = static_cast<double>(key.second);
    double cc = static_cast<double>(c);
    sre += cc / (s * s);
    lre += cc * s * s;
    lgl += cc / (g * g);
    hgl += cc * g * g;
    srl += cc / (g * g * s * s);
    srh += cc * g * g / (s * s);
    lrl += cc * s * s / (g * g);
    lrh += cc * g * g * s * s;
    mug += cc / nr * g;
    mus += cc / nr * s;
    ent -= cc / nr * lg2(cc / nr);
  }
  double glv = 0, sv = 0;
  for (const auto& [key, c] : cells) {
    double g = static_cast<double>(key.first);
    double s = static_cast<double>(key.second);
    double pr = static_cast<double>(c) / nr;
    glv += pr * (g - mug) * (g - mug);
    sv += pr * (s - mus) * (s - mus);
  }
  double gln = 0;
  for (const auto& [g, c] : by_level) gln += c * c;
  double sn = 0;
  for (const auto& [s, c] : by_size) sn += c * c;

  return {sre / nr, lre / nr, gln / nr, gln / (nr * nr),
          sn / nr,  sn / (nr * nr), nr / n_vox, glv,
          sv,       ent,     lgl / nr, hgl / nr,
          srl / nr, srh / nr, lrl / nr, lrh / nr};
}

inline std::array<double, 16> glrlm_features(const DiscretizedPatch& dp) {
  std::array<double, 16> acc{};
  auto dirs = directions13();
  for (const auto& dir : dirs) {
    auto f = size_distribution_features16(glrlm_runs(dp, dir),
                                          static_cast<double>(dp.size()));
    for (std::size_t i = 0; i < f.size(); ++i) acc[i] += f[i];
  }
  for (double& v : acc) v /= static_cast<double>(dirs.size());
  return acc;
}

inline std::array<double, 16> glszm_features(const DiscretizedPatch& dp) {
  return size_distribution_features16(glszm_zones(dp),
                                      static_cast<double>(dp.size()));
}

inline std::array<double, 5> ngtdm_features(const DiscretizedPatch& dp) {
  auto [rows, n_valid] = ngtdm_rows(dp);
  if (n_valid == 0) return {1e6, 0, 0, 0, 0};
  const double nv = static_cast<double>(n_valid);
  const int ng = dp.n_levels;

  double sum_ps = 0, sum_s = 0;
  int present = 0;
  for (int i = 1; i <= ng; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i - 1)];
    sum_ps += (static_cast<double>(r.n) / nv) * r.s;
    sum_s += r.s;
    if (r.n > 0) ++present;
  }
  double coarse = sum_ps > 0 ? std::min(1e6, 1.0 / sum_ps) : 1e6;

  double contrast = 0, busy_den = 0, complexity = 0, strength = 0;
  for (int i = 1; i <= ng; ++i) {
    double pi = static_cast<double>(rows[static_cast<std::size_t>(i - 1)].n) / nv;
    if (pi == 0) continue;
    double si = rows[static_cast<std::size_t>(i - 1)].s;
    for (int j = 1; j <= ng; ++j) {
      double pj = static_cast<double>(rows[static_cast<std::size_t>(j - 1)].n) / nv;
      if (pj == 0) continue;
      double sj = rows[static_cast<std::size_t>(j - 1)].s;
      contrast += pi * pj * (i - j) * (i - j);
      if (i != j) {
        busy_den += std::abs(i * pi - j * pj);
        complexity += std::abs(i - j) * (pi * si + pj * sj) / (pi + pj);
        strength += (pi + pj) * (i - j) * (i - j);
      }
    }
  }
  contrast = present > 1
                 ? contrast / (static_cast<double>(present) * (present - 1)) *
                       (sum_s / nv)
                 : 0.0;
  return {coarse, contrast, busy_den > 0 ? sum_ps / busy_den : 0.0,
          complexity / nv, sum_s > 0 ? strength / sum_s : 0.0};
}

inline std::array<double, 14> gldm_features(const DiscretizedPatch& dp) {
  auto cells = gldm_cells(dp);
  double nz = 0;
  std::map<int, double> by_level;
  std::map<int, double> by_dep;
  for (const auto& [key, c] : cells) {
    nz += static_cast<double>(c);
    by_level[key.first] += static_cast<double>(c);
    by_dep[key.second] += static_cast<double>(c);
  }

  double sde = 0, lde = 0, lgl = 0, hgl = 0, sdl = 0, sdh = 0, ldl = 0,
         ldh = 0, mug = 0, muj = 0, ent = 0;
  for (const auto& [key, c] : cells) {
    double g = key.first, j = key.second, cc = static_cast<double>(c);
    sde += cc / (j * j);
    lde += cc * j * j;
    lgl += cc / (g * g);
    hgl += cc * g * g;
    sdl += cc / (g * g * j * j);
    sdh += cc * g * g / (j * j);
    ldl += cc * j * j / (g * g);
    ldh += cc * g * g * j * j;
    mug += cc / nz * g;
    muj += cc / nz * j;
    ent -= cc / nz * lg2(cc / nz);
  }
  double glv = 0, dv = 0;
  for (const auto& [key, c] : cells) {
    double g = key.first, j = key.second, pr = static_cast<double>(c) / nz;
    glv += pr * (g - mug) * (g - mug);
    dv += pr * (j - muj) * (j - muj);
  }
  double gln = 0, dn = 0;
  for (const auto& [g, c] : by_level) gln += c * c;
  for (const auto& [j, c] : by_dep) dn += c * c;

  return {sde / nz, lde / nz, gln / nz, dn / nz, dn / (nz * nz),
          glv,      dv,       ent,      lgl / nz, hgl / nz,
          sdl / nz, sdh / nz, ldl / nz, ldh / nz};
}

/// All 110 features, assembled in catalog order from the oracle routes.
inline std::vector<double> patch_features(const Volume& patch, int n_bins) {
  DiscretizedPatch dp = radfp::discretize(patch, n_bins);
  auto fo = first_order(patch.voxels, dp.levels, dp.n_levels,
                        patch.spacing[0] * patch.spacing[1] * patch.spacing[2]);
  auto sh = shape(patch, otsu_mask(patch));
  auto g1 = glcm_features(dp);
  auto g2 = glrlm_features(dp);
  auto g3 = glszm_features(dp);
  auto g4 = ngtdm_features(dp);
  auto g5 = gldm_features(dp);

  std::vector<double> out;
  out.insert(out.end(), fo.begin(), fo.end());
  out.insert(out.end(), sh.begin(), sh.end());
  out.insert(out.end(), g1.begin(), g1.end());
  out.insert(out.end(), g2.begin(), g2.end());
  out.insert(out.end(), g3.begin(), g3.end());
  out.insert(out.end(), g4.begin(), g4.end());
  out.insert(out.end(), g5.begin(), g5.end());
  return out;
}

/// |a - b| <= atol + rtol * max(|a|, |b|); the small absolute floor absorbs
/// summation-order noise on values that are mathematically zero.
inline bool near(double a, double b, double rtol = 1e-9,
                 double atol = 1e-12) {
  return std::abs(a - b) <= atol + rtol * std::max(std::abs(a), std::abs(b));
}

}  // namespace oracle
