#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "radfp/discretize.hpp"
#include "radfp/error.hpp"
#include "radfp/volume.hpp"

namespace radfp {

using ShapeMask = std::vector<std::uint8_t>;  // 1 = foreground, Volume layout

/// Foreground mask via Otsu's threshold on a 128-bin min-max histogram.
/// A (near-)constant patch, where no split separates two non-empty
/// classes, falls back to the full-patch mask.
inline ShapeMask otsu_mask(const Volume& patch) {
  constexpr int kBins = 128;
  DiscretizedPatch dp = discretize(patch, kBins);
  const std::size_t n = dp.levels.size();

  ShapeMask mask(n, 1);
  if (dp.n_levels == 1) return mask;

  std::array<std::int64_t, kBins + 1> count{};
  for (int lev : dp.levels) ++count[static_cast<std::size_t>(lev)];

  double sum_all = 0.0;
  for (int lev = 1; lev <= kBins; ++lev) sum_all += double(lev) * count[lev];

  // Maximize between-class variance over splits s: background = level <= s.
  int best_split = 0;
  double best_var = -1.0;
  std::int64_t wb = 0;
  double sum_b = 0.0;
  for (int s = 1; s < kBins; ++s) {
    wb += count[s];
    sum_b += double(s) * count[s];
    if (wb == 0) continue;
    std::int64_t wf = static_cast<std::int64_t>(n) - wb;
    if (wf == 0) break;
    double mu_b = sum_b / wb;
    double mu_f = (sum_all - sum_b) / wf;
    double var = double(wb) * double(wf) * (mu_b - mu_f) * (mu_b - mu_f);
    if (var > best_var) {
      best_var = var;
      best_split = s;
    }
  }
  if (best_split == 0) return mask;  // no valid split

  for (std::size_t i = 0; i < n; ++i)
    mask[i] = dp.levels[i] > best_split ? 1 : 0;
  return mask;
}

/// The 16 3-D shape descriptors, in catalog order. Surface area counts
/// exposed voxel faces; axis lengths come from the eigenvalues of the
/// foreground voxel-center covariance; diameters are center-to-center.
inline std::array<double, 16> shape_features(const Volume& patch,
                                             const ShapeMask& mask) {
  const Dims d = patch.dims;
  if (static_cast<std::int64_t>(mask.size()) != d.count())
    throw invalid_argument("shape mask size does not match patch dims");
  const double sd = patch.spacing[0], sh = patch.spacing[1],
               sw = patch.spacing[2];

  auto fg = [&](int z, int y, int x) {
    return in_bounds(d, z, y, x) &&
           mask[(static_cast<std::size_t>(z) * d.h + y) * d.w + x] != 0;
  };

  std::int64_t n_fg = 0;
  double area = 0.0;
  std::vector<std::array<double, 3>> centers;   // physical coords, all fg
  std::vector<std::array<int, 3>> surface;      // voxel coords, exposed fg
  for (int z = 0; z < d.d; ++z)
    for (int y = 0; y < d.h; ++y)
      for (int x = 0; x < d.w; ++x) {
        if (!fg(z, y, x)) continue;
        ++n_fg;
        centers.push_back({z * sd, y * sh, x * sw});
        double exposed = 0.0;
        if (!fg(z - 1, y, x)) exposed += sh * sw;
        if (!fg(z + 1, y, x)) exposed += sh * sw;
        if (!fg(z, y - 1, x)) exposed += sd * sw;
        if (!fg(z, y + 1, x)) exposed += sd * sw;
        if (!fg(z, y, x - 1)) exposed += sd * sh;
        if (!fg(z, y, x + 1)) exposed += sd * sh;
        if (exposed > 0.0) surface.push_back({z, y, x});
        area += exposed;
      }
  if (n_fg == 0) throw invalid_argument("empty shape mask");

  const double volume = static_cast<double>(n_fg) * sd * sh * sw;

  // Diameter endpoints are always exposed voxels, so the pairwise scans
  // can run on the surface subset.
  double max3d = 0.0, max_slice = 0.0, max_col = 0.0, max_row = 0.0;
  for (std::size_t a = 0; a < surface.size(); ++a) {
    for (std::size_t b = a + 1; b < surface.size(); ++b) {
      double dz = (surface[a][0] - surface[b][0]) * sd;
      double dy = (surface[a][1] - surface[b][1]) * sh;
      double dx = (surface[a][2] - surface[b][2]) * sw;
      double dist2 = dz * dz + dy * dy + dx * dx;
      max3d = std::max(max3d, dist2);
      if (surface[a][0] == surface[b][0])
        max_slice = std::max(max_slice, dy * dy + dx * dx);
      if (surface[a][2] == surface[b][2])
        max_col = std::max(max_col, dz * dz + dy * dy);
      if (surface[a][1] == surface[b][1])
        max_row = std::max(max_row, dz * dz + dx * dx);
    }
  }
  max3d = std::sqrt(max3d);
  max_slice = std::sqrt(max_slice);
  max_col = std::sqrt(max_col);
  max_row = std::sqrt(max_row);

  // Principal axes from the population covariance of the centers.
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& c : centers) mean += Eigen::Vector3d(c[0], c[1], c[2]);
  mean /= static_cast<double>(n_fg);
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& c : centers) {
    Eigen::Vector3d v = Eigen::Vector3d(c[0], c[1], c[2]) - mean;
    cov += v * v.transpose();
  }
  cov /= static_cast<double>(n_fg);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  double l_least = std::max(0.0, es.eigenvalues()[0]);
  double l_minor = std::max(0.0, es.eigenvalues()[1]);
  double l_major = std::max(0.0, es.eigenvalues()[2]);

  const double major_len = 4.0 * std::sqrt(l_major);
  const double minor_len = 4.0 * std::sqrt(l_minor);
  const double least_len = 4.0 * std::sqrt(l_least);
  // A single voxel has no preferred axis; treat it as isotropic.
  const double elongation = l_major > 0.0 ? std::sqrt(l_minor / l_major) : 1.0;
  const double flatness = l_major > 0.0 ? std::sqrt(l_least / l_major) : 1.0;

  const double pi = 3.14159265358979323846;
  const double sphere_area = std::cbrt(36.0 * pi * volume * volume);

  return {
      volume,                                        // VoxelVolume
      area,                                          // SurfaceArea
      area / volume,                                 // SurfaceVolumeRatio
      sphere_area / area,                            // Sphericity
      volume / (std::sqrt(pi) * std::pow(area, 1.5)),  // Compactness1
      36.0 * pi * volume * volume / (area * area * area),  // Compactness2
      area / sphere_area,                            // SphericalDisproportion
      max3d,                                         // Maximum3DDiameter
      max_slice,                                     // Maximum2DDiameterSlice
      max_col,                                       // Maximum2DDiameterColumn
      max_row,                                       // Maximum2DDiameterRow
      major_len,                                     // MajorAxisLength
      minor_len,                                     // MinorAxisLength
      least_len,                                     // LeastAxisLength
      elongation,                                    // Elongation
      flatness,                                      // Flatness
  };
}

}  // namespace radfp
