#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "radfp/error.hpp"
#include "radfp/rng.hpp"
#include "radfp/study.hpp"
#include "radfp/volume.hpp"

namespace radfp {

enum class LesionKind { IntensityShift, TextureRoughening, Mixed };

inline const char* lesion_kind_name(LesionKind k) {
  switch (k) {
    case LesionKind::IntensityShift: return "intensity-shift";
    case LesionKind::TextureRoughening: return "texture-roughening";
    case LesionKind::Mixed: return "mixed";
  }
  return "?";
}

inline LesionKind lesion_kind_from_name(const std::string& s) {
  if (s == "intensity-shift") return LesionKind::IntensityShift;
  if (s == "texture-roughening") return LesionKind::TextureRoughening;
  if (s == "mixed") return LesionKind::Mixed;
  throw invalid_argument("unknown lesion kind: " + s);
}

struct PhantomConfig {
  int n_studies = 40;
  Dims dims{16, 48, 48};
  RoiSpec roi = RoiSpec::fractional(0.5, 0.3, 0.5);
  PatchGrid grid{2, 2, 2};
  int lesion_patch = 0;  // flat patch index in the grid, view-agnostic
  LesionKind kind = LesionKind::IntensityShift;
  double effect_size = 3.0;  // in units of the background sigma (1.0)
  double label_noise = 0.0;
  std::uint64_t seed = 0;
};

struct LesionGroundTruth {
  int lesion_patch = 0;
  LesionKind kind = LesionKind::IntensityShift;
  double effect_size = 0.0;
};

namespace detail {

/// Separable box smoothing, radius 2: per axis, each sample becomes the
/// arithmetic mean of the in-bounds window [-2, +2], applied along depth,
/// then height, then width.
inline void box_smooth_r2(Volume& v) {
  constexpr int r = 2;
  Volume tmp(v.dims);
  auto pass = [&](const Volume& src, Volume& dst, int axis) {
    const Dims d = src.dims;
    for (int z = 0; z < d.d; ++z)
      for (int y = 0; y < d.h; ++y)
        for (int x = 0; x < d.w; ++x) {
          double acc = 0.0;
          int cnt = 0;
          for (int o = -r; o <= r; ++o) {
            int zz = z + (axis == 0 ? o : 0);
            int yy = y + (axis == 1 ? o : 0);
            int xx = x + (axis == 2 ? o : 0);
            if (!in_bounds(d, zz, yy, xx)) continue;
            acc += src.at(zz, yy, xx);
            ++cnt;
          }
          dst.at(z, y, x) = acc / cnt;
        }
  };
  pass(v, tmp, 0);
  pass(tmp, v, 1);
  pass(v, tmp, 2);
  v.voxels = tmp.voxels;
}

inline void fill_white_noise(Volume& v, Rng& rng) {
  for (double& x : v.voxels) x = rng.normal();
}

inline void normalize_unit(Volume& v) {
  double mean = 0.0;
  for (double x : v.voxels) mean += x;
  mean /= static_cast<double>(v.voxels.size());
  double var = 0.0;
  for (double x : v.voxels) var += (x - mean) * (x - mean);
  var /= static_cast<double>(v.voxels.size());
  double sd = std::sqrt(var);
  if (sd == 0.0) sd = 1.0;
  for (double& x : v.voxels) x = (x - mean) / sd;
}

/// Absolute voxel bounds of the lesion patch cell: the ROI's centered crop
/// position plus the patch cell's ranges within the ROI.
inline PatchRegion lesion_region(const PhantomConfig& cfg) {
  std::array<int, 3> in{cfg.dims.d, cfg.dims.h, cfg.dims.w};
  std::array<int, 3> roi_dims{};
  std::array<int, 3> roi_start{};
  for (int a = 0; a < 3; ++a) {
    roi_dims[a] = std::max(
        1, static_cast<int>(std::floor(cfg.roi.fractions[a] * in[a])));
    roi_start[a] = (in[a] - roi_dims[a]) / 2;
  }
  PatchRegion r = patch_region(Dims{roi_dims[0], roi_dims[1], roi_dims[2]},
                               cfg.grid, cfg.lesion_patch);
  for (int a = 0; a < 3; ++a) {
    r.begin[a] += roi_start[a];
    r.end[a] += roi_start[a];
  }
  return r;
}

/// Intensity shift: add effect inside the region (background sigma is 1).
inline void plant_intensity(Volume& v, const PatchRegion& r, double effect) {
  for (int z = r.begin[0]; z < r.end[0]; ++z)
    for (int y = r.begin[1]; y < r.end[1]; ++y)
      for (int x = r.begin[2]; x < r.end[2]; ++x) v.at(z, y, x) += effect;
}

/// Texture roughening: inject high-frequency noise inside the region, then
/// restore the region's original mean and standard deviation so the signal
/// lives in the spatial arrangement, not in first-order intensity
/// statistics.
inline void plant_roughening(Volume& v, const PatchRegion& r, double effect,
                             Rng& rng) {
  std::vector<double*> cell;
  for (int z = r.begin[0]; z < r.end[0]; ++z)
    for (int y = r.begin[1]; y < r.end[1]; ++y)
      for (int x = r.begin[2]; x < r.end[2]; ++x) cell.push_back(&v.at(z, y, x));
  const double n = static_cast<double>(cell.size());

  double m0 = 0.0, s0 = 0.0;
  for (double* p : cell) m0 += *p;
  m0 /= n;
  for (double* p : cell) s0 += (*p - m0) * (*p - m0);
  s0 = std::sqrt(s0 / n);

  for (double* p : cell) *p += effect * rng.normal();

  double m1 = 0.0, s1 = 0.0;
  for (double* p : cell) m1 += *p;
  m1 /= n;
  for (double* p : cell) s1 += (*p - m1) * (*p - m1);
  s1 = std::sqrt(s1 / n);
  if (s1 == 0.0 || s0 == 0.0) return;
  for (double* p : cell) *p = (*p - m1) / s1 * s0 + m0;
}

}  // namespace detail

/// Deterministic phantom cohort: smoothed noise backgrounds shared in
/// structure across the three views, a planted lesion inside one patch
/// cell for positive studies, and optionally noisy labels. Per-study RNG
/// streams derive from (seed, study index), so regeneration is bitwise
/// reproducible regardless of scheduling.
inline std::pair<std::vector<Study>, LesionGroundTruth> generate_cohort(
    const PhantomConfig& cfg) {
  if (cfg.lesion_patch < 0 || cfg.lesion_patch >= cfg.grid.patch_count())
    throw invalid_argument("lesion patch " + std::to_string(cfg.lesion_patch) +
                           " out of range for grid " + cfg.grid.str());
  if (cfg.effect_size < 0.0)
    throw invalid_argument("effect size must be >= 0");
  if (!(cfg.label_noise >= 0.0 && cfg.label_noise < 0.5))
    throw invalid_argument("label noise must be in [0, 0.5)");

  const PatchRegion lesion = detail::lesion_region(cfg);

  std::vector<Study> studies;
  studies.reserve(static_cast<std::size_t>(cfg.n_studies));
  for (int i = 0; i < cfg.n_studies; ++i) {
    // Stream slots per study: 0 = labels, 1 = base field, 2-4 = per-view
    // variation, 5 = lesion noise.
    auto slot = [&](int s) {
      return Rng(stream_seed(cfg.seed, static_cast<std::uint64_t>(i) * 8 + s));
    };

    const int true_state = i % 2;
    Rng meta = slot(0);
    int label = true_state;
    if (meta.uniform01() < cfg.label_noise) label = 1 - label;

    Volume base(cfg.dims);
    Rng base_rng = slot(1);
    detail::fill_white_noise(base, base_rng);
    detail::box_smooth_r2(base);

    Study st;
    char sid[32];
    std::snprintf(sid, sizeof(sid), "phantom_%04d", i);
    st.study_id = sid;
    for (const char* task : kTaskNames) st.labels[task] = label;

    Rng lesion_rng = slot(5);
    for (int v = 0; v < 3; ++v) {
      Volume view = base;
      Volume extra(cfg.dims);
      Rng view_rng = slot(2 + v);
      detail::fill_white_noise(extra, view_rng);
      detail::box_smooth_r2(extra);
      for (std::size_t p = 0; p < view.voxels.size(); ++p)
        view.voxels[p] += 0.3 * extra.voxels[p];
      detail::normalize_unit(view);

      if (true_state == 1 && cfg.effect_size > 0.0) {
        switch (cfg.kind) {
          case LesionKind::IntensityShift:
            detail::plant_intensity(view, lesion, cfg.effect_size);
            break;
          case LesionKind::TextureRoughening:
            detail::plant_roughening(view, lesion, cfg.effect_size,
                                     lesion_rng);
            break;
          case LesionKind::Mixed:
            detail::plant_roughening(view, lesion, cfg.effect_size,
                                     lesion_rng);
            detail::plant_intensity(view, lesion, cfg.effect_size);
            break;
        }
      }
      st.views[static_cast<std::size_t>(v)] = std::move(view);
    }
    studies.push_back(std::move(st));
  }

  LesionGroundTruth gt{cfg.lesion_patch, cfg.kind, cfg.effect_size};
  return {std::move(studies), gt};
}

/// Write a cohort as NRRD volumes + JSONL manifest + ground-truth sidecar.
inline void write_cohort(const std::vector<Study>& studies,
                         const LesionGroundTruth& gt,
                         const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<ManifestEntry> entries;
  for (const Study& st : studies) {
    ManifestEntry e;
    e.study_id = st.study_id;
    e.labels = st.labels;
    for (int v = 0; v < 3; ++v) {
      std::string name = st.study_id + "_" + kViewNames[v] + ".nrrd";
      e.view_paths[static_cast<std::size_t>(v)] = dir / name;
      nrrd::save_volume(st.views[static_cast<std::size_t>(v)], dir / name);
    }
    entries.push_back(std::move(e));
  }
  write_manifest(entries, dir / "manifest.jsonl");

  nlohmann::json j;
  j["lesion_patch"] = gt.lesion_patch;
  j["lesion_kind"] = lesion_kind_name(gt.kind);
  j["effect_size"] = gt.effect_size;
  std::ofstream out(dir / "ground_truth.json");
  out << j.dump(2) << "\n";
  if (!out) throw error("cannot write ground truth sidecar");
}

}  // namespace radfp
