#pragma once

#include <array>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "radfp/catalog.hpp"
#include "radfp/discretize.hpp"
#include "radfp/error.hpp"
#include "radfp/features/first_order.hpp"
#include "radfp/features/gldm.hpp"
#include "radfp/features/glcm.hpp"
#include "radfp/features/glrlm.hpp"
#include "radfp/features/glszm.hpp"
#include "radfp/features/ngtdm.hpp"
#include "radfp/features/shape.hpp"
#include "radfp/study.hpp"
#include "radfp/volume.hpp"

namespace radfp {

/// The assembled feature pool for one study, flat index per FeatureLayout.
struct FeatureVector {
  FeatureLayout layout;
  std::vector<double> values;

  double at(std::int64_t flat) const {
    return values[static_cast<std::size_t>(flat - 1)];
  }
  double& at(std::int64_t flat) {
    return values[static_cast<std::size_t>(flat - 1)];
  }
};

/// All 110 catalog features of one patch, in catalog order.
inline std::array<double, kFullCatalogSize> extract_patch_features(
    const Volume& patch, int n_bins) {
  DiscretizedPatch dp = discretize(patch, n_bins);
  auto fo = first_order_features(patch, dp);
  auto sh = shape_features(patch, otsu_mask(patch));
  auto glcm = glcm_features(dp);
  auto glrlm = glrlm_features(dp);
  auto glszm = glszm_features(dp);
  auto ngtdm = ngtdm_features(dp);
  auto gldm = gldm_features(dp);

  std::array<double, kFullCatalogSize> out{};
  std::size_t i = 0;
  for (double v : fo) out[i++] = v;
  for (double v : sh) out[i++] = v;
  for (double v : glcm) out[i++] = v;
  for (double v : glrlm) out[i++] = v;
  for (double v : glszm) out[i++] = v;
  for (double v : ngtdm) out[i++] = v;
  for (double v : gldm) out[i++] = v;
  return out;
}

struct ExtractConfig {
  RoiSpec roi = RoiSpec::fractional(0.5, 0.3, 0.5);
  PatchGrid grid{2, 2, 2};
  int n_bins = 32;
};

/// Full feature pool f for one preprocessed study: K features per patch
/// per view at flat index (j-1)*3K + (v-1)*K + k.
inline FeatureVector extract_study_features(const Study& study,
                                            const ExtractConfig& cfg) {
  if (!study.views_aligned())
    throw invalid_argument("study " + study.study_id +
                           " has misaligned view dims");

  FeatureVector fv;
  fv.layout.n_patches = cfg.grid.patch_count();
  fv.layout.n_features = kFullCatalogSize;
  fv.values.assign(static_cast<std::size_t>(fv.layout.dim()), 0.0);

  for (int v = 0; v < 3; ++v) {
    Volume roi = extract_roi(study.views[static_cast<std::size_t>(v)], cfg.roi);
    std::vector<Volume> patches = decompose_patches(roi, cfg.grid);
    for (int j = 0; j < static_cast<int>(patches.size()); ++j) {
      auto feats = extract_patch_features(patches[static_cast<std::size_t>(j)],
                                          cfg.n_bins);
      for (int k = 1; k <= kFullCatalogSize; ++k)
        fv.at(fv.layout.flat(v + 1, j + 1, k)) =
            feats[static_cast<std::size_t>(k - 1)];
    }
  }
  return fv;
}

/// The stacked 3-channel ROI input of the weighting network
/// (axial, coronal, sagittal).
using RoiStack = std::array<Volume, 3>;

inline RoiStack make_roi_stack(const Study& study, const RoiSpec& roi) {
  if (!study.views_aligned())
    throw invalid_argument("study " + study.study_id +
                           " has misaligned view dims");
  RoiStack stack;
  for (int v = 0; v < 3; ++v)
    stack[static_cast<std::size_t>(v)] =
        extract_roi(study.views[static_cast<std::size_t>(v)], roi);
  return stack;
}

inline void write_feature_csv_header(std::ostream& out) {
  out << "study_id,flat_index,view,patch,family,feature_name,value\n";
}

/// One row per feature, ordered by flat index; %.17g keeps values
/// round-trippable.
inline void write_feature_csv_rows(std::ostream& out,
                                   const std::string& study_id,
                                   const FeatureVector& fv) {
  const auto& catalog = full_catalog();
  char buf[64];
  for (std::int64_t i = 1; i <= fv.layout.dim(); ++i) {
    auto c = fv.layout.unflat(i);
    const auto& entry = catalog[static_cast<std::size_t>(c.k - 1)];
    std::snprintf(buf, sizeof(buf), "%.17g", fv.at(i));
    out << study_id << ',' << i << ',' << kViewNames[c.view - 1] << ','
        << c.patch << ',' << family_name(entry.family) << ',' << entry.name
        << ',' << buf << '\n';
  }
}

}  // namespace radfp
