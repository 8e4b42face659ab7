#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "radfp/error.hpp"

namespace radfp {

enum class Family { FirstOrder, Shape, Glcm, Glrlm, Glszm, Ngtdm, Gldm };

inline const char* family_name(Family f) {
  switch (f) {
    case Family::FirstOrder: return "firstorder";
    case Family::Shape: return "shape";
    case Family::Glcm: return "glcm";
    case Family::Glrlm: return "glrlm";
    case Family::Glszm: return "glszm";
    case Family::Ngtdm: return "ngtdm";
    case Family::Gldm: return "gldm";
  }
  return "?";
}

inline Family family_from_name(const std::string& s) {
  for (Family f : {Family::FirstOrder, Family::Shape, Family::Glcm,
                   Family::Glrlm, Family::Glszm, Family::Ngtdm, Family::Gldm})
    if (s == family_name(f)) return f;
  throw invalid_argument("unknown feature family: " + s);
}

struct CatalogEntry {
  Family family;
  const char* name;
};

/// The frozen per-patch feature ordering. Index <-> name mappings must
/// never drift, so any change here must bump the catalog hash embedded in
/// model artifacts.
inline const std::vector<CatalogEntry>& full_catalog() {
  static const std::vector<CatalogEntry> catalog = {
      // First-order statistics (19)
      {Family::FirstOrder, "Energy"},
      {Family::FirstOrder, "TotalEnergy"},
      {Family::FirstOrder, "Entropy"},
      {Family::FirstOrder, "Minimum"},
      {Family::FirstOrder, "10thPercentile"},
      {Family::FirstOrder, "90thPercentile"},
      {Family::FirstOrder, "Maximum"},
      {Family::FirstOrder, "Mean"},
      {Family::FirstOrder, "Median"},
      {Family::FirstOrder, "InterquartileRange"},
      {Family::FirstOrder, "Range"},
      {Family::FirstOrder, "MeanAbsoluteDeviation"},
      {Family::FirstOrder, "RobustMeanAbsoluteDeviation"},
      {Family::FirstOrder, "RootMeanSquared"},
      {Family::FirstOrder, "StandardDeviation"},
      {Family::FirstOrder, "Skewness"},
      {Family::FirstOrder, "Kurtosis"},
      {Family::FirstOrder, "Variance"},
      {Family::FirstOrder, "Uniformity"},
      // 3-D shape descriptors (16)
      {Family::Shape, "VoxelVolume"},
      {Family::Shape, "SurfaceArea"},
      {Family::Shape, "SurfaceVolumeRatio"},
      {Family::Shape, "Sphericity"},
      {Family::Shape, "Compactness1"},
      {Family::Shape, "Compactness2"},
      {Family::Shape, "SphericalDisproportion"},
      {Family::Shape, "Maximum3DDiameter"},
      {Family::Shape, "Maximum2DDiameterSlice"},
      {Family::Shape, "Maximum2DDiameterColumn"},
      {Family::Shape, "Maximum2DDiameterRow"},
      {Family::Shape, "MajorAxisLength"},
      {Family::Shape, "MinorAxisLength"},
      {Family::Shape, "LeastAxisLength"},
      {Family::Shape, "Elongation"},
      {Family::Shape, "Flatness"},
      // Gray level co-occurrence matrix (24)
      {Family::Glcm, "Autocorrelation"},
      {Family::Glcm, "JointAverage"},
      {Family::Glcm, "ClusterProminence"},
      {Family::Glcm, "ClusterShade"},
      {Family::Glcm, "ClusterTendency"},
      {Family::Glcm, "Contrast"},
      {Family::Glcm, "Correlation"},
      {Family::Glcm, "DifferenceAverage"},
      {Family::Glcm, "DifferenceEntropy"},
      {Family::Glcm, "DifferenceVariance"},
      {Family::Glcm, "JointEnergy"},
      {Family::Glcm, "JointEntropy"},
      {Family::Glcm, "IMC1"},
      {Family::Glcm, "IMC2"},
      {Family::Glcm, "IDM"},
      {Family::Glcm, "IDMN"},
      {Family::Glcm, "ID"},
      {Family::Glcm, "IDN"},
      {Family::Glcm, "InverseVariance"},
      {Family::Glcm, "MaximumProbability"},
      {Family::Glcm, "SumAverage"},
      {Family::Glcm, "SumEntropy"},
      {Family::Glcm, "SumSquares"},
      {Family::Glcm, "MCC"},
      // Gray level run length matrix (16)
      {Family::Glrlm, "ShortRunEmphasis"},
      {Family::Glrlm, "LongRunEmphasis"},
      {Family::Glrlm, "GrayLevelNonUniformity"},
      {Family::Glrlm, "GrayLevelNonUniformityNormalized"},
      {Family::Glrlm, "RunLengthNonUniformity"},
      {Family::Glrlm, "RunLengthNonUniformityNormalized"},
      {Family::Glrlm, "RunPercentage"},
      {Family::Glrlm, "GrayLevelVariance"},
      {Family::Glrlm, "RunVariance"},
      {Family::Glrlm, "RunEntropy"},
      {Family::Glrlm, "LowGrayLevelRunEmphasis"},
      {Family::Glrlm, "HighGrayLevelRunEmphasis"},
      {Family::Glrlm, "ShortRunLowGrayLevelEmphasis"},
      {Family::Glrlm, "ShortRunHighGrayLevelEmphasis"},
      {Family::Glrlm, "LongRunLowGrayLevelEmphasis"},
      {Family::Glrlm, "LongRunHighGrayLevelEmphasis"},
      // Gray level size zone matrix (16)
      {Family::Glszm, "SmallAreaEmphasis"},
      {Family::Glszm, "LargeAreaEmphasis"},
      {Family::Glszm, "GrayLevelNonUniformity"},
      {Family::Glszm, "GrayLevelNonUniformityNormalized"},
      {Family::Glszm, "SizeZoneNonUniformity"},
      {Family::Glszm, "SizeZoneNonUniformityNormalized"},
      {Family::Glszm, "ZonePercentage"},
      {Family::Glszm, "GrayLevelVariance"},
      {Family::Glszm, "ZoneVariance"},
      {Family::Glszm, "ZoneEntropy"},
      {Family::Glszm, "LowGrayLevelZoneEmphasis"},
      {Family::Glszm, "HighGrayLevelZoneEmphasis"},
      {Family::Glszm, "SmallAreaLowGrayLevelEmphasis"},
      {Family::Glszm, "SmallAreaHighGrayLevelEmphasis"},
      {Family::Glszm, "LargeAreaLowGrayLevelEmphasis"},
      {Family::Glszm, "LargeAreaHighGrayLevelEmphasis"},
      // Neighbouring gray tone difference matrix (5)
      {Family::Ngtdm, "Coarseness"},
      {Family::Ngtdm, "Contrast"},
      {Family::Ngtdm, "Busyness"},
      {Family::Ngtdm, "Complexity"},
      {Family::Ngtdm, "Strength"},
      // Gray level dependence matrix (14)
      {Family::Gldm, "SmallDependenceEmphasis"},
      {Family::Gldm, "LargeDependenceEmphasis"},
      {Family::Gldm, "GrayLevelNonUniformity"},
      {Family::Gldm, "DependenceNonUniformity"},
      {Family::Gldm, "DependenceNonUniformityNormalized"},
      {Family::Gldm, "GrayLevelVariance"},
      {Family::Gldm, "DependenceVariance"},
      {Family::Gldm, "DependenceEntropy"},
      {Family::Gldm, "LowGrayLevelEmphasis"},
      {Family::Gldm, "HighGrayLevelEmphasis"},
      {Family::Gldm, "SmallDependenceLowGrayLevelEmphasis"},
      {Family::Gldm, "SmallDependenceHighGrayLevelEmphasis"},
      {Family::Gldm, "LargeDependenceLowGrayLevelEmphasis"},
      {Family::Gldm, "LargeDependenceHighGrayLevelEmphasis"},
  };
  return catalog;
}

inline constexpr int kFullCatalogSize = 110;

/// FNV-1a over the ordered family:name list.
inline std::uint64_t hash_names(const std::vector<CatalogEntry>& entries) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto eat = [&h](const char* s) {
    for (; *s; ++s) {
      h ^= static_cast<unsigned char>(*s);
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& e : entries) {
    eat(family_name(e.family));
    eat(":");
    eat(e.name);
    eat(";");
  }
  return h;
}

/// An ordered feature catalog, either the full pool or a family-restricted
/// subset. source_k maps each entry back to its 1-based position in the
/// full 110-feature pool.
struct FeatureCatalog {
  std::vector<CatalogEntry> entries;
  std::vector<int> source_k;

  static FeatureCatalog full() {
    FeatureCatalog c;
    c.entries = full_catalog();
    c.source_k.resize(c.entries.size());
    for (std::size_t i = 0; i < c.entries.size(); ++i)
      c.source_k[i] = static_cast<int>(i) + 1;
    return c;
  }

  static FeatureCatalog for_families(const std::vector<Family>& families) {
    FeatureCatalog c;
    const auto& all = full_catalog();
    for (std::size_t i = 0; i < all.size(); ++i) {
      for (Family f : families) {
        if (all[i].family == f) {
          c.entries.push_back(all[i]);
          c.source_k.push_back(static_cast<int>(i) + 1);
          break;
        }
      }
    }
    if (c.entries.empty())
      throw invalid_argument("feature catalog restricted to zero families");
    return c;
  }

  int k() const { return static_cast<int>(entries.size()); }
  std::uint64_t hash() const { return hash_names(entries); }

  /// Distinct families present, in catalog order.
  std::vector<Family> families() const {
    std::vector<Family> out;
    for (const auto& e : entries)
      if (out.empty() || out.back() != e.family) out.push_back(e.family);
    return out;
  }
};

/// Bijective map between (view, patch, feature) triples and flat indices.
/// All coordinates are 1-based: i = (j-1)*3K + (v-1)*K + k with views
/// ordered axial, coronal, sagittal.
struct FeatureLayout {
  int n_patches = 1;  // J
  int n_features = kFullCatalogSize;  // K

  std::int64_t dim() const {
    return static_cast<std::int64_t>(3) * n_patches * n_features;
  }

  std::int64_t flat(int view, int patch, int k) const {
    if (view < 1 || view > 3 || patch < 1 || patch > n_patches || k < 1 ||
        k > n_features)
      throw invalid_argument(
          "feature index out of range: v=" + std::to_string(view) +
          " j=" + std::to_string(patch) + " k=" + std::to_string(k));
    return static_cast<std::int64_t>(patch - 1) * 3 * n_features +
           static_cast<std::int64_t>(view - 1) * n_features + k;
  }

  struct Coords {
    int view;
    int patch;
    int k;
  };

  Coords unflat(std::int64_t i) const {
    if (i < 1 || i > dim())
      throw invalid_argument("flat feature index out of range: " +
                             std::to_string(i));
    std::int64_t z = i - 1;
    Coords c;
    c.k = static_cast<int>(z % n_features) + 1;
    c.view = static_cast<int>((z / n_features) % 3) + 1;
    c.patch = static_cast<int>(z / (3 * n_features)) + 1;
    return c;
  }
};

}  // namespace radfp
