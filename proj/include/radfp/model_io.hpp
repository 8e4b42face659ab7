#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "radfp/catalog.hpp"
#include "radfp/error.hpp"
#include "radfp/extract.hpp"
#include "radfp/model.hpp"

namespace radfp {

constexpr int kModelFormatVersion = 1;

/// Everything needed to reproduce the preprocessing and feature selection
/// of a trained model.
struct ModelConfig {
  std::string task = "abnormal";
  Dims input_dims{16, 48, 48};
  RoiSpec roi = RoiSpec::fractional(0.5, 0.3, 0.5);
  PatchGrid grid{2, 2, 2};
  int n_bins = 32;
  FeatureCatalog catalog = FeatureCatalog::full();
  InteractionMode mode = InteractionMode::Full;
  int top_m = 0;
  bool selection_enabled = true;

  FeatureLayout layout() const {
    return FeatureLayout{grid.patch_count(), catalog.k()};
  }
  ExtractConfig extract_config() const { return {roi, grid, n_bins}; }
  int dim() const { return static_cast<int>(layout().dim()); }
};

/// Trained model artifact: parameters, frozen standardization statistics,
/// and the selected inference threshold.
struct ModelBundle {
  ModelConfig config;
  ModelParams params;
  StandardizationStats stats;
  double threshold = 0.0;

  /// Map a full 110-feature pool vector into this model's (possibly
  /// family-restricted) feature order.
  std::vector<double> select_features(const FeatureVector& full) const {
    FeatureLayout sub = config.layout();
    std::vector<double> out(static_cast<std::size_t>(sub.dim()));
    for (int j = 1; j <= sub.n_patches; ++j)
      for (int v = 1; v <= 3; ++v)
        for (int k = 1; k <= sub.n_features; ++k)
          out[static_cast<std::size_t>(sub.flat(v, j, k) - 1)] = full.at(
              full.layout.flat(v, j, config.catalog.source_k[
                                          static_cast<std::size_t>(k - 1)]));
    return out;
  }

  /// Training-path prediction: continuous relevance weighting.
  double predict_soft(const std::vector<double>& features,
                      const Tensor4& roi_input) const {
    std::vector<double> x = stats.apply(features);
    std::vector<double> q =
        params.selection_enabled
            ? params.net.forward(roi_input)
            : std::vector<double>(x.size(), 1.0);
    std::vector<double> fw = weighted_fusion(x, q);
    std::vector<int> active;
    const std::vector<int>* ap = nullptr;
    if (params.clf.mode == InteractionMode::TopM) {
      active = top_m_active(q, params.clf.top_m);
      ap = &active;
    }
    return classifier_forward(params.clf, fw, ap);
  }

  struct Prediction {
    double score = 0.0;
    int predicted = 0;
    std::int64_t n_selected = 0;
    std::vector<double> q;
    Fingerprint fingerprint;  // raw feature values under the mask
  };

  /// Inference-path prediction: the relevance vector is binarized at the
  /// threshold and the classifier sees the masked standardized features.
  Prediction predict(const std::vector<double>& features,
                     const Tensor4& roi_input,
                     std::optional<double> threshold_override = {}) const {
    double t = threshold_override.value_or(threshold);
    std::vector<double> x = stats.apply(features);
    std::vector<double> q =
        params.selection_enabled
            ? params.net.forward(roi_input)
            : std::vector<double>(x.size(), 1.0);

    Fingerprint masked_std = binarize_and_fingerprint(x, q, t);
    std::vector<int> active;
    const std::vector<int>* ap = nullptr;
    if (params.clf.mode == InteractionMode::TopM) {
      active = top_m_active(q, params.clf.top_m);
      ap = &active;
    }
    Prediction p;
    p.score = classifier_forward(params.clf, masked_std.values, ap);
    p.predicted = p.score >= 0.5 ? 1 : 0;
    p.n_selected = masked_std.n_selected();
    p.fingerprint = binarize_and_fingerprint(features, q, t);
    p.q = std::move(q);
    return p;
  }

  /// Round every parameter through float32 so that save/load is an exact
  /// round trip of the in-memory model.
  void quantize_to_storage() {
    auto round32 = [](double& v) { v = static_cast<double>(static_cast<float>(v)); };
    ModelParams::visit(params, [&](auto& x) {
      if constexpr (std::is_same_v<std::decay_t<decltype(x)>, double>) {
        round32(x);
      } else {
        for (double& v : x) round32(v);
      }
    });
    for (double& v : stats.mu) round32(v);
    for (double& v : stats.sigma) round32(v);
  }
};

namespace detail {

inline void write_f32_block(std::ofstream& out, const std::vector<double>& v) {
  for (double d : v) {
    float f = static_cast<float>(d);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    unsigned char b[4] = {static_cast<unsigned char>(bits & 0xff),
                          static_cast<unsigned char>((bits >> 8) & 0xff),
                          static_cast<unsigned char>((bits >> 16) & 0xff),
                          static_cast<unsigned char>((bits >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
  }
}

inline void read_f32_block(std::ifstream& in, std::vector<double>& v,
                           const char* block_name) {
  for (double& d : v) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
      throw parse_error(std::string("model artifact truncated in block ") +
                        block_name);
    std::uint32_t bits = static_cast<std::uint32_t>(b[0]) |
                         (static_cast<std::uint32_t>(b[1]) << 8) |
                         (static_cast<std::uint32_t>(b[2]) << 16) |
                         (static_cast<std::uint32_t>(b[3]) << 24);
    float f;
    std::memcpy(&f, &bits, 4);
    d = static_cast<double>(f);
  }
}

}  // namespace detail

/// One-file artifact: a single-line JSON header followed by little-endian
/// float32 parameter blocks in declared order (conv stages, dense, bias,
/// linear, pairwise, mu, sigma).
inline void save_model(const ModelBundle& bundle,
                       const std::filesystem::path& path) {
  nlohmann::json h;
  h["format_version"] = kModelFormatVersion;
  h["task"] = bundle.config.task;
  h["dim"] = bundle.config.dim();
  h["j"] = bundle.config.grid.patch_count();
  h["k"] = bundle.config.catalog.k();
  h["grid"] = {bundle.config.grid.nd, bundle.config.grid.nh,
               bundle.config.grid.nw};
  h["n_bins"] = bundle.config.n_bins;
  h["interaction_mode"] = interaction_mode_name(bundle.config.mode);
  h["top_m"] = bundle.config.top_m;
  std::vector<std::string> fams;
  for (Family f : bundle.config.catalog.families())
    fams.push_back(family_name(f));
  h["families"] = fams;
  char hash_hex[24];
  std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                static_cast<unsigned long long>(bundle.config.catalog.hash()));
  h["catalog_hash"] = hash_hex;
  h["threshold"] = bundle.threshold;
  h["conv_channels"] = bundle.params.net.channels;
  h["input_dims"] = {bundle.config.input_dims.d, bundle.config.input_dims.h,
                     bundle.config.input_dims.w};
  h["roi_fractions"] = bundle.config.roi.fractions;
  h["selection_enabled"] = bundle.config.selection_enabled;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw error("cannot open model file for writing: " + path.string());
  out << h.dump() << "\n";

  auto& self = const_cast<ModelBundle&>(bundle);
  ModelParams::visit(self.params, [&](auto& x) {
    if constexpr (std::is_same_v<std::decay_t<decltype(x)>, double>) {
      std::vector<double> one{x};
      detail::write_f32_block(out, one);
    } else {
      detail::write_f32_block(out, x);
    }
  });
  detail::write_f32_block(out, bundle.stats.mu);
  detail::write_f32_block(out, bundle.stats.sigma);
  if (!out) throw error("model write failed: " + path.string());
}

inline ModelBundle load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error("cannot open model file: " + path.string());

  std::string header_line;
  if (!std::getline(in, header_line))
    throw parse_error("model artifact: missing JSON header line");
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(header_line);
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(std::string("model artifact: malformed JSON header: ") +
                      e.what());
  }

  auto field = [&](const char* name) -> const nlohmann::json& {
    auto it = h.find(name);
    if (it == h.end())
      throw parse_error(std::string("model artifact: missing header field '") +
                        name + "'");
    return *it;
  };

  int version = field("format_version").get<int>();
  if (version != kModelFormatVersion)
    throw parse_error("model artifact: format version mismatch: file has " +
                      std::to_string(version) + ", expected " +
                      std::to_string(kModelFormatVersion));

  ModelBundle b;
  b.config.task = field("task").get<std::string>();
  auto grid = field("grid");
  b.config.grid = PatchGrid{grid.at(0).get<int>(), grid.at(1).get<int>(),
                            grid.at(2).get<int>()};
  b.config.n_bins = field("n_bins").get<int>();
  b.config.mode =
      interaction_mode_from_name(field("interaction_mode").get<std::string>());
  b.config.top_m = field("top_m").get<int>();

  std::vector<Family> fams;
  for (const auto& f : field("families"))
    fams.push_back(family_from_name(f.get<std::string>()));
  b.config.catalog = FeatureCatalog::for_families(fams);

  char expect_hex[24];
  std::snprintf(expect_hex, sizeof(expect_hex), "%016llx",
                static_cast<unsigned long long>(b.config.catalog.hash()));
  std::string file_hash = field("catalog_hash").get<std::string>();
  if (file_hash != expect_hex)
    throw parse_error(
        "model artifact: feature catalog hash mismatch (file " + file_hash +
        ", current catalog " + expect_hex +
        "); the frozen feature ordering has changed");

  if (field("k").get<int>() != b.config.catalog.k())
    throw parse_error("model artifact: header field 'k' disagrees with "
                      "the family list");

  auto idims = field("input_dims");
  b.config.input_dims = Dims{idims.at(0).get<int>(), idims.at(1).get<int>(),
                             idims.at(2).get<int>()};
  auto rfr = field("roi_fractions");
  b.config.roi = RoiSpec::fractional(rfr.at(0).get<double>(),
                                     rfr.at(1).get<double>(),
                                     rfr.at(2).get<double>());
  b.config.selection_enabled = field("selection_enabled").get<bool>();
  b.threshold = field("threshold").get<double>();

  const int dim = field("dim").get<int>();
  if (dim != b.config.dim())
    throw parse_error("model artifact: header field 'dim' disagrees with "
                      "grid and family list");

  auto channels = field("conv_channels");
  if (channels.size() != 4)
    throw parse_error("model artifact: malformed field 'conv_channels'");
  for (int i = 0; i < 4; ++i)
    b.params.net.channels[static_cast<std::size_t>(i)] =
        channels.at(i).get<int>();

  // Allocate parameter storage, then fill it block by block.
  b.params.net.out_dim = dim;
  for (int s = 0; s < 3; ++s) {
    ConvStage& st = b.params.net.stages[static_cast<std::size_t>(s)];
    st.in_ch = b.params.net.channels[static_cast<std::size_t>(s)];
    st.out_ch = b.params.net.channels[static_cast<std::size_t>(s) + 1];
    st.w.assign(static_cast<std::size_t>(st.out_ch) * st.in_ch * 27, 0.0);
    st.b.assign(static_cast<std::size_t>(st.out_ch), 0.0);
  }
  const int last = b.params.net.channels.back();
  b.params.net.dense_w.assign(static_cast<std::size_t>(dim) * last, 0.0);
  b.params.net.dense_b.assign(static_cast<std::size_t>(dim), 0.0);
  b.params.clf.init_zero(dim, b.config.mode,
                         b.config.mode == InteractionMode::TopM
                             ? b.config.top_m
                             : 0);
  b.params.selection_enabled = b.config.selection_enabled;

  int block_no = 0;
  ModelParams::visit(b.params, [&](auto& x) {
    std::string name = "parameter block " + std::to_string(block_no++);
    if constexpr (std::is_same_v<std::decay_t<decltype(x)>, double>) {
      std::vector<double> one(1);
      detail::read_f32_block(in, one, name.c_str());
      x = one[0];
    } else {
      detail::read_f32_block(in, x, name.c_str());
    }
  });
  b.stats.mu.assign(static_cast<std::size_t>(dim), 0.0);
  b.stats.sigma.assign(static_cast<std::size_t>(dim), 1.0);
  detail::read_f32_block(in, b.stats.mu, "mu");
  detail::read_f32_block(in, b.stats.sigma, "sigma");

  char extra;
  if (in.read(&extra, 1))
    throw parse_error("model artifact: trailing bytes after last block");
  return b;
}

}  // namespace radfp
