#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "radfp/catalog.hpp"
#include "radfp/error.hpp"
#include "radfp/model_io.hpp"
#include "radfp/trainer.hpp"

namespace radfp {

/// One ranked feature in an interpretation report.
struct ReportEntry {
  std::int64_t flat_index = 0;  // 1-based
  std::string view;
  int patch = 0;  // 1-based flat patch index
  std::array<int, 3> patch_coord{};  // zero-based (z, y, x) cell in the grid
  std::string family;
  std::string feature_name;
  double relevance = 0.0;     // q_i
  double contribution = 0.0;  // theta_i * f^s_i (standardized, masked)
  double value = 0.0;         // raw feature value
};

struct StudyReport {
  std::string study_id;
  double score = 0.0;
  int predicted = 0;
  std::int64_t n_selected = 0;
  std::vector<ReportEntry> top;
};

struct CohortReport {
  std::string task;
  int top_k = 0;
  std::string rank_by;  // "relevance" or "contribution"
  std::vector<StudyReport> studies;
  std::vector<ReportEntry> aggregate;      // by mean q_i (or mean |contribution|)
  std::map<std::string, int> view_counts;  // aggregate top-k membership
  std::map<int, int> patch_counts;         // aggregate top-k membership
};

namespace detail {

inline ReportEntry make_entry(const ModelBundle& bundle, std::int64_t flat,
                              double relevance, double contribution,
                              double value) {
  const FeatureLayout layout = bundle.config.layout();
  auto c = layout.unflat(flat);
  const auto& entry =
      bundle.config.catalog.entries[static_cast<std::size_t>(c.k - 1)];
  ReportEntry e;
  e.flat_index = flat;
  e.view = kViewNames[c.view - 1];
  e.patch = c.patch;
  const PatchGrid& g = bundle.config.grid;
  int j0 = c.patch - 1;
  e.patch_coord = {j0 / (g.nh * g.nw), (j0 / g.nw) % g.nh, j0 % g.nw};
  e.family = family_name(entry.family);
  e.feature_name = entry.name;
  e.relevance = relevance;
  e.contribution = contribution;
  e.value = value;
  return e;
}

/// Indices of the k largest keys, ties toward the smaller flat index.
inline std::vector<std::size_t> top_k_indices(const std::vector<double>& keys,
                                              int k) {
  std::vector<std::size_t> idx(keys.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return keys[a] > keys[b];
  });
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

}  // namespace detail

/// Rank features per study and cohort-wide. Per-study ranking follows q_i
/// (or |contribution|); the cohort aggregate ranks the per-feature mean of
/// the same key. Ties resolve toward the smaller flat index.
inline CohortReport build_report(const ModelBundle& bundle,
                                 const std::vector<Study>& studies, int top_k,
                                 bool rank_by_contribution = false) {
  const FeatureLayout layout = bundle.config.layout();
  if (top_k < 1 || top_k > layout.dim())
    throw invalid_argument("top_k out of range: " + std::to_string(top_k) +
                           " (feature pool has " + std::to_string(layout.dim()) +
                           ")");

  CohortReport rep;
  rep.task = bundle.config.task;
  rep.top_k = top_k;
  rep.rank_by = rank_by_contribution ? "contribution" : "relevance";

  std::vector<double> key_mean(static_cast<std::size_t>(layout.dim()), 0.0);

  for (const Study& study : studies) {
    PreparedStudy ps = prepare_study(bundle.config, study);
    ModelBundle::Prediction pred = bundle.predict(ps.features, ps.roi_input);
    std::vector<double> x = bundle.stats.apply(ps.features);

    std::vector<double> contribution(static_cast<std::size_t>(layout.dim()));
    for (std::size_t i = 0; i < contribution.size(); ++i)
      contribution[i] = pred.fingerprint.mask[i]
                            ? bundle.params.clf.linear[i] * x[i]
                            : 0.0;

    std::vector<double> key(static_cast<std::size_t>(layout.dim()));
    for (std::size_t i = 0; i < key.size(); ++i) {
      key[i] = rank_by_contribution ? std::abs(contribution[i]) : pred.q[i];
      key_mean[i] += key[i];
    }

    StudyReport sr;
    sr.study_id = study.study_id;
    sr.score = pred.score;
    sr.predicted = pred.predicted;
    sr.n_selected = pred.n_selected;
    for (std::size_t i : detail::top_k_indices(key, top_k))
      sr.top.push_back(detail::make_entry(
          bundle, static_cast<std::int64_t>(i) + 1, pred.q[i],
          contribution[i], ps.features[i]));
    rep.studies.push_back(std::move(sr));
  }

  for (double& v : key_mean) v /= static_cast<double>(studies.size());
  for (std::size_t i : detail::top_k_indices(key_mean, top_k)) {
    ReportEntry e = detail::make_entry(
        bundle, static_cast<std::int64_t>(i) + 1, key_mean[i], 0.0, 0.0);
    rep.view_counts[e.view] += 1;
    rep.patch_counts[e.patch] += 1;
    rep.aggregate.push_back(std::move(e));
  }
  return rep;
}

inline nlohmann::json report_to_json(const CohortReport& rep) {
  nlohmann::json j;
  j["task"] = rep.task;
  j["top_k"] = rep.top_k;
  j["rank_by"] = rep.rank_by;

  auto entry_json = [](const ReportEntry& e) {
    nlohmann::json o;
    o["flat_index"] = e.flat_index;
    o["view"] = e.view;
    o["patch"] = e.patch;
    o["patch_coord"] = e.patch_coord;
    o["family"] = e.family;
    o["feature_name"] = e.feature_name;
    o["relevance"] = e.relevance;
    o["contribution"] = e.contribution;
    o["value"] = e.value;
    return o;
  };

  j["studies"] = nlohmann::json::array();
  for (const auto& s : rep.studies) {
    nlohmann::json o;
    o["study_id"] = s.study_id;
    o["score"] = s.score;
    o["prediction"] = s.predicted;
    o["n_selected_features"] = s.n_selected;
    o["top_features"] = nlohmann::json::array();
    for (const auto& e : s.top) o["top_features"].push_back(entry_json(e));
    j["studies"].push_back(std::move(o));
  }

  j["aggregate"]["top_features"] = nlohmann::json::array();
  for (const auto& e : rep.aggregate)
    j["aggregate"]["top_features"].push_back(entry_json(e));
  j["aggregate"]["view_histogram"] = rep.view_counts;
  nlohmann::json ph = nlohmann::json::object();
  for (const auto& [patch, count] : rep.patch_counts)
    ph[std::to_string(patch)] = count;
  j["aggregate"]["patch_histogram"] = std::move(ph);
  return j;
}

/// Plain-text table of the cohort aggregate plus per-study blocks.
inline void write_report_text(std::ostream& out, const CohortReport& rep) {
  char buf[256];
  out << "task: " << rep.task << "   top-" << rep.top_k
      << " ranked by " << rep.rank_by << "\n\n";
  out << "cohort aggregate\n";
  out << "rank  flat    view      patch  family      feature                          mean_key\n";
  int rank = 1;
  for (const auto& e : rep.aggregate) {
    std::snprintf(buf, sizeof(buf), "%-5d %-7lld %-9s %-6d %-11s %-32s %.6g\n",
                  rank++, static_cast<long long>(e.flat_index), e.view.c_str(),
                  e.patch, e.family.c_str(), e.feature_name.c_str(),
                  e.relevance);
    out << buf;
  }
  out << "\nview histogram:";
  for (const auto& [view, count] : rep.view_counts)
    out << " " << view << "=" << count;
  out << "\npatch histogram:";
  for (const auto& [patch, count] : rep.patch_counts)
    out << " " << patch << "=" << count;
  out << "\n";

  for (const auto& s : rep.studies) {
    std::snprintf(buf, sizeof(buf),
                  "\n%s  score=%.4f pred=%d selected=%lld\n",
                  s.study_id.c_str(), s.score, s.predicted,
                  static_cast<long long>(s.n_selected));
    out << buf;
    for (const auto& e : s.top) {
      std::snprintf(buf, sizeof(buf),
                    "  %-7lld %-9s %-6d %-11s %-32s q=%.4f contrib=%+.4g\n",
                    static_cast<long long>(e.flat_index), e.view.c_str(),
                    e.patch, e.family.c_str(), e.feature_name.c_str(),
                    e.relevance, e.contribution);
      out << buf;
    }
  }
}

/// Plot-ready CSV of the aggregate ranking.
inline void write_report_csv(std::ostream& out, const CohortReport& rep) {
  out << "rank,flat_index,view,patch,family,feature_name,mean_key\n";
  char buf[64];
  int rank = 1;
  for (const auto& e : rep.aggregate) {
    std::snprintf(buf, sizeof(buf), "%.17g", e.relevance);
    out << rank++ << ',' << e.flat_index << ',' << e.view << ',' << e.patch
        << ',' << e.family << ',' << e.feature_name << ',' << buf << '\n';
  }
}

}  // namespace radfp
