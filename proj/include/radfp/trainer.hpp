#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "radfp/error.hpp"
#include "radfp/extract.hpp"
#include "radfp/metrics.hpp"
#include "radfp/model.hpp"
#include "radfp/model_io.hpp"
#include "radfp/rng.hpp"
#include "radfp/study.hpp"

namespace radfp {

struct TrainConfig {
  std::string task = "abnormal";
  int epochs = 30;
  int batch_size = 16;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  Dims input_dims{16, 48, 48};
  RoiSpec roi = RoiSpec::fractional(0.5, 0.3, 0.5);
  PatchGrid grid{2, 2, 2};
  int n_bins = 32;
  InteractionMode mode = InteractionMode::Full;
  int top_m = 0;
  std::vector<Family> families;  // empty = full pool
  bool selection_enabled = true;
  int patience = 10;
  double split_fraction = 0.8;  // training share

  ModelConfig model_config() const {
    ModelConfig mc;
    mc.task = task;
    mc.input_dims = input_dims;
    mc.roi = roi;
    mc.grid = grid;
    mc.n_bins = n_bins;
    mc.catalog = families.empty() ? FeatureCatalog::full()
                                  : FeatureCatalog::for_families(families);
    mc.mode = mode;
    mc.top_m = top_m;
    mc.selection_enabled = selection_enabled;
    return mc;
  }
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_auc = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> records;
  int best_epoch = 0;  // 1-based epoch of the returned checkpoint
};

inline void write_history_csv(const TrainHistory& h,
                              const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw error("cannot open history file: " + path.string());
  out << "epoch,train_loss,val_loss,val_auc\n";
  char buf[128];
  for (const auto& r : h.records) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g", r.epoch,
                  r.train_loss, r.val_loss, r.val_auc);
    out << buf << "\n";
  }
}

/// One study, preprocessed for a given model configuration.
struct PreparedStudy {
  std::string study_id;
  int label = 0;
  std::vector<double> features;  // model feature order
  Tensor4 roi_input;
};

namespace detail {

inline std::uint64_t pipeline_hash(const ModelConfig& mc) {
  // Covers everything the cached full-pool features depend on.
  std::uint64_t h = hash_names(full_catalog());
  auto mixi = [&h](std::int64_t v) {
    h = mix_seed(h ^ static_cast<std::uint64_t>(v));
  };
  mixi(mc.input_dims.d);
  mixi(mc.input_dims.h);
  mixi(mc.input_dims.w);
  mixi(mc.grid.nd);
  mixi(mc.grid.nh);
  mixi(mc.grid.nw);
  mixi(mc.n_bins);
  for (double f : mc.roi.fractions)
    mixi(static_cast<std::int64_t>(std::llround(f * 1e9)));
  return h;
}

inline bool read_feature_cache(const std::filesystem::path& file,
                               std::uint64_t expect_hash,
                               std::vector<double>& out) {
  std::ifstream in(file, std::ios::binary);
  if (!in) return false;
  char magic[4];
  std::uint32_t version = 0;
  std::uint64_t hash = 0, dim = 0;
  if (!in.read(magic, 4) || std::string(magic, 4) != "RFPC") return false;
  if (!in.read(reinterpret_cast<char*>(&version), 4) || version != 1)
    return false;
  if (!in.read(reinterpret_cast<char*>(&hash), 8) || hash != expect_hash)
    return false;
  if (!in.read(reinterpret_cast<char*>(&dim), 8)) return false;
  std::vector<double> values(dim);
  if (!in.read(reinterpret_cast<char*>(values.data()),
               static_cast<std::streamsize>(dim * sizeof(double))))
    return false;
  out = std::move(values);
  return true;
}

inline void write_feature_cache(const std::filesystem::path& file,
                                std::uint64_t hash,
                                const std::vector<double>& values) {
  std::filesystem::path tmp = file;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) return;  // cache is best-effort
    std::uint32_t version = 1;
    std::uint64_t dim = values.size();
    out.write("RFPC", 4);
    out.write(reinterpret_cast<const char*>(&version), 4);
    out.write(reinterpret_cast<const char*>(&hash), 8);
    out.write(reinterpret_cast<const char*>(&dim), 8);
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!out) return;
  }
  std::error_code ec;
  std::filesystem::rename(tmp, file, ec);
}

}  // namespace detail

inline std::optional<std::filesystem::path> feature_cache_dir() {
  if (const char* env = std::getenv("RADFP_CACHE_DIR"); env && *env)
    return std::filesystem::path(env);
  return std::nullopt;
}

/// Resize views to the working dims, build the ROI stack, and compute the
/// model's feature vector. The full 110-feature pool is cached on disk when
/// a cache directory is configured; extraction is deterministic, so the
/// cache never changes results.
inline PreparedStudy prepare_study(const ModelConfig& mc, const Study& study) {
  Study work;
  work.study_id = study.study_id;
  work.labels = study.labels;
  for (int v = 0; v < 3; ++v) {
    const Volume& src = study.views[static_cast<std::size_t>(v)];
    work.views[static_cast<std::size_t>(v)] =
        src.dims == mc.input_dims ? src : resize_trilinear(src, mc.input_dims);
  }

  PreparedStudy ps;
  ps.study_id = study.study_id;
  ps.roi_input = to_tensor(make_roi_stack(work, mc.roi));

  std::vector<double> pool;
  const auto cache_dir = feature_cache_dir();
  const std::uint64_t phash = detail::pipeline_hash(mc);
  std::filesystem::path cache_file;
  if (cache_dir) {
    char suffix[32];
    std::snprintf(suffix, sizeof(suffix), "_%016llx.rfpc",
                  static_cast<unsigned long long>(phash));
    cache_file = *cache_dir / (study.study_id + suffix);
  }

  FeatureVector fv;
  bool have_pool =
      cache_dir && detail::read_feature_cache(cache_file, phash, pool) &&
      static_cast<std::int64_t>(pool.size()) ==
          FeatureLayout{mc.grid.patch_count(), kFullCatalogSize}.dim();
  if (have_pool) {
    fv.layout = FeatureLayout{mc.grid.patch_count(), kFullCatalogSize};
    fv.values = std::move(pool);
  } else {
    fv = extract_study_features(work, mc.extract_config());
    if (cache_dir) {
      std::filesystem::create_directories(*cache_dir);
      detail::write_feature_cache(cache_file, phash, fv.values);
    }
  }

  ModelBundle shim;
  shim.config = mc;
  ps.features = shim.select_features(fv);
  return ps;
}

/// Prepare a batch of studies, parallelized per study; output order follows
/// the input order regardless of scheduling.
inline std::vector<PreparedStudy> prepare_studies(
    const ModelConfig& mc, const std::vector<Study>& studies,
    const std::string& task) {
  std::vector<PreparedStudy> out(studies.size());
  unsigned n_threads = std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::future<void>> futures;
  std::size_t chunk = (studies.size() + n_threads - 1) / std::max<std::size_t>(1, n_threads);
  for (std::size_t begin = 0; begin < studies.size(); begin += chunk) {
    std::size_t end = std::min(studies.size(), begin + chunk);
    futures.push_back(std::async(std::launch::async, [&, begin, end] {
      for (std::size_t i = begin; i < end; ++i) {
        out[i] = prepare_study(mc, studies[i]);
        out[i].label = studies[i].label(task);
      }
    }));
  }
  for (auto& f : futures) f.get();
  return out;
}

namespace detail {

/// Adam moment buffers, laid out in parameter visit order.
struct AdamState {
  std::vector<double> m, v;
  std::int64_t t = 0;

  void init(std::int64_t n) {
    m.assign(static_cast<std::size_t>(n), 0.0);
    v.assign(static_cast<std::size_t>(n), 0.0);
    t = 0;
  }

  void step(ModelParams& params, ModelParams& grads, double lr, double b1,
            double b2, double eps) {
    ++t;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t));
    std::size_t off = 0;
    auto update = [&](double& p, double g) {
      m[off] = b1 * m[off] + (1.0 - b1) * g;
      v[off] = b2 * v[off] + (1.0 - b2) * g * g;
      p -= lr * (m[off] / bc1) / (std::sqrt(v[off] / bc2) + eps);
      ++off;
    };
    ModelParams::visit_pair(params, grads, [&](auto& p, auto& g) {
      if constexpr (std::is_same_v<std::decay_t<decltype(p)>, double>) {
        update(p, g);
      } else {
        for (std::size_t i = 0; i < p.size(); ++i) update(p[i], g[i]);
      }
    });
  }
};

inline void accumulate(ModelParams& acc, const ModelParams& grads) {
  auto& g = const_cast<ModelParams&>(grads);
  ModelParams::visit_pair(acc, g, [](auto& a, auto& b) {
    if constexpr (std::is_same_v<std::decay_t<decltype(a)>, double>) {
      a += b;
    } else {
      for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    }
  });
}

inline void scale(ModelParams& acc, double s) {
  ModelParams::visit(acc, [s](auto& a) {
    if constexpr (std::is_same_v<std::decay_t<decltype(a)>, double>) {
      a *= s;
    } else {
      for (double& x : a) x *= s;
    }
  });
}

}  // namespace detail

/// Sweep the selection threshold over every distinct validation relevance
/// value plus {0, 1}; return the T with the best Youden index (sensitivity
/// + specificity - 1 at prediction cutoff 0.5), ties toward the smallest T.
/// The logits are updated incrementally as features deactivate, so the
/// sweep is exact over all reachable masks.
inline double select_threshold_core(const ModelParams& params,
                                    const StandardizationStats& stats,
                                    const std::vector<PreparedStudy>& val) {
  if (val.empty()) throw invalid_argument("empty validation set");
  {
    int pos = 0;
    for (const auto& s : val) pos += s.label;
    if (pos == 0 || pos == static_cast<int>(val.size()))
      throw invalid_argument(
          "degenerate label distribution in validation set");
  }

  const int dim = params.clf.dim;
  struct StudyState {
    std::vector<double> x;      // standardized features
    std::vector<double> q;
    std::vector<int> order;     // feature indices by ascending q
    std::vector<char> active;
    std::vector<int> partners;  // pairwise partners (TopM active set)
    std::size_t next = 0;       // next order position to deactivate
    double z = 0.0;
    int label = 0;
  };

  std::vector<StudyState> states(val.size());
  std::vector<double> candidates{0.0, 1.0};
  for (std::size_t s = 0; s < val.size(); ++s) {
    StudyState& st = states[s];
    st.x = stats.apply(val[s].features);
    st.q = params.selection_enabled
               ? params.net.forward(val[s].roi_input)
               : std::vector<double>(st.x.size(), 1.0);
    st.label = val[s].label;
    st.active.assign(static_cast<std::size_t>(dim), 1);
    st.order.resize(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) st.order[static_cast<std::size_t>(i)] = i;
    std::stable_sort(st.order.begin(), st.order.end(), [&](int a, int b) {
      return st.q[static_cast<std::size_t>(a)] < st.q[static_cast<std::size_t>(b)];
    });
    if (params.clf.mode == InteractionMode::TopM)
      st.partners = top_m_active(st.q, params.clf.top_m);
    const std::vector<int>* ap =
        params.clf.mode == InteractionMode::TopM ? &st.partners : nullptr;
    st.z = classifier_logit(params.clf, st.x, ap);  // all features active
    for (double qv : st.q) candidates.push_back(qv);
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());

  // Removing feature i changes the logit by theta_i x_i plus its pairwise
  // terms against the still-active partners.
  auto deactivate = [&](StudyState& st, int i) {
    st.active[static_cast<std::size_t>(i)] = 0;
    double xi = st.x[static_cast<std::size_t>(i)];
    double delta = params.clf.linear[static_cast<std::size_t>(i)] * xi;
    if (params.clf.mode == InteractionMode::Full) {
      for (int l = 0; l < dim; ++l) {
        if (l == i || !st.active[static_cast<std::size_t>(l)]) continue;
        std::size_t pi = l < i ? params.clf.pair_index(l, i)
                               : params.clf.pair_index(i, l);
        delta += params.clf.pairwise[pi] * xi * st.x[static_cast<std::size_t>(l)];
      }
    } else if (params.clf.mode == InteractionMode::TopM) {
      bool member = std::binary_search(st.partners.begin(), st.partners.end(), i);
      if (member) {
        for (int l : st.partners) {
          if (l == i || !st.active[static_cast<std::size_t>(l)]) continue;
          std::size_t pi = l < i ? params.clf.pair_index(l, i)
                                 : params.clf.pair_index(i, l);
          delta +=
              params.clf.pairwise[pi] * xi * st.x[static_cast<std::size_t>(l)];
        }
      }
    }
    st.z -= delta;
  };

  double best_t = 0.0, best_j = -2.0;
  std::vector<double> scores(val.size());
  std::vector<int> labels(val.size());
  for (std::size_t s = 0; s < val.size(); ++s) labels[s] = states[s].label;

  for (double t : candidates) {
    for (StudyState& st : states) {
      while (st.next < st.order.size() &&
             st.q[static_cast<std::size_t>(st.order[st.next])] < t) {
        deactivate(st, st.order[st.next]);
        ++st.next;
      }
    }
    for (std::size_t s = 0; s < val.size(); ++s)
      scores[s] = sigmoid(states[s].z);
    ConfusionReport r = confusion_metrics(scores, labels, 0.5);
    if (*r.youden > best_j) {
      best_j = *r.youden;
      best_t = t;
    }
  }
  return best_t;
}

/// Public threshold selection on raw studies (preprocesses internally).
inline double select_threshold(const ModelBundle& bundle,
                               const std::vector<Study>& val_studies) {
  std::vector<PreparedStudy> prepared =
      prepare_studies(bundle.config, val_studies, bundle.config.task);
  return select_threshold_core(bundle.params, bundle.stats, prepared);
}

/// Joint training of the weighting network and classifier with Adam on the
/// cross-entropy objective. Deterministic given (dataset, config, seed):
/// fixed split, fixed init, per-epoch seeded shuffling, batch gradients
/// reduced in ascending study-index order. Returns the checkpoint with the
/// best validation AUC (earliest epoch on ties) and the selected threshold.
inline std::pair<ModelBundle, TrainHistory> train(
    const std::vector<Study>& dataset, const TrainConfig& cfg) {
  if (dataset.empty()) throw invalid_argument("empty training dataset");
  if (!(cfg.split_fraction > 0.0 && cfg.split_fraction < 1.0))
    throw invalid_argument("split fraction must be in (0,1)");
  if (cfg.learning_rate <= 0.0)
    throw invalid_argument("learning rate must be positive");
  if (cfg.epochs < 1) throw invalid_argument("epochs must be >= 1");

  const ModelConfig mc = cfg.model_config();

  // Deterministic shuffled split.
  std::vector<int> indices(dataset.size());
  for (std::size_t i = 0; i < indices.size(); ++i)
    indices[i] = static_cast<int>(i);
  Rng split_rng(stream_seed(cfg.seed, 0x5117));
  split_rng.shuffle(indices);
  std::size_t n_train = static_cast<std::size_t>(std::clamp<std::int64_t>(
      std::llround(cfg.split_fraction * static_cast<double>(dataset.size())),
      1, static_cast<std::int64_t>(dataset.size()) - 1));

  std::vector<Study> train_studies, val_studies;
  for (std::size_t i = 0; i < indices.size(); ++i)
    (i < n_train ? train_studies : val_studies)
        .push_back(dataset[static_cast<std::size_t>(indices[i])]);

  auto check_classes = [&](const std::vector<Study>& set, const char* name) {
    int pos = 0;
    for (const auto& s : set) pos += s.label(cfg.task);
    if (pos == 0 || pos == static_cast<int>(set.size()))
      throw invalid_argument("degenerate label distribution in " +
                             std::string(name) + " split");
  };
  check_classes(train_studies, "training");
  check_classes(val_studies, "validation");

  // Features and ROI stacks are extracted once and reused every epoch.
  std::vector<PreparedStudy> train_set =
      prepare_studies(mc, train_studies, cfg.task);
  std::vector<PreparedStudy> val_set =
      prepare_studies(mc, val_studies, cfg.task);

  const int dim = mc.dim();

  // Standardization statistics from the training split only.
  StandardizationStats stats;
  stats.mu.assign(static_cast<std::size_t>(dim), 0.0);
  stats.sigma.assign(static_cast<std::size_t>(dim), 0.0);
  for (const auto& s : train_set)
    for (int i = 0; i < dim; ++i)
      stats.mu[static_cast<std::size_t>(i)] += s.features[static_cast<std::size_t>(i)];
  for (double& m : stats.mu) m /= static_cast<double>(train_set.size());
  for (const auto& s : train_set)
    for (int i = 0; i < dim; ++i) {
      double d = s.features[static_cast<std::size_t>(i)] -
                 stats.mu[static_cast<std::size_t>(i)];
      stats.sigma[static_cast<std::size_t>(i)] += d * d;
    }
  for (double& s : stats.sigma)
    s = std::max(1e-8, std::sqrt(s / static_cast<double>(train_set.size())));

  ModelParams params;
  params.selection_enabled = cfg.selection_enabled;
  Rng init_rng(stream_seed(cfg.seed, 0xA11));
  params.net.init(dim, init_rng);
  params.clf.init_zero(dim, cfg.mode,
                       cfg.mode == InteractionMode::TopM ? cfg.top_m : 0);

  detail::AdamState adam;
  adam.init(params.total_count());

  TrainHistory history;
  ModelParams best_params = params;
  double best_auc = -1.0;
  int best_epoch = 0;

  std::vector<int> train_order(train_set.size());
  for (std::size_t i = 0; i < train_order.size(); ++i)
    train_order[i] = static_cast<int>(i);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng epoch_rng(stream_seed(cfg.seed, 0xE90C4 + static_cast<std::uint64_t>(epoch)));
    epoch_rng.shuffle(train_order);

    double loss_sum = 0.0;
    std::size_t pos = 0;
    while (pos < train_order.size()) {
      std::size_t batch_end = std::min(train_order.size(),
                                       pos + static_cast<std::size_t>(cfg.batch_size));
      std::vector<int> batch(train_order.begin() + static_cast<std::ptrdiff_t>(pos),
                             train_order.begin() + static_cast<std::ptrdiff_t>(batch_end));
      std::sort(batch.begin(), batch.end());  // ordered reduction

      ModelParams grad_acc = params.zeros_like();
      for (int si : batch) {
        const PreparedStudy& s = train_set[static_cast<std::size_t>(si)];
        LossResult r =
            loss_and_gradients(params, stats, s.features, s.roi_input, s.label);
        loss_sum += r.loss;
        detail::accumulate(grad_acc, r.grads);
      }
      detail::scale(grad_acc, 1.0 / static_cast<double>(batch.size()));
      adam.step(params, grad_acc, cfg.learning_rate, cfg.beta1, cfg.beta2,
                cfg.adam_eps);
      pos = batch_end;
    }

    // Validation with the training-path (continuous) prediction.
    double val_loss = 0.0;
    std::vector<double> val_scores(val_set.size());
    std::vector<int> val_labels(val_set.size());
    for (std::size_t i = 0; i < val_set.size(); ++i) {
      const PreparedStudy& s = val_set[i];
      EvalResult r =
          eval_loss(params, stats, s.features, s.roi_input, s.label);
      val_loss += r.loss;
      val_scores[i] = r.prob;
      val_labels[i] = s.label;
    }
    val_loss /= static_cast<double>(val_set.size());
    double val_auc = auc(val_scores, val_labels);

    history.records.push_back(
        {epoch, loss_sum / static_cast<double>(train_set.size()), val_loss,
         val_auc});

    if (val_auc > best_auc) {
      best_auc = val_auc;
      best_params = params;
      best_epoch = epoch;
    }
    if (cfg.patience > 0 && epoch - best_epoch >= cfg.patience) break;
  }

  history.best_epoch = best_epoch;

  ModelBundle bundle;
  bundle.config = mc;
  bundle.params = std::move(best_params);
  bundle.stats = std::move(stats);
  // Freeze to storage precision first so the selected threshold matches
  // what a reloaded artifact will reproduce.
  bundle.quantize_to_storage();
  bundle.threshold = select_threshold_core(bundle.params, bundle.stats, val_set);

  return {std::move(bundle), std::move(history)};
}

}  // namespace radfp
