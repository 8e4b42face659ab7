#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <type_traits>
#include <vector>

#include "radfp/error.hpp"
#include "radfp/extract.hpp"
#include "radfp/rng.hpp"
#include "radfp/volume.hpp"

namespace radfp {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// Dense 4-D tensor (channels, depth, height, width), row-major.
struct Tensor4 {
  int c = 0, d = 0, h = 0, w = 0;
  std::vector<double> v;

  Tensor4() = default;
  Tensor4(int c_, int d_, int h_, int w_)
      : c(c_), d(d_), h(h_), w(w_),
        v(static_cast<std::size_t>(c_) * d_ * h_ * w_, 0.0) {}

  std::size_t idx(int ci, int z, int y, int x) const {
    return ((static_cast<std::size_t>(ci) * d + z) * h + y) * w + x;
  }
  double& at(int ci, int z, int y, int x) { return v[idx(ci, z, y, x)]; }
  double at(int ci, int z, int y, int x) const { return v[idx(ci, z, y, x)]; }
  std::int64_t spatial_size() const {
    return static_cast<std::int64_t>(d) * h * w;
  }
};

inline Tensor4 to_tensor(const RoiStack& stack) {
  const Dims dm = stack[0].dims;
  for (const Volume& v : stack)
    if (!(v.dims == dm))
      throw invalid_argument("roi stack channels have mismatched dims");
  Tensor4 t(3, dm.d, dm.h, dm.w);
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < stack[static_cast<std::size_t>(c)].voxels.size(); ++i)
      t.v[static_cast<std::size_t>(c) * dm.count() + i] =
          stack[static_cast<std::size_t>(c)].voxels[i];
  return t;
}

/// One 3x3x3 convolution, stride 2, zero padding 1. Output extent per axis
/// is floor((n-1)/2)+1, so the spatial size never reaches zero.
struct ConvStage {
  int in_ch = 0, out_ch = 0;
  std::vector<double> w;  // [oc][ic][kz][ky][kx]
  std::vector<double> b;  // [oc]

  static int out_extent(int n) { return (n - 1) / 2 + 1; }

  std::size_t widx(int oc, int ic, int kz, int ky, int kx) const {
    return (((static_cast<std::size_t>(oc) * in_ch + ic) * 3 + kz) * 3 + ky) *
               3 +
           kx;
  }

  Tensor4 forward(const Tensor4& in) const {
    Tensor4 out(out_ch, out_extent(in.d), out_extent(in.h), out_extent(in.w));
    for (int oc = 0; oc < out_ch; ++oc)
      for (int oz = 0; oz < out.d; ++oz)
        for (int oy = 0; oy < out.h; ++oy)
          for (int ox = 0; ox < out.w; ++ox) {
            double acc = b[static_cast<std::size_t>(oc)];
            for (int ic = 0; ic < in_ch; ++ic)
              for (int kz = 0; kz < 3; ++kz) {
                int iz = 2 * oz - 1 + kz;
                if (iz < 0 || iz >= in.d) continue;
                for (int ky = 0; ky < 3; ++ky) {
                  int iy = 2 * oy - 1 + ky;
                  if (iy < 0 || iy >= in.h) continue;
                  for (int kx = 0; kx < 3; ++kx) {
                    int ix = 2 * ox - 1 + kx;
                    if (ix < 0 || ix >= in.w) continue;
                    acc += w[widx(oc, ic, kz, ky, kx)] * in.at(ic, iz, iy, ix);
                  }
                }
              }
            out.at(oc, oz, oy, ox) = acc;
          }
    return out;
  }

  /// Accumulates dW/db into grads; returns dInput when want_dinput.
  Tensor4 backward(const Tensor4& in, const Tensor4& dout, ConvStage& grads,
                   bool want_dinput) const {
    Tensor4 din;
    if (want_dinput) din = Tensor4(in.c, in.d, in.h, in.w);
    for (int oc = 0; oc < out_ch; ++oc)
      for (int oz = 0; oz < dout.d; ++oz)
        for (int oy = 0; oy < dout.h; ++oy)
          for (int ox = 0; ox < dout.w; ++ox) {
            double g = dout.at(oc, oz, oy, ox);
            if (g == 0.0) continue;
            grads.b[static_cast<std::size_t>(oc)] += g;
            for (int ic = 0; ic < in_ch; ++ic)
              for (int kz = 0; kz < 3; ++kz) {
                int iz = 2 * oz - 1 + kz;
                if (iz < 0 || iz >= in.d) continue;
                for (int ky = 0; ky < 3; ++ky) {
                  int iy = 2 * oy - 1 + ky;
                  if (iy < 0 || iy >= in.h) continue;
                  for (int kx = 0; kx < 3; ++kx) {
                    int ix = 2 * ox - 1 + kx;
                    if (ix < 0 || ix >= in.w) continue;
                    grads.w[widx(oc, ic, kz, ky, kx)] +=
                        g * in.at(ic, iz, iy, ix);
                    if (want_dinput)
                      din.at(ic, iz, iy, ix) +=
                          g * w[widx(oc, ic, kz, ky, kx)];
                  }
                }
              }
          }
    return din;
  }
};

/// Feature-weighting network G: three strided 3-D conv stages with ReLU,
/// global average pooling, and a dense head with sigmoid outputs, one per
/// feature in the pool.
struct WeightingNetwork {
  std::array<int, 4> channels{3, 8, 16, 32};
  std::array<ConvStage, 3> stages;
  std::vector<double> dense_w;  // [out_dim][last_ch]
  std::vector<double> dense_b;  // [out_dim]
  int out_dim = 0;

  void init(int output_dim, Rng& rng) {
    out_dim = output_dim;
    for (int s = 0; s < 3; ++s) {
      ConvStage& st = stages[static_cast<std::size_t>(s)];
      st.in_ch = channels[static_cast<std::size_t>(s)];
      st.out_ch = channels[static_cast<std::size_t>(s) + 1];
      st.w.resize(static_cast<std::size_t>(st.out_ch) * st.in_ch * 27);
      st.b.assign(static_cast<std::size_t>(st.out_ch), 0.0);
      double bound = 1.0 / std::sqrt(static_cast<double>(st.in_ch) * 27.0);
      for (double& x : st.w) x = rng.uniform(-bound, bound);
    }
    const int last = channels.back();
    dense_w.resize(static_cast<std::size_t>(out_dim) * last);
    dense_b.assign(static_cast<std::size_t>(out_dim), 0.0);
    double bound = 1.0 / std::sqrt(static_cast<double>(last));
    for (double& x : dense_w) x = rng.uniform(-bound, bound);
  }

  /// Zero-valued gradient buffers with matching shapes.
  WeightingNetwork zeros_like() const {
    WeightingNetwork g = *this;
    for (ConvStage& st : g.stages) {
      std::fill(st.w.begin(), st.w.end(), 0.0);
      std::fill(st.b.begin(), st.b.end(), 0.0);
    }
    std::fill(g.dense_w.begin(), g.dense_w.end(), 0.0);
    std::fill(g.dense_b.begin(), g.dense_b.end(), 0.0);
    return g;
  }

  struct ForwardCache {
    Tensor4 input;
    std::array<Tensor4, 3> pre;  // pre-activation per stage
    std::vector<double> gap;
    std::vector<double> q;
  };

  std::vector<double> forward(const Tensor4& input,
                              ForwardCache* cache = nullptr) const {
    if (input.c != channels[0])
      throw invalid_argument("weighting network expects " +
                             std::to_string(channels[0]) + " channels, got " +
                             std::to_string(input.c));
    Tensor4 cur = input;
    std::array<Tensor4, 3> pre;
    for (int s = 0; s < 3; ++s) {
      pre[static_cast<std::size_t>(s)] =
          stages[static_cast<std::size_t>(s)].forward(cur);
      cur = pre[static_cast<std::size_t>(s)];
      for (double& x : cur.v) x = std::max(0.0, x);
    }

    const int last = channels.back();
    std::vector<double> gap(static_cast<std::size_t>(last), 0.0);
    const double inv_n = 1.0 / static_cast<double>(cur.spatial_size());
    for (int c = 0; c < last; ++c) {
      double acc = 0.0;
      const double* p = cur.v.data() +
                        static_cast<std::size_t>(c) * cur.spatial_size();
      for (std::int64_t i = 0; i < cur.spatial_size(); ++i) acc += p[i];
      gap[static_cast<std::size_t>(c)] = acc * inv_n;
    }

    std::vector<double> q(static_cast<std::size_t>(out_dim));
    for (int i = 0; i < out_dim; ++i) {
      double z = dense_b[static_cast<std::size_t>(i)];
      const double* wrow =
          dense_w.data() + static_cast<std::size_t>(i) * last;
      for (int c = 0; c < last; ++c)
        z += wrow[c] * gap[static_cast<std::size_t>(c)];
      q[static_cast<std::size_t>(i)] = sigmoid(z);
    }

    if (cache) {
      cache->input = input;
      cache->pre = std::move(pre);
      cache->gap = gap;
      cache->q = q;
    }
    return q;
  }

  /// Backprop from dL/dq; accumulates into grads.
  void backward(const ForwardCache& cache, const std::vector<double>& dq,
                WeightingNetwork& grads) const {
    const int last = channels.back();

    // Sigmoid head.
    std::vector<double> dgap(static_cast<std::size_t>(last), 0.0);
    for (int i = 0; i < out_dim; ++i) {
      double qi = cache.q[static_cast<std::size_t>(i)];
      double dlogit = dq[static_cast<std::size_t>(i)] * qi * (1.0 - qi);
      if (dlogit == 0.0) continue;
      grads.dense_b[static_cast<std::size_t>(i)] += dlogit;
      const double* wrow =
          dense_w.data() + static_cast<std::size_t>(i) * last;
      double* gwrow =
          grads.dense_w.data() + static_cast<std::size_t>(i) * last;
      for (int c = 0; c < last; ++c) {
        gwrow[c] += dlogit * cache.gap[static_cast<std::size_t>(c)];
        dgap[static_cast<std::size_t>(c)] += dlogit * wrow[c];
      }
    }

    // Pooling spreads the gradient uniformly; ReLU gates it.
    const Tensor4& pre3 = cache.pre[2];
    Tensor4 dcur(pre3.c, pre3.d, pre3.h, pre3.w);
    const double inv_n = 1.0 / static_cast<double>(pre3.spatial_size());
    for (int c = 0; c < last; ++c) {
      double g = dgap[static_cast<std::size_t>(c)] * inv_n;
      double* dp =
          dcur.v.data() + static_cast<std::size_t>(c) * pre3.spatial_size();
      const double* pp =
          pre3.v.data() + static_cast<std::size_t>(c) * pre3.spatial_size();
      for (std::int64_t i = 0; i < pre3.spatial_size(); ++i)
        dp[i] = pp[i] > 0.0 ? g : 0.0;
    }

    for (int s = 2; s >= 0; --s) {
      // Input of stage s is the ReLU of the previous pre-activation.
      Tensor4 in;
      if (s == 0) {
        in = cache.input;
      } else {
        in = cache.pre[static_cast<std::size_t>(s) - 1];
        for (double& x : in.v) x = std::max(0.0, x);
      }
      Tensor4 din = stages[static_cast<std::size_t>(s)].backward(
          in, dcur, grads.stages[static_cast<std::size_t>(s)], s > 0);
      if (s > 0) {
        const Tensor4& prev = cache.pre[static_cast<std::size_t>(s) - 1];
        for (std::size_t i = 0; i < din.v.size(); ++i)
          din.v[i] = prev.v[i] > 0.0 ? din.v[i] : 0.0;
        dcur = std::move(din);
      }
    }
  }
};

enum class InteractionMode { None, Full, TopM };

inline const char* interaction_mode_name(InteractionMode m) {
  switch (m) {
    case InteractionMode::None: return "none";
    case InteractionMode::Full: return "full";
    case InteractionMode::TopM: return "top_m";
  }
  return "?";
}

inline InteractionMode interaction_mode_from_name(const std::string& s) {
  if (s == "none") return InteractionMode::None;
  if (s == "full") return InteractionMode::Full;
  if (s == "top_m") return InteractionMode::TopM;
  throw invalid_argument("unknown interaction mode: " + s);
}

/// Logistic classifier with linear terms and optional second-order
/// pairwise interactions. Pairwise coefficients are stored once per
/// unordered pair i < l (no diagonal).
struct ClassifierParams {
  InteractionMode mode = InteractionMode::Full;
  int top_m = 0;  // only used in TopM mode
  int dim = 0;
  double bias = 0.0;
  std::vector<double> linear;    // dim
  std::vector<double> pairwise;  // dim*(dim-1)/2, or empty in None mode

  static std::int64_t pair_count(int dim) {
    return static_cast<std::int64_t>(dim) * (dim - 1) / 2;
  }

  /// Flat index of pair (i, l) with 0 <= i < l < dim.
  std::size_t pair_index(int i, int l) const {
    return static_cast<std::size_t>(i) * (2 * dim - i - 1) / 2 + (l - i - 1);
  }

  void init_zero(int d, InteractionMode m, int m_top = 0) {
    mode = m;
    top_m = m_top;
    dim = d;
    bias = 0.0;
    linear.assign(static_cast<std::size_t>(d), 0.0);
    pairwise.assign(
        mode == InteractionMode::None
            ? 0
            : static_cast<std::size_t>(pair_count(d)),
        0.0);
    if (mode == InteractionMode::TopM && top_m <= 1)
      throw invalid_argument("top_m interaction mode needs top_m >= 2");
  }

  ClassifierParams zeros_like() const {
    ClassifierParams g = *this;
    g.bias = 0.0;
    std::fill(g.linear.begin(), g.linear.end(), 0.0);
    std::fill(g.pairwise.begin(), g.pairwise.end(), 0.0);
    return g;
  }
};

/// Active-feature subset for TopM interactions: indices of the top_m
/// highest relevance scores, ties broken toward the smaller index,
/// returned ascending.
inline std::vector<int> top_m_active(const std::vector<double>& q, int m) {
  std::vector<int> idx(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) idx[i] = static_cast<int>(i);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    return q[static_cast<std::size_t>(a)] > q[static_cast<std::size_t>(b)];
  });
  idx.resize(std::min<std::size_t>(idx.size(), static_cast<std::size_t>(m)));
  std::sort(idx.begin(), idx.end());
  return idx;
}

/// Logit of the classifier. `active` restricts pairwise terms (TopM mode);
/// pass nullptr for all pairs.
inline double classifier_logit(const ClassifierParams& clf,
                               const std::vector<double>& fw,
                               const std::vector<int>* active = nullptr) {
  if (static_cast<int>(fw.size()) != clf.dim)
    throw invalid_argument("classifier expects dim " +
                           std::to_string(clf.dim) + ", got " +
                           std::to_string(fw.size()));
  double z = clf.bias;
  for (int i = 0; i < clf.dim; ++i)
    z += clf.linear[static_cast<std::size_t>(i)] *
         fw[static_cast<std::size_t>(i)];

  if (clf.mode == InteractionMode::None) return z;

  if (clf.mode == InteractionMode::Full) {
    const double* theta = clf.pairwise.data();
    for (int i = 0; i < clf.dim - 1; ++i) {
      double fi = fw[static_cast<std::size_t>(i)];
      if (fi == 0.0) {
        theta += clf.dim - i - 1;
        continue;
      }
      for (int l = i + 1; l < clf.dim; ++l, ++theta)
        z += *theta * fi * fw[static_cast<std::size_t>(l)];
    }
    return z;
  }

  if (!active)
    throw invalid_argument("top_m mode requires an active index set");
  for (std::size_t a = 0; a < active->size(); ++a)
    for (std::size_t b = a + 1; b < active->size(); ++b) {
      int i = (*active)[a], l = (*active)[b];
      z += clf.pairwise[clf.pair_index(i, l)] * fw[static_cast<std::size_t>(i)] *
           fw[static_cast<std::size_t>(l)];
    }
  return z;
}

inline double classifier_forward(const ClassifierParams& clf,
                                 const std::vector<double>& fw,
                                 const std::vector<int>* active = nullptr) {
  for (double v : fw)
    if (!std::isfinite(v))
      throw invalid_argument("non-finite classifier input");
  return sigmoid(classifier_logit(clf, fw, active));
}

/// dz/dfw for every feature plus parameter gradients, given upstream dz.
/// Returns dfw; accumulates clf gradients into grads.
inline std::vector<double> classifier_backward(
    const ClassifierParams& clf, const std::vector<double>& fw, double dz,
    ClassifierParams& grads, const std::vector<int>* active = nullptr) {
  std::vector<double> dfw(fw.size(), 0.0);
  grads.bias += dz;
  for (int i = 0; i < clf.dim; ++i) {
    grads.linear[static_cast<std::size_t>(i)] +=
        dz * fw[static_cast<std::size_t>(i)];
    dfw[static_cast<std::size_t>(i)] =
        dz * clf.linear[static_cast<std::size_t>(i)];
  }
  if (clf.mode == InteractionMode::None) return dfw;

  if (clf.mode == InteractionMode::Full) {
    const double* theta = clf.pairwise.data();
    double* gtheta = grads.pairwise.data();
    for (int i = 0; i < clf.dim - 1; ++i) {
      double fi = fw[static_cast<std::size_t>(i)];
      double acc_i = 0.0;
      for (int l = i + 1; l < clf.dim; ++l, ++theta, ++gtheta) {
        double fl = fw[static_cast<std::size_t>(l)];
        *gtheta += dz * fi * fl;
        acc_i += *theta * fl;
        dfw[static_cast<std::size_t>(l)] += dz * *theta * fi;
      }
      dfw[static_cast<std::size_t>(i)] += dz * acc_i;
    }
    return dfw;
  }

  if (!active)
    throw invalid_argument("top_m mode requires an active index set");
  for (std::size_t a = 0; a < active->size(); ++a)
    for (std::size_t b = a + 1; b < active->size(); ++b) {
      int i = (*active)[a], l = (*active)[b];
      std::size_t pi = clf.pair_index(i, l);
      double fi = fw[static_cast<std::size_t>(i)];
      double fl = fw[static_cast<std::size_t>(l)];
      grads.pairwise[pi] += dz * fi * fl;
      dfw[static_cast<std::size_t>(i)] += dz * clf.pairwise[pi] * fl;
      dfw[static_cast<std::size_t>(l)] += dz * clf.pairwise[pi] * fi;
    }
  return dfw;
}

/// Per-feature z-scoring with training-set statistics; sigma floored at
/// 1e-8 so constant features stay finite.
struct StandardizationStats {
  std::vector<double> mu;
  std::vector<double> sigma;

  std::vector<double> apply(const std::vector<double>& f) const {
    if (f.size() != mu.size())
      throw invalid_argument("standardization dim mismatch");
    std::vector<double> x(f.size());
    for (std::size_t i = 0; i < f.size(); ++i)
      x[i] = (f[i] - mu[i]) / sigma[i];
    return x;
  }
};

inline std::vector<double> weighted_fusion(const std::vector<double>& f,
                                           const std::vector<double>& q) {
  if (f.size() != q.size())
    throw invalid_argument("weighted_fusion length mismatch: " +
                           std::to_string(f.size()) + " vs " +
                           std::to_string(q.size()));
  std::vector<double> fw(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) fw[i] = f[i] * q[i];
  return fw;
}

/// Sparse per-patient feature set: binary mask q_i >= T applied to f.
struct Fingerprint {
  std::vector<std::uint8_t> mask;
  std::vector<double> values;
  double threshold = 0.0;

  std::int64_t n_selected() const {
    std::int64_t n = 0;
    for (auto m : mask) n += m;
    return n;
  }
};

inline Fingerprint binarize_and_fingerprint(const std::vector<double>& f,
                                            const std::vector<double>& q,
                                            double threshold) {
  if (f.size() != q.size())
    throw invalid_argument("fingerprint length mismatch");
  if (!(threshold >= 0.0 && threshold <= 1.0))
    throw invalid_argument("threshold must be in [0,1], got " +
                           std::to_string(threshold));
  Fingerprint fp;
  fp.threshold = threshold;
  fp.mask.resize(f.size());
  fp.values.resize(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    fp.mask[i] = q[i] >= threshold ? 1 : 0;  // inclusive comparison
    fp.values[i] = fp.mask[i] ? f[i] : 0.0;
  }
  return fp;
}

/// Joint trainable parameters (network omega, classifier psi).
struct ModelParams {
  WeightingNetwork net;
  ClassifierParams clf;
  bool selection_enabled = true;  // false = unweighted ablation (q == 1)

  ModelParams zeros_like() const {
    ModelParams g;
    g.net = net.zeros_like();
    g.clf = clf.zeros_like();
    g.selection_enabled = selection_enabled;
    return g;
  }

  /// Visit every parameter vector in the declared (serialization) order.
  /// The visitor receives either std::vector<double>& or double& (bias).
  template <typename F>
  static void visit(ModelParams& p, F&& f) {
    for (ConvStage& st : p.net.stages) {
      f(st.w);
      f(st.b);
    }
    f(p.net.dense_w);
    f(p.net.dense_b);
    f(p.clf.bias);
    f(p.clf.linear);
    f(p.clf.pairwise);
  }

  /// Visit two parameter sets in lockstep (parameters and gradients).
  template <typename F>
  static void visit_pair(ModelParams& a, ModelParams& b, F&& f) {
    for (int s = 0; s < 3; ++s) {
      f(a.net.stages[static_cast<std::size_t>(s)].w,
        b.net.stages[static_cast<std::size_t>(s)].w);
      f(a.net.stages[static_cast<std::size_t>(s)].b,
        b.net.stages[static_cast<std::size_t>(s)].b);
    }
    f(a.net.dense_w, b.net.dense_w);
    f(a.net.dense_b, b.net.dense_b);
    f(a.clf.bias, b.clf.bias);
    f(a.clf.linear, b.clf.linear);
    f(a.clf.pairwise, b.clf.pairwise);
  }

  std::int64_t total_count() const {
    std::int64_t n = 0;
    auto& self = *const_cast<ModelParams*>(this);
    visit(self, [&n](auto& x) {
      if constexpr (std::is_same_v<std::decay_t<decltype(x)>, double>) {
        n += 1;
      } else {
        n += static_cast<std::int64_t>(x.size());
      }
    });
    return n;
  }
};

constexpr double kProbClamp = 1e-7;

inline double cross_entropy(double prob, int label) {
  double p = std::min(1.0 - kProbClamp, std::max(kProbClamp, prob));
  return label == 1 ? -std::log(p) : -std::log(1.0 - p);
}

struct EvalResult {
  double loss = 0.0;
  double prob = 0.0;
};

/// Forward-only loss evaluation (no gradient buffers).
inline EvalResult eval_loss(const ModelParams& params,
                            const StandardizationStats& stats,
                            const std::vector<double>& features,
                            const Tensor4& roi_input, int label) {
  std::vector<double> x = stats.apply(features);
  std::vector<double> q = params.selection_enabled
                              ? params.net.forward(roi_input)
                              : std::vector<double>(x.size(), 1.0);
  std::vector<double> fw = weighted_fusion(x, q);
  std::vector<int> active;
  const std::vector<int>* ap = nullptr;
  if (params.clf.mode == InteractionMode::TopM) {
    active = top_m_active(q, params.clf.top_m);
    ap = &active;
  }
  double prob = classifier_forward(params.clf, fw, ap);
  return {cross_entropy(prob, label), prob};
}

struct LossResult {
  double loss = 0.0;
  double prob = 0.0;  // unclamped prediction
  ModelParams grads;  // same shapes as the parameters
};

/// Cross-entropy loss of one study plus exact gradients for every
/// parameter. Radiomic features are treated as constants; the gradient
/// flows through the classifier, the elementwise product, and the
/// weighting network. The loss uses clamped probabilities; inside the
/// clamp region the gradient is zero, matching the clamped value exactly.
inline LossResult loss_and_gradients(const ModelParams& params,
                                     const StandardizationStats& stats,
                                     const std::vector<double>& features,
                                     const Tensor4& roi_input, int label) {
  if (label != 0 && label != 1)
    throw invalid_argument("label must be 0 or 1, got " +
                           std::to_string(label));

  std::vector<double> x = stats.apply(features);
  for (double v : x)
    if (!std::isfinite(v))
      throw invalid_argument("non-finite standardized feature");

  WeightingNetwork::ForwardCache cache;
  std::vector<double> q;
  if (params.selection_enabled) {
    q = params.net.forward(roi_input, &cache);
  } else {
    q.assign(x.size(), 1.0);
  }

  std::vector<double> fw = weighted_fusion(x, q);

  std::vector<int> active;
  const std::vector<int>* active_ptr = nullptr;
  if (params.clf.mode == InteractionMode::TopM) {
    active = top_m_active(q, params.clf.top_m);
    active_ptr = &active;
  }

  double z = classifier_logit(params.clf, fw, active_ptr);
  if (!std::isfinite(z))
    throw error("non-finite classifier logit");
  double prob = sigmoid(z);

  LossResult res;
  res.loss = cross_entropy(prob, label);
  res.prob = prob;
  res.grads = params.zeros_like();

  // d loss / d z; zero when the clamp is active.
  double dz = (prob > kProbClamp && prob < 1.0 - kProbClamp)
                  ? prob - static_cast<double>(label)
                  : 0.0;

  std::vector<double> dfw =
      classifier_backward(params.clf, fw, dz, res.grads.clf, active_ptr);

  if (params.selection_enabled) {
    std::vector<double> dq(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) dq[i] = dfw[i] * x[i];
    params.net.backward(cache, dq, res.grads.net);
  }
  return res;
}

}  // namespace radfp
