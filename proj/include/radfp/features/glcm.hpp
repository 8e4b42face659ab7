#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "radfp/discretize.hpp"
#include "radfp/error.hpp"

namespace radfp {

/// Symmetric co-occurrence counts for one direction offset; counts[i*ng+j]
/// with zero-based levels. Every ordered voxel pair contributes to both
/// (i,j) and (j,i).
inline std::vector<std::int64_t> glcm_counts(const DiscretizedPatch& dp,
                                             const std::array<int, 3>& dir) {
  const int ng = dp.n_levels;
  std::vector<std::int64_t> counts(static_cast<std::size_t>(ng) * ng, 0);
  const Dims d = dp.dims;
  for (int z = 0; z < d.d; ++z)
    for (int y = 0; y < d.h; ++y)
      for (int x = 0; x < d.w; ++x) {
        int z2 = z + dir[0], y2 = y + dir[1], x2 = x + dir[2];
        if (!in_bounds(d, z2, y2, x2)) continue;
        int a = dp.at(z, y, x) - 1;
        int b = dp.at(z2, y2, x2) - 1;
        ++counts[static_cast<std::size_t>(a) * ng + b];
        ++counts[static_cast<std::size_t>(b) * ng + a];
      }
  return counts;
}

namespace detail {

/// The 24 GLCM features for one normalized probability matrix.
inline std::array<double, 24> glcm_features_from_matrix(
    const std::vector<double>& p, int ng) {
  auto at = [&](int i, int j) { return p[static_cast<std::size_t>(i) * ng + j]; };

  std::vector<double> px(ng, 0.0), py(ng, 0.0);
  std::vector<double> pxy_sum(2 * ng - 1, 0.0);   // k = i + j, 0-based levels
  std::vector<double> pxy_diff(ng, 0.0);          // k = |i - j|
  for (int i = 0; i < ng; ++i)
    for (int j = 0; j < ng; ++j) {
      double v = at(i, j);
      px[i] += v;
      py[j] += v;
      pxy_sum[i + j] += v;
      pxy_diff[std::abs(i - j)] += v;
    }

  // Levels are 1-based in the formulas.
  double mu_x = 0.0, mu_y = 0.0;
  for (int i = 0; i < ng; ++i) {
    mu_x += (i + 1.0) * px[i];
    mu_y += (i + 1.0) * py[i];
  }
  double sig_x = 0.0, sig_y = 0.0, hx = 0.0, hy = 0.0;
  for (int i = 0; i < ng; ++i) {
    sig_x += (i + 1.0 - mu_x) * (i + 1.0 - mu_x) * px[i];
    sig_y += (i + 1.0 - mu_y) * (i + 1.0 - mu_y) * py[i];
    if (px[i] > 0.0) hx -= px[i] * std::log2(px[i]);
    if (py[i] > 0.0) hy -= py[i] * std::log2(py[i]);
  }

  double autocorr = 0.0, contrast = 0.0, cluster2 = 0.0, cluster3 = 0.0,
         cluster4 = 0.0, energy = 0.0, entropy = 0.0, idm = 0.0, idmn = 0.0,
         id = 0.0, idn = 0.0, inv_var = 0.0, max_prob = 0.0, sum_sq = 0.0,
         corr_num = 0.0, hxy1 = 0.0;
  for (int i = 0; i < ng; ++i)
    for (int j = 0; j < ng; ++j) {
      double v = at(i, j);
      double gi = i + 1.0, gj = j + 1.0;
      double diff = gi - gj;
      autocorr += gi * gj * v;
      contrast += diff * diff * v;
      double s = gi + gj - mu_x - mu_y;
      cluster2 += s * s * v;
      cluster3 += s * s * s * v;
      cluster4 += s * s * s * s * v;
      energy += v * v;
      idm += v / (1.0 + diff * diff);
      idmn += v / (1.0 + (diff / ng) * (diff / ng));
      id += v / (1.0 + std::abs(diff));
      idn += v / (1.0 + std::abs(diff) / ng);
      if (i != j) inv_var += v / (diff * diff);
      max_prob = std::max(max_prob, v);
      sum_sq += (gi - mu_x) * (gi - mu_x) * v;
      corr_num += gi * gj * v;
      if (v > 0.0) {
        entropy -= v * std::log2(v);
        hxy1 -= v * std::log2(px[i] * py[j]);
      }
    }

  double hxy2 = 0.0;
  for (int i = 0; i < ng; ++i)
    for (int j = 0; j < ng; ++j) {
      double q = px[i] * py[j];
      if (q > 0.0) hxy2 -= q * std::log2(q);
    }

  // Flat regions have zero marginal variance; correlation defaults to 1.
  double correlation = 1.0;
  if (sig_x > 0.0 && sig_y > 0.0)
    correlation =
        (corr_num - mu_x * mu_y) / std::sqrt(sig_x) / std::sqrt(sig_y);

  double diff_avg = 0.0, diff_ent = 0.0;
  for (int k = 0; k < ng; ++k) {
    diff_avg += k * pxy_diff[k];
    if (pxy_diff[k] > 0.0) diff_ent -= pxy_diff[k] * std::log2(pxy_diff[k]);
  }
  double diff_var = 0.0;
  for (int k = 0; k < ng; ++k)
    diff_var += (k - diff_avg) * (k - diff_avg) * pxy_diff[k];

  double sum_avg = 0.0, sum_ent = 0.0;
  for (int k = 0; k < 2 * ng - 1; ++k) {
    double lv = k + 2.0;  // i + j with 1-based levels
    sum_avg += lv * pxy_sum[k];
    if (pxy_sum[k] > 0.0) sum_ent -= pxy_sum[k] * std::log2(pxy_sum[k]);
  }

  double hmax = std::max(hx, hy);
  double imc1 = hmax > 0.0 ? (entropy - hxy1) / hmax : 0.0;
  double imc2 = std::sqrt(
      std::max(0.0, 1.0 - std::exp(-2.0 * std::max(0.0, hxy2 - entropy))));

  // MCC: second-largest eigenvalue of Q = Dx^-1 P Dy^-1 P^T. With the
  // symmetric accumulation Q = M^2 for M = D^-1/2 P D^-1/2 restricted to
  // occupied levels, so a self-adjoint solve suffices.
  double mcc = 1.0;
  {
    std::vector<int> occ;
    for (int i = 0; i < ng; ++i)
      if (px[i] > 0.0) occ.push_back(i);
    const int m = static_cast<int>(occ.size());
    if (m >= 2) {
      Eigen::MatrixXd msym(m, m);
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
          msym(a, b) =
              at(occ[a], occ[b]) / std::sqrt(px[occ[a]] * px[occ[b]]);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(msym);
      std::vector<double> q_eigs(m);
      for (int a = 0; a < m; ++a)
        q_eigs[a] = es.eigenvalues()[a] * es.eigenvalues()[a];
      std::sort(q_eigs.begin(), q_eigs.end(), std::greater<>());
      mcc = std::sqrt(std::max(0.0, q_eigs[1]));
    }
  }

  return {
      autocorr,     // Autocorrelation
      mu_x,         // JointAverage
      cluster4,     // ClusterProminence
      cluster3,     // ClusterShade
      cluster2,     // ClusterTendency
      contrast,     // Contrast
      correlation,  // Correlation
      diff_avg,     // DifferenceAverage
      diff_ent,     // DifferenceEntropy
      diff_var,     // DifferenceVariance
      energy,       // JointEnergy
      entropy,      // JointEntropy
      imc1,         // IMC1
      imc2,         // IMC2
      idm,          // IDM
      idmn,         // IDMN
      id,           // ID
      idn,          // IDN
      inv_var,      // InverseVariance
      max_prob,     // MaximumProbability
      sum_avg,      // SumAverage
      sum_ent,      // SumEntropy
      sum_sq,       // SumSquares
      mcc,          // MCC
  };
}

}  // namespace detail

/// GLCM features averaged over the 13 unique direction offsets. Directions
/// that produce no voxel pair (possible on flat patches) are excluded from
/// the average.
inline std::array<double, 24> glcm_features(const DiscretizedPatch& dp) {
  std::array<double, 24> acc{};
  int valid = 0;
  for (const auto& dir : texture_directions()) {
    auto counts = glcm_counts(dp, dir);
    std::int64_t total = 0;
    for (std::int64_t c : counts) total += c;
    if (total == 0) continue;
    std::vector<double> p(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i)
      p[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
    auto f = detail::glcm_features_from_matrix(p, dp.n_levels);
    for (std::size_t i = 0; i < f.size(); ++i) acc[i] += f[i];
    ++valid;
  }
  if (valid == 0)
    throw invalid_argument("patch too small for any GLCM offset");
  for (double& v : acc) v /= valid;
  return acc;
}

}  // namespace radfp
