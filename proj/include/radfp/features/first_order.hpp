#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "radfp/discretize.hpp"
#include "radfp/volume.hpp"

namespace radfp {

/// Percentile with linear interpolation between order statistics
/// (rank = (N-1) * p / 100 on the sorted sample).
inline double percentile(const std::vector<double>& sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  double rank = (n - 1) * p / 100.0;
  std::size_t lo = static_cast<std::size_t>(rank);
  if (lo >= n - 1) return sorted[n - 1];
  double frac = rank - lo;
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

/// The 19 first-order statistics, in catalog order. Entropy and Uniformity
/// are computed on the discretized histogram; all other statistics use the
/// raw intensities. Skewness and kurtosis of constant data are 0.
inline std::array<double, 19> first_order_features(
    const Volume& patch, const DiscretizedPatch& dp) {
  const std::vector<double>& x = patch.voxels;
  const double n = static_cast<double>(x.size());

  std::vector<double> sorted = x;
  std::sort(sorted.begin(), sorted.end());

  double sum = 0.0, sum_sq = 0.0;
  for (double v : x) {
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / n;

  double m2 = 0.0, m3 = 0.0, m4 = 0.0, mad = 0.0;
  for (double v : x) {
    double d = v - mean;
    double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
    mad += std::abs(d);
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  mad /= n;

  const double p10 = percentile(sorted, 10.0);
  const double p25 = percentile(sorted, 25.0);
  const double p75 = percentile(sorted, 75.0);
  const double p90 = percentile(sorted, 90.0);

  // Robust MAD: deviation within the [P10, P90] band. The band can miss
  // every sample for tiny n; report 0 then.
  double rmad = 0.0;
  {
    double rsum = 0.0;
    std::size_t rcount = 0;
    for (double v : x)
      if (v >= p10 && v <= p90) {
        rsum += v;
        ++rcount;
      }
    if (rcount > 0) {
      double rmean = rsum / rcount;
      double racc = 0.0;
      for (double v : x)
        if (v >= p10 && v <= p90) racc += std::abs(v - rmean);
      rmad = racc / rcount;
    }
  }

  // Histogram probabilities over the discretized levels.
  std::vector<double> prob(static_cast<std::size_t>(dp.n_levels), 0.0);
  for (int lev : dp.levels) prob[static_cast<std::size_t>(lev - 1)] += 1.0;
  double entropy = 0.0, uniformity = 0.0;
  for (double& p : prob) {
    p /= n;
    if (p > 0.0) entropy -= p * std::log2(p);
    uniformity += p * p;
  }

  const double skewness = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
  const double kurtosis = m2 > 0.0 ? m4 / (m2 * m2) : 0.0;

  return {
      sum_sq,                          // Energy
      patch.voxel_volume() * sum_sq,   // TotalEnergy
      entropy,                         // Entropy
      sorted.front(),                  // Minimum
      p10,                             // 10thPercentile
      p90,                             // 90thPercentile
      sorted.back(),                   // Maximum
      mean,                            // Mean
      percentile(sorted, 50.0),        // Median
      p75 - p25,                       // InterquartileRange
      sorted.back() - sorted.front(),  // Range
      mad,                             // MeanAbsoluteDeviation
      rmad,                            // RobustMeanAbsoluteDeviation
      std::sqrt(sum_sq / n),           // RootMeanSquared
      std::sqrt(m2),                   // StandardDeviation
      skewness,                        // Skewness
      kurtosis,                        // Kurtosis
      m2,                              // Variance
      uniformity,                      // Uniformity
  };
}

}  // namespace radfp
