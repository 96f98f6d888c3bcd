#pragma once

// Reference implementations used only by the tests. They are written
// independently of the library and favor obviousness over speed.

#include "frugal/linalg.hpp"
#include "frugal/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace oracle {

/// Singular values by one-sided Jacobi rotations on the columns, descending.
inline std::vector<double> jacobi_singular_values(const frugal::Matrix& a) {
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<std::vector<double>> col(n, std::vector<double>(m));
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < m; ++i) col[j][i] = a(i, j);

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double alpha = 0, beta = 0, gamma = 0;
        for (std::size_t i = 0; i < m; ++i) {
          alpha += col[p][i] * col[p][i];
          beta += col[q][i] * col[q][i];
          gamma += col[p][i] * col[q][i];
        }
        if (gamma == 0.0) continue;
        off = std::max(off, std::abs(gamma) / std::sqrt(alpha * beta));
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t), s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double x = col[p][i], y = col[q][i];
          col[p][i] = c * x - s * y;
          col[q][i] = s * x + c * y;
        }
      }
    }
    if (off < 1e-15) break;
  }
  std::vector<double> sv;
  for (const auto& c : col) {
    double s = 0;
    for (double v : c) s += v * v;
    sv.push_back(std::sqrt(s));
  }
  std::sort(sv.rbegin(), sv.rend());
  return sv;
}

/// EER by brute force: every threshold halfway between consecutive distinct
/// scores, one below the minimum and one above the maximum; each operating
/// point is recounted from scratch. Picks the smallest |FPR - FNR|, earliest
/// (lowest) threshold on ties, and reports the mean of the two rates in percent.
inline double exhaustive_eer(std::span<const double> scores, std::span<const frugal::Label> labels) {
  std::vector<double> distinct(scores.begin(), scores.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  std::vector<double> thresholds;
  thresholds.push_back(-std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i + 1 < distinct.size(); ++i)
    thresholds.push_back(distinct[i] + (distinct[i + 1] - distinct[i]) / 2.0);
  thresholds.push_back(std::numeric_limits<double>::infinity());

  double pos = 0, neg = 0;
  for (auto y : labels) (y == frugal::Label::Change ? pos : neg) += 1;

  double best_gap = std::numeric_limits<double>::infinity(), best = 0;
  for (double t : thresholds) {
    double fn = 0, fp = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const bool predicted_change = scores[i] > t;
      if (labels[i] == frugal::Label::Change && !predicted_change) fn += 1;
      if (labels[i] == frugal::Label::NoChange && predicted_change) fp += 1;
    }
    const double fnr = fn / pos, fpr = fp / neg;
    if (std::abs(fpr - fnr) < best_gap) {
      best_gap = std::abs(fpr - fnr);
      best = (fpr + fnr) / 2.0;
    }
  }
  return 100.0 * best;
}

}  // namespace oracle
