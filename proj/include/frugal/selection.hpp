#pragma once

#include "frugal/invnet.hpp"
#include "frugal/types.hpp"

#include <span>
#include <string_view>
#include <vector>

namespace frugal {

using Display = std::vector<SampleId>;

/// Ids paired row-for-row with their ambient feature vectors.
struct PointSet {
  std::vector<SampleId> ids;
  Matrix features;

  std::size_t size() const noexcept { return ids.size(); }
};

enum class StrategyKind { Random, Maxmin, Uncertainty, Optimized };

struct Strategy {
  StrategyKind kind = StrategyKind::Optimized;
  // Exponents of the optimized score; ignored by the other strategies.
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;
};

std::string_view to_string(StrategyKind kind) noexcept;
StrategyKind parse_strategy_kind(std::string_view text);

/// b distinct ids drawn uniformly without replacement, in draw order.
Display select_random(std::span<const SampleId> pool, std::size_t b, RngStream& rng);

/// Greedy farthest-point selection. Each step picks the pool point with the
/// largest minimum distance to anchored and already-picked points; with no
/// anchors the first pick is the point with the largest mean distance to the
/// pool. Ties go to the smallest id.
Display select_maxmin(const PointSet& pool, const PointSet& anchored, std::size_t b);

/// Uncertainty u = 1 - 2|p - 0.5|, highest first; ties go to the smallest id.
Display select_uncertainty(const InvertibleNet& net, const PointSet& pool, std::size_t b);

/// Probability-style display score, reconstructed as a product of three
/// per-sample factors, each in [0, 1]:
///
///   s_i = u_i^alpha * div_i^beta * rep_i^gamma
///
/// u_i is the uncertainty above; div_i the maxmin criterion divided by the
/// pool's largest pairwise distance (updated after every pick); rep_i the mean
/// Gaussian-kernel similarity to the pool (bandwidth = median pairwise
/// distance) divided by its pool maximum. Greedy argmax, ties to smallest id.
///
/// A pool whose points all coincide has no geometry to score; it falls back to
/// select_random and reports it on std::clog.
Display select_optimized(const InvertibleNet& net, const PointSet& pool,
                         const PointSet& anchored, std::size_t b, const Strategy& strategy,
                         RngStream& rng);

/// Dispatches on strategy.kind.
Display select_display(const Strategy& strategy, const InvertibleNet& net, const PointSet& pool,
                       const PointSet& anchored, std::size_t b, RngStream& rng);

}  // namespace frugal
