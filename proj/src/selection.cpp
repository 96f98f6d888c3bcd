#include "frugal/selection.hpp"

#include "frugal/error.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <string>

namespace frugal {

std::string_view to_string(StrategyKind kind) noexcept {
  switch (kind) {
    case StrategyKind::Random: return "random";
    case StrategyKind::Maxmin: return "maxmin";
    case StrategyKind::Uncertainty: return "uncertainty";
    case StrategyKind::Optimized: return "optimized";
  }
  return "random";
}

StrategyKind parse_strategy_kind(std::string_view text) {
  if (text == "random") return StrategyKind::Random;
  if (text == "maxmin") return StrategyKind::Maxmin;
  if (text == "uncertainty") return StrategyKind::Uncertainty;
  if (text == "optimized") return StrategyKind::Optimized;
  throw Error(ErrorKind::InvalidConfig, "unknown strategy '" + std::string(text) + "'");
}

namespace {

void require_pool(std::size_t pool, std::size_t b) {
  if (b == 0 || pool < b) {
    throw Error(ErrorKind::InsufficientPool,
                "cannot select " + std::to_string(b) + " samples from a pool of " +
                    std::to_string(pool));
  }
}

double power(double x, double e) {
  if (e == 0.0) return 1.0;
  if (e == 1.0) return x;
  return std::pow(x, e);
}

struct Geometry {
  Matrix pairwise;         // pool x pool distances
  double max_distance = 0.0;
};

Geometry pool_geometry(const PointSet& pool) {
  const std::size_t n = pool.size();
  Geometry g{Matrix(n, n)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dist = distance(pool.features.row(i), pool.features.row(j));
      g.pairwise(i, j) = dist;
      g.pairwise(j, i) = dist;
      g.max_distance = std::max(g.max_distance, dist);
    }
  }
  return g;
}

/// Incrementally maintained maxmin criterion, already divided by the pool's
/// largest pairwise distance.
class Diversity {
public:
  Diversity(const PointSet& pool, const PointSet& anchored, const Geometry& geometry)
      : geometry_(geometry),
        scale_(geometry.max_distance > 0.0 ? geometry.max_distance : 1.0),
        nearest_(pool.size(), std::numeric_limits<double>::infinity()),
        anchored_(anchored.size() > 0) {
    if (anchored.size() > 0 && anchored.features.cols() != pool.features.cols()) {
      throw Error(ErrorKind::Shape, "anchored and pool features differ in dimension");
    }
    const std::size_t n = pool.size();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t a = 0; a < anchored.size(); ++a) {
        nearest_[i] =
            std::min(nearest_[i], distance(pool.features.row(i), anchored.features.row(a)));
      }
    }
    if (!anchored_) {
      mean_.resize(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += geometry_.pairwise(i, j);
        mean_[i] = n > 1 ? s / static_cast<double>(n - 1) : 0.0;
      }
    }
  }

  double value(std::size_t i) const {
    return (anchored_ ? nearest_[i] : mean_[i]) / scale_;
  }

  void add(std::size_t picked) {
    anchored_ = true;
    for (std::size_t i = 0; i < nearest_.size(); ++i) {
      nearest_[i] = std::min(nearest_[i], geometry_.pairwise(i, picked));
    }
  }

private:
  const Geometry& geometry_;
  double scale_;
  std::vector<double> nearest_;
  std::vector<double> mean_;
  bool anchored_;
};

std::vector<double> uncertainties(const InvertibleNet& net, const PointSet& pool) {
  std::vector<double> u = classify_batch(net, pool.features);
  for (double& p : u) p = 1.0 - 2.0 * std::abs(p - 0.5);
  return u;
}

std::vector<double> representativeness(const Geometry& geometry) {
  const Matrix& d = geometry.pairwise;
  const std::size_t n = d.rows();
  std::vector<double> pairs;
  pairs.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) pairs.push_back(d(i, j));
  double bandwidth = geometry.max_distance;
  if (!pairs.empty()) {
    auto mid = pairs.begin() + static_cast<std::ptrdiff_t>(pairs.size() / 2);
    std::nth_element(pairs.begin(), mid, pairs.end());
    if (*mid > 0.0) bandwidth = *mid;
  }
  const double denom = 2.0 * bandwidth * bandwidth;
  std::vector<double> rep(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += std::exp(-d(i, j) * d(i, j) / denom);
    rep[i] = s / static_cast<double>(n);
  }
  const double top = *std::max_element(rep.begin(), rep.end());
  for (double& r : rep) r /= top;
  return rep;
}

// Index of the best not-yet-picked entry; ties go to the smallest id.
std::size_t argmax(const std::vector<double>& score, const std::vector<bool>& taken,
                   const std::vector<SampleId>& ids) {
  std::size_t best = score.size();
  for (std::size_t i = 0; i < score.size(); ++i) {
    if (taken[i]) continue;
    if (best == score.size() || score[i] > score[best] ||
        (score[i] == score[best] && ids[i] < ids[best])) {
      best = i;
    }
  }
  return best;
}

}  // namespace

Display select_random(std::span<const SampleId> pool, std::size_t b, RngStream& rng) {
  require_pool(pool.size(), b);
  std::vector<SampleId> items(pool.begin(), pool.end());
  for (std::size_t k = 0; k < b; ++k) {
    const std::size_t j = k + rng.uniform_index(items.size() - k);
    std::swap(items[k], items[j]);
  }
  items.resize(b);
  return items;
}

Display select_maxmin(const PointSet& pool, const PointSet& anchored, std::size_t b) {
  require_pool(pool.size(), b);
  const Geometry geometry = pool_geometry(pool);
  Diversity diversity(pool, anchored, geometry);
  std::vector<bool> taken(pool.size(), false);
  std::vector<double> score(pool.size());
  Display out;
  for (std::size_t k = 0; k < b; ++k) {
    for (std::size_t i = 0; i < pool.size(); ++i) score[i] = diversity.value(i);
    const std::size_t pick = argmax(score, taken, pool.ids);
    taken[pick] = true;
    diversity.add(pick);
    out.push_back(pool.ids[pick]);
  }
  return out;
}

Display select_uncertainty(const InvertibleNet& net, const PointSet& pool, std::size_t b) {
  require_pool(pool.size(), b);
  const std::vector<double> u = uncertainties(net, pool);
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) {
    if (u[a] != u[c]) return u[a] > u[c];
    return pool.ids[a] < pool.ids[c];
  });
  Display out;
  for (std::size_t k = 0; k < b; ++k) out.push_back(pool.ids[order[k]]);
  return out;
}

Display select_optimized(const InvertibleNet& net, const PointSet& pool,
                         const PointSet& anchored, std::size_t b, const Strategy& strategy,
                         RngStream& rng) {
  require_pool(pool.size(), b);
  for (double e : {strategy.alpha, strategy.beta, strategy.gamma}) {
    if (!std::isfinite(e) || e < 0.0) {
      throw Error(ErrorKind::InvalidConfig, "optimized exponents must be finite and >= 0");
    }
  }
  const Geometry geometry = pool_geometry(pool);
  if (geometry.max_distance == 0.0) {
    std::clog << "frugal: optimized display over a degenerate pool (all points coincide); "
                 "falling back to random selection\n";
    return select_random(pool.ids, b, rng);
  }

  const std::vector<double> u = uncertainties(net, pool);
  const std::vector<double> rep =
      strategy.gamma != 0.0 ? representativeness(geometry) : std::vector<double>(pool.size(), 1.0);
  Diversity diversity(pool, anchored, geometry);

  std::vector<bool> taken(pool.size(), false);
  std::vector<double> score(pool.size());
  Display out;
  for (std::size_t k = 0; k < b; ++k) {
    for (std::size_t i = 0; i < pool.size(); ++i) {
      score[i] = power(u[i], strategy.alpha) * power(diversity.value(i), strategy.beta) *
                 power(rep[i], strategy.gamma);
    }
    const std::size_t pick = argmax(score, taken, pool.ids);
    taken[pick] = true;
    diversity.add(pick);
    out.push_back(pool.ids[pick]);
  }
  return out;
}

Display select_display(const Strategy& strategy, const InvertibleNet& net, const PointSet& pool,
                       const PointSet& anchored, std::size_t b, RngStream& rng) {
  switch (strategy.kind) {
    case StrategyKind::Random: return select_random(pool.ids, b, rng);
    case StrategyKind::Maxmin: return select_maxmin(pool, anchored, b);
    case StrategyKind::Uncertainty: return select_uncertainty(net, pool, b);
    case StrategyKind::Optimized:
      return select_optimized(net, pool, anchored, b, strategy, rng);
  }
  throw Error(ErrorKind::InvalidConfig, "unknown strategy");
}

}  // namespace frugal
