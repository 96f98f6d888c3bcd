#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "frugal/error.hpp"
#include "frugal/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

using namespace frugal;

namespace {

std::vector<SampleId> iota_ids(std::size_t n) {
  std::vector<SampleId> ids(n);
  std::iota(ids.begin(), ids.end(), SampleId{1});
  return ids;
}

PointSet random_points(std::size_t n, std::size_t d, RngStream& rng) {
  PointSet p{iota_ids(n), Matrix(n, d)};
  for (double& v : p.features.data()) v = rng.normal();
  return p;
}

/// Net whose change probability for x = (t, 0) is sigmoid(t).
InvertibleNet logit_net() {
  Matrix head(2, 2, 0.0);
  head(0, 0) = 1.0;
  return InvertibleNet::identity(2, 0).with_head(head);
}

PointSet probability_points(const std::vector<double>& probs) {
  PointSet p{iota_ids(probs.size()), Matrix(probs.size(), 2)};
  for (std::size_t i = 0; i < probs.size(); ++i) p.features(i, 0) = std::log(probs[i] / (1.0 - probs[i]));
  return p;
}

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::Io;
}

}  // namespace

TEST_CASE("random selection") {
  RngStream rng(1);
  const auto pool = iota_ids(16);
  Display all = select_random(pool, 16, rng);
  std::sort(all.begin(), all.end());
  CHECK(all == pool);
  CHECK(kind_of([&] { select_random(pool, 0, rng); }) == ErrorKind::InsufficientPool);
  CHECK(kind_of([&] { select_random(pool, 17, rng); }) == ErrorKind::InsufficientPool);

  const Display d = select_random(iota_ids(100), 30, rng);
  CHECK(std::set<SampleId>(d.begin(), d.end()).size() == 30);
}

TEST_CASE("random selection is uniform") {
  RngStream rng(2);
  const auto pool = iota_ids(10000);
  constexpr int kTrials = 10000;
  std::vector<int> bucket(10, 0);
  for (int t = 0; t < kTrials; ++t) bucket[(select_random(pool, 1, rng)[0] - 1) / 1000] += 1;
  const double expected = kTrials / 10.0, sigma = std::sqrt(kTrials * 0.1 * 0.9);
  for (int c : bucket) CHECK(std::abs(c - expected) < 3.0 * sigma);
}

TEST_CASE("uncertainty selection") {
  const InvertibleNet net = logit_net();
  const PointSet pool = probability_points({0.51, 0.9, 0.1});
  CHECK(select_uncertainty(net, pool, 1) == Display{1});
  CHECK(select_uncertainty(net, pool, 3) == Display{1, 2, 3});

  const InvertibleNet flat = InvertibleNet::identity(2, 0);
  RngStream rng(3);
  const PointSet ties = random_points(20, 2, rng);
  CHECK(select_uncertainty(flat, ties, 5) == Display{1, 2, 3, 4, 5});
}

TEST_CASE("maxmin selection") {
  PointSet line{iota_ids(4), Matrix::from_rows({{0.0}, {1.0}, {2.0}, {10.0}})};
  const PointSet none{{}, Matrix(0, 1)};
  // Largest mean distance first, then the farthest from it.
  CHECK(select_maxmin(line, none, 2) == Display{4, 1});

  const PointSet anchor{{99}, Matrix::from_rows({{10.0}})};
  CHECK(select_maxmin(line, anchor, 1) == Display{1});
}

TEST_CASE("maxmin is invariant to isometries") {
  RngStream rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const PointSet pool = random_points(30, 3, rng);
    const double c = std::cos(0.7), s = std::sin(0.7);
    PointSet moved = pool;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      const double x = pool.features(i, 0), y = pool.features(i, 1);
      moved.features(i, 0) = c * x - s * y + 5.0;
      moved.features(i, 1) = s * x + c * y - 3.0;
      moved.features(i, 2) = -pool.features(i, 2) + 1.0;
    }
    const PointSet none{{}, Matrix(0, 3)};
    CHECK(select_maxmin(pool, none, 8) == select_maxmin(moved, none, 8));
  }
}

TEST_CASE("optimized reduces to its factors") {
  RngStream rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(49);
    const std::size_t b = 1 + rng.uniform_index(n);
    const std::size_t d = 2 + rng.uniform_index(4);
    const PointSet pool = random_points(n, d, rng);
    const PointSet anchored = random_points(rng.uniform_index(5), d, rng);
    const InvertibleNet net = InvertibleNet::random({d, 2}, rng);

    Strategy only_u{StrategyKind::Optimized, 1, 0, 0};
    Strategy only_div{StrategyKind::Optimized, 0, 1, 0};
    Strategy flat{StrategyKind::Optimized, 0, 0, 0};
    CHECK(select_optimized(net, pool, anchored, b, only_u, rng) == select_uncertainty(net, pool, b));
    CHECK(select_optimized(net, pool, anchored, b, only_div, rng) == select_maxmin(pool, anchored, b));
    Display first(b);
    std::iota(first.begin(), first.end(), SampleId{1});
    CHECK(select_optimized(net, pool, anchored, b, flat, rng) == first);
  }
}

TEST_CASE("optimized picks distinct pool members") {
  RngStream rng(6);
  const PointSet pool = random_points(40, 4, rng);
  const PointSet none{{}, Matrix(0, 4)};
  const Display d = select_optimized(InvertibleNet::random({4, 2}, rng), pool, none, 16, Strategy{}, rng);
  CHECK(std::set<SampleId>(d.begin(), d.end()).size() == 16);
  for (SampleId id : d) CHECK((id >= 1 && id <= 40));
}

TEST_CASE("optimized falls back to random on a degenerate pool") {
  RngStream rng(7);
  PointSet pool{iota_ids(10), Matrix(10, 3, 1.5)};
  const PointSet none{{}, Matrix(0, 3)};
  const Display d = select_optimized(InvertibleNet::random({3, 1}, rng), pool, none, 4, Strategy{}, rng);
  CHECK(std::set<SampleId>(d.begin(), d.end()).size() == 4);
}

TEST_CASE("strategy dispatch and names") {
  for (StrategyKind k : {StrategyKind::Random, StrategyKind::Maxmin, StrategyKind::Uncertainty, StrategyKind::Optimized})
    CHECK(parse_strategy_kind(to_string(k)) == k);
  CHECK(kind_of([] { parse_strategy_kind("greedy"); }) == ErrorKind::InvalidConfig);

  RngStream rng(8);
  const PointSet pool = random_points(20, 2, rng);
  const PointSet none{{}, Matrix(0, 2)};
  const InvertibleNet net = logit_net();
  CHECK(select_display({StrategyKind::Maxmin}, net, pool, none, 5, rng) == select_maxmin(pool, none, 5));
  CHECK(select_display({StrategyKind::Uncertainty}, net, pool, none, 5, rng) == select_uncertainty(net, pool, 5));
  CHECK(kind_of([&] { select_display({}, net, pool, none, 21, rng); }) == ErrorKind::InsufficientPool);
}
