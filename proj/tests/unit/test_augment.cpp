#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "frugal/augment.hpp"
#include "frugal/error.hpp"

#include <algorithm>
#include <cmath>

using namespace frugal;

namespace {

InvertibleNet trained_like_net(std::size_t d, std::size_t depth, RngStream& rng) {
  InvertibleNet net = InvertibleNet::random({d, depth}, rng);
  for (std::size_t l = 0; l < depth; ++l) {
    Matrix w = net.layer(l).weight;
    for (double& v : w.data()) v += 0.02 * rng.normal();
    net = net.with_layer_weight(l, w);
  }
  return net;
}

}  // namespace

TEST_CASE("unary with zero amplitude is the identity") {
  RngStream rng(1);
  const InvertibleNet net = trained_like_net(8, 3, rng);
  for (int k = 0; k < 20; ++k) {
    const LabeledSample s{gaussian_vector(8, rng), Label::Change};
    const LabeledSample out = unary_augment(net, s, 0.0, rng);
    CHECK(distance(out.x, s.x) < 1e-8 * (1.0 + norm2(s.x)));
    CHECK(out.label == Label::Change);
  }
}

TEST_CASE("unary perturbs the latent code by delta * v") {
  const InvertibleNet net = InvertibleNet::identity(2, 1);
  const Vector x = inverse(net, Vector{0.99 + 0.0099, -0.95 + 0.0095});
  CHECK(x[0] == doctest::Approx(1.01).epsilon(1e-14));
  CHECK(x[1] == doctest::Approx(-0.99).epsilon(1e-14));

  RngStream rng(2);
  RngStream replay = rng;
  const LabeledSample s{Vector{1.0, -1.0}, Label::NoChange};
  const LabeledSample out = unary_augment(net, s, 0.5, rng);
  const Vector v = gaussian_vector(2, replay);
  Vector z = encode(net, s.x);
  for (std::size_t i = 0; i < 2; ++i) z[i] += 0.5 * v[i];
  const Vector expected = inverse(net, z);
  CHECK(out.x[0] == doctest::Approx(expected[0]).epsilon(1e-15));
  CHECK(out.x[1] == doctest::Approx(expected[1]).epsilon(1e-15));
}

TEST_CASE("unary noise is centred in latent space") {
  RngStream rng(3);
  const std::size_t d = 6;
  const InvertibleNet net = trained_like_net(d, 2, rng);
  const LabeledSample s{gaussian_vector(d, rng), Label::Change};
  const Vector z = encode(net, s.x);
  Vector mean(d, 0.0);
  constexpr int kDraws = 1000;
  for (int k = 0; k < kDraws; ++k) {
    const Vector zk = encode(net, unary_augment(net, s, 1.0, rng).x);
    for (std::size_t i = 0; i < d; ++i) mean[i] += (zk[i] - z[i]) / kDraws;
  }
  for (double m : mean) CHECK(std::abs(m) < 0.1);
}

TEST_CASE("unary stays within the inverse Lipschitz bound") {
  RngStream rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const InvertibleNet net = trained_like_net(8, 3, rng);
    const double bound = inverse_lipschitz_bound(net);
    for (double delta : {0.01, 0.1, 1.0}) {
      const LabeledSample s{gaussian_vector(8, rng), Label::NoChange};
      RngStream replay = rng;
      const LabeledSample out = unary_augment(net, s, delta, rng);
      const Vector v = gaussian_vector(8, replay);
      CHECK(distance(out.x, s.x) <= bound * delta * norm2(v) + 1e-9);
    }
  }
}

TEST_CASE("binary combinations") {
  const InvertibleNet flat = InvertibleNet::identity(2, 0);
  const Vector x1{1.0, 2.0}, x2{3.0, 4.0}, w{0.9, 0.25};
  CHECK(binary_combine(flat, x1, x2, w, true) == Vector{1.0, 4.0});
  const Vector soft = binary_combine(flat, x1, x2, w, false);
  CHECK(soft[0] == doctest::Approx(1.2).epsilon(1e-15));
  CHECK(soft[1] == doctest::Approx(3.5).epsilon(1e-15));

  RngStream rng(5);
  const InvertibleNet net = trained_like_net(6, 2, rng);
  const LabeledSample a{gaussian_vector(6, rng), Label::Change};
  for (bool crisp : {false, true}) {
    const LabeledSample same = binary_augment(net, a, a, crisp, rng);
    CHECK(distance(same.x, a.x) < 1e-8 * (1.0 + norm2(a.x)));
  }
}

TEST_CASE("binary codes stay inside the latent box of their parents") {
  RngStream rng(6);
  const InvertibleNet net = trained_like_net(6, 2, rng);
  for (int k = 0; k < 50; ++k) {
    const LabeledSample a{gaussian_vector(6, rng), Label::NoChange};
    const LabeledSample b{gaussian_vector(6, rng), Label::NoChange};
    const bool crisp = k % 2 == 0;
    const LabeledSample c = binary_augment(net, a, b, crisp, rng);
    CHECK(c.label == Label::NoChange);
    const Vector za = encode(net, a.x), zb = encode(net, b.x), zc = encode(net, c.x);
    for (std::size_t i = 0; i < 6; ++i) {
      CHECK(zc[i] >= std::min(za[i], zb[i]) - 1e-9);
      CHECK(zc[i] <= std::max(za[i], zb[i]) + 1e-9);
    }
  }
}

TEST_CASE("binary weights are convex") {
  RngStream rng(7);
  for (int k = 0; k < 100; ++k) {
    for (double w : draw_binary_weights(5, rng)) {
      CHECK(w >= 0.0);
      CHECK(w <= 1.0);
    }
  }
}

TEST_CASE("binary refuses mixed labels") {
  RngStream rng(8);
  const InvertibleNet net = InvertibleNet::identity(3, 1);
  const LabeledSample a{Vector{1, 2, 3}, Label::Change}, b{Vector{3, 2, 1}, Label::NoChange};
  try {
    binary_augment(net, a, b, false, rng);
    FAIL("expected invalid-pair");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidPair);
  }
}

TEST_CASE("augment_display") {
  RngStream rng(9);
  const InvertibleNet net = trained_like_net(4, 2, rng);
  LabeledSet display;
  for (int i = 0; i < 10; ++i) display.push_back({gaussian_vector(4, rng), i < 3 ? Label::Change : Label::NoChange});

  AugmentPolicy none;
  none.kind = AugmentKind::None;
  const LabeledSet same = augment_display(net, display, none, rng);
  REQUIRE(same.size() == display.size());
  for (std::size_t i = 0; i < same.size(); ++i) CHECK(same[i].x == display[i].x);

  for (AugmentKind kind : {AugmentKind::Unary, AugmentKind::BinarySoft, AugmentKind::BinaryCrisp}) {
    for (AugmentSpace space : {AugmentSpace::Latent, AugmentSpace::Ambient}) {
      AugmentPolicy p;
      p.kind = kind;
      p.space = space;
      p.per_sample = 4;
      const LabeledSet out = augment_display(net, display, p, rng);
      REQUIRE(out.size() == 50);
      for (std::size_t i = 0; i < display.size(); ++i) {
        CHECK(out[i].x == display[i].x);
        for (std::size_t k = 0; k < 4; ++k) CHECK(out[10 + i * 4 + k].label == display[i].label);
      }
      const auto pos = std::count_if(out.begin(), out.end(), [](const auto& s) { return s.label == Label::Change; });
      CHECK(pos == 15);
    }
  }
}

TEST_CASE("binary policy falls back to unary for a lone class member") {
  RngStream rng(10);
  const InvertibleNet net = InvertibleNet::identity(3, 1);
  const LabeledSet display{{Vector{1, 1, 1}, Label::Change}, {Vector{0, 1, 0}, Label::NoChange},
                           {Vector{1, 0, 0}, Label::NoChange}};
  AugmentPolicy p;
  p.kind = AugmentKind::BinaryCrisp;
  p.per_sample = 2;
  const LabeledSet out = augment_display(net, display, p, rng);
  REQUIRE(out.size() == 9);
  CHECK(out[3].label == Label::Change);
  CHECK(out[3].x != display[0].x);
}

TEST_CASE("policy names round trip") {
  for (AugmentKind k : {AugmentKind::None, AugmentKind::Unary, AugmentKind::BinarySoft, AugmentKind::BinaryCrisp})
    CHECK(parse_augment_kind(to_string(k)) == k);
  CHECK(parse_augment_space("ambient") == AugmentSpace::Ambient);
  CHECK_THROWS_AS(parse_augment_kind("mixup"), Error);
}
