#include "frugal/augment.hpp"

#include "frugal/error.hpp"

#include <cmath>
#include <string>

namespace frugal {

std::string_view to_string(AugmentKind kind) noexcept {
  switch (kind) {
    case AugmentKind::None: return "none";
    case AugmentKind::Unary: return "unary";
    case AugmentKind::BinarySoft: return "binary-soft";
    case AugmentKind::BinaryCrisp: return "binary-crisp";
  }
  return "none";
}

std::string_view to_string(AugmentSpace space) noexcept {
  return space == AugmentSpace::Latent ? "latent" : "ambient";
}

AugmentKind parse_augment_kind(std::string_view text) {
  if (text == "none") return AugmentKind::None;
  if (text == "unary") return AugmentKind::Unary;
  if (text == "binary-soft" || text == "soft") return AugmentKind::BinarySoft;
  if (text == "binary-crisp" || text == "crisp") return AugmentKind::BinaryCrisp;
  throw Error(ErrorKind::InvalidConfig, "unknown augmentation kind '" + std::string(text) + "'");
}

AugmentSpace parse_augment_space(std::string_view text) {
  if (text == "latent") return AugmentSpace::Latent;
  if (text == "ambient") return AugmentSpace::Ambient;
  throw Error(ErrorKind::InvalidConfig, "unknown augmentation space '" + std::string(text) + "'");
}

namespace {

Vector to_latent(const InvertibleNet& net, std::span<const double> x, AugmentSpace space) {
  if (space == AugmentSpace::Ambient) {
    if (x.size() != net.dim()) throw Error(ErrorKind::Shape, "augment: dimension mismatch");
    return Vector(x.begin(), x.end());
  }
  return encode(net, x);
}

Vector from_latent(const InvertibleNet& net, std::span<const double> z, AugmentSpace space) {
  if (space == AugmentSpace::Ambient) return Vector(z.begin(), z.end());
  return inverse(net, z);
}

}  // namespace

LabeledSample unary_augment(const InvertibleNet& net, const LabeledSample& sample, double delta,
                            RngStream& rng, AugmentSpace space) {
  if (!(delta >= 0.0)) throw Error(ErrorKind::InvalidArgument, "unary_augment: delta must be >= 0");
  Vector z = to_latent(net, sample.x, space);
  const Vector v = gaussian_vector(z.size(), rng);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] += delta * v[i];
  return {from_latent(net, z, space), sample.label};
}

Vector binary_combine(const InvertibleNet& net, std::span<const double> x1,
                      std::span<const double> x2, std::span<const double> weights, bool crisp,
                      AugmentSpace space) {
  if (x1.size() != x2.size() || weights.size() != x1.size()) {
    throw Error(ErrorKind::Shape, "binary_combine: dimension mismatch");
  }
  const Vector z1 = to_latent(net, x1, space);
  const Vector z2 = to_latent(net, x2, space);
  Vector z(z1.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double w = crisp ? (weights[i] > 0.5 ? 1.0 : 0.0) : weights[i];
    z[i] = w * z1[i] + (1.0 - w) * z2[i];
  }
  return from_latent(net, z, space);
}

Vector draw_binary_weights(std::size_t dim, RngStream& rng) {
  const Vector v1 = gaussian_vector(dim, rng);
  const Vector v2 = gaussian_vector(dim, rng);
  Vector w(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    const double a = std::abs(v1[i]);
    const double b = std::abs(v2[i]);
    w[i] = a / std::max(a + b, kWeightFloor);
  }
  return w;
}

LabeledSample binary_augment(const InvertibleNet& net, const LabeledSample& a,
                             const LabeledSample& b, bool crisp, RngStream& rng,
                             AugmentSpace space) {
  if (a.label != b.label) {
    throw Error(ErrorKind::InvalidPair, "binary_augment: samples carry different labels");
  }
  const Vector w = draw_binary_weights(a.x.size(), rng);
  return {binary_combine(net, a.x, b.x, w, crisp, space), a.label};
}

LabeledSet augment_display(const InvertibleNet& net, std::span<const LabeledSample> labeled,
                           const AugmentPolicy& policy, RngStream& rng) {
  LabeledSet out(labeled.begin(), labeled.end());
  if (policy.kind == AugmentKind::None || policy.per_sample == 0) return out;
  out.reserve(labeled.size() * (1 + policy.per_sample));

  std::vector<std::size_t> positives, negatives;
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    (labeled[i].label == Label::Change ? positives : negatives).push_back(i);
  }

  for (std::size_t i = 0; i < labeled.size(); ++i) {
    const auto& sample = labeled[i];
    const auto& same = sample.label == Label::Change ? positives : negatives;
    for (std::size_t k = 0; k < policy.per_sample; ++k) {
      if (policy.kind == AugmentKind::Unary) {
        out.push_back(unary_augment(net, sample, policy.delta, rng, policy.space));
        continue;
      }
      if (same.size() < 2) {
        out.push_back(unary_augment(net, sample, kFallbackDelta, rng, policy.space));
        continue;
      }
      // Uniform partner among the other members of the class.
      std::size_t pick = rng.uniform_index(same.size() - 1);
      std::size_t partner = same[pick];
      if (partner == i) partner = same.back();
      out.push_back(binary_augment(net, sample, labeled[partner],
                                   policy.kind == AugmentKind::BinaryCrisp, rng, policy.space));
    }
  }
  return out;
}

}  // namespace frugal
