#pragma once

#include "frugal/invnet.hpp"
#include "frugal/types.hpp"

#include <cstddef>
#include <span>
#include <string_view>

namespace frugal {

enum class AugmentKind { None, Unary, BinarySoft, BinaryCrisp };

/// Latent perturbs f(x) and maps back through f^{-1}. Ambient applies the same
/// formulas with f replaced by the identity.
enum class AugmentSpace { Latent, Ambient };

struct AugmentPolicy {
  AugmentKind kind = AugmentKind::Unary;
  double delta = 1.0;
  std::size_t per_sample = 4;
  AugmentSpace space = AugmentSpace::Latent;
};

inline constexpr double kFallbackDelta = 1.0;
inline constexpr double kWeightFloor = 1e-9;

std::string_view to_string(AugmentKind kind) noexcept;
std::string_view to_string(AugmentSpace space) noexcept;
AugmentKind parse_augment_kind(std::string_view text);
AugmentSpace parse_augment_space(std::string_view text);

/// x_hat = f^{-1}(f(x) + delta * v), v ~ N(0, I). The label is kept.
LabeledSample unary_augment(const InvertibleNet& net, const LabeledSample& sample, double delta,
                            RngStream& rng, AugmentSpace space = AugmentSpace::Latent);

/// Convex combination in latent space with explicit per-coordinate weights w
/// on f(x1) (and 1 - w on f(x2)). With `crisp`, each weight becomes 1 when it
/// exceeds 0.5 and 0 otherwise.
Vector binary_combine(const InvertibleNet& net, std::span<const double> x1,
                      std::span<const double> x2, std::span<const double> weights, bool crisp,
                      AugmentSpace space = AugmentSpace::Latent);

/// Draws |v1|, |v2| with v1, v2 ~ N(0, I), sets w = |v1| / (|v1| + |v2|) and
/// applies binary_combine. Both samples must share a label.
LabeledSample binary_augment(const InvertibleNet& net, const LabeledSample& a,
                             const LabeledSample& b, bool crisp, RngStream& rng,
                             AugmentSpace space = AugmentSpace::Latent);

/// The weights binary_augment would draw; exposed for tests and diagnostics.
Vector draw_binary_weights(std::size_t dim, RngStream& rng);

/// Returns the input samples followed by `policy.per_sample` generated samples
/// for each of them, in input order.
LabeledSet augment_display(const InvertibleNet& net, std::span<const LabeledSample> labeled,
                           const AugmentPolicy& policy, RngStream& rng);

}  // namespace frugal
