#pragma once

#include "frugal/linalg.hpp"
#include "frugal/types.hpp"

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace frugal {

inline constexpr double kSlopePositive = 0.99;
inline constexpr double kSlopeNegative = 0.95;

/// One equidimensional layer phi_out = g(W^T phi_in), where g is a two-slope
/// leaky ReLU. Both slopes are positive so g is a bijection.
struct LayerParams {
  Matrix weight;
  double slope_pos = kSlopePositive;
  double slope_neg = kSlopeNegative;

  double activate(double u) const noexcept { return u >= 0.0 ? slope_pos * u : slope_neg * u; }
  double deactivate(double phi) const noexcept {
    return phi >= 0.0 ? phi / slope_pos : phi / slope_neg;
  }
};

struct NetShape {
  std::size_t dim = 32;
  std::size_t depth = 4;
};

/// Invertible trunk of equidimensional layers plus a softmax head.
///
/// The head is dim x K. Column 0 holds the "change" logit, column 1 the
/// "no-change" logit, and columns 2..K-1 are fictitious outputs that keep the
/// head square (K = dim by default). They take part in the orthonormality
/// penalty but never in the change probability.
///
/// Nets are immutable values. Exact layer inverses are computed on first use
/// and shared between copies.
class InvertibleNet {
public:
  InvertibleNet(std::vector<LayerParams> layers, Matrix head, double lambda);

  /// Random orthonormal layers and head, lambda = 1/dim.
  static InvertibleNet random(NetShape shape, RngStream& rng);
  /// Identity layers with the given head (zeros when omitted).
  static InvertibleNet identity(std::size_t dim, std::size_t depth);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t depth() const noexcept { return layers_.size(); }
  double lambda() const noexcept { return lambda_; }
  const LayerParams& layer(std::size_t i) const { return layers_.at(i); }
  std::span<const LayerParams> layers() const noexcept { return layers_; }
  const Matrix& head() const noexcept { return head_; }

  InvertibleNet with_head(Matrix head) const;
  InvertibleNet with_layer_weight(std::size_t i, Matrix weight) const;

  /// Exact (W_i^T)^{-1}. Throws SingularMatrixError naming the layer.
  const Matrix& transposed_inverse(std::size_t i) const;

private:
  struct InverseCache;

  std::size_t dim_;
  std::vector<LayerParams> layers_;
  Matrix head_;
  double lambda_;
  std::shared_ptr<InverseCache> cache_;
};

/// Activations phi^0 (the input) .. phi^L (the latent code).
struct ForwardTrace {
  std::vector<Vector> pre;   // W_l^T phi^{l-1}, one per layer
  std::vector<Vector> post;  // phi^0 .. phi^L

  const Vector& latent() const { return post.back(); }
};

ForwardTrace forward(const InvertibleNet& net, std::span<const double> x);
/// Latent code only; same arithmetic as forward().
Vector encode(const InvertibleNet& net, std::span<const double> x);

enum class InverseMode {
  Exact,      // LU inverses of every W_l^T
  Transpose,  // assumes W_l orthonormal, uses W_l in place of (W_l^T)^{-1}
};

Vector inverse(const InvertibleNet& net, std::span<const double> z,
               InverseMode mode = InverseMode::Exact);

/// Probability of "change": softmax over all head outputs, renormalized over
/// the two real classes. Always in (0, 1).
double classify(const InvertibleNet& net, std::span<const double> x);
std::vector<double> classify_batch(const InvertibleNet& net, const Matrix& features);

/// Mean binary cross entropy of classify() plus lambda * sum of
/// ||W^T W - I||_F over the layers and the head.
double loss(const InvertibleNet& net, std::span<const LabeledSample> batch);
double cross_entropy(const InvertibleNet& net, std::span<const LabeledSample> batch);

/// d loss / d parameter, laid out like the net.
struct NetGradient {
  std::vector<Matrix> layers;
  Matrix head;
};

struct LossAndGradient {
  double loss = 0.0;
  NetGradient gradient;
};

LossAndGradient loss_and_gradient(const InvertibleNet& net, std::span<const LabeledSample> batch);

struct TrainConfig {
  double learning_rate = 0.01;
  std::size_t epochs = 300;
  double divergence_threshold = 1e6;
};

/// Full-batch gradient descent on loss() starting from `init`. Never returns
/// a net whose training loss exceeds the initial one.
InvertibleNet train(const InvertibleNet& init, std::span<const LabeledSample> data,
                    const TrainConfig& config = {});

/// Fresh random orthonormal init followed by train().
InvertibleNet fit(NetShape shape, std::span<const LabeledSample> data, const TrainConfig& config,
                  RngStream& rng);

/// prod_l spectral_norm(W_l) * slope_pos_l, an upper bound on the Lipschitz
/// constant of the trunk.
double lipschitz_bound(const InvertibleNet& net);

/// prod_l spectral_norm(W_l^{-1}) / slope_neg_l, an upper bound on the
/// Lipschitz constant of the inverse trunk.
double inverse_lipschitz_bound(const InvertibleNet& net);

}  // namespace frugal
