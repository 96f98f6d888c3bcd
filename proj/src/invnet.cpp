#include "frugal/invnet.hpp"

#include "frugal/error.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <optional>
#include <sstream>

namespace frugal {

Label label_from_int(int value) {
  if (value == 1) return Label::Change;
  if (value == -1) return Label::NoChange;
  throw Error(ErrorKind::InvalidArgument,
              "label must be -1 or +1, got " + std::to_string(value));
}

struct InvertibleNet::InverseCache {
  std::mutex mutex;
  std::vector<std::optional<Matrix>> inverses;
};

InvertibleNet::InvertibleNet(std::vector<LayerParams> layers, Matrix head, double lambda)
    : dim_(head.rows()), layers_(std::move(layers)), head_(std::move(head)), lambda_(lambda) {
  if (dim_ == 0) throw Error(ErrorKind::InvalidDimension, "network dimension must be >= 1");
  if (head_.cols() < 2) throw Error(ErrorKind::Shape, "head needs at least the two class columns");
  if (!(lambda_ > 0.0)) throw Error(ErrorKind::InvalidArgument, "lambda must be positive");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& layer = layers_[i];
    if (layer.weight.rows() != dim_ || layer.weight.cols() != dim_) {
      throw Error(ErrorKind::Shape, "layer " + std::to_string(i) + " is not dim x dim");
    }
    if (!(layer.slope_neg > 0.0 && layer.slope_neg <= layer.slope_pos && layer.slope_pos < 1.0)) {
      throw Error(ErrorKind::InvalidArgument,
                  "layer slopes must satisfy 0 < slope_neg <= slope_pos < 1");
    }
  }
  cache_ = std::make_shared<InverseCache>();
  cache_->inverses.resize(layers_.size());
}

InvertibleNet InvertibleNet::random(NetShape shape, RngStream& rng) {
  if (shape.dim < 2) throw Error(ErrorKind::InvalidDimension, "network dimension must be >= 2");
  std::vector<LayerParams> layers;
  layers.reserve(shape.depth);
  for (std::size_t i = 0; i < shape.depth; ++i) {
    layers.push_back(LayerParams{random_orthonormal(shape.dim, rng)});
  }
  Matrix head = random_orthonormal(shape.dim, rng);
  return InvertibleNet(std::move(layers), std::move(head), 1.0 / static_cast<double>(shape.dim));
}

InvertibleNet InvertibleNet::identity(std::size_t dim, std::size_t depth) {
  std::vector<LayerParams> layers(depth, LayerParams{Matrix::identity(dim)});
  return InvertibleNet(std::move(layers), Matrix(dim, std::max<std::size_t>(dim, 2)),
                       1.0 / static_cast<double>(dim));
}

InvertibleNet InvertibleNet::with_head(Matrix head) const {
  return InvertibleNet(layers_, std::move(head), lambda_);
}

InvertibleNet InvertibleNet::with_layer_weight(std::size_t i, Matrix weight) const {
  auto layers = layers_;
  layers.at(i).weight = std::move(weight);
  return InvertibleNet(std::move(layers), head_, lambda_);
}

const Matrix& InvertibleNet::transposed_inverse(std::size_t i) const {
  std::lock_guard lock(cache_->mutex);
  auto& slot = cache_->inverses.at(i);
  if (!slot) {
    try {
      slot = invert_matrix(transpose(layers_[i].weight));
    } catch (const SingularMatrixError& e) {
      std::ostringstream msg;
      msg << "layer " << i << ": " << e.what();
      throw SingularMatrixError(msg.str(), e.condition(), static_cast<int>(i));
    }
  }
  return *slot;
}

// ---------------------------------------------------------------------------
// Forward / inverse

namespace {

void check_dim(const InvertibleNet& net, std::size_t n, const char* what) {
  if (n != net.dim()) {
    std::ostringstream msg;
    msg << what << ": expected dimension " << net.dim() << ", got " << n;
    throw Error(ErrorKind::Shape, msg.str());
  }
}

double softplus(double t) noexcept {
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

double sigmoid(double s) noexcept {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

// Logit difference (change minus no-change) for one latent code.
double logit_margin(const Matrix& head, std::span<const double> z) {
  double s = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) s += (head(k, 0) - head(k, 1)) * z[k];
  return s;
}

double open_unit(double p) noexcept {
  constexpr double lo = 1e-300;
  const double hi = std::nextafter(1.0, 0.0);
  return std::clamp(p, lo, hi);
}

Matrix stack(std::span<const LabeledSample> batch, std::size_t dim) {
  Matrix x(batch.size(), dim);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch[i].x.size() != dim) {
      throw Error(ErrorKind::Shape, "sample " + std::to_string(i) + " has the wrong dimension");
    }
    std::copy(batch[i].x.begin(), batch[i].x.end(), x.row(i).begin());
  }
  return x;
}

// Activations phi^0..phi^L for every row of x.
std::vector<Matrix> forward_batch(const InvertibleNet& net, Matrix x) {
  std::vector<Matrix> phis;
  phis.reserve(net.depth() + 1);
  phis.push_back(std::move(x));
  for (const auto& layer : net.layers()) {
    Matrix u = matmul(phis.back(), layer.weight);
    for (double& v : u.data()) v = layer.activate(v);
    phis.push_back(std::move(u));
  }
  return phis;
}

}  // namespace

ForwardTrace forward(const InvertibleNet& net, std::span<const double> x) {
  check_dim(net, x.size(), "forward");
  ForwardTrace trace;
  trace.post.emplace_back(x.begin(), x.end());
  for (const auto& layer : net.layers()) {
    Vector u = matvec_t(layer.weight, trace.post.back());
    Vector phi(u.size());
    std::transform(u.begin(), u.end(), phi.begin(), [&](double v) { return layer.activate(v); });
    trace.pre.push_back(std::move(u));
    trace.post.push_back(std::move(phi));
  }
  return trace;
}

Vector encode(const InvertibleNet& net, std::span<const double> x) {
  check_dim(net, x.size(), "encode");
  Vector phi(x.begin(), x.end());
  for (const auto& layer : net.layers()) {
    phi = matvec_t(layer.weight, phi);
    for (double& v : phi) v = layer.activate(v);
  }
  return phi;
}

Vector inverse(const InvertibleNet& net, std::span<const double> z, InverseMode mode) {
  check_dim(net, z.size(), "inverse");
  Vector phi(z.begin(), z.end());
  for (std::size_t l = net.depth(); l-- > 0;) {
    const auto& layer = net.layer(l);
    for (double& v : phi) v = layer.deactivate(v);
    phi = mode == InverseMode::Exact ? matvec(net.transposed_inverse(l), phi)
                                     : matvec(layer.weight, phi);
  }
  return phi;
}

double classify(const InvertibleNet& net, std::span<const double> x) {
  return open_unit(sigmoid(logit_margin(net.head(), encode(net, x))));
}

std::vector<double> classify_batch(const InvertibleNet& net, const Matrix& features) {
  check_dim(net, features.cols(), "classify_batch");
  const auto phis = forward_batch(net, features);
  const Matrix& z = phis.back();
  std::vector<double> p(z.rows());
  for (std::size_t i = 0; i < z.rows(); ++i) {
    p[i] = open_unit(sigmoid(logit_margin(net.head(), z.row(i))));
  }
  return p;
}

// ---------------------------------------------------------------------------
// Loss and gradient

double cross_entropy(const InvertibleNet& net, std::span<const LabeledSample> batch) {
  if (batch.empty()) throw Error(ErrorKind::InvalidArgument, "loss: empty batch");
  const auto phis = forward_batch(net, stack(batch, net.dim()));
  const Matrix& z = phis.back();
  double ce = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double s = logit_margin(net.head(), z.row(i));
    ce += batch[i].label == Label::Change ? softplus(-s) : softplus(s);
  }
  return ce / static_cast<double>(batch.size());
}

namespace {

constexpr double kPenaltyKink = 1e-12;

double penalty(const InvertibleNet& net) {
  double total = gram_residual(net.head());
  for (const auto& layer : net.layers()) total += gram_residual(layer.weight);
  return net.lambda() * total;
}

// lambda * d||W^T W - I||_F / dW = lambda * 2 W G / ||G||_F with G = W^T W - I.
// The norm is not differentiable at G = 0; the zero subgradient is used there
// and for residuals at round-off level, whose direction is noise.
void add_penalty_gradient(const Matrix& w, double lambda, Matrix& grad) {
  Matrix g = matmul_tn(w, w);
  for (std::size_t i = 0; i < g.rows(); ++i) g(i, i) -= 1.0;
  const double r = frobenius_norm(g);
  if (r <= kPenaltyKink * static_cast<double>(g.rows())) return;
  const Matrix wg = matmul(w, g);
  const double scale = 2.0 * lambda / r;
  auto out = grad.data();
  auto in = wg.data();
  for (std::size_t k = 0; k < out.size(); ++k) out[k] += scale * in[k];
}

}  // namespace

double loss(const InvertibleNet& net, std::span<const LabeledSample> batch) {
  return cross_entropy(net, batch) + penalty(net);
}

LossAndGradient loss_and_gradient(const InvertibleNet& net, std::span<const LabeledSample> batch) {
  if (batch.empty()) throw Error(ErrorKind::InvalidArgument, "loss: empty batch");
  const std::size_t n = batch.size();
  const std::size_t d = net.dim();
  const Matrix& head = net.head();
  const auto phis = forward_batch(net, stack(batch, d));
  const Matrix& z = phis.back();

  LossAndGradient out;
  out.gradient.head = Matrix(head.rows(), head.cols());

  // d CE / d margin, per sample.
  std::vector<double> dmargin(n);
  double ce = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = logit_margin(head, z.row(i));
    const bool change = batch[i].label == Label::Change;
    ce += change ? softplus(-s) : softplus(s);
    dmargin[i] = (sigmoid(s) - (change ? 1.0 : 0.0)) * inv_n;
  }
  out.loss = ce * inv_n + penalty(net);

  Matrix& dhead = out.gradient.head;
  Matrix dphi(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      const double g = z(i, k) * dmargin[i];
      dhead(k, 0) += g;
      dhead(k, 1) -= g;
      dphi(i, k) = dmargin[i] * (head(k, 0) - head(k, 1));
    }
  }

  out.gradient.layers.resize(net.depth());
  for (std::size_t l = net.depth(); l-- > 0;) {
    const auto& layer = net.layer(l);
    const Matrix& phi = phis[l + 1];
    auto du = dphi.data();
    auto ph = phi.data();
    for (std::size_t k = 0; k < du.size(); ++k) {
      du[k] *= ph[k] >= 0.0 ? layer.slope_pos : layer.slope_neg;
    }
    out.gradient.layers[l] = matmul_tn(phis[l], dphi);
    if (l > 0) dphi = matmul_nt(dphi, layer.weight);
  }

  for (std::size_t l = 0; l < net.depth(); ++l) {
    add_penalty_gradient(net.layer(l).weight, net.lambda(), out.gradient.layers[l]);
  }
  add_penalty_gradient(head, net.lambda(), dhead);
  return out;
}

// ---------------------------------------------------------------------------
// Training

InvertibleNet train(const InvertibleNet& init, std::span<const LabeledSample> data,
                    const TrainConfig& config) {
  if (data.empty()) throw Error(ErrorKind::InvalidArgument, "train: no data");
  if (!(config.learning_rate > 0.0) || config.epochs == 0 || !(config.divergence_threshold > 0.0)) {
    throw Error(ErrorKind::InvalidConfig, "train: invalid configuration");
  }

  Matrix head = init.head();
  auto layers = std::vector<LayerParams>(init.layers().begin(), init.layers().end());

  const auto check = [&](double value, std::size_t epoch) {
    if (!std::isfinite(value) || value > config.divergence_threshold) {
      std::ostringstream msg;
      msg << "training diverged at epoch " << epoch << " (loss " << value << ")";
      throw TrainingDivergedError(msg.str(), epoch);
    }
  };

  double initial_loss = 0.0;
  InvertibleNet current = init;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto [value, grad] = loss_and_gradient(current, data);
    check(value, epoch);
    if (epoch == 0) initial_loss = value;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      auto w = layers[l].weight.data();
      auto g = grad.layers[l].data();
      for (std::size_t k = 0; k < w.size(); ++k) w[k] -= config.learning_rate * g[k];
    }
    auto h = head.data();
    auto gh = grad.head.data();
    for (std::size_t k = 0; k < h.size(); ++k) h[k] -= config.learning_rate * gh[k];
    current = InvertibleNet(layers, head, init.lambda());
  }
  const double final_loss = loss(current, data);
  check(final_loss, config.epochs);
  return final_loss <= initial_loss ? current : init;
}

InvertibleNet fit(NetShape shape, std::span<const LabeledSample> data, const TrainConfig& config,
                  RngStream& rng) {
  return train(InvertibleNet::random(shape, rng), data, config);
}

double lipschitz_bound(const InvertibleNet& net) {
  double bound = 1.0;
  for (const auto& layer : net.layers()) bound *= spectral_norm(layer.weight) * layer.slope_pos;
  return bound;
}

double inverse_lipschitz_bound(const InvertibleNet& net) {
  double bound = 1.0;
  for (std::size_t l = 0; l < net.depth(); ++l) {
    bound *= spectral_norm(net.transposed_inverse(l)) / net.layer(l).slope_neg;
  }
  return bound;
}

}  // namespace frugal
