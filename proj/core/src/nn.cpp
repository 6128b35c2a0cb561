// SPDX-License-Identifier: Apache-2.0
#include "motiac/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <random>
#include <string>

#include "motiac/io_util.hpp"

namespace motiac::nn {

std::string_view ToString(Activation activation) {
  switch (activation) {
    case Activation::kTanh:
      return "tanh";
    case Activation::kRelu:
      return "relu";
    case Activation::kIdentity:
      return "identity";
  }
  return "identity";
}

Activation ParseActivation(std::string_view name) {
  name = io::Trim(name);
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  if (name == "identity") return Activation::kIdentity;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

NetLayout::NetLayout(std::vector<std::size_t> sizes, std::vector<Activation> hidden)
    : sizes_(std::move(sizes)), hidden_(std::move(hidden)) {
  if (sizes_.size() < 2) {
    throw std::invalid_argument("NetLayout needs at least input and output sizes");
  }
  if (std::any_of(sizes_.begin(), sizes_.end(), [](std::size_t s) { return s == 0; })) {
    throw std::invalid_argument("NetLayout sizes must be >= 1");
  }
  if (hidden_.size() != sizes_.size() - 2) {
    throw std::invalid_argument("NetLayout needs one activation per hidden layer");
  }
}

NetLayout::NetLayout(std::vector<std::size_t> sizes, Activation hidden)
    : NetLayout(sizes,
                std::vector<Activation>(sizes.size() >= 2 ? sizes.size() - 2 : 0, hidden)) {}

Activation NetLayout::activation(std::size_t layer) const {
  if (layer + 1 >= num_layers()) return Activation::kIdentity;
  return hidden_.at(layer);
}

std::size_t NetLayout::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) n += sizes_[l + 1] * (sizes_[l] + 1);
  return n;
}

template <typename Tag>
LayerStack<Tag>::LayerStack(NetLayout layout) : layout_(std::move(layout)) {
  layers_.reserve(layout_.num_layers());
  for (std::size_t l = 0; l < layout_.num_layers(); ++l) {
    const auto in = static_cast<Eigen::Index>(layout_.sizes()[l]);
    const auto out = static_cast<Eigen::Index>(layout_.sizes()[l + 1]);
    layers_.push_back(Layer{Eigen::MatrixXd::Zero(out, in), Eigen::VectorXd::Zero(out)});
  }
}

template <typename Tag>
double& LayerStack<Tag>::entry(std::size_t flat_index) {
  for (auto& layer : layers_) {
    const auto w = static_cast<std::size_t>(layer.weight.size());
    if (flat_index < w) {
      const auto cols = static_cast<std::size_t>(layer.weight.cols());
      return layer.weight(static_cast<Eigen::Index>(flat_index / cols),
                          static_cast<Eigen::Index>(flat_index % cols));
    }
    flat_index -= w;
    const auto b = static_cast<std::size_t>(layer.bias.size());
    if (flat_index < b) return layer.bias(static_cast<Eigen::Index>(flat_index));
    flat_index -= b;
  }
  throw std::out_of_range("LayerStack::entry index out of range");
}

template <typename Tag>
double LayerStack<Tag>::entry(std::size_t flat_index) const {
  return const_cast<LayerStack*>(this)->entry(flat_index);
}

template <typename Tag>
std::vector<double> LayerStack<Tag>::Flatten() const {
  std::vector<double> flat;
  flat.reserve(size());
  for (const auto& layer : layers_) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) flat.push_back(layer.weight(r, c));
    }
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) flat.push_back(layer.bias(i));
  }
  return flat;
}

template <typename Tag>
void LayerStack<Tag>::Assign(std::span<const double> flat) {
  if (flat.size() != size()) throw std::invalid_argument("LayerStack::Assign size mismatch");
  std::size_t k = 0;
  for (auto& layer : layers_) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = flat[k++];
    }
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = flat[k++];
  }
}

template <typename Tag>
bool LayerStack<Tag>::AllFinite() const {
  return std::all_of(layers_.begin(), layers_.end(), [](const Layer& l) {
    return l.weight.allFinite() && l.bias.allFinite();
  });
}

template <typename Tag>
double LayerStack<Tag>::MaxAbs() const {
  double m = 0.0;
  for (const auto& l : layers_) {
    if (l.weight.size() > 0) m = std::max(m, l.weight.cwiseAbs().maxCoeff());
    if (l.bias.size() > 0) m = std::max(m, l.bias.cwiseAbs().maxCoeff());
  }
  return m;
}

template <typename Tag>
void LayerStack<Tag>::CheckShape(const LayerStack& other) const {
  if (!(layout_ == other.layout_)) throw std::invalid_argument("LayerStack layout mismatch");
}

template <typename Tag>
LayerStack<Tag>& LayerStack<Tag>::operator+=(const LayerStack& other) {
  CheckShape(other);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i].weight += other.layers_[i].weight;
    layers_[i].bias += other.layers_[i].bias;
  }
  return *this;
}

template <typename Tag>
LayerStack<Tag>& LayerStack<Tag>::operator-=(const LayerStack& other) {
  CheckShape(other);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i].weight -= other.layers_[i].weight;
    layers_[i].bias -= other.layers_[i].bias;
  }
  return *this;
}

template <typename Tag>
LayerStack<Tag>& LayerStack<Tag>::operator*=(double scale) {
  for (auto& l : layers_) {
    l.weight *= scale;
    l.bias *= scale;
  }
  return *this;
}

template class LayerStack<ParamsTag>;
template class LayerStack<GradTag>;

Params InitParams(const NetLayout& layout, std::uint64_t seed) {
  Params params(layout);
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    auto& w = params.layer(l).weight;
    const double bound = 1.0 / std::sqrt(static_cast<double>(w.cols()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = dist(rng);
    }
  }
  return params;
}

namespace {

// Eigen has no packet tanh for double and std::tanh does not vectorize.
// tanh|x| = (1 - t) / (1 + t) with t = exp(-2|x|): range reduction by ln 2,
// a degree-12 Taylor polynomial on |r| <= ln2 / 2 and an exponent splice.
// Clamping at -40 keeps 2^k normal; tanh(20) is 1 in double. Max abs error
// is a few ulp of 1; NaN propagates.
#if defined(__GNUC__)
using Lanes = double __attribute__((vector_size(64)));
using LaneBits = std::int64_t __attribute__((vector_size(64)));

void TanhLanes(const double* in, double* out) {
  constexpr double kLog2e = 1.4426950408889634;
  constexpr double kLn2Hi = 6.93147180369123816490e-01;
  constexpr double kLn2Lo = 1.90821492927058770002e-10;
  constexpr double kShift = 0x1.8p52;
  constexpr std::int64_t kShiftBits = 0x4338000000000000LL;
  Lanes x;
  std::memcpy(&x, in, sizeof x);
  Lanes y = -2.0 * (x < 0.0 ? -x : x);
  y = y < -40.0 ? Lanes{} - 40.0 : y;
  const Lanes kd = y * kLog2e + kShift;  // round to nearest integer
  const Lanes k = kd - kShift;
  const Lanes r = (y - k * kLn2Hi) - k * kLn2Lo;
  Lanes p = Lanes{} + 1.0 / 479001600.0;
  for (double c : {1.0 / 39916800.0, 1.0 / 3628800.0, 1.0 / 362880.0, 1.0 / 40320.0, 1.0 / 5040.0,
                   1.0 / 720.0, 1.0 / 120.0, 1.0 / 24.0, 1.0 / 6.0, 0.5, 1.0, 1.0}) {
    p = p * r + c;
  }
  LaneBits bits;
  std::memcpy(&bits, &kd, sizeof bits);
  bits = (bits - kShiftBits + 1023) << 52;
  Lanes scale;
  std::memcpy(&scale, &bits, sizeof scale);
  const Lanes t = p * scale;
  const Lanes v = (1.0 - t) / (1.0 + t);
  const Lanes result = x < 0.0 ? -v : v;
  std::memcpy(out, &result, sizeof result);
}

void Tanh(const double* in, double* out, Eigen::Index n) {
  constexpr Eigen::Index kWidth = sizeof(Lanes) / sizeof(double);
  Eigen::Index i = 0;
  for (; i + kWidth <= n; i += kWidth) TanhLanes(in + i, out + i);
  if (i < n) {
    double tail[kWidth] = {};
    std::copy(in + i, in + n, tail);
    TanhLanes(tail, tail);
    std::copy(tail, tail + (n - i), out + i);
  }
}
#else
void Tanh(const double* in, double* out, Eigen::Index n) {
  for (Eigen::Index i = 0; i < n; ++i) out[i] = std::tanh(in[i]);
}
#endif

void ApplyActivation(Activation act, const Eigen::MatrixXd& pre, Eigen::MatrixXd& post) {
  switch (act) {
    case Activation::kTanh:
      post.resize(pre.rows(), pre.cols());
      Tanh(pre.data(), post.data(), pre.size());
      return;
    case Activation::kRelu:
      post = pre.cwiseMax(0.0);
      return;
    case Activation::kIdentity:
      post = pre;
      return;
  }
}

// dL/dpre given dL/dpost, in place.
void ActivationBackward(Activation act, const Eigen::MatrixXd& pre, const Eigen::MatrixXd& post,
                        Eigen::MatrixXd& grad) {
  switch (act) {
    case Activation::kTanh:
      grad.array() *= (1.0 - post.array().square());
      return;
    case Activation::kRelu:
      grad.array() *= (pre.array() > 0.0).cast<double>();
      return;
    case Activation::kIdentity:
      return;
  }
}

}  // namespace

ForwardResult Forward(const Params& params, const Eigen::MatrixXd& inputs) {
  const auto& layout = params.layout();
  if (static_cast<std::size_t>(inputs.rows()) != layout.input_size()) {
    throw std::invalid_argument("Forward: input has " + std::to_string(inputs.rows()) +
                                " features, layout expects " +
                                std::to_string(layout.input_size()));
  }
  ForwardResult result;
  auto& cache = result.cache;
  const auto n = layout.num_layers();
  cache.pre.resize(n);
  cache.post.resize(n + 1);
  cache.post[0] = inputs;
  for (std::size_t l = 0; l < n; ++l) {
    const auto& layer = params.layer(l);
    cache.pre[l].noalias() = layer.weight * cache.post[l];
    cache.pre[l].colwise() += layer.bias;
    ApplyActivation(layout.activation(l), cache.pre[l], cache.post[l + 1]);
  }
  result.output = cache.post[n];
  return result;
}

ForwardResult Forward(const Params& params, std::span<const double> input) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(input.size()), 1);
  for (std::size_t i = 0; i < input.size(); ++i) x(static_cast<Eigen::Index>(i), 0) = input[i];
  return Forward(params, x);
}

Eigen::MatrixXd Predict(const Params& params, const Eigen::MatrixXd& inputs) {
  const auto& layout = params.layout();
  if (static_cast<std::size_t>(inputs.rows()) != layout.input_size()) {
    throw std::invalid_argument("Predict: input dimension mismatch");
  }
  Eigen::MatrixXd current = inputs;
  Eigen::MatrixXd next;
  for (std::size_t l = 0; l < layout.num_layers(); ++l) {
    const auto& layer = params.layer(l);
    next.noalias() = layer.weight * current;
    next.colwise() += layer.bias;
    ApplyActivation(layout.activation(l), next, current);
  }
  return current;
}

Grad Backward(const Params& params, const ForwardCache& cache,
              const Eigen::MatrixXd& output_grad) {
  const auto& layout = params.layout();
  const auto n = layout.num_layers();
  if (cache.pre.size() != n || cache.post.size() != n + 1) {
    throw std::invalid_argument("Backward: cache does not match the layout");
  }
  if (static_cast<std::size_t>(output_grad.rows()) != layout.output_size() ||
      output_grad.cols() != cache.post[n].cols()) {
    throw std::invalid_argument("Backward: output_grad shape mismatch");
  }
  Grad grad(layout);
  Eigen::MatrixXd delta = output_grad;
  for (std::size_t l = n; l-- > 0;) {
    ActivationBackward(layout.activation(l), cache.pre[l], cache.post[l + 1], delta);
    auto& g = grad.layer(l);
    g.weight.noalias() = delta * cache.post[l].transpose();
    g.bias = delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd prev;
      prev.noalias() = params.layer(l).weight.transpose() * delta;
      delta = std::move(prev);
    }
  }
  return grad;
}

Grad Backward(const Params& params, const ForwardCache& cache,
              std::span<const double> output_grad) {
  Eigen::MatrixXd g(static_cast<Eigen::Index>(output_grad.size()), 1);
  for (std::size_t i = 0; i < output_grad.size(); ++i) {
    g(static_cast<Eigen::Index>(i), 0) = output_grad[i];
  }
  return Backward(params, cache, g);
}

NonFiniteGradient::NonFiniteGradient(std::size_t layer)
    : std::runtime_error("non-finite gradient entry in layer " + std::to_string(layer)),
      layer_(layer) {}

AdamState::AdamState(const NetLayout& layout, AdamConfig config)
    : config_(config), first_(layout), second_(layout) {}

void AdamState::Apply(Params& params, const Grad& grad) {
  if (!(params.layout() == grad.layout()) || !(params.layout() == first_.layout())) {
    throw std::invalid_argument("AdamState::Apply: shape mismatch");
  }
  for (std::size_t l = 0; l < grad.num_layers(); ++l) {
    if (!grad.layer(l).weight.allFinite() || !grad.layer(l).bias.allFinite()) {
      throw NonFiniteGradient(l);
    }
  }
  ++step_;
  const double t = static_cast<double>(step_);
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double corr1 = 1.0 - std::pow(b1, t);
  const double corr2 = 1.0 - std::pow(b2, t);
  const double alpha = config_.step_size;
  const double eps = config_.epsilon;
  auto update = [&](auto& p, auto& m, auto& v, const auto& g) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.square();
    p -= alpha * (m / corr1) / ((v / corr2).sqrt() + eps);
  };
  for (std::size_t l = 0; l < grad.num_layers(); ++l) {
    auto& p = params.layer(l);
    auto& m = first_.layer(l);
    auto& v = second_.layer(l);
    const auto& g = grad.layer(l);
    auto pw = p.weight.array();
    auto mw = m.weight.array();
    auto vw = v.weight.array();
    update(pw, mw, vw, g.weight.array());
    auto pb = p.bias.array();
    auto mb = m.bias.array();
    auto vb = v.bias.array();
    update(pb, mb, vb, g.bias.array());
  }
}

std::pair<Params, AdamState> AdamStep(AdamState state, Params params, const Grad& grad) {
  state.Apply(params, grad);
  return {std::move(params), std::move(state)};
}

Grad FiniteDiffGrad(const Params& params, const ScalarLoss& loss, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("FiniteDiffGrad: eps must be > 0");
  Grad grad(params.layout());
  Params probe = params;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double original = probe.entry(i);
    probe.entry(i) = original + eps;
    const double up = loss(probe);
    probe.entry(i) = original - eps;
    const double down = loss(probe);
    probe.entry(i) = original;
    grad.entry(i) = (up - down) / (2.0 * eps);
  }
  return grad;
}

double MaxRelativeError(const Grad& a, const Grad& b, double floor) {
  if (!(a.layout() == b.layout())) throw std::invalid_argument("MaxRelativeError: shape mismatch");
  const auto fa = a.Flatten();
  const auto fb = b.Flatten();
  double worst = 0.0;
  for (std::size_t i = 0; i < fa.size(); ++i) {
    const double scale = std::max({std::abs(fa[i]), std::abs(fb[i]), floor});
    worst = std::max(worst, std::abs(fa[i] - fb[i]) / scale);
  }
  return worst;
}

void WriteParams(std::ostream& out, const Params& params) {
  const auto& layout = params.layout();
  out << "layout: ";
  for (std::size_t i = 0; i < layout.sizes().size(); ++i) {
    if (i) out << ',';
    out << layout.sizes()[i];
  }
  out << "\nactivations: ";
  for (std::size_t i = 0; i < layout.hidden_activations().size(); ++i) {
    if (i) out << ',';
    out << ToString(layout.hidden_activations()[i]);
  }
  out << '\n';
  auto write_row = [&](auto begin_index, auto count, auto get) {
    for (decltype(count) k = 0; k < count; ++k) {
      if (k) out << ' ';
      out << io::FormatDouble(get(begin_index + k));
    }
    out << '\n';
  };
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    const auto& layer = params.layer(l);
    const auto cols = layer.weight.cols();
    write_row(Eigen::Index{0}, layer.weight.size(),
              [&](Eigen::Index k) { return layer.weight(k / cols, k % cols); });
    write_row(Eigen::Index{0}, layer.bias.size(), [&](Eigen::Index k) { return layer.bias(k); });
  }
}

Params ReadParams(std::istream& in) {
  std::string line;
  auto next_line = [&]() {
    if (!std::getline(in, line)) throw std::runtime_error("ReadParams: unexpected end of input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
  };
  next_line();
  const std::string_view layout_prefix = "layout:";
  if (line.rfind(layout_prefix, 0) != 0) throw std::runtime_error("ReadParams: missing layout header");
  std::vector<std::size_t> sizes;
  for (const auto& tok : io::Split(std::string_view(line).substr(layout_prefix.size()), ',')) {
    sizes.push_back(static_cast<std::size_t>(io::ParseInt(tok)));
  }
  std::vector<Activation> hidden(sizes.size() >= 2 ? sizes.size() - 2 : 0, Activation::kTanh);
  auto pos = in.tellg();
  std::string maybe;
  if (std::getline(in, maybe) && maybe.rfind("activations:", 0) == 0) {
    auto body = io::Trim(std::string_view(maybe).substr(12));
    hidden.clear();
    if (!body.empty()) {
      for (const auto& tok : io::Split(body, ',')) hidden.push_back(ParseActivation(tok));
    }
  } else {
    in.clear();
    in.seekg(pos);
  }
  Params params(NetLayout(sizes, hidden));
  auto read_row = [&](Eigen::Index expected, auto set) {
    next_line();
    std::vector<double> values;
    for (const auto& tok : io::Split(io::Trim(line), ' ')) {
      if (!tok.empty()) values.push_back(io::ParseDouble(tok));
    }
    if (static_cast<Eigen::Index>(values.size()) != expected) {
      throw std::runtime_error("ReadParams: row has " + std::to_string(values.size()) +
                               " values, expected " + std::to_string(expected));
    }
    for (Eigen::Index k = 0; k < expected; ++k) set(k, values[static_cast<std::size_t>(k)]);
  };
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    auto& layer = params.layer(l);
    const auto cols = layer.weight.cols();
    read_row(layer.weight.size(), [&](Eigen::Index k, double v) { layer.weight(k / cols, k % cols) = v; });
    read_row(layer.bias.size(), [&](Eigen::Index k, double v) { layer.bias(k) = v; });
  }
  return params;
}

}  // namespace motiac::nn
