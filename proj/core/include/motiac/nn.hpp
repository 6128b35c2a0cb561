// SPDX-License-Identifier: Apache-2.0
//
// Dense feed-forward network with hand-written reverse accumulation, an Adam
// optimizer and a central-difference gradient oracle. Every learner in the
// project is built on these few primitives.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace motiac::nn {

enum class Activation { kTanh, kRelu, kIdentity };

std::string_view ToString(Activation activation);
Activation ParseActivation(std::string_view name);

/// Layer sizes (input, hidden..., output) plus one activation per hidden
/// layer. The output layer is always affine.
class NetLayout {
 public:
  NetLayout(std::vector<std::size_t> sizes, std::vector<Activation> hidden);
  NetLayout(std::vector<std::size_t> sizes, Activation hidden);
  NetLayout() : NetLayout({1, 1}, Activation::kIdentity) {}  // placeholder 1 -> 1 affine map

  std::span<const std::size_t> sizes() const { return sizes_; }
  std::span<const Activation> hidden_activations() const { return hidden_; }
  std::size_t num_layers() const { return sizes_.size() - 1; }
  std::size_t input_size() const { return sizes_.front(); }
  std::size_t output_size() const { return sizes_.back(); }
  Activation activation(std::size_t layer) const;
  std::size_t parameter_count() const;

  friend bool operator==(const NetLayout&, const NetLayout&) = default;

 private:
  std::vector<std::size_t> sizes_;
  std::vector<Activation> hidden_;
};

struct Layer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

/// Per-layer weights and biases for one NetLayout. The canonical flat order
/// is layer by layer, weight row-major (one row per output unit), then bias.
/// The tag keeps parameters, gradients and optimizer moments from being
/// mixed up at call sites.
template <typename Tag>
class LayerStack {
 public:
  LayerStack() : LayerStack(NetLayout()) {}
  explicit LayerStack(NetLayout layout);

  template <typename OtherTag>
  static LayerStack ZerosLike(const LayerStack<OtherTag>& other) {
    return LayerStack(other.layout());
  }

  const NetLayout& layout() const { return layout_; }
  std::size_t num_layers() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return layers_.at(i); }
  const Layer& layer(std::size_t i) const { return layers_.at(i); }

  std::size_t size() const { return layout_.parameter_count(); }
  double& entry(std::size_t flat_index);
  double entry(std::size_t flat_index) const;

  std::vector<double> Flatten() const;
  void Assign(std::span<const double> flat);

  bool AllFinite() const;
  double MaxAbs() const;

  LayerStack& operator+=(const LayerStack& other);
  LayerStack& operator-=(const LayerStack& other);
  LayerStack& operator*=(double scale);

  friend bool operator==(const LayerStack& a, const LayerStack& b) {
    if (!(a.layout_ == b.layout_)) return false;
    for (std::size_t i = 0; i < a.layers_.size(); ++i) {
      if (a.layers_[i].weight != b.layers_[i].weight ||
          a.layers_[i].bias != b.layers_[i].bias) {
        return false;
      }
    }
    return true;
  }

 private:
  void CheckShape(const LayerStack& other) const;

  NetLayout layout_;
  std::vector<Layer> layers_;
};

struct ParamsTag;
struct GradTag;
using Params = LayerStack<ParamsTag>;
using Grad = LayerStack<GradTag>;

extern template class LayerStack<ParamsTag>;
extern template class LayerStack<GradTag>;

/// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
Params InitParams(const NetLayout& layout, std::uint64_t seed);

/// Activations of one batched forward pass. Columns are samples.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> pre;   // per layer, before activation
  std::vector<Eigen::MatrixXd> post;  // post[0] is the input, post[l+1] = act(pre[l])
};

struct ForwardResult {
  Eigen::MatrixXd output;  // output_size x batch
  ForwardCache cache;
};

ForwardResult Forward(const Params& params, const Eigen::MatrixXd& inputs);
ForwardResult Forward(const Params& params, std::span<const double> input);

/// Forward pass without keeping the activation trace.
Eigen::MatrixXd Predict(const Params& params, const Eigen::MatrixXd& inputs);

/// Gradient of sum(output .* output_grad) with respect to every parameter,
/// accumulated over the batch.
Grad Backward(const Params& params, const ForwardCache& cache,
              const Eigen::MatrixXd& output_grad);
Grad Backward(const Params& params, const ForwardCache& cache,
              std::span<const double> output_grad);

struct AdamConfig {
  double step_size = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class NonFiniteGradient : public std::runtime_error {
 public:
  explicit NonFiniteGradient(std::size_t layer);
  std::size_t layer() const { return layer_; }

 private:
  std::size_t layer_;
};

class AdamState {
 public:
  explicit AdamState(const NetLayout& layout, AdamConfig config = {});

  const AdamConfig& config() const { return config_; }
  std::int64_t step() const { return step_; }
  const Grad& first_moment() const { return first_; }
  const Grad& second_moment() const { return second_; }

  // Bias-corrected Adam descent step. Throws NonFiniteGradient before
  // touching any state if the gradient has a NaN or infinity.
  void Apply(Params& params, const Grad& grad);

 private:
  AdamConfig config_;
  Grad first_;
  Grad second_;
  std::int64_t step_ = 0;
};

std::pair<Params, AdamState> AdamStep(AdamState state, Params params,
                                      const Grad& grad);

using ScalarLoss = std::function<double(const Params&)>;

/// Central differences (L(p + eps e_i) - L(p - eps e_i)) / (2 eps).
Grad FiniteDiffGrad(const Params& params, const ScalarLoss& loss, double eps);

/// Largest |a_i - b_i| / max(|a_i|, |b_i|, floor) over all entries.
double MaxRelativeError(const Grad& a, const Grad& b, double floor = 1e-6);

// Text checkpoint: "layout: s0,s1,...", "activations: ...", then one row per
// weight matrix and one per bias, shortest round-trip decimal form.
void WriteParams(std::ostream& out, const Params& params);
Params ReadParams(std::istream& in);

}  // namespace motiac::nn
