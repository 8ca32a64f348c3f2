#pragma once

#include <vector>

#include <json.hpp>

#include "dicode/core/rng.hpp"
#include "dicode/core/types.hpp"

namespace dicode::nn {

enum class Activation { Tanh, Relu, Silu };

/// Activations recorded by a forward pass; consumed by Mlp::backward.
struct MlpTape {
  std::vector<Mat> pre;   // pre-activation of each layer
  std::vector<Mat> post;  // post[0] is the input, post[l+1] the output of layer l
};

/// Fully connected network over column-batched inputs (one sample per column).
/// Parameters live in one flat vector so optimizers and checkpoints treat
/// them uniformly. Forward and backward are const, so a network may be
/// shared read-only across threads.
class Mlp {
 public:
  Mlp() = default;
  /// sizes = {in, hidden..., out}. The output layer is linear and its
  /// initial weights are multiplied by `output_scale`.
  Mlp(std::vector<int> sizes, Activation activation, Rng& rng, double output_scale = 1.0);

  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  const std::vector<int>& sizes() const { return sizes_; }
  Activation activation() const { return activation_; }

  Mat forward(const Mat& x) const;
  Mat forward(const Mat& x, MlpTape& tape) const;

  /// Backpropagates d(loss)/d(output). Parameter gradients are added into
  /// `param_grad` when it is non-null; returns d(loss)/d(input).
  Mat backward(const MlpTape& tape, const Mat& grad_output, Vec* param_grad) const;

  Vec& params() { return params_; }
  const Vec& params() const { return params_; }
  Index num_params() const { return params_.size(); }

  nlohmann::json to_json() const;
  static Mlp from_json(const nlohmann::json& j);

 private:
  void build_offsets();
  Eigen::Map<const Mat> weight(std::size_t layer) const;
  Eigen::Map<const Vec> bias(std::size_t layer) const;

  std::vector<int> sizes_;
  Activation activation_ = Activation::Tanh;
  Vec params_;
  std::vector<Index> weight_offset_;
  std::vector<Index> bias_offset_;
};

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

}  // namespace dicode::nn
