#include "dicode/nn/mlp.hpp"

#include <cmath>

#include "dicode/core/errors.hpp"
#include "dicode/nn/json_util.hpp"

namespace dicode::nn {

namespace {

Mat activate(const Mat& z, Activation a) {
  switch (a) {
    case Activation::Tanh:
      return z.array().tanh().matrix();
    case Activation::Relu:
      return z.cwiseMax(0.0);
    case Activation::Silu:
      return (z.array() / (1.0 + (-z.array()).exp())).matrix();
  }
  return z;
}

// dy/dz given z and y = act(z)
Mat activation_slope(const Mat& z, const Mat& y, Activation a) {
  switch (a) {
    case Activation::Tanh:
      return (1.0 - y.array().square()).matrix();
    case Activation::Relu:
      return (z.array() > 0.0).cast<double>().matrix();
    case Activation::Silu: {
      const Eigen::ArrayXXd s = 1.0 / (1.0 + (-z.array()).exp());
      return (s + z.array() * s * (1.0 - s)).matrix();
    }
  }
  return Mat::Ones(z.rows(), z.cols());
}

}  // namespace

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::Tanh: return "tanh";
    case Activation::Relu: return "relu";
    case Activation::Silu: return "silu";
  }
  return "tanh";
}

Activation activation_from_name(const std::string& name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "relu") return Activation::Relu;
  if (name == "silu") return Activation::Silu;
  throw InvalidArgument("unknown activation '" + name + "'");
}

Mlp::Mlp(std::vector<int> sizes, Activation activation, Rng& rng, double output_scale)
    : sizes_(std::move(sizes)), activation_(activation) {
  if (sizes_.size() < 2) throw InvalidArgument("Mlp: need at least input and output sizes");
  for (int s : sizes_)
    if (s <= 0) throw InvalidArgument("Mlp: layer sizes must be positive");
  build_offsets();
  params_.setZero();
  const std::size_t layers = sizes_.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const double fan_in = sizes_[l];
    const double fan_out = sizes_[l + 1];
    double scale = std::sqrt(2.0 / (fan_in + fan_out));
    if (activation_ == Activation::Relu && l + 1 < layers) scale = std::sqrt(2.0 / fan_in);
    if (l + 1 == layers) scale *= output_scale;
    const Index count = sizes_[l] * sizes_[l + 1];
    for (Index i = 0; i < count; ++i) params_[weight_offset_[l] + i] = scale * rng.normal();
  }
}

void Mlp::build_offsets() {
  weight_offset_.clear();
  bias_offset_.clear();
  Index offset = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    weight_offset_.push_back(offset);
    offset += static_cast<Index>(sizes_[l]) * sizes_[l + 1];
    bias_offset_.push_back(offset);
    offset += sizes_[l + 1];
  }
  params_.resize(offset);
}

Eigen::Map<const Mat> Mlp::weight(std::size_t l) const {
  return Eigen::Map<const Mat>(params_.data() + weight_offset_[l], sizes_[l + 1], sizes_[l]);
}

Eigen::Map<const Vec> Mlp::bias(std::size_t l) const {
  return Eigen::Map<const Vec>(params_.data() + bias_offset_[l], sizes_[l + 1]);
}

Mat Mlp::forward(const Mat& x) const {
  if (x.rows() != input_dim()) throw InvalidArgument("Mlp::forward: input dimension mismatch");
  Mat h = x;
  const std::size_t layers = sizes_.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    Mat z = weight(l) * h;
    z.colwise() += bias(l);
    h = (l + 1 == layers) ? z : activate(z, activation_);
  }
  return h;
}

Mat Mlp::forward(const Mat& x, MlpTape& tape) const {
  if (x.rows() != input_dim()) throw InvalidArgument("Mlp::forward: input dimension mismatch");
  const std::size_t layers = sizes_.size() - 1;
  tape.pre.resize(layers);
  tape.post.resize(layers + 1);
  tape.post[0] = x;
  for (std::size_t l = 0; l < layers; ++l) {
    tape.pre[l] = weight(l) * tape.post[l];
    tape.pre[l].colwise() += bias(l);
    tape.post[l + 1] = (l + 1 == layers) ? tape.pre[l] : activate(tape.pre[l], activation_);
  }
  return tape.post[layers];
}

Mat Mlp::backward(const MlpTape& tape, const Mat& grad_output, Vec* param_grad) const {
  const std::size_t layers = sizes_.size() - 1;
  if (tape.post.size() != layers + 1) throw InvalidArgument("Mlp::backward: tape does not match network");
  if (grad_output.rows() != output_dim() || grad_output.cols() != tape.post[0].cols())
    throw InvalidArgument("Mlp::backward: gradient shape mismatch");
  if (param_grad && param_grad->size() != params_.size()) param_grad->setZero(params_.size());

  Mat delta = grad_output;
  for (std::size_t li = layers; li-- > 0;) {
    if (li + 1 != layers)
      delta = delta.cwiseProduct(activation_slope(tape.pre[li], tape.post[li + 1], activation_));
    if (param_grad) {
      Eigen::Map<Mat> gw(param_grad->data() + weight_offset_[li], sizes_[li + 1], sizes_[li]);
      Eigen::Map<Vec> gb(param_grad->data() + bias_offset_[li], sizes_[li + 1]);
      gw.noalias() += delta * tape.post[li].transpose();
      gb.noalias() += delta.rowwise().sum();
    }
    delta = weight(li).transpose() * delta;
  }
  return delta;
}

nlohmann::json Mlp::to_json() const {
  return {{"sizes", sizes_}, {"activation", activation_name(activation_)}, {"params", vec_to_json(params_)}};
}

Mlp Mlp::from_json(const nlohmann::json& j) {
  Mlp net;
  net.sizes_ = j.at("sizes").get<std::vector<int>>();
  net.activation_ = activation_from_name(j.at("activation").get<std::string>());
  if (net.sizes_.size() < 2) throw InvalidArgument("Mlp::from_json: bad sizes");
  net.build_offsets();
  Vec p = vec_from_json(j.at("params"));
  if (p.size() != net.params_.size()) throw InvalidArgument("Mlp::from_json: parameter count mismatch");
  net.params_ = std::move(p);
  return net;
}

}  // namespace dicode::nn
