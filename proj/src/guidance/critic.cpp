#include "dicode/guidance/critic.hpp"

#include <cmath>

#include "dicode/core/errors.hpp"
#include "dicode/diffusion/denoiser.hpp"
#include "dicode/diffusion/ops.hpp"

namespace dicode::guidance {

double MultimodalCritic::value(const Vec& x) const {
  const Eigen::ArrayXd d = (x - c_).array();
  return -(d.square() + a_ * (1.0 - (2.0 * M_PI * f_ * d).cos())).sum();
}

Vec MultimodalCritic::gradient(const Vec& x) const {
  const Eigen::ArrayXd d = (x - c_).array();
  return (-(2.0 * d + a_ * 2.0 * M_PI * f_ * (2.0 * M_PI * f_ * d).sin())).matrix();
}

MlpCritic::MlpCritic(Index dim, const std::vector<int>& hidden, Rng& rng, nn::Activation act) {
  std::vector<int> sizes{static_cast<int>(dim)};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  net_ = nn::Mlp(sizes, act, rng);
}

double MlpCritic::value(const Vec& x) const { return net_.forward(Mat(x))(0, 0); }

Vec MlpCritic::values(const Mat& x) const { return net_.forward(x).row(0).transpose(); }

Vec MlpCritic::gradient(const Vec& x) const {
  nn::MlpTape tape;
  net_.forward(Mat(x), tape);
  return net_.backward(tape, Mat::Ones(1, 1), nullptr).col(0);
}

double MlpCritic::sse_and_grad(const Mat& x, const Vec& y, Vec& grad) const {
  if (x.cols() != y.size()) throw InvalidArgument("MlpCritic: one target per column required");
  if (grad.size() != net_.num_params()) grad.setZero(net_.num_params());
  nn::MlpTape tape;
  const Mat out = net_.forward(x, tape);
  const Mat diff = out - y.transpose();
  net_.backward(tape, 2.0 * diff, &grad);
  return diff.squaredNorm();
}

MlpCritic MlpCritic::from_json(const nlohmann::json& j) {
  MlpCritic c;
  c.net_ = nn::Mlp::from_json(j);
  if (c.net_.output_dim() != 1) throw InvalidArgument("MlpCritic: network must have one output");
  return c;
}

NoisyCritic::NoisyCritic(Index dim, const std::vector<int>& hidden, int time_features, Rng& rng)
    : dim_(dim), time_features_(time_features) {
  std::vector<int> sizes{static_cast<int>(dim) + time_features};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  net_ = nn::Mlp(sizes, nn::Activation::Silu, rng);
}

Mat NoisyCritic::features(const Mat& x, std::span<const int> t) const {
  Mat in(dim_ + time_features_, x.cols());
  in.topRows(dim_) = x;
  in.bottomRows(time_features_) = diffusion::time_embedding(t, time_features_);
  return in;
}

double NoisyCritic::value(const Vec& x_t, int t) const {
  const int ts[1] = {t};
  return net_.forward(features(Mat(x_t), std::span<const int>(ts, 1)))(0, 0);
}

Vec NoisyCritic::gradient(const Vec& x_t, int t) const {
  const int ts[1] = {t};
  nn::MlpTape tape;
  net_.forward(features(Mat(x_t), std::span<const int>(ts, 1)), tape);
  return net_.backward(tape, Mat::Ones(1, 1), nullptr).col(0).head(dim_);
}

double NoisyCritic::train(const Mat& designs, const Vec& targets, const diffusion::NoiseSchedule& s, int iters,
                          int batch, double lr, Rng& rng) {
  if (designs.cols() == 0 || designs.cols() != targets.size()) throw InvalidArgument("NoisyCritic: bad training set");
  if (opt_.steps() == 0 && net_.num_params() > 0) opt_ = nn::Adam(net_.num_params(), nn::AdamConfig{.lr = lr});
  double loss = 0.0;
  Vec grad;
  for (int it = 0; it < iters; ++it) {
    Mat x(dim_, batch);
    Vec y(batch);
    std::vector<int> ts(static_cast<std::size_t>(batch));
    for (int j = 0; j < batch; ++j) {
      const auto idx = static_cast<Index>(rng.uniform_int(0, designs.cols() - 1));
      ts[static_cast<std::size_t>(j)] = static_cast<int>(rng.uniform_int(1, s.T()));
      x.col(j) = diffusion::noisify(designs.col(idx), rng.normal_vec(dim_), ts[static_cast<std::size_t>(j)], s);
      y[j] = targets[idx];
    }
    nn::MlpTape tape;
    const Mat out = net_.forward(features(x, ts), tape);
    const Mat diff = out - y.transpose();
    grad.setZero(net_.num_params());
    net_.backward(tape, (2.0 / batch) * diff, &grad);
    loss = diff.squaredNorm() / batch;
    opt_.step(net_.params(), grad, lr);
  }
  return loss;
}

nlohmann::json NoisyCritic::to_json() const {
  return {{"dim", dim_}, {"time_features", time_features_}, {"net", net_.to_json()}, {"opt", opt_.state()}};
}

void NoisyCritic::load_json(const nlohmann::json& j) {
  dim_ = j.at("dim").get<Index>();
  time_features_ = j.at("time_features").get<int>();
  net_ = nn::Mlp::from_json(j.at("net"));
  opt_ = nn::Adam(net_.num_params(), nn::AdamConfig{});
  opt_.load_state(j.at("opt"));
}

double gradient_check(const EnvCritic& v, const std::vector<Vec>& inputs, double h, double floor) {
  double worst = 0.0;
  for (const Vec& x : inputs) {
    const Vec g = v.gradient(x);
    Vec fd(x.size());
    for (Index k = 0; k < x.size(); ++k) {
      Vec xp = x, xm = x;
      xp[k] += h;
      xm[k] -= h;
      fd[k] = (v.value(xp) - v.value(xm)) / (2.0 * h);
    }
    worst = std::max(worst, (g - fd).norm() / std::max(fd.norm(), floor));
  }
  return worst;
}

}  // namespace dicode::guidance
