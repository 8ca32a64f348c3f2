#include "dicode/diffusion/denoiser.hpp"

#include <cmath>
#include <vector>

#include "dicode/core/errors.hpp"

namespace dicode::diffusion {

Vec Denoiser::predict(const Vec& x, int t) const {
  const int ts[1] = {t};
  return predict(Mat(x), std::span<const int>(ts, 1)).col(0);
}

Mat time_embedding(std::span<const int> t, int features) {
  const int half = features / 2;
  Mat out = Mat::Zero(features, static_cast<Index>(t.size()));
  for (std::size_t j = 0; j < t.size(); ++j) {
    for (int k = 0; k < half; ++k) {
      const double freq = std::exp(-std::log(10000.0) * k / std::max(1, half));
      out(k, static_cast<Index>(j)) = std::sin(t[j] * freq);
      out(half + k, static_cast<Index>(j)) = std::cos(t[j] * freq);
    }
  }
  return out;
}

MlpDenoiser::MlpDenoiser(Index dim, const std::vector<int>& hidden, int time_features, Rng& rng,
                         nn::Activation activation)
    : dim_(dim), time_features_(time_features) {
  if (dim <= 0) throw InvalidArgument("MlpDenoiser: dim must be positive");
  if (time_features < 2 || time_features % 2 != 0)
    throw InvalidArgument("MlpDenoiser: time_features must be even and >= 2");
  std::vector<int> sizes;
  sizes.push_back(static_cast<int>(dim) + time_features);
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(static_cast<int>(dim));
  net_ = nn::Mlp(sizes, activation, rng);
}

Mat MlpDenoiser::features(const Mat& x, std::span<const int> t) const {
  if (x.rows() != dim_) throw InvalidArgument("MlpDenoiser: input dimension mismatch");
  if (static_cast<Index>(t.size()) != x.cols()) throw InvalidArgument("MlpDenoiser: one step per column required");
  Mat in(dim_ + time_features_, x.cols());
  in.topRows(dim_) = x;
  in.bottomRows(time_features_) = time_embedding(t, time_features_);
  return in;
}

Mat MlpDenoiser::predict(const Mat& x, std::span<const int> t) const {
  return net_.forward(features(x, t));
}

Vec MlpDenoiser::input_vjp(const Vec& x, int t, const Vec& cotangent) const {
  const int ts[1] = {t};
  nn::MlpTape tape;
  net_.forward(features(Mat(x), std::span<const int>(ts, 1)), tape);
  const Mat grad_in = net_.backward(tape, Mat(cotangent), nullptr);
  return grad_in.col(0).head(dim_);
}

double MlpDenoiser::mse_and_grad(const Mat& x, std::span<const int> t, const Mat& target, Vec& grad) const {
  if (grad.size() != net_.num_params()) grad.setZero(net_.num_params());
  nn::MlpTape tape;
  const Mat out = net_.forward(features(x, t), tape);
  const Mat diff = out - target;
  const double n = static_cast<double>(diff.size());
  net_.backward(tape, (2.0 / n) * diff, &grad);
  return diff.squaredNorm() / n;
}

nlohmann::json MlpDenoiser::to_json() const {
  return {{"dim", dim_}, {"time_features", time_features_}, {"net", net_.to_json()}};
}

MlpDenoiser MlpDenoiser::from_json(const nlohmann::json& j) {
  MlpDenoiser d;
  d.dim_ = j.at("dim").get<Index>();
  d.time_features_ = j.at("time_features").get<int>();
  d.net_ = nn::Mlp::from_json(j.at("net"));
  if (d.net_.input_dim() != d.dim_ + d.time_features_ || d.net_.output_dim() != d.dim_)
    throw InvalidArgument("MlpDenoiser::from_json: network shape does not match dim");
  return d;
}

PointSetDenoiser::PointSetDenoiser(std::vector<Vec> points, const NoiseSchedule& schedule)
    : points_(std::move(points)), alpha_bars_(schedule.alpha_bars()) {
  if (points_.empty()) throw InvalidArgument("PointSetDenoiser: empty point set");
  for (const auto& p : points_)
    if (p.size() != points_.front().size()) throw InvalidArgument("PointSetDenoiser: ragged points");
}

Vec PointSetDenoiser::weights(const Vec& x, int t) const {
  if (t < 1 || t >= static_cast<int>(alpha_bars_.size())) throw InvalidArgument("PointSetDenoiser: t outside 1..T");
  const double a = std::sqrt(alpha_bars_[static_cast<std::size_t>(t)]);
  const double var = 1.0 - alpha_bars_[static_cast<std::size_t>(t)];
  Vec logw(static_cast<Index>(points_.size()));
  for (std::size_t i = 0; i < points_.size(); ++i)
    logw[static_cast<Index>(i)] = -(x - a * points_[i]).squaredNorm() / (2.0 * var);
  const double mx = logw.maxCoeff();
  Vec w = (logw.array() - mx).exp().matrix();
  return w / w.sum();
}

Mat PointSetDenoiser::predict(const Mat& x, std::span<const int> t) const {
  if (static_cast<Index>(t.size()) != x.cols()) throw InvalidArgument("PointSetDenoiser: one step per column required");
  Mat out(x.rows(), x.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    const int tj = t[static_cast<std::size_t>(j)];
    const Vec w = weights(x.col(j), tj);
    Vec mean = Vec::Zero(x.rows());
    for (std::size_t i = 0; i < points_.size(); ++i) mean += w[static_cast<Index>(i)] * points_[i];
    const double abar = alpha_bars_[static_cast<std::size_t>(tj)];
    out.col(j) = (x.col(j) - std::sqrt(abar) * mean) / std::sqrt(1.0 - abar);
  }
  return out;
}

Vec PointSetDenoiser::input_vjp(const Vec& x, int t, const Vec& cotangent) const {
  // eps = (x - a m(x)) / s with dm/dx = (a / s^2) Cov_w(p), which is symmetric.
  const Vec w = weights(x, t);
  const double abar = alpha_bars_[static_cast<std::size_t>(t)];
  const double a = std::sqrt(abar);
  const double s2 = 1.0 - abar;
  Vec mean = Vec::Zero(x.size());
  for (std::size_t i = 0; i < points_.size(); ++i) mean += w[static_cast<Index>(i)] * points_[i];
  Vec cov_c = Vec::Zero(x.size());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const Vec centred = points_[i] - mean;
    cov_c += w[static_cast<Index>(i)] * centred * centred.dot(cotangent);
  }
  return (cotangent - (a * a / s2) * cov_c) / std::sqrt(s2);
}

}  // namespace dicode::diffusion
