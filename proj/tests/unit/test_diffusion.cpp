#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dicode/core/errors.hpp"
#include "dicode/core/hash.hpp"
#include "dicode/diffusion/checkpoint.hpp"
#include "dicode/diffusion/ops.hpp"

using namespace dicode;
using namespace dicode::diffusion;

namespace {

// Returns the same noise for every input (zeros by default).
class ConstDenoiser final : public Denoiser {
 public:
  explicit ConstDenoiser(Vec eps) : eps_(std::move(eps)) {}
  Index dim() const override { return eps_.size(); }
  using Denoiser::predict;
  Mat predict(const Mat& x, std::span<const int>) const override { return eps_.replicate(1, x.cols()); }
  Vec input_vjp(const Vec& x, int, const Vec&) const override { return Vec::Zero(x.size()); }

 private:
  Vec eps_;
};

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_CASE("schedule closed forms") {
  const auto s = make_schedule(1000, 1e-4, 0.02);
  CHECK(s.alpha_bar(0) == 1.0);
  for (int t = 1; t <= 1000; ++t) {
    REQUIRE(s.alpha_bar(t) < s.alpha_bar(t - 1));
    REQUIRE(s.alpha_bar(t) > 0.0);
  }
  const auto one = NoiseSchedule::from_betas({0.5});
  CHECK(one.alpha_bar(1) == doctest::Approx(0.5));
  const auto flat = make_schedule(4, 0.1, 0.1);
  const double expect[] = {1.0, 0.9, 0.81, 0.729, 0.6561};
  for (int t = 0; t <= 4; ++t) CHECK(flat.alpha_bar(t) == doctest::Approx(expect[t]).epsilon(1e-12));
  CHECK_THROWS(make_schedule(0));
}

TEST_CASE("strided timesteps") {
  const auto st = strided_timesteps(1000, 50);
  REQUIRE(st.size() == 51);
  CHECK(st.front() == 1000);
  CHECK(st.back() == 0);
  CHECK(st[1] == 980);
  const auto full = strided_timesteps(10, 10);
  for (int i = 0; i <= 10; ++i) CHECK(full[static_cast<std::size_t>(i)] == 10 - i);
}

TEST_CASE("noisify and predict_clean examples") {
  // A one-step schedule with abar_1 = 0.64.
  const auto s = NoiseSchedule::from_betas({0.36});
  const Vec xt = noisify(v2(1, 0), v2(0, 1), 1, s);
  CHECK(xt[0] == doctest::Approx(0.8));
  CHECK(xt[1] == doctest::Approx(0.6));
  const Vec x0 = clean_from_noise(v2(0.8, 0.6), v2(0, 1), 1, s);
  CHECK(x0[0] == doctest::Approx(1.0));
  CHECK(std::abs(x0[1]) < 1e-12);
  CHECK(noisify(v2(3, 4), v2(9, 9), 0, s) == v2(3, 4));
  const Vec z = noisify(Vec::Zero(2), v2(1, -2), 1, s);
  CHECK(z[0] == doctest::Approx(0.6));
  ConstDenoiser zero(Vec::Zero(2));
  const Vec pc = predict_clean(v2(0.8, 0.6), 1, zero, s);
  CHECK(pc[0] == doctest::Approx(1.0));
  CHECK(pc[1] == doctest::Approx(0.75));
  CHECK_THROWS_AS(predict_clean(v2(0, 0), 0, zero, s), InvalidArgument);
}

TEST_CASE("ddim_step consistency with the closed form") {
  const auto s = make_schedule(1000);
  Rng rng(1);
  const Vec x0 = rng.normal_vec(4), eps = rng.normal_vec(4);
  const Vec xt = noisify(x0, eps, 700, s);
  const Vec prev = ddim_step(xt, eps, 700, 500, s);
  CHECK((prev - noisify(x0, eps, 500, s)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((ddim_step(xt, eps, 700, 0, s) - x0).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("ddpm loss with oracle and zero denoisers") {
  const auto s = make_schedule(100);
  Rng rng(2);
  const Mat batch = rng.normal_mat(3, 8);
  Rng draw_rng(9);
  const DdpmDraw draw = draw_ddpm_noise(3, 8, s, draw_rng);
  ConstDenoiser zero(Vec::Zero(3));
  CHECK(ddpm_loss(zero, batch, s, draw) == doctest::Approx(draw.eps.array().square().mean()));
  // Replaying the same seed reproduces the loss.
  Rng r1(11), r2(11);
  CHECK(ddpm_loss(zero, batch, s, r1) == ddpm_loss(zero, batch, s, r2));
  // A single-point posterior denoiser is exact for noise drawn around that point.
  const Vec point = rng.normal_vec(3);
  PointSetDenoiser oracle({point}, s);
  CHECK(ddpm_loss(oracle, point.replicate(1, 8), s, draw) < 1e-20);
  Rng big(3);
  const DdpmDraw many = draw_ddpm_noise(3, 20000, s, big);
  CHECK(ddpm_loss(zero, Mat::Zero(3, 20000), s, many) == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("oracle DDIM chain recovers the data point") {
  const auto s = make_schedule(1000);
  Rng rng(4);
  const Vec x0 = rng.uniform_vec(5, -1, 1);
  PointSetDenoiser oracle({x0}, s);
  Rng chain(5);
  CHECK((sample_unconditional_chain(oracle, s, 50, chain) - x0).cwiseAbs().maxCoeff() < 1e-4);
  Rng chain2(5);
  CHECK((sample_unconditional_chain(oracle, s, 1000, chain2) - x0).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("trained prior fits a small point set") {
  const auto s = make_schedule(1000);
  Rng rng(6);
  std::vector<Vec> pts;
  for (int i = 0; i < 8; ++i) pts.push_back(v2(std::cos(i * M_PI / 4), std::sin(i * M_PI / 4)));
  MlpDenoiser d(2, {64, 64}, 16, rng);
  const DesignGenerator gen = [&](Rng& r) { return pts[static_cast<std::size_t>(r.uniform_int(0, 7))]; };
  Mat held(2, 256);
  for (Index j = 0; j < 256; ++j) held.col(j) = gen(rng);
  Rng probe1(77);
  const double before = ddpm_loss(d, held, s, probe1);
  const auto hist = train_prior(d, gen, 3000, {64, 2e-3}, s, rng);
  Rng probe2(77);
  CHECK(ddpm_loss(d, held, s, probe2) < before);
  CHECK(hist.size() == 3000);
  int close = 0;
  const Mat samples = sample_unconditional_batch(d, s, 50, 256, rng);
  for (Index j = 0; j < samples.cols(); ++j) {
    double best = 1e9;
    for (const Vec& p : pts) best = std::min(best, (samples.col(j) - p).norm());
    close += best <= 0.5;
  }
  CHECK(close >= 0.6 * 256);
}

TEST_CASE("zero training iterations leave parameters unchanged") {
  const auto s = make_schedule(10);
  Rng rng(7);
  MlpDenoiser d(2, {8}, 4, rng);
  const Vec before = d.params();
  train_prior(d, [](Rng& r) { return r.normal_vec(2); }, 0, {}, s, rng);
  CHECK(d.params() == before);
}

TEST_CASE("denoiser input vjp matches finite differences") {
  const auto s = make_schedule(1000);
  Rng rng(8);
  MlpDenoiser d(3, {16, 16}, 8, rng);
  const Vec x = rng.normal_vec(3), cot = rng.normal_vec(3);
  const Vec g = d.input_vjp(x, 400, cot);
  for (Index k = 0; k < 3; ++k) {
    Vec xp = x, xm = x;
    xp[k] += 1e-6;
    xm[k] -= 1e-6;
    CHECK(g[k] == doctest::Approx(cot.dot(d.predict(xp, 400) - d.predict(xm, 400)) / 2e-6).epsilon(1e-5));
  }
}

TEST_CASE("checkpoint roundtrip") {
  const auto s = make_schedule(200, 1e-4, 0.02);
  Rng rng(9);
  MlpDenoiser d(4, {8, 8}, 8, rng);
  const std::string path = "dicode_test_denoiser.ckpt";
  save_denoiser(path, d, s, "nav");
  const auto ck = load_denoiser(path);
  CHECK(ck.scenario_id == "nav");
  CHECK(ck.denoiser.params() == d.params());
  CHECK(ck.schedule.T() == 200);
  std::ifstream in(path);
  std::string first;
  std::getline(in, first);
  CHECK(first == kDenoiserMagic);
  std::remove(path.c_str());
}

TEST_CASE("unconditional sampling is seed-deterministic") {
  const auto s = make_schedule(100);
  Rng rng(10);
  MlpDenoiser d(3, {8}, 4, rng);
  Rng a(1), b(1);
  CHECK(sample_unconditional(d, s, 20, a).data == sample_unconditional(d, s, 20, b).data);
}
