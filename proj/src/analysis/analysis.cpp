#include "dicode/analysis/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "dicode/core/errors.hpp"
#include "dicode/core/rng.hpp"

namespace dicode::analysis {

Vec soft_codesign_exact(const Vec& returns, double omega) {
  if (!(omega > 0.0)) throw InvalidArgument("soft_codesign_exact: omega must be positive");
  if (returns.size() == 0 || !returns.allFinite()) throw InvalidArgument("soft_codesign_exact: need finite returns");
  const Eigen::ArrayXd z = omega * returns.array();
  const double m = z.maxCoeff();
  const double lse = m + std::log((z - m).exp().sum());
  return (z - lse).exp().matrix();
}

double brute_force_objective(const Vec& returns, const Vec& dist, double omega) {
  if (!(omega > 0.0)) throw InvalidArgument("brute_force_objective: omega must be positive");
  if (dist.size() != returns.size()) throw InvalidArgument("brute_force_objective: size mismatch");
  if ((dist.array() < -1e-9).any() || std::abs(dist.sum() - 1.0) > 1e-9)
    throw InvalidArgument("brute_force_objective: distribution is not on the simplex");
  double entropy = 0.0;
  for (Index i = 0; i < dist.size(); ++i)
    if (dist[i] > 0.0) entropy -= dist[i] * std::log(dist[i]);
  return dist.dot(returns) + entropy / omega;
}

SimplexSearchResult simplex_search(const Vec& returns, double omega, double resolution, std::uint64_t seed) {
  const Index K = returns.size();
  if (K < 1) throw InvalidArgument("simplex_search: empty design space");
  SimplexSearchResult best;
  best.objective = -INFINITY;
  auto consider = [&](const Vec& p) {
    const double f = brute_force_objective(returns, p, omega);
    if (f > best.objective) {
      best.objective = f;
      best.dist = p;
    }
  };
  const int n = static_cast<int>(std::lround(1.0 / resolution));
  if (K == 1) {
    consider(Vec::Ones(1));
  } else if (K == 2) {
    for (int i = 0; i <= n; ++i) {
      Vec p(2);
      p << static_cast<double>(i) / n, static_cast<double>(n - i) / n;
      consider(p);
    }
  } else if (K == 3) {
    for (int i = 0; i <= n; ++i)
      for (int j = 0; i + j <= n; ++j) {
        Vec p(3);
        p << static_cast<double>(i) / n, static_cast<double>(j) / n, static_cast<double>(n - i - j) / n;
        consider(p);
      }
  } else {
    // Random pairwise mass transfers with a shrinking step.
    Rng rng(seed);
    Vec p = Vec::Constant(K, 1.0 / static_cast<double>(K));
    consider(p);
    for (double step = 0.25; step >= resolution * 0.5; step *= 0.5) {
      for (int it = 0; it < 4000; ++it) {
        const auto i = static_cast<Index>(rng.uniform_int(0, K - 1));
        const auto j = static_cast<Index>(rng.uniform_int(0, K - 1));
        if (i == j) continue;
        const double move = std::min(step, p[j]);
        Vec q = p;
        q[i] += move;
        q[j] -= move;
        q[j] = std::max(q[j], 0.0);
        q /= q.sum();
        if (brute_force_objective(returns, q, omega) > brute_force_objective(returns, p, omega)) p = q;
      }
    }
    consider(p);
  }
  return best;
}

std::vector<double> ema(const std::vector<double>& series, double alpha) {
  std::vector<double> out;
  out.reserve(series.size());
  for (double x : series) out.push_back(out.empty() ? x : alpha * out.back() + (1.0 - alpha) * x);
  return out;
}

std::vector<double> final_smoothed(const std::vector<std::vector<double>>& curves, double alpha) {
  std::vector<double> out;
  for (const auto& c : curves) {
    if (c.empty()) throw InvalidArgument("final_smoothed: empty curve");
    out.push_back(ema(c, alpha).back());
  }
  return out;
}

double mean(const std::vector<double>& x) {
  if (x.empty()) throw InvalidArgument("mean: empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_std(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size() - 1));
}

namespace {

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(v.size() - 1, lo + 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

Comparison compare_runs(const std::vector<double>& a, const std::vector<double>& b, double confidence, int n_boot,
                        std::uint64_t seed) {
  if (a.size() < 3 || b.size() < 3) throw InvalidArgument("compare_runs: need at least 3 seeds per run");
  if (!(confidence > 0.0 && confidence < 1.0)) throw InvalidArgument("compare_runs: confidence must be in (0, 1)");
  const bool paired = a.size() == b.size();
  const std::size_t n = std::min(a.size(), b.size());

  Comparison c;
  c.estimate = mean(a) - mean(b);

  // Expanded percentile level.
  const double alpha = 1.0 - confidence;
  boost::math::students_t t_dist(static_cast<double>(n - 1));
  const double t = boost::math::quantile(t_dist, 1.0 - alpha / 2.0);
  const double z = std::sqrt(static_cast<double>(n) / static_cast<double>(n - 1)) * t;
  const double adj = boost::math::cdf(boost::math::normal(), -z);

  Rng rng(seed);
  std::vector<double> diffs(static_cast<std::size_t>(n_boot));
  for (int r = 0; r < n_boot; ++r) {
    double sa = 0.0, sb = 0.0;
    if (paired) {
      for (std::size_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1));
        sa += a[k];
        sb += b[k];
      }
      diffs[static_cast<std::size_t>(r)] = (sa - sb) / static_cast<double>(n);
    } else {
      for (std::size_t i = 0; i < a.size(); ++i) sa += a[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(a.size()) - 1))];
      for (std::size_t i = 0; i < b.size(); ++i) sb += b[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(b.size()) - 1))];
      diffs[static_cast<std::size_t>(r)] = sa / static_cast<double>(a.size()) - sb / static_cast<double>(b.size());
    }
  }
  c.ci_low = quantile(diffs, adj);
  c.ci_high = quantile(diffs, 1.0 - adj);
  const double below = static_cast<double>(std::count_if(diffs.begin(), diffs.end(), [](double d) { return d <= 0.0; }));
  const double above = static_cast<double>(std::count_if(diffs.begin(), diffs.end(), [](double d) { return d >= 0.0; }));
  c.p_value = std::min(1.0, 2.0 * std::min(below, above) / static_cast<double>(n_boot));
  return c;
}

TestResult welch_greater(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) throw InvalidArgument("welch_greater: need two values per sample");
  const double va = std::pow(sample_std(a), 2) / static_cast<double>(a.size());
  const double vb = std::pow(sample_std(b), 2) / static_cast<double>(b.size());
  TestResult r;
  const double se = std::sqrt(va + vb);
  if (se == 0.0) {
    r.statistic = mean(a) > mean(b) ? INFINITY : 0.0;
    r.p_value = mean(a) > mean(b) ? 0.0 : 1.0;
    return r;
  }
  r.statistic = (mean(a) - mean(b)) / se;
  const double df = (va + vb) * (va + vb) /
                    (va * va / static_cast<double>(a.size() - 1) + vb * vb / static_cast<double>(b.size() - 1));
  r.p_value = boost::math::cdf(boost::math::complement(boost::math::students_t(df), r.statistic));
  return r;
}

TestResult mann_whitney_greater(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw InvalidArgument("mann_whitney_greater: empty sample");
  const double n1 = static_cast<double>(a.size()), n2 = static_cast<double>(b.size());
  std::vector<std::pair<double, int>> all;
  for (double x : a) all.emplace_back(x, 0);
  for (double x : b) all.emplace_back(x, 1);
  std::sort(all.begin(), all.end());
  double rank_sum_a = 0.0, tie_term = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].first == all[i].first) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    const double ties = static_cast<double>(j - i);
    tie_term += ties * ties * ties - ties;
    for (std::size_t k = i; k < j; ++k)
      if (all[k].second == 0) rank_sum_a += avg_rank;
    i = j;
  }
  const double u = rank_sum_a - n1 * (n1 + 1.0) / 2.0;
  const double n = n1 + n2;
  const double var = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
  TestResult r;
  r.statistic = u;
  if (var <= 0.0) {
    r.p_value = 1.0;
    return r;
  }
  const double zs = (u - n1 * n2 / 2.0 - 0.5) / std::sqrt(var);  // continuity correction
  r.p_value = boost::math::cdf(boost::math::complement(boost::math::normal(), zs));
  return r;
}

}  // namespace dicode::analysis
