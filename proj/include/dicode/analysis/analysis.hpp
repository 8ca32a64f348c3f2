#pragma once

#include <cstdint>
#include <vector>

#include "dicode/core/types.hpp"

namespace dicode::analysis {

/// Gibbs distribution p_i proportional to exp(omega * J_i), computed with log-sum-exp.
Vec soft_codesign_exact(const Vec& returns, double omega);

/// E_dist[J] + H(dist) / omega. Throws if dist is not on the simplex (tolerance 1e-9).
double brute_force_objective(const Vec& returns, const Vec& dist, double omega);

struct SimplexSearchResult {
  Vec dist;
  double objective = 0.0;
};

/// Exhaustive grid over the simplex for K <= 3; random-direction local
/// search over the simplex for larger K.
SimplexSearchResult simplex_search(const Vec& returns, double omega, double resolution = 1e-3,
                                   std::uint64_t seed = 0);

/// s_0 = x_0, s_t = alpha s_{t-1} + (1 - alpha) x_t.
std::vector<double> ema(const std::vector<double>& series, double alpha = 0.95);

struct Comparison {
  double estimate = 0.0;  // mean(a) - mean(b)
  double ci_low = 0.0;
  double ci_high = 0.0;
  double p_value = 1.0;   // two-sided bootstrap p-value for a zero difference
  bool excludes_zero() const { return ci_low > 0.0 || ci_high < 0.0; }
};

/// Bootstrap CI for the difference of means. Equal-length inputs are treated
/// as paired by seed. Uses the expanded percentile interval (level widened
/// by sqrt(n / (n - 1)) t-quantiles) for small samples. Needs >= 3 values per side.
Comparison compare_runs(const std::vector<double>& a, const std::vector<double>& b, double confidence = 0.95,
                        int n_boot = 10000, std::uint64_t seed = 0);

/// Final EMA-smoothed value of each seed's curve.
std::vector<double> final_smoothed(const std::vector<std::vector<double>>& curves, double alpha = 0.95);

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// One-sided Welch t-test for mean(a) > mean(b).
TestResult welch_greater(const std::vector<double>& a, const std::vector<double>& b);

/// One-sided Mann-Whitney U test for a stochastically larger than b
/// (normal approximation with tie correction).
TestResult mann_whitney_greater(const std::vector<double>& a, const std::vector<double>& b);

double mean(const std::vector<double>& x);
double sample_std(const std::vector<double>& x);

}  // namespace dicode::analysis
