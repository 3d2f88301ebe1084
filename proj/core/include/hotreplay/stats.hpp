#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "hotreplay/bytesio.hpp"

namespace hotreplay::stats {

double mean(const std::vector<double>& v);
double sample_variance(const std::vector<double>& v);  // n-1 denominator
double median(std::vector<double> v);

// Robust outlier removal: drop x where |x - median| / (1.4826 * MAD)
// exceeds the threshold. MAD = 0 retains only values equal to the median.
// Requires at least 3 samples.
struct MadResult {
  std::vector<double> retained;
  std::vector<size_t> kept_indices;
};
MadResult mad_filter(const std::vector<double>& samples, double threshold = 3.0);

// Welch unequal-variance t-test, two-sided p via the regularized
// incomplete beta. When both variances vanish: p = 1 for equal means,
// p = 0 otherwise.
struct TTestReport {
  double t_statistic = 0.0;
  double degrees_of_freedom = 0.0;
  double p_value = 1.0;
  bool significant = false;
};
TTestReport t_test(const std::vector<double>& a, const std::vector<double>& b,
                   double alpha = 0.05);

// mean +- t_{0.975, n-1} * s / sqrt(n); requires n >= 2.
std::pair<double, double> ci95(const std::vector<double>& samples);

// Regularized incomplete beta I_x(a, b), |error| <= 1e-9.
double incomplete_beta(double a, double b, double x);
// Two-sided p for a t statistic at the given degrees of freedom.
double t_two_sided_p(double t, double df);
// Upper t quantile: P(|T| <= q) = level.
double t_quantile_two_sided(double level, double df);

// Incumbent sweep over evaluations in variant order: a candidate replaces
// the incumbent only when its mean is lower and the difference tests
// significant. Ranking orders by (mean, variant) so the result does not
// depend on arrival order.
struct Evaluation {
  int variant = 0;
  std::vector<double> filtered;
  double mean = 0.0;
};
struct Selection {
  int best_variant = -1;
  std::vector<int> ranking;  // variant ids, best mean first
};
Selection select_best(const std::vector<Evaluation>& evaluations, double alpha = 0.05);

}  // namespace hotreplay::stats
