#include "hotreplay/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hotreplay::stats {

namespace {
constexpr double kMadConsistency = 1.4826;
}

double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / double(v.size());
}

double sample_variance(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double m = mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / double(v.size() - 1);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

MadResult mad_filter(const std::vector<double>& samples, double threshold) {
  if (samples.size() < 3) {
    throw Error(Error::Code::Usage, "mad_filter needs at least 3 samples");
  }
  double med = median(samples);
  std::vector<double> dev(samples.size());
  for (size_t i = 0; i < samples.size(); ++i) dev[i] = std::fabs(samples[i] - med);
  double mad = median(dev);

  MadResult out;
  for (size_t i = 0; i < samples.size(); ++i) {
    bool keep;
    if (mad == 0.0) {
      keep = samples[i] == med;
    } else {
      keep = std::fabs(samples[i] - med) / (kMadConsistency * mad) <= threshold;
    }
    if (keep) {
      out.retained.push_back(samples[i]);
      out.kept_indices.push_back(i);
    }
  }
  return out;
}

// Continued fraction for the incomplete beta (modified Lentz).
static double betacf(double a, double b, double x) {
  constexpr double eps = 3e-16;
  constexpr double fpmin = 1e-300;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < fpmin) d = fpmin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 500; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) break;
  }
  return h;
}

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                    b * std::log(1.0 - x);
  double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * betacf(a, b, x) / a;
  }
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double t_two_sided_p(double t, double df) {
  if (!std::isfinite(t)) return 0.0;
  double x = df / (df + t * t);
  return incomplete_beta(df / 2.0, 0.5, x);
}

double t_quantile_two_sided(double level, double df) {
  double target = 1.0 - level;  // two-sided p at the quantile
  double lo = 0.0, hi = 1.0;
  while (t_two_sided_p(hi, df) > target) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    if (t_two_sided_p(mid, df) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

TTestReport t_test(const std::vector<double>& a, const std::vector<double>& b, double alpha) {
  if (a.size() < 2 || b.size() < 2) {
    throw Error(Error::Code::Usage, "t_test needs at least 2 values per sample");
  }
  double na = double(a.size()), nb = double(b.size());
  double ma = mean(a), mb = mean(b);
  double va = sample_variance(a), vb = sample_variance(b);

  TTestReport r;
  if (va == 0.0 && vb == 0.0) {
    r.degrees_of_freedom = na + nb - 2.0;
    if (ma == mb) {
      r.t_statistic = 0.0;
      r.p_value = 1.0;
    } else {
      r.t_statistic = ma > mb ? std::numeric_limits<double>::infinity()
                              : -std::numeric_limits<double>::infinity();
      r.p_value = 0.0;
    }
    r.significant = r.p_value < alpha;
    return r;
  }

  double sa = va / na, sb = vb / nb;
  r.t_statistic = (ma - mb) / std::sqrt(sa + sb);
  r.degrees_of_freedom =
      (sa + sb) * (sa + sb) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
  r.p_value = t_two_sided_p(r.t_statistic, r.degrees_of_freedom);
  r.significant = r.p_value < alpha;
  return r;
}

std::pair<double, double> ci95(const std::vector<double>& samples) {
  if (samples.size() < 2) {
    throw Error(Error::Code::Usage, "ci95 needs at least 2 values");
  }
  double n = double(samples.size());
  double m = mean(samples);
  double s = std::sqrt(sample_variance(samples));
  if (s == 0.0) return {m, m};
  double tq = t_quantile_two_sided(0.95, n - 1.0);
  double half = tq * s / std::sqrt(n);
  return {m - half, m + half};
}

Selection select_best(const std::vector<Evaluation>& evaluations, double alpha) {
  if (evaluations.empty()) {
    throw Error(Error::Code::Usage, "select_best needs at least one evaluation");
  }
  // Canonical sweep order: by variant id, independent of arrival order.
  std::vector<const Evaluation*> order;
  order.reserve(evaluations.size());
  for (const auto& e : evaluations) order.push_back(&e);
  std::sort(order.begin(), order.end(),
            [](const Evaluation* a, const Evaluation* b) { return a->variant < b->variant; });

  const Evaluation* incumbent = order.front();
  for (size_t i = 1; i < order.size(); ++i) {
    const Evaluation* cand = order[i];
    if (cand->mean < incumbent->mean &&
        t_test(cand->filtered, incumbent->filtered, alpha).significant) {
      incumbent = cand;
    }
  }

  Selection sel;
  sel.best_variant = incumbent->variant;
  std::sort(order.begin(), order.end(), [](const Evaluation* a, const Evaluation* b) {
    if (a->mean != b->mean) return a->mean < b->mean;
    return a->variant < b->variant;
  });
  for (const Evaluation* e : order) sel.ranking.push_back(e->variant);
  return sel;
}

}  // namespace hotreplay::stats
