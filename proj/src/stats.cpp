#include "gmsel/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

namespace gmsel {

namespace {

double median_sorted(const double* data, Eigen::Index len) {
  if (len % 2 == 1) return data[len / 2];
  return 0.5 * (data[len / 2 - 1] + data[len / 2]);
}

double round_8sig(double v) {
  if (v == 0.0 || !std::isfinite(v)) return v;
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.8g", v);
  return std::strtod(buf, nullptr);
}

}  // namespace

const std::vector<std::string>& summary_function_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v = {
        "min",          "max",
        "median",       "geometric_mean",
        "harmonic_mean", "mean",
        "stdev",        "variance",
        "skewness",     "kurtosis_pearson_biased",
        "kurtosis_pearson_unbiased", "kurtosis_fisher_biased",
        "kurtosis_fisher_unbiased",  "quartile_dispersion",
        "median_abs_dev", "avg_abs_dev",
        "coeff_variation", "efficiency_ratio",
        "variance_to_mean", "snr",
        "entropy",      "normalized_entropy",
        "gini",         "q1",
        "q3",           "iqr"};
    for (const char* a : {"1.5", "3"}) {
      v.push_back(std::string("outlier_lb_") + a);
      v.push_back(std::string("outlier_ub_") + a);
    }
    for (const char* kind : {"count", "frac"})
      for (const char* a : {"1.5", "3"})
        for (const char* side : {"lb", "ub", "both"})
          v.push_back(std::string("outlier_") + kind + "_" + a + "_" + side);
    for (const char* kind : {"count", "frac"})
      for (const char* a : {"1", "2", "3"})
        for (const char* side : {"lb", "ub", "both"})
          v.push_back(std::string("std_outlier_") + kind + "_" + a + "_" +
                      side);
    v.insert(v.end(), {"mode", "mode_count", "mode_frac"});
    return v;
  }();
  return names;
}

Eigen::VectorXd summarize(const Eigen::VectorXd& x, int* replaced) {
  const Eigen::Index n = x.size();
  if (n < 1) throw std::invalid_argument("summarize: empty distribution");
  const double len = static_cast<double>(n);

  Eigen::VectorXd sorted = x;
  std::sort(sorted.data(), sorted.data() + n);
  const double vmin = sorted[0];
  const double vmax = sorted[n - 1];
  const double med = median_sorted(sorted.data(), n);

  const double mean = x.mean();
  const Eigen::ArrayXd dev = x.array() - mean;
  const double m2 = dev.square().mean();
  const double m3 = dev.cube().mean();
  const double m4 = dev.square().square().mean();
  const double variance = m2;
  const double stdev = std::sqrt(variance);

  // Shift to positivity for geometric/harmonic means.
  const double shift = vmin <= 0.0 ? 1.0 - vmin : 0.0;
  const Eigen::ArrayXd pos = x.array() + shift;
  const double geo_mean = std::exp(pos.log().mean());
  const double harm_mean = len / pos.inverse().sum();

  const double skew = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
  const double kurt_pearson_b = m2 > 0.0 ? m4 / (m2 * m2) : 0.0;
  const double kurt_fisher_b = m2 > 0.0 ? kurt_pearson_b - 3.0 : 0.0;
  double kurt_fisher_u = 0.0;
  if (m2 > 0.0 && n > 3) {
    kurt_fisher_u = ((len + 1.0) * kurt_fisher_b + 6.0) * (len - 1.0) /
                    ((len - 2.0) * (len - 3.0));
  }
  const double kurt_pearson_u =
      (m2 > 0.0 && n > 3) ? kurt_fisher_u + 3.0 : 0.0;

  // Tukey hinges: halves include the middle element when n is odd.
  const Eigen::Index half = (n + 1) / 2;
  const double q1 = median_sorted(sorted.data(), half);
  const double q3 = median_sorted(sorted.data() + (n - half), half);
  const double iqr = q3 - q1;
  const double quart_disp = (q3 + q1) != 0.0 ? iqr / (q3 + q1) : 0.0;

  Eigen::ArrayXd abs_dev_med = (x.array() - med).abs();
  std::sort(abs_dev_med.data(), abs_dev_med.data() + n);
  const double mad = median_sorted(abs_dev_med.data(), n);
  const double aad = dev.abs().mean();

  const double cv = mean != 0.0 ? stdev / mean : 0.0;
  const double eff_ratio = mean != 0.0 ? variance / (mean * mean) : 0.0;
  const double vmr = mean != 0.0 ? variance / mean : 0.0;
  const double snr = variance > 0.0 ? mean * mean / variance : 0.0;

  // Entropy of the distribution as a normalized histogram.
  Eigen::ArrayXd hist = x.array() - std::min(vmin, 0.0);
  const double total = hist.sum();
  double entropy = 0.0;
  if (total > 0.0) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double p = hist[i] / total;
      if (p > 0.0) entropy -= p * std::log2(p);
    }
  }
  const double norm_entropy = n == 1 ? 1.0 : entropy / std::log2(len);

  double gini = 0.0;
  {
    const double sum_sorted = sorted.sum();
    if (sum_sorted != 0.0) {
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i)
        acc += (2.0 * (i + 1) - len - 1.0) * sorted[i];
      gini = acc / (len * sum_sorted);
    }
  }

  auto count_below = [&](double bound) {
    return static_cast<double>(
        (x.array() < bound).count());
  };
  auto count_above = [&](double bound) {
    return static_cast<double>(
        (x.array() > bound).count());
  };

  Eigen::VectorXd out(kNumSummaryFunctions);
  int k = 0;
  out[k++] = vmin;
  out[k++] = vmax;
  out[k++] = med;
  out[k++] = geo_mean;
  out[k++] = harm_mean;
  out[k++] = mean;
  out[k++] = stdev;
  out[k++] = variance;
  out[k++] = skew;
  out[k++] = kurt_pearson_b;
  out[k++] = kurt_pearson_u;
  out[k++] = kurt_fisher_b;
  out[k++] = kurt_fisher_u;
  out[k++] = quart_disp;
  out[k++] = mad;
  out[k++] = aad;
  out[k++] = cv;
  out[k++] = eff_ratio;
  out[k++] = vmr;
  out[k++] = snr;
  out[k++] = entropy;
  out[k++] = norm_entropy;
  out[k++] = gini;
  out[k++] = q1;
  out[k++] = q3;
  out[k++] = iqr;

  const double alphas_iqr[2] = {1.5, 3.0};
  for (double a : alphas_iqr) {
    out[k++] = q1 - a * iqr;
    out[k++] = q3 + a * iqr;
  }
  double iqr_counts[2][3];
  for (int ai = 0; ai < 2; ++ai) {
    const double lb = q1 - alphas_iqr[ai] * iqr;
    const double ub = q3 + alphas_iqr[ai] * iqr;
    iqr_counts[ai][0] = count_below(lb);
    iqr_counts[ai][1] = count_above(ub);
    iqr_counts[ai][2] = iqr_counts[ai][0] + iqr_counts[ai][1];
  }
  for (auto& row : iqr_counts)
    for (double c : row) out[k++] = c;
  for (auto& row : iqr_counts)
    for (double c : row) out[k++] = c / len;

  double std_counts[3][3];
  for (int a = 1; a <= 3; ++a) {
    std_counts[a - 1][0] = count_below(mean - a * stdev);
    std_counts[a - 1][1] = count_above(mean + a * stdev);
    std_counts[a - 1][2] = std_counts[a - 1][0] + std_counts[a - 1][1];
  }
  for (auto& row : std_counts)
    for (double c : row) out[k++] = c;
  for (auto& row : std_counts)
    for (double c : row) out[k++] = c / len;

  // Mode over values rounded to 8 significant digits; ties -> smallest.
  {
    std::map<double, long> freq;
    for (Eigen::Index i = 0; i < n; ++i) ++freq[round_8sig(x[i])];
    double mode_value = 0.0;
    long mode_count = 0;
    for (const auto& [value, count] : freq) {
      if (count > mode_count) {
        mode_value = value;
        mode_count = count;
      }
    }
    out[k++] = mode_value;
    out[k++] = static_cast<double>(mode_count);
    out[k++] = static_cast<double>(mode_count) / len;
  }

  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (!std::isfinite(out[i])) {
      out[i] = 0.0;
      if (replaced) ++*replaced;
    }
  }
  return out;
}

}  // namespace gmsel
