#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace gmsel {

/// Number of statistical summary functions applied to each feature
/// distribution. The membership and order are fixed; see
/// summary_function_names() for the canonical enumeration.
inline constexpr int kNumSummaryFunctions = 63;

/// Canonical names of the 63 summary functions, in output order.
const std::vector<std::string>& summary_function_names();

/// Applies the 63 summary functions to a nonempty distribution.
///
/// Conventions (fixed so the feature schema is stable):
///  - quartiles are Tukey hinges: Q1/Q3 are the medians of the lower/upper
///    half of the sorted data, including the middle element when the length
///    is odd; medians of even halves are midpoints of the two central values.
///  - geometric/harmonic means are computed on values shifted by (1 - min)
///    whenever min <= 0.
///  - entropy treats the distribution as a histogram: shift by -min if any
///    value is negative, normalize to sum 1, base-2 logs, 0*log(0) = 0;
///    normalized entropy divides by log2(length) and is 1.0 for length 1.
///  - zero-variance or zero-denominator ratios (skewness, kurtosis,
///    coefficient of variation, SNR, efficiency ratio, variance-to-mean,
///    quartile dispersion) evaluate to 0.
///  - the mode groups values rounded to 8 significant digits, ties broken
///    by the smallest value.
/// Any remaining non-finite result is replaced by 0; when `replaced` is
/// non-null it is incremented per replacement.
Eigen::VectorXd summarize(const Eigen::VectorXd& values,
                          int* replaced = nullptr);

}  // namespace gmsel
