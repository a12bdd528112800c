#pragma once

#include <cstddef>
#include <span>

namespace geofair {

/// Regularised incomplete beta I_x(a, b), a, b > 0, x in [0, 1]. Evaluated
/// with the Lentz continued fraction, switching to the complementary form
/// where that converges faster.
double incomplete_beta(double a, double b, double x);

/// Student t distribution with `df` > 0 degrees of freedom.
double student_t_cdf(double t, double df);
/// P(|T| >= |t|).
double student_t_two_sided_p(double t, double df);

double normal_cdf(double z);

struct TestResult {
  double statistic = 0.0;
  double degrees_of_freedom = 0.0;  // t tests only
  double p_two_sided = 1.0;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  double z = 0.0;  // normal-approximation score, U test only
  /// Zero-variance inputs: p fixed to 1 (no difference) or 0 (constant
  /// samples that differ), statistic to 0 or +-max double.
  bool degenerate = false;
};

enum class TVariance { Welch, Pooled };

/// Two-sample t test on mean(a) - mean(b); both samples need >= 2 values.
TestResult welch_t(std::span<const double> a, std::span<const double> b,
                   TVariance variance = TVariance::Welch);

/// One-sample t test on the element-wise differences a[i] - b[i].
TestResult paired_t(std::span<const double> a, std::span<const double> b);

/// Mann-Whitney U for sample a (midranks), tie-corrected variance, two-sided
/// normal approximation with continuity correction. All-tied input yields
/// p = 1 and the degenerate flag.
TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b);

double mean(std::span<const double> v);
/// mean(a) - mean(b).
double mean_diff(std::span<const double> a, std::span<const double> b);

}  // namespace geofair
