#pragma once

// Brute-force reference computations used to check the production code.
// Nothing here calls into the routines it is meant to verify.

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace geofair::oracle {

/// Solves (X^T X) b = X^T y by Gaussian elimination with partial pivoting in
/// long double. `rows` are design rows (include the intercept column).
std::vector<double> normal_equations(const std::vector<std::vector<double>>& rows,
                                     const std::vector<double>& y);

struct NearestPair {
  std::size_t control_index = 0;
  double distance = 0.0;
};

/// O(n*m) scan. Covariates are z-standardised with the pooled mean and
/// sample standard deviation (zero-spread columns ignored); equidistant
/// controls resolve to the smallest id.
std::vector<NearestPair> scan_nearest(
    const std::vector<std::vector<double>>& treatment,
    const std::vector<std::vector<double>>& control,
    const std::vector<std::string>& control_ids);

/// Number of (a_i, b_j) pairs with a_i > b_j plus half the ties.
double pairwise_u(const std::vector<double>& a, const std::vector<double>& b);

struct Split {
  bool found = false;
  double threshold = 0.0;
  double left_mean = 0.0;
  double right_mean = 0.0;
  double sse = 0.0;
};

/// Best single split of a 1-D sample: tries every midpoint between distinct
/// values and recomputes both children's squared error from scratch.
Split exhaustive_split(const std::vector<double>& x,
                       const std::vector<double>& y);

/// Student t CDF by adaptive Simpson integration of the density in long
/// double.
double t_cdf_quadrature(double t, double df);

/// Runs every oracle against the library on embedded fixtures, printing one
/// line per check. Returns true when all pass.
bool run_selftest(std::ostream& log);

}  // namespace geofair::oracle
