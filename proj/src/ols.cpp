#include "geofair/ols.hpp"

#include <cmath>
#include <string>

#include "geofair/error.hpp"

namespace geofair {

namespace {

constexpr double kRankTolerance = 1e-10;

double norm_from(std::span<const double> v, std::size_t start) {
  // Scaled accumulation guards against overflow on large columns.
  double scale = 0.0;
  double ssq = 1.0;
  for (std::size_t i = start; i < v.size(); ++i) {
    if (v[i] == 0.0) continue;
    const double a = std::abs(v[i]);
    if (scale < a) {
      ssq = 1.0 + ssq * (scale / a) * (scale / a);
      scale = a;
    } else {
      ssq += (a / scale) * (a / scale);
    }
  }
  return scale * std::sqrt(ssq);
}

}  // namespace

std::vector<double> least_squares_qr(Matrix x, std::span<const double> y) {
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  if (y.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "design/target length mismatch");
  }
  if (n < p || p == 0) {
    throw Error(ErrorCode::InsufficientData,
                std::to_string(n) + " rows for " + std::to_string(p) +
                    " coefficients");
  }
  std::vector<double> rhs(y.begin(), y.end());
  std::vector<double> original_norm(p);
  for (std::size_t j = 0; j < p; ++j) original_norm[j] = norm_from(x.col(j), 0);

  for (std::size_t j = 0; j < p; ++j) {
    auto col = x.col(j);
    const double alpha = norm_from(col, j);
    if (!(alpha > kRankTolerance * original_norm[j]) || alpha == 0.0) {
      throw Error(ErrorCode::RankDeficient,
                  "design column " + std::to_string(j) +
                      " is (numerically) a combination of earlier columns");
    }
    // Reflector v = x + sign(x0) |x| e0, stored in place of the column.
    const double diag = col[j] >= 0.0 ? -alpha : alpha;
    col[j] -= diag;
    double vtv = 0.0;
    for (std::size_t i = j; i < n; ++i) vtv += col[i] * col[i];

    auto reflect = [&](std::span<double> target) {
      double dot = 0.0;
      for (std::size_t i = j; i < n; ++i) dot += col[i] * target[i];
      const double f = 2.0 * dot / vtv;
      for (std::size_t i = j; i < n; ++i) target[i] -= f * col[i];
    };
    for (std::size_t k = j + 1; k < p; ++k) reflect(x.col(k));
    reflect(rhs);
    col[j] = diag;  // R(j, j); sub-diagonal entries are no longer needed
  }

  std::vector<double> beta(p);
  for (std::size_t jj = p; jj-- > 0;) {
    double s = rhs[jj];
    for (std::size_t k = jj + 1; k < p; ++k) s -= x(jj, k) * beta[k];
    beta[jj] = s / x(jj, jj);
  }
  for (double b : beta) {
    if (!std::isfinite(b)) {
      throw Error(ErrorCode::RankDeficient, "non-finite coefficient");
    }
  }
  return beta;
}

}  // namespace geofair
