#include "geofair/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace geofair::oracle {

std::vector<double> normal_equations(
    const std::vector<std::vector<double>>& rows,
    const std::vector<double>& y) {
  if (rows.empty() || rows.size() != y.size()) {
    throw std::invalid_argument("normal_equations: shape");
  }
  const std::size_t p = rows.front().size();
  std::vector<std::vector<long double>> a(p, std::vector<long double>(p + 1, 0));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = 0; j < p; ++j) {
        a[i][j] += static_cast<long double>(rows[r][i]) * rows[r][j];
      }
      a[i][p] += static_cast<long double>(rows[r][i]) * y[r];
    }
  }
  for (std::size_t c = 0; c < p; ++c) {
    std::size_t pivot = c;
    for (std::size_t r = c + 1; r < p; ++r) {
      if (std::fabs(a[r][c]) > std::fabs(a[pivot][c])) pivot = r;
    }
    if (a[pivot][c] == 0) throw std::runtime_error("singular normal matrix");
    std::swap(a[c], a[pivot]);
    for (std::size_t r = 0; r < p; ++r) {
      if (r == c) continue;
      const long double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k <= p; ++k) a[r][k] -= f * a[c][k];
    }
  }
  std::vector<double> beta(p);
  for (std::size_t i = 0; i < p; ++i) {
    beta[i] = static_cast<double>(a[i][p] / a[i][i]);
  }
  return beta;
}

std::vector<NearestPair> scan_nearest(
    const std::vector<std::vector<double>>& treatment,
    const std::vector<std::vector<double>>& control,
    const std::vector<std::string>& control_ids) {
  const std::size_t d = treatment.front().size();
  const std::size_t n = treatment.size() + control.size();
  std::vector<double> mu(d, 0.0), sd(d, 0.0);
  for (std::size_t k = 0; k < d; ++k) {
    double s = 0.0;
    for (const auto& v : treatment) s += v[k];
    for (const auto& v : control) s += v[k];
    mu[k] = s / static_cast<double>(n);
    double ss = 0.0;
    for (const auto& v : treatment) ss += (v[k] - mu[k]) * (v[k] - mu[k]);
    for (const auto& v : control) ss += (v[k] - mu[k]) * (v[k] - mu[k]);
    sd[k] = std::sqrt(ss / static_cast<double>(n - 1));
  }
  auto z = [&](const std::vector<double>& v) {
    std::vector<double> out;
    for (std::size_t k = 0; k < d; ++k) {
      if (sd[k] > 0.0) out.push_back((v[k] - mu[k]) / sd[k]);
    }
    return out;
  };
  std::vector<std::vector<double>> zc;
  zc.reserve(control.size());
  for (const auto& v : control) zc.push_back(z(v));

  std::vector<NearestPair> out;
  out.reserve(treatment.size());
  for (const auto& t : treatment) {
    const auto q = z(t);
    std::size_t best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < zc.size(); ++j) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < q.size(); ++k) {
        const double diff = q[k] - zc[j][k];
        d2 += diff * diff;
      }
      if (d2 < best_d2 ||
          (d2 == best_d2 && control_ids[j] < control_ids[best])) {
        best = j;
        best_d2 = d2;
      }
    }
    out.push_back({best, std::sqrt(best_d2)});
  }
  return out;
}

double pairwise_u(const std::vector<double>& a, const std::vector<double>& b) {
  double u = 0.0;
  for (double x : a) {
    for (double y : b) {
      if (x > y) {
        u += 1.0;
      } else if (x == y) {
        u += 0.5;
      }
    }
  }
  return u;
}

Split exhaustive_split(const std::vector<double>& x,
                       const std::vector<double>& y) {
  std::vector<double> values = x;
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  Split best;
  auto sse_of = [&](double threshold, bool left, double& mean_out) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if ((x[i] <= threshold) == left) {
        sum += y[i];
        ++count;
      }
    }
    mean_out = sum / static_cast<double>(count);
    double sse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if ((x[i] <= threshold) == left) {
        sse += (y[i] - mean_out) * (y[i] - mean_out);
      }
    }
    return sse;
  };
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    const double threshold = (values[i] + values[i + 1]) / 2.0;
    double lm = 0.0;
    double rm = 0.0;
    const double sse = sse_of(threshold, true, lm) + sse_of(threshold, false, rm);
    if (!best.found || sse < best.sse) {
      best = {true, threshold, lm, rm, sse};
    }
  }
  return best;
}

namespace {

long double t_density(long double x, long double df) {
  const long double log_norm = std::lgamma((df + 1) / 2) - std::lgamma(df / 2) -
                               0.5L * std::log(df * std::numbers::pi_v<long double>);
  return std::exp(log_norm - (df + 1) / 2 * std::log1p(x * x / df));
}

long double simpson(long double a, long double b, long double fa,
                    long double fm, long double fb) {
  return (b - a) / 6 * (fa + 4 * fm + fb);
}

long double adaptive(long double a, long double b, long double fa,
                     long double fm, long double fb, long double whole,
                     long double df, long double tol, int depth) {
  const long double m = (a + b) / 2;
  const long double lm = (a + m) / 2;
  const long double rm = (m + b) / 2;
  const long double flm = t_density(lm, df);
  const long double frm = t_density(rm, df);
  const long double left = simpson(a, m, fa, flm, fm);
  const long double right = simpson(m, b, fm, frm, fb);
  if (depth <= 0 || std::fabs(left + right - whole) <= 15 * tol) {
    return left + right + (left + right - whole) / 15;
  }
  return adaptive(a, m, fa, flm, fm, left, df, tol / 2, depth - 1) +
         adaptive(m, b, fm, frm, fb, right, df, tol / 2, depth - 1);
}

}  // namespace

double t_cdf_quadrature(double t, double df) {
  if (t == 0.0) return 0.5;
  const long double b = std::fabs(static_cast<long double>(t));
  const long double v = df;
  const long double fa = t_density(0, v);
  const long double fb = t_density(b, v);
  const long double fm = t_density(b / 2, v);
  const long double area =
      adaptive(0, b, fa, fm, fb, simpson(0, b, fa, fm, fb), v, 1e-15L, 40);
  return static_cast<double>(t > 0 ? 0.5L + area : 0.5L - area);
}

}  // namespace geofair::oracle
