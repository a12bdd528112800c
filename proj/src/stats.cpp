#include "geofair/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "geofair/error.hpp"

namespace geofair {

namespace {

constexpr int kMaxIterations = 10'000;
constexpr double kEpsilon = 1e-16;
constexpr double kTiny = 1e-300;

// Continued fraction for I_x(a, b) (modified Lentz).
double beta_fraction(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEpsilon) return h;
  }
  return h;  // converged to working precision in practice
}

// I_x(a, b) given both x and y = 1 - x, so callers can pass an exact
// complement.
double incomplete_beta_xy(double a, double b, double x, double y) {
  if (!(a > 0.0) || !(b > 0.0) || !(x >= 0.0) || !(x <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "incomplete_beta domain");
  }
  if (x == 0.0) return 0.0;
  if (y == 0.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) -
                           std::lgamma(b) + a * std::log(x) + b * std::log(y);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_fraction(a, b, x) / a;
  }
  return 1.0 - front * beta_fraction(b, a, y) / b;
}

double sample_variance(std::span<const double> v, double m) {
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

TestResult degenerate_t(double diff, double df, std::size_t n1,
                        std::size_t n2) {
  TestResult r;
  r.degrees_of_freedom = df;
  r.n1 = n1;
  r.n2 = n2;
  r.degenerate = true;
  if (diff == 0.0) {
    r.statistic = 0.0;
    r.p_two_sided = 1.0;
  } else {
    r.statistic = std::copysign(std::numeric_limits<double>::max(), diff);
    r.p_two_sided = 0.0;
  }
  return r;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  return incomplete_beta_xy(a, b, x, 1.0 - x);
}

double student_t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "t distribution needs df > 0");
  }
  if (std::isinf(t)) return 0.0;
  const double t2 = t * t;
  // x = df / (df + t^2), 1 - x = t^2 / (df + t^2)
  return incomplete_beta_xy(0.5 * df, 0.5, df / (df + t2), t2 / (df + t2));
}

double student_t_cdf(double t, double df) {
  if (t == 0.0) return 0.5;
  const double tail = 0.5 * student_t_two_sided_p(t, df);
  return t < 0.0 ? tail : 1.0 - tail;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double mean(std::span<const double> v) {
  if (v.empty()) throw Error(ErrorCode::InvalidArgument, "mean of nothing");
  return std::accumulate(v.begin(), v.end(), 0.0) /
         static_cast<double>(v.size());
}

double mean_diff(std::span<const double> a, std::span<const double> b) {
  return mean(a) - mean(b);
}

TestResult welch_t(std::span<const double> a, std::span<const double> b,
                   TVariance variance) {
  if (a.size() < 2 || b.size() < 2) {
    throw Error(ErrorCode::InsufficientData,
                "t test needs at least two values per sample");
  }
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double ma = mean(a);
  const double mb = mean(b);
  const double va = sample_variance(a, ma);
  const double vb = sample_variance(b, mb);
  const double diff = ma - mb;

  double se2 = 0.0;
  double df = 0.0;
  if (variance == TVariance::Welch) {
    const double qa = va / na;
    const double qb = vb / nb;
    se2 = qa + qb;
    df = se2 * se2 / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
  } else {
    df = na + nb - 2.0;
    const double pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / df;
    se2 = pooled * (1.0 / na + 1.0 / nb);
  }
  if (se2 == 0.0) return degenerate_t(diff, na + nb - 2.0, a.size(), b.size());

  TestResult r;
  r.statistic = diff / std::sqrt(se2);
  r.degrees_of_freedom = df;
  r.p_two_sided = student_t_two_sided_p(r.statistic, df);
  r.n1 = a.size();
  r.n2 = b.size();
  return r;
}

TestResult paired_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::InvalidArgument, "paired samples differ in size");
  }
  if (a.size() < 2) {
    throw Error(ErrorCode::InsufficientData, "paired t needs >= 2 pairs");
  }
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const double n = static_cast<double>(d.size());
  const double md = mean(d);
  const double vd = sample_variance(d, md);
  if (vd == 0.0) return degenerate_t(md, n - 1.0, a.size(), b.size());
  TestResult r;
  r.statistic = md / std::sqrt(vd / n);
  r.degrees_of_freedom = n - 1.0;
  r.p_two_sided = student_t_two_sided_p(r.statistic, r.degrees_of_freedom);
  r.n1 = a.size();
  r.n2 = b.size();
  return r;
}

TestResult mann_whitney_u(std::span<const double> a,
                          std::span<const double> b) {
  if (a.empty() || b.empty()) {
    throw Error(ErrorCode::InsufficientData, "U test needs non-empty samples");
  }
  const std::size_t n = a.size() + b.size();
  struct Item {
    double value;
    bool from_a;
  };
  std::vector<Item> items;
  items.reserve(n);
  for (double v : a) items.push_back({v, true});
  for (double v : b) items.push_back({v, false});
  std::sort(items.begin(), items.end(),
            [](const Item& x, const Item& y) { return x.value < y.value; });

  double rank_sum_a = 0.0;
  double tie_term = 0.0;  // sum of t^3 - t over tie groups
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && items[j].value == items[i].value) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (items[k].from_a) rank_sum_a += midrank;
    }
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }

  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double nn = static_cast<double>(n);
  TestResult r;
  r.n1 = a.size();
  r.n2 = b.size();
  r.statistic = rank_sum_a - na * (na + 1.0) / 2.0;
  const double mu = na * nb / 2.0;
  const double var =
      na * nb / 12.0 * ((nn + 1.0) - (n > 1 ? tie_term / (nn * (nn - 1.0)) : 0.0));
  if (!(var > 0.0)) {
    r.degenerate = true;
    r.p_two_sided = 1.0;
    return r;
  }
  const double dev = r.statistic - mu;
  const double corrected = std::max(0.0, std::abs(dev) - 0.5);
  const double z = corrected / std::sqrt(var);
  r.z = std::copysign(z, dev);
  r.p_two_sided = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return r;
}

}  // namespace geofair
