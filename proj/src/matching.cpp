#include "geofair/matching.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "geofair/csv.hpp"
#include "geofair/error.hpp"
#include "geofair/kdtree.hpp"
#include "geofair/parallel.hpp"

namespace geofair {

GroupAssignment assign_groups(const Dataset& subset, Community community) {
  GroupAssignment g;
  g.community = community;
  std::vector<double> shares;
  shares.reserve(subset.size());
  for (const auto& r : subset) shares.push_back(community_share(r, community));
  g.median = median(shares);
  g.is_treatment.reserve(subset.size());
  for (double s : shares) {
    const bool treated = s > g.median;
    g.is_treatment.push_back(treated);
    ++(treated ? g.n_treatment : g.n_control);
  }
  if (g.n_control == 0) {
    throw Error(ErrorCode::AllTreatment,
                std::string(to_string(community)) + ": no control villages");
  }
  if (g.n_treatment == 0) {
    throw Error(ErrorCode::AllControl,
                std::string(to_string(community)) +
                    ": no village above the median share");
  }
  return g;
}

std::string_view to_string(MatchMetric m) {
  return m == MatchMetric::Euclidean ? "euclidean" : "mahalanobis";
}

std::array<double, 5> match_covariates(const VillageRecord& r) {
  if (!r.electricity) {
    throw Error(ErrorCode::MissingFeature,
                "village '" + r.village_id + "': electricity");
  }
  return {r.lat, r.lon, r.poverty_rate, *r.electricity ? 1.0 : 0.0,
          static_cast<double>(r.population)};
}

std::size_t MatchSpace::dims() const {
  return static_cast<std::size_t>(std::count(active.begin(), active.end(), true));
}

std::vector<double> MatchSpace::embed(const VillageRecord& r) const {
  const auto raw = match_covariates(r);
  std::vector<double> z;
  z.reserve(dims());
  for (std::size_t k = 0; k < raw.size(); ++k) {
    if (active[k]) z.push_back((raw[k] - mean[k]) / sd[k]);
  }
  if (metric == MatchMetric::Euclidean) return z;
  const std::size_t d = z.size();
  std::vector<double> w(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j <= i; ++j) s += whitening[i * d + j] * z[j];
    w[i] = s;
  }
  return w;
}

MatchSpace build_match_space(std::span<const VillageRecord> treatment,
                             std::span<const VillageRecord> control,
                             MatchMetric metric) {
  const std::size_t n = treatment.size() + control.size();
  if (treatment.empty() || control.empty()) {
    throw Error(ErrorCode::InvalidArgument,
                "match space needs treatment and control villages");
  }
  std::vector<std::array<double, 5>> rows;
  rows.reserve(n);
  for (const auto& r : treatment) rows.push_back(match_covariates(r));
  for (const auto& r : control) rows.push_back(match_covariates(r));

  MatchSpace space;
  space.metric = metric;
  for (std::size_t k = 0; k < 5; ++k) {
    double sum = 0.0;
    for (const auto& row : rows) sum += row[k];
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (const auto& row : rows) ss += (row[k] - mean) * (row[k] - mean);
    const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    space.mean[k] = mean;
    space.sd[k] = sd;
    space.active[k] = sd > 0.0;
    if (!space.active[k]) {
      space.warnings.push_back("match feature '" +
                               std::string(kMatchFeatures[k]) +
                               "' has zero spread and was dropped");
    }
  }
  const std::size_t d = space.dims();
  if (d == 0) {
    throw Error(ErrorCode::InvalidArgument,
                "every match feature has zero spread");
  }
  if (metric == MatchMetric::Mahalanobis) {
    // Covariance of the standardised active covariates.
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < 5; ++k) {
      if (space.active[k]) idx.push_back(k);
    }
    std::vector<double> cov(d * d, 0.0);
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < d; ++i) {
        const double zi = (row[idx[i]] - space.mean[idx[i]]) / space.sd[idx[i]];
        for (std::size_t j = 0; j <= i; ++j) {
          const double zj =
              (row[idx[j]] - space.mean[idx[j]]) / space.sd[idx[j]];
          cov[i * d + j] += zi * zj;
        }
      }
    }
    for (auto& c : cov) c /= static_cast<double>(n - 1);
    // Cholesky: cov = L L^T.
    std::vector<double> l(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j <= i; ++j) {
        double s = cov[i * d + j];
        for (std::size_t k = 0; k < j; ++k) s -= l[i * d + k] * l[j * d + k];
        if (i == j) {
          if (!(s > 1e-12)) {
            throw Error(ErrorCode::InvalidArgument,
                        "match covariates are collinear; Mahalanobis "
                        "distance undefined");
          }
          l[i * d + i] = std::sqrt(s);
        } else {
          l[i * d + j] = s / l[j * d + j];
        }
      }
    }
    // Invert the lower-triangular factor column by column.
    std::vector<double> inv(d * d, 0.0);
    for (std::size_t c = 0; c < d; ++c) {
      for (std::size_t i = c; i < d; ++i) {
        double s = i == c ? 1.0 : 0.0;
        for (std::size_t k = c; k < i; ++k) s -= l[i * d + k] * inv[k * d + c];
        inv[i * d + c] = s / l[i * d + i];
      }
    }
    space.whitening = std::move(inv);
  }
  return space;
}

MatchedPairSet match(std::span<const VillageRecord> treatment,
                     std::span<const VillageRecord> control,
                     const MatchSpace& space, unsigned jobs) {
  if (treatment.empty() || control.empty()) {
    throw Error(ErrorCode::InvalidArgument,
                "matching needs non-empty treatment and control sets");
  }
  const std::size_t d = space.dims();

  std::vector<double> points;
  points.reserve(control.size() * d);
  for (const auto& r : control) {
    const auto e = space.embed(r);
    points.insert(points.end(), e.begin(), e.end());
  }
  // Tie rank = position in lexicographic village_id order.
  std::vector<std::size_t> by_id(control.size());
  std::iota(by_id.begin(), by_id.end(), std::size_t{0});
  std::sort(by_id.begin(), by_id.end(), [&](std::size_t a, std::size_t b) {
    return control[a].village_id < control[b].village_id;
  });
  std::vector<std::uint64_t> rank(control.size());
  for (std::size_t i = 0; i < by_id.size(); ++i) rank[by_id[i]] = i;
  const KdTree tree(std::move(points), d, std::move(rank));

  MatchedPairSet out;
  out.n_treatment = treatment.size();
  out.n_control_pool = control.size();
  out.pairs.resize(treatment.size());
  std::vector<std::vector<double>> queries(treatment.size());
  for (std::size_t i = 0; i < treatment.size(); ++i) {
    queries[i] = space.embed(treatment[i]);
  }
  parallel_for(treatment.size(), jobs, [&](std::size_t i) {
    const auto hit = tree.nearest(queries[i]);
    auto& p = out.pairs[i];
    p.treatment_index = i;
    p.control_index = hit.index;
    p.treatment_id = treatment[i].village_id;
    p.control_id = control[hit.index].village_id;
    p.distance = std::sqrt(hit.squared_distance);
  });

  std::vector<std::size_t> uses(control.size(), 0);
  for (const auto& p : out.pairs) ++uses[p.control_index];
  for (std::size_t u : uses) {
    if (u == 0) continue;
    ++out.n_control_unique;
    ++out.reuse_histogram[u];
    out.max_reuse = std::max(out.max_reuse, u);
  }
  return out;
}

void write_pairs_csv(const MatchedPairSet& pairs, std::ostream& out) {
  out << "treatment_id,control_id,distance\n";
  for (const auto& p : pairs.pairs) {
    out << csv::quote(p.treatment_id) << ',' << csv::quote(p.control_id) << ','
        << csv::format_double(p.distance) << '\n';
  }
}

}  // namespace geofair
