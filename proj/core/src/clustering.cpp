#include "mkdet/clustering.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "mkdet/error.hpp"
#include "mkdet/parallel.hpp"

namespace mkdet {
namespace {

double total_cost(const DistanceMatrix& dm, const std::vector<std::size_t>& assignment) {
  double c = 0.0;
  for (std::size_t j = 0; j < assignment.size(); ++j) c += dm(j, assignment[j]);
  return c;
}

bool is_zero(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

std::string shortest(double v) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

}  // namespace

double dist_alpha(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DataError("dist_alpha: length mismatch");
  const double na = std::sqrt(dot(a, a));
  const double nb = std::sqrt(dot(b, b));
  if (na == 0.0 || nb == 0.0) return (na == 0.0 && nb == 0.0) ? 0.0 : 1.0;
  const double cosine = std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
  return 1.0 - cosine;
}

DistanceMatrix::DistanceMatrix(SquareMatrix entries) : m_(std::move(entries)) {
  for (std::size_t i = 0; i < m_.size(); ++i) {
    if (m_(i, i) != 0.0) throw DataError("distance matrix: nonzero diagonal");
    for (std::size_t j = i + 1; j < m_.size(); ++j) {
      if (m_(i, j) != m_(j, i)) throw DataError("distance matrix: not symmetric");
    }
  }
}

DistanceMatrix DistanceMatrix::from_pairs(std::size_t n, const std::function<double(std::size_t, std::size_t)>& d,
                                          unsigned threads) {
  SquareMatrix m(n);
  parallel_for(n, threads, [&](std::size_t i) {
    for (std::size_t j = i + 1; j < n; ++j) m(i, j) = d(i, j);
  });
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) m(j, i) = m(i, j);
  }
  return DistanceMatrix(std::move(m));
}

DistanceMatrix alpha_distance_matrix(const DetectorFamily& family, unsigned threads) {
  const auto& d = family.detectors;
  return DistanceMatrix::from_pairs(
      d.size(), [&](std::size_t i, std::size_t j) { return dist_alpha(d[i].alpha_weights, d[j].alpha_weights); },
      threads);
}

Clustering assign_to_medoids(const DistanceMatrix& dm, std::vector<std::size_t> medoids) {
  std::sort(medoids.begin(), medoids.end());
  Clustering c;
  c.assignment.resize(dm.size());
  for (std::size_t j = 0; j < dm.size(); ++j) {
    std::size_t best = medoids.front();
    for (std::size_t m : medoids) {
      if (dm(j, m) < dm(j, best)) best = m;
    }
    c.assignment[j] = best;
  }
  c.medoids = std::move(medoids);
  c.cost = total_cost(dm, c.assignment);
  return c;
}

Clustering pam(const DistanceMatrix& dm, std::size_t k, std::uint64_t /*seed*/) {
  const std::size_t n = dm.size();
  if (k < 1 || k > n) throw ConfigError("pam: k must be in [1, n]");

  // BUILD: start from the point with the least total distance, then add the
  // point that lowers the cost the most.
  std::vector<char> is_medoid(n, 0);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> medoids;
  for (std::size_t step = 0; step < k; ++step) {
    std::size_t pick = n;
    double best_gain = -std::numeric_limits<double>::infinity();
    for (std::size_t h = 0; h < n; ++h) {
      if (is_medoid[h]) continue;
      double gain = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double d = dm(j, h);
        if (step == 0) {
          gain -= d;
        } else if (d < nearest[j]) {
          gain += nearest[j] - d;
        }
      }
      if (gain > best_gain) best_gain = gain, pick = h;
    }
    is_medoid[pick] = 1;
    medoids.push_back(pick);
    for (std::size_t j = 0; j < n; ++j) nearest[j] = std::min(nearest[j], dm(j, pick));
  }

  Clustering c = assign_to_medoids(dm, medoids);
  c.build_cost = c.cost;

  // SWAP: apply the best improving (medoid, non-medoid) exchange until none helps.
  for (;;) {
    const std::size_t kk = c.medoids.size();
    std::vector<double> second(n, std::numeric_limits<double>::infinity());
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t m : c.medoids) {
        if (m != c.assignment[j]) second[j] = std::min(second[j], dm(j, m));
      }
    }
    double best_delta = 0.0;
    std::size_t best_slot = kk, best_h = n;
    for (std::size_t slot = 0; slot < kk; ++slot) {
      const std::size_t m = c.medoids[slot];
      for (std::size_t h = 0; h < n; ++h) {
        if (std::binary_search(c.medoids.begin(), c.medoids.end(), h)) continue;
        double delta = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          const double dj = dm(j, c.assignment[j]);
          const double djh = dm(j, h);
          if (c.assignment[j] == m) {
            delta += std::min(djh, second[j]) - dj;
          } else if (djh < dj) {
            delta += djh - dj;
          }
        }
        if (delta < best_delta) best_delta = delta, best_slot = slot, best_h = h;
      }
    }
    if (best_h == n || best_delta > -1e-12 * (1.0 + c.cost)) break;
    std::vector<std::size_t> next = c.medoids;
    next[best_slot] = best_h;
    Clustering candidate = assign_to_medoids(dm, next);
    if (!(candidate.cost < c.cost)) break;
    candidate.build_cost = c.build_cost;
    candidate.swaps = c.swaps + 1;
    c = std::move(candidate);
  }
  return c;
}

double silhouette(const Clustering& c, const DistanceMatrix& dm) {
  if (c.medoids.size() < 2) throw DataError("silhouette: needs at least two clusters");
  const std::size_t n = dm.size();
  const std::size_t k = c.medoids.size();
  std::vector<std::size_t> cluster_of(n);
  std::vector<std::size_t> members(k, 0);
  for (std::size_t j = 0; j < n; ++j) {
    const auto it = std::lower_bound(c.medoids.begin(), c.medoids.end(), c.assignment[j]);
    cluster_of[j] = static_cast<std::size_t>(it - c.medoids.begin());
    ++members[cluster_of[j]];
  }
  double total = 0.0;
  std::vector<double> sums(k);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t own = cluster_of[i];
    if (members[own] <= 1) continue;
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) sums[cluster_of[j]] += dm(i, j);
    }
    const double a = sums[own] / static_cast<double>(members[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t q = 0; q < k; ++q) {
      if (q != own && members[q] > 0) b = std::min(b, sums[q] / static_cast<double>(members[q]));
    }
    const double denom = std::max(a, b);
    if (denom > 0.0 && std::isfinite(b)) total += (b - a) / denom;
  }
  return std::clamp(total / static_cast<double>(n), -1.0, 1.0);
}

void KSelectConfig::validate() const {
  if (!(start_fraction > 0.0 && start_fraction <= 1.0)) throw ConfigError("cluster: start_fraction must be in (0, 1]");
  if (!(decay > 0.0 && decay < 1.0)) throw ConfigError("cluster: decay must be in (0, 1)");
  if (k_min < 1) throw ConfigError("cluster: k_min must be >= 1");
}

std::vector<std::size_t> k_schedule(std::size_t n, const KSelectConfig& cfg) {
  cfg.validate();
  std::vector<std::size_t> ks;
  auto k = static_cast<std::size_t>(std::ceil(cfg.start_fraction * static_cast<double>(n)));
  k = std::min(k, n);
  while (k >= cfg.k_min && k >= 1) {
    ks.push_back(k);
    const auto next = static_cast<std::size_t>(std::floor(static_cast<double>(k) * cfg.decay));
    k = std::min(next, k - 1);
  }
  return ks;
}

std::optional<double> KSelectReport::best_silhouette() const {
  std::optional<double> best;
  for (const auto& r : rows) {
    if (r.silhouette && (!best || *r.silhouette > *best)) best = r.silhouette;
  }
  return best;
}

DetectorFamily subset_family(const DetectorFamily& family, std::span<const std::size_t> members) {
  DetectorFamily out;
  out.model_hash = family.model_hash;
  out.shared_sv_count = family.shared_sv_count;
  for (std::size_t m : members) out.detectors.push_back(family.detectors.at(m));
  return out;
}

std::pair<DetectorFamily, KSelectReport> select_representatives(const DetectorFamily& family,
                                                                const KSelectConfig& cfg,
                                                                const ValidationHook& hook) {
  cfg.validate();
  KSelectReport report;
  report.family_size = family.size();
  report.selected_k = family.size();
  for (const auto& d : family.detectors) {
    if (is_zero(d.alpha_weights)) ++report.zero_vectors;
  }
  if (family.size() < cfg.k_min) {
    report.unchanged = true;
    return {family, report};
  }

  const DistanceMatrix dm = alpha_distance_matrix(family, cfg.threads);
  std::optional<std::size_t> best_row;
  std::vector<Clustering> clusterings;
  for (std::size_t k : k_schedule(family.size(), cfg)) {
    Clustering c = pam(dm, k, cfg.seed);
    KSelectRow row;
    row.k = k;
    row.cost = c.cost;
    if (k >= 2) row.silhouette = silhouette(c, dm);
    if (hook) row.validation_misses = hook(subset_family(family, c.medoids));
    if (row.silhouette && (!best_row || *row.silhouette > *report.rows[*best_row].silhouette)) {
      best_row = report.rows.size();
    }
    report.rows.push_back(row);
    clusterings.push_back(std::move(c));
  }
  if (!best_row) {
    report.unchanged = true;
    return {family, report};
  }
  report.rows[*best_row].selected = true;
  report.selected_k = report.rows[*best_row].k;
  return {subset_family(family, clusterings[*best_row].medoids), report};
}

void write_k_report(std::ostream& out, const KSelectReport& report) {
  out << "k,silhouette,cost,selected\n";
  for (const auto& r : report.rows) {
    out << r.k << ',' << (r.silhouette ? shortest(*r.silhouette) : std::string("nan")) << ',' << shortest(r.cost)
        << ',' << (r.selected ? 1 : 0) << '\n';
  }
}

}  // namespace mkdet
