#pragma once

// Prohorov, bounded-Lipschitz and psi-weighted distances between finitely
// supported measures, and the empirical Ky Fan distance.
//
// Prohorov is computed through Strassen's coupling characterization:
//   pi(mu, nu) = inf { t : exists coupling with P(d(X, Y) > t) <= t }.
// For a threshold t the smallest achievable mass P(d > t) is the deficit
// D(t) = 1 - maxflow(t) of the bipartite transport network that only admits
// pairs with d <= t. D is a non-increasing step function with breakpoints at
// the pairwise atom distances, so the infimum is attained at a breakpoint or
// at a level of D and is located by bisection over the sorted breakpoints.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "robstat/error.hpp"
#include "robstat/format.hpp"
#include "robstat/max_flow.hpp"
#include "robstat/measure.hpp"
#include "robstat/simplex.hpp"

namespace robstat {

/// Union supports above this size are coarsened before the flow computation.
inline constexpr std::size_t kMaxProhorovAtoms = 400;

struct ProhorovResult {
  double value = 0.0;
  /// Zero unless the supports were coarsened; then |exact - value| <= error_bound.
  double error_bound = 0.0;
};

struct MetricReport {
  double prohorov = 0.0;
  double bl = 0.0;
  double psi_gap = 0.0;
  double d_psi = 0.0;
  MetricMode mode = MetricMode::raw;
};

inline std::string metric_report_csv_header() { return "prohorov,bl,psi_gap,d_psi,metric_mode"; }

inline std::string to_csv_row(const MetricReport& r) {
  return format_double(r.prohorov) + ',' + format_double(r.bl) + ',' + format_double(r.psi_gap) + ',' +
         format_double(r.d_psi) + ',' + to_string(r.mode);
}

namespace detail {

// Deterministic argument order so that symmetric metrics are bit-symmetric.
inline bool atoms_less(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  return std::lexicographical_compare(
      a.atoms().begin(), a.atoms().end(), b.atoms().begin(), b.atoms().end(),
      [](const Atom& x, const Atom& y) { return x.point < y.point || (x.point == y.point && x.weight < y.weight); });
}

// Merges sorted union support points into at most `bins` groups of
// consecutive points and maps each atom to its group midpoint.
struct Coarsening {
  std::vector<double> edges_lo, edges_hi;
  double radius = 0.0;

  double map(double x) const {
    auto it = std::upper_bound(edges_lo.begin(), edges_lo.end(), x);
    const std::size_t g = static_cast<std::size_t>(it - edges_lo.begin()) - 1;
    return 0.5 * (edges_lo[g] + edges_hi[g]);
  }
};

inline Coarsening make_coarsening(std::vector<double> points, std::size_t bins) {
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  Coarsening c;
  const std::size_t n = points.size();
  for (std::size_t g = 0; g < bins; ++g) {
    const std::size_t lo = g * n / bins;
    const std::size_t hi = (g + 1) * n / bins;
    if (lo == hi) continue;
    c.edges_lo.push_back(points[lo]);
    c.edges_hi.push_back(points[hi - 1]);
    c.radius = std::max(c.radius, 0.5 * (points[hi - 1] - points[lo]));
  }
  return c;
}

// Minimal uncoupled mass when only pairs with d <= t may be matched.
inline double coupling_deficit(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                               const std::vector<std::vector<double>>& dist, double t) {
  const std::size_t m = mu.size();
  const std::size_t k = nu.size();
  FlowNetwork net;
  net.num_nodes = m + k + 2;
  net.source = m + k;
  net.sink = m + k + 1;
  for (std::size_t i = 0; i < m; ++i) net.add_edge(net.source, i, mu.atoms()[i].weight);
  for (std::size_t j = 0; j < k; ++j) net.add_edge(m + j, net.sink, nu.atoms()[j].weight);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (dist[i][j] <= t) net.add_edge(i, m + j, 2.0);
    }
  }
  return std::max(0.0, 1.0 - max_flow(net).value);
}

inline double prohorov_exact(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const GroundSpace& space) {
  if (mu == nu) return 0.0;
  std::vector<std::vector<double>> dist(mu.size(), std::vector<double>(nu.size()));
  std::vector<double> breaks{0.0};
  for (std::size_t i = 0; i < mu.size(); ++i) {
    for (std::size_t j = 0; j < nu.size(); ++j) {
      dist[i][j] = space.distance(mu.atoms()[i].point, nu.atoms()[j].point);
      breaks.push_back(dist[i][j]);
    }
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  // Smallest breakpoint index with D(t) <= t; D(t_last) = 0 up to flow tolerance.
  std::size_t lo = 0, hi = breaks.size() - 1;
  double deficit_before = 1.0;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    const double d = coupling_deficit(mu, nu, dist, breaks[mid]);
    if (d <= breaks[mid] + kFlowTol) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  double value = breaks[lo];
  if (lo > 0) {
    deficit_before = coupling_deficit(mu, nu, dist, breaks[lo - 1]);
    value = std::min(value, deficit_before);
  }
  return std::clamp(value, 0.0, 1.0);
}

}  // namespace detail

/// Prohorov distance with coarsening diagnostics.
inline ProhorovResult prohorov_detailed(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                        const GroundSpace& space) {
  check_supported(mu, space);
  check_supported(nu, space);
  const bool swap = detail::atoms_less(nu, mu);
  const DiscreteMeasure& a = swap ? nu : mu;
  const DiscreteMeasure& b = swap ? mu : nu;

  std::vector<double> support;
  for (const auto& x : a.atoms()) support.push_back(x.point);
  for (const auto& x : b.atoms()) support.push_back(x.point);
  std::sort(support.begin(), support.end());
  support.erase(std::unique(support.begin(), support.end()), support.end());

  if (support.size() <= kMaxProhorovAtoms || !space.is_real_line()) {
    return {detail::prohorov_exact(a, b, space), 0.0};
  }
  const detail::Coarsening c = detail::make_coarsening(support, kMaxProhorovAtoms);
  auto coarse = [&](double x) { return c.map(x); };
  const double value = detail::prohorov_exact(pushforward(a, coarse), pushforward(b, coarse), space);
  // Each measure moves by at most `radius` in the coupling sense.
  double bound = 2.0 * c.radius;
  if (space.mode() == MetricMode::bounded) bound = std::min(bound, 2.0);
  return {value, bound};
}

inline double prohorov(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const GroundSpace& space) {
  return prohorov_detailed(mu, nu, space).value;
}

/// beta(mu, nu) = sup { (mu - nu) f : ||f||_inf + Lip(f) <= 1 }.
///
/// Solved as an LP over f restricted to the union support, plus s >= |f|
/// and L >= Lip(f) with s + L <= 1. McShane extension clipped to [-s, s]
/// extends any feasible f to the whole space with the same norm.
inline double bl_metric(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const GroundSpace& space) {
  check_supported(mu, space);
  check_supported(nu, space);
  if (mu == nu) return 0.0;
  const bool swap = detail::atoms_less(nu, mu);
  const DiscreteMeasure& a = swap ? nu : mu;
  const DiscreteMeasure& b = swap ? mu : nu;

  std::vector<double> pts;
  for (const auto& x : a.atoms()) pts.push_back(x.point);
  for (const auto& x : b.atoms()) pts.push_back(x.point);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  const std::size_t k = pts.size();
  const std::size_t s_var = k, l_var = k + 1;

  LinearProgram lp(k + 2);
  for (std::size_t i = 0; i < k; ++i) {
    lp.set_free(i);
    lp.objective[i] = a.weight_at(pts[i]) - b.weight_at(pts[i]);
  }
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<double> row(k + 2, 0.0);
    row[i] = 1.0;
    row[s_var] = -1.0;
    lp.add_constraint(row, 0.0);
    row[i] = -1.0;
    lp.add_constraint(row, 0.0);
  }
  // On the raw real line Lipschitz constraints between neighbours imply the rest.
  const bool chain = space.is_real_line() && space.mode() == MetricMode::raw;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      if (chain && j != i + 1) break;
      const double d = space.distance(pts[i], pts[j]);
      std::vector<double> row(k + 2, 0.0);
      row[i] = 1.0;
      row[j] = -1.0;
      row[l_var] = -d;
      lp.add_constraint(row, 0.0);
      row[i] = -1.0;
      row[j] = 1.0;
      lp.add_constraint(row, 0.0);
    }
  }
  {
    std::vector<double> row(k + 2, 0.0);
    row[s_var] = 1.0;
    row[l_var] = 1.0;
    lp.add_constraint(row, 1.0);
  }
  const LpSolution sol = solve_lp(lp);
  if (sol.status != LpStatus::optimal) fail(ErrorKind::numeric, "bounded-Lipschitz LP did not reach an optimum");
  return std::clamp(sol.objective, 0.0, 2.0);
}

/// |mu psi - nu psi|.
inline double psi_gap(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const Gauge& psi) {
  if (psi.kind() == Gauge::Kind::one) return 0.0;
  return std::abs(psi_moment(mu, psi) - psi_moment(nu, psi));
}

/// d_psi(mu, nu) = pi(mu, nu) + |(mu - nu) psi|, reported together with beta.
inline MetricReport d_psi(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const Gauge& psi,
                          const GroundSpace& space) {
  MetricReport r;
  r.mode = space.mode();
  r.prohorov = prohorov(mu, nu, space);
  r.bl = bl_metric(mu, nu, space);
  r.psi_gap = psi_gap(mu, nu, psi);
  r.d_psi = r.prohorov + r.psi_gap;
  return r;
}

/// d_psi without the beta column.
inline double d_psi_value(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const Gauge& psi,
                          const GroundSpace& space) {
  return prohorov(mu, nu, space) + psi_gap(mu, nu, psi);
}

/// Smallest eps >= 0 with (fraction of distances > eps) <= eps.
inline double ky_fan_empirical(std::span<const double> distances) {
  require(!distances.empty(), "Ky Fan distance needs at least one sample");
  std::vector<double> d(distances.begin(), distances.end());
  for (double x : d) require(std::isfinite(x) && x >= 0.0, "Ky Fan distance samples must be non-negative");
  std::sort(d.begin(), d.end());
  const double n = static_cast<double>(d.size());
  // Pieces [b, next) on which the exceedance fraction is constant.
  std::vector<double> breaks{0.0};
  for (double x : d) {
    if (x > breaks.back()) breaks.push_back(x);
  }
  for (std::size_t j = 0; j < breaks.size(); ++j) {
    const auto above = d.end() - std::upper_bound(d.begin(), d.end(), breaks[j]);
    const double frac = static_cast<double>(above) / n;
    const double candidate = std::max(breaks[j], frac);
    if (j + 1 == breaks.size() || candidate < breaks[j + 1]) return candidate;
  }
  return breaks.back();
}

}  // namespace robstat
