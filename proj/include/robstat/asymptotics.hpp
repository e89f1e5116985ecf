#pragma once

// Monte Carlo experiments on empirical measures of stationary sequences:
// psi-weak consistency towards the directing measure, the uniform
// Glivenko-Cantelli property of the bounded-Lipschitz unit ball, and the
// robustness bound for estimator laws under path perturbations.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "robstat/error.hpp"
#include "robstat/measure.hpp"
#include "robstat/metrics.hpp"
#include "robstat/process.hpp"
#include "robstat/risk.hpp"

namespace robstat {

/// Calls fn(i) for i in [0, count). threads == 0 runs inline; otherwise
/// indices are striped across `threads` workers. fn must only write to
/// slot i of its outputs.
template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < count; i += threads) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

inline double median(std::vector<double> v) {
  require(!v.empty(), "median of an empty sample");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

struct RunOptions {
  std::uint64_t master_seed = 0;
  unsigned threads = 0;
};

// ---------------------------------------------------------------------------
// Consistency

struct ConsistencyRecord {
  std::size_t replication = 0;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  double bl = 0.0;        // beta(m_n, upsilon)
  double prohorov = 0.0;  // pi(m_n, upsilon)
  double psi_gap = 0.0;   // |m_n psi - upsilon psi|
  double d_psi = 0.0;     // prohorov + psi_gap
  double d_psi_marginal = 0.0;  // d_psi(m_n, law of one coordinate)
};

struct ConsistencySummary {
  std::size_t n = 0;
  double median_bl = 0.0;
  double median_prohorov = 0.0;
  double median_psi_gap = 0.0;
  double median_d_psi = 0.0;
  double median_d_psi_marginal = 0.0;
  double min_d_psi_marginal = 0.0;
};

struct ConsistencyRun {
  std::vector<ConsistencyRecord> records;  // ordered by (replication, n)
  std::vector<ConsistencySummary> summary;  // one per schedule entry
};

inline void check_schedule(std::span<const std::size_t> schedule) {
  require(!schedule.empty(), "n-schedule must be nonempty");
  for (std::size_t n : schedule) require(n >= 1, "n-schedule entries must be positive");
}

/// For each replication and each n in the schedule, distances between the
/// empirical measure of the first n observations and the directing measure.
inline ConsistencyRun consistency_experiment(const PathGenerator& gen, const Gauge& psi,
                                             std::span<const std::size_t> schedule, std::size_t seeds,
                                             const RunOptions& opt = {}) {
  check_schedule(schedule);
  require(seeds >= 1, "need at least one seed");
  const std::size_t n_max = *std::max_element(schedule.begin(), schedule.end());
  const DiscreteMeasure marginal = gen.marginal();
  const GroundSpace& space = gen.space();
  // Directing measures must exist before any work is scheduled.
  (void)directing_measure(gen, generate(gen, 1, replication_seed(opt.master_seed, 0)));

  std::vector<std::vector<ConsistencyRecord>> per_rep(seeds);
  parallel_for(seeds, opt.threads, [&](std::size_t r) {
    const std::uint64_t seed = replication_seed(opt.master_seed, r);
    const SamplePath path = generate(gen, n_max, seed);
    const DiscreteMeasure upsilon = directing_measure(gen, path).measure;
    for (std::size_t n : schedule) {
      const DiscreteMeasure m = make_empirical(std::span<const double>(path.points).first(n));
      ConsistencyRecord rec;
      rec.replication = r;
      rec.seed = seed;
      rec.n = n;
      rec.bl = bl_metric(m, upsilon, space);
      rec.prohorov = prohorov(m, upsilon, space);
      rec.psi_gap = psi_gap(m, upsilon, psi);
      rec.d_psi = rec.prohorov + rec.psi_gap;
      rec.d_psi_marginal = d_psi_value(m, marginal, psi, space);
      per_rep[r].push_back(rec);
    }
  });

  ConsistencyRun run;
  for (auto& recs : per_rep) run.records.insert(run.records.end(), recs.begin(), recs.end());
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    std::vector<double> bl, pr, gap, dp, dm;
    for (const auto& recs : per_rep) {
      const auto& r = recs[k];
      bl.push_back(r.bl);
      pr.push_back(r.prohorov);
      gap.push_back(r.psi_gap);
      dp.push_back(r.d_psi);
      dm.push_back(r.d_psi_marginal);
    }
    run.summary.push_back({schedule[k], median(bl), median(pr), median(gap), median(dp), median(dm),
                           *std::min_element(dm.begin(), dm.end())});
  }
  return run;
}

// ---------------------------------------------------------------------------
// Glivenko-Cantelli over the bounded-Lipschitz unit ball

struct GcRecord {
  std::size_t replication = 0;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  double bl = 0.0;  // sup over BL_1 of |(m_n - mu) f| = beta(m_n, mu)
};

struct GcSummary {
  std::size_t n = 0;
  double median_bl = 0.0;
  double max_bl = 0.0;
};

struct GcRun {
  std::vector<GcRecord> records;
  std::vector<GcSummary> summary;
};

inline GcRun gc_sup_check(const PathGenerator& gen, std::span<const std::size_t> schedule, std::size_t seeds,
                          const RunOptions& opt = {}) {
  if (gen.kind() != PathGenerator::Kind::iid) {
    fail(ErrorKind::unsupported, "gc check requires an iid generator");
  }
  check_schedule(schedule);
  require(seeds >= 1, "need at least one seed");
  const std::size_t n_max = *std::max_element(schedule.begin(), schedule.end());
  const DiscreteMeasure& mu = gen.components().front();
  std::vector<std::vector<GcRecord>> per_rep(seeds);
  parallel_for(seeds, opt.threads, [&](std::size_t r) {
    const std::uint64_t seed = replication_seed(opt.master_seed, r);
    const SamplePath path = generate(gen, n_max, seed);
    for (std::size_t n : schedule) {
      const DiscreteMeasure m = make_empirical(std::span<const double>(path.points).first(n));
      per_rep[r].push_back({r, seed, n, bl_metric(m, mu, gen.space())});
    }
  });
  GcRun run;
  for (auto& recs : per_rep) run.records.insert(run.records.end(), recs.begin(), recs.end());
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    std::vector<double> v;
    for (const auto& recs : per_rep) v.push_back(recs[k].bl);
    run.summary.push_back({schedule[k], median(v), *std::max_element(v.begin(), v.end())});
  }
  return run;
}

// ---------------------------------------------------------------------------
// Estimator laws

/// tau(m_n) on `reps` paired replications, optionally after perturbing each
/// path by theta. Values are indexed by replication.
inline std::vector<double> estimator_values(const PathGenerator& gen, const Statistic& tau, std::size_t n,
                                            std::size_t reps, const std::optional<Perturbation>& theta,
                                            const RunOptions& opt = {}) {
  require(reps >= 1, "reps must be at least 1");
  require(n >= 1, "sample size must be at least 1");
  if (theta) check_supported_pair(gen, *theta);
  const std::size_t extra = theta ? theta->lookahead() : 0;
  std::vector<double> values(reps);
  parallel_for(reps, opt.threads, [&](std::size_t r) {
    SamplePath path = generate(gen, n + extra, replication_seed(opt.master_seed, r));
    if (theta) path = apply_perturbation(*theta, path);
    values[r] = evaluate(tau, make_empirical(std::span<const double>(path.points).first(n)), gen.space());
  });
  return values;
}

/// Empirical law of tau_n = tau(m_n) over independent replications.
inline DiscreteMeasure estimator_law(const PathGenerator& gen, const Statistic& tau, std::size_t n, std::size_t reps,
                                     const std::optional<Perturbation>& theta = std::nullopt,
                                     const RunOptions& opt = {}) {
  return make_empirical(estimator_values(gen, tau, n, reps, theta, opt));
}

// ---------------------------------------------------------------------------
// Perturbation size

/// Empirical survival function of distances between upsilon and upsilon o theta.
class LambdaCurve {
 public:
  LambdaCurve() = default;

  explicit LambdaCurve(std::vector<double> samples) : samples_(std::move(samples)) {
    require(!samples_.empty(), "lambda curve needs at least one sample");
    for (double x : samples_) require(std::isfinite(x) && x >= 0.0, "lambda samples must be finite and non-negative");
    std::sort(samples_.begin(), samples_.end());
  }

  /// Fraction of samples strictly above alpha.
  double operator()(double alpha) const {
    const auto above = samples_.end() - std::upper_bound(samples_.begin(), samples_.end(), alpha);
    return static_cast<double>(above) / static_cast<double>(samples_.size());
  }

  const std::vector<double>& samples() const noexcept { return samples_; }

 private:
  std::vector<double> samples_;
};

/// Samples of d_psi(upsilon, upsilon o theta) over replications.
inline LambdaCurve lambda_theta(const PathGenerator& gen, const Perturbation& theta, const Gauge& psi,
                                std::size_t reps, const RunOptions& opt = {}) {
  require(reps >= 1, "reps must be at least 1");
  check_supported_pair(gen, theta);
  std::vector<double> d(reps);
  parallel_for(reps, opt.threads, [&](std::size_t r) {
    const SamplePath path = generate(gen, 1 + theta.lookahead(), replication_seed(opt.master_seed, r));
    const DirectingMeasure ups = directing_measure(gen, path);
    const DirectingMeasure moved = directing_pushforward(theta, ups);
    d[r] = d_psi_value(ups.measure, moved.measure, psi, gen.space());
  });
  return LambdaCurve(std::move(d));
}

inline constexpr double kThetaNormTol = 1e-9;

/// inf { alpha > 0 : lambda(alpha) < kappa(alpha) } for the piecewise
/// constant empirical curve. On each constant piece the crossing with the
/// strictly increasing kappa is located by bisection.
inline double theta_norm(const LambdaCurve& curve, const Modulus& kappa) {
  const auto& s = curve.samples();
  require(!s.empty(), "theta_norm of an empty curve");
  std::vector<double> breaks{0.0};
  for (double x : s) {
    if (x > breaks.back()) breaks.push_back(x);
  }
  for (std::size_t j = 0; j < breaks.size(); ++j) {
    const double lo = breaks[j];
    const double level = curve(lo);
    const bool last = j + 1 == breaks.size();
    const double hi = last ? std::numeric_limits<double>::infinity() : breaks[j + 1];
    if (level == 0.0 || kappa(lo) > level) return lo;
    if (last) {
      // Unreachable: the curve vanishes past its largest sample.
      return lo;
    }
    if (kappa(hi) <= level) continue;
    double a = lo, b = hi;  // kappa(a) <= level < kappa(b)
    for (int it = 0; it < 200 && b - a > 1e-3 * kThetaNormTol * std::max(1.0, b); ++it) {
      const double mid = 0.5 * (a + b);
      if (kappa(mid) > level) {
        b = mid;
      } else {
        a = mid;
      }
    }
    return b;
  }
  return breaks.back();
}

struct ScoringNorm {
  std::vector<double> forward;   // S~(upsilon_i, (upsilon o theta)_i)
  std::vector<double> backward;  // S~((upsilon o theta)_i, upsilon_i)
  double norm_forward = 0.0;
  double norm_backward = 0.0;
};

/// Perturbation size measured by the expected score instead of d_psi.
inline ScoringNorm theta_norm_scoring(const PathGenerator& gen, const Perturbation& theta, const Statistic& tau,
                                      const ScoringFunction& score, const Modulus& kappa, std::size_t reps,
                                      const RunOptions& opt = {}) {
  require(reps >= 1, "reps must be at least 1");
  check_supported_pair(gen, theta);
  ScoringNorm out;
  out.forward.resize(reps);
  out.backward.resize(reps);
  parallel_for(reps, opt.threads, [&](std::size_t r) {
    const SamplePath path = generate(gen, 1 + theta.lookahead(), replication_seed(opt.master_seed, r));
    const DirectingMeasure ups = directing_measure(gen, path);
    const DirectingMeasure moved = directing_pushforward(theta, ups);
    out.forward[r] = std::max(0.0, score_integral(tau, score, ups.measure, moved.measure));
    out.backward[r] = std::max(0.0, score_integral(tau, score, moved.measure, ups.measure));
  });
  out.norm_forward = theta_norm(LambdaCurve(out.forward), kappa);
  out.norm_backward = theta_norm(LambdaCurve(out.backward), kappa);
  return out;
}

// ---------------------------------------------------------------------------
// Robustness

/// Metric used between laws of real-valued estimators.
inline GroundSpace estimator_space() { return GroundSpace::real_line(MetricMode::bounded); }

/// Binomial standard error of an estimated probability at its least
/// favourable value 1/2.
inline double binomial_standard_error(std::size_t reps) { return 0.5 / std::sqrt(static_cast<double>(reps)); }

struct RobustnessRow {
  std::size_t n = 0;
  double lhs = 0.0;              // pi(P o tau_n^-1, P_theta o tau_n^-1)
  double lhs_error_bound = 0.0;  // from support coarsening, usually 0
  double rhs = 0.0;              // kappa(||theta||)
  double margin = 0.0;           // 2 * binomial standard error
  bool holds = false;            // lhs + lhs_error_bound <= rhs + margin
};

struct RobustnessRun {
  std::vector<RobustnessRow> rows;
  double theta_norm = 0.0;      // ||theta||_{P,kappa}
  double ky_fan = 0.0;          // same with kappa = identity
  double rhs = 0.0;
  double max_lhs = 0.0;         // max over the schedule, standing in for the limsup
  bool holds = false;
  double directing_lhs = 0.0;   // pi(law tau(upsilon), law tau(upsilon o theta))
  bool directing_holds = false;
  bool quasi_invariant = true;  // declared by the perturbation
  std::vector<double> lambda_samples;
};

inline RobustnessRun robustness_check(const PathGenerator& gen, const Perturbation& theta, const Statistic& tau,
                                      const Modulus& kappa, const Gauge& psi, std::span<const std::size_t> schedule,
                                      std::size_t reps, const RunOptions& opt = {}) {
  check_schedule(schedule);
  require(reps >= 1, "reps must be at least 1");
  check_supported_pair(gen, theta);
  const std::size_t n_max = *std::max_element(schedule.begin(), schedule.end());
  const std::size_t extra = theta.lookahead();
  const GroundSpace law_space = estimator_space();

  // One path per replication serves every n and both the plain and perturbed
  // estimators (paired seeds).
  std::vector<std::vector<double>> plain(schedule.size(), std::vector<double>(reps));
  std::vector<std::vector<double>> moved(schedule.size(), std::vector<double>(reps));
  std::vector<double> d(reps), tau_ups(reps), tau_moved(reps);
  parallel_for(reps, opt.threads, [&](std::size_t r) {
    const SamplePath path = generate(gen, n_max + extra, replication_seed(opt.master_seed, r));
    const SamplePath perturbed = apply_perturbation(theta, path);
    for (std::size_t k = 0; k < schedule.size(); ++k) {
      const std::size_t n = schedule[k];
      plain[k][r] = evaluate(tau, make_empirical(std::span<const double>(path.points).first(n)), gen.space());
      moved[k][r] = evaluate(tau, make_empirical(std::span<const double>(perturbed.points).first(n)), gen.space());
    }
    const DirectingMeasure ups = directing_measure(gen, path);
    const DirectingMeasure ups_moved = directing_pushforward(theta, ups);
    d[r] = d_psi_value(ups.measure, ups_moved.measure, psi, gen.space());
    tau_ups[r] = evaluate(tau, ups.measure, gen.space());
    tau_moved[r] = evaluate(tau, ups_moved.measure, gen.space());
  });

  RobustnessRun run;
  run.quasi_invariant = theta.quasi_invariant();
  const LambdaCurve curve(d);
  run.lambda_samples = curve.samples();
  run.theta_norm = theta_norm(curve, kappa);
  run.ky_fan = ky_fan_empirical(d);
  run.rhs = kappa(run.theta_norm);
  const double margin = 2.0 * binomial_standard_error(reps);
  run.holds = true;
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    const auto res = prohorov_detailed(make_empirical(plain[k]), make_empirical(moved[k]), law_space);
    RobustnessRow row{schedule[k], res.value, res.error_bound, run.rhs, margin, false};
    row.holds = row.lhs + row.lhs_error_bound <= row.rhs + row.margin;
    run.holds = run.holds && row.holds;
    run.max_lhs = std::max(run.max_lhs, row.lhs);
    run.rows.push_back(row);
  }
  run.directing_lhs = prohorov(make_empirical(tau_ups), make_empirical(tau_moved), law_space);
  run.directing_holds = run.directing_lhs <= run.rhs + margin;
  return run;
}

}  // namespace robstat
