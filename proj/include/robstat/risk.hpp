#pragma once

// Statistics on measures, moduli of continuity and scoring functions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "robstat/error.hpp"
#include "robstat/format.hpp"
#include "robstat/measure.hpp"
#include "robstat/metrics.hpp"

namespace robstat {

/// Slack used when comparing a cumulative mass with a quantile level.
inline constexpr double kLevelTol = 1e-12;

/// Real-valued functional tau on measures; T = R with d_T(s, t) = |s - t|.
class Statistic {
 public:
  enum class Kind { mean, quantile, expected_shortfall, custom };
  using Functional = std::function<double(const DiscreteMeasure&)>;

  static Statistic mean() { return Statistic{}; }

  /// Lower quantile inf{x : F(x) >= level}.
  static Statistic quantile(double level) {
    require(level > 0.0 && level < 1.0, "quantile level must lie in (0, 1)");
    Statistic s;
    s.kind_ = Kind::quantile;
    s.level_ = level;
    return s;
  }

  /// Mean of the upper (1 - level) tail, splitting the atom at the quantile.
  static Statistic expected_shortfall(double level) {
    require(level > 0.0 && level < 1.0, "expected shortfall level must lie in (0, 1)");
    Statistic s;
    s.kind_ = Kind::expected_shortfall;
    s.level_ = level;
    return s;
  }

  static Statistic custom(std::string name, Functional fn) {
    require(static_cast<bool>(fn), "custom statistic needs a function");
    Statistic s;
    s.kind_ = Kind::custom;
    s.name_ = std::move(name);
    s.fn_ = std::move(fn);
    return s;
  }

  Kind kind() const noexcept { return kind_; }
  double level() const noexcept { return level_; }

  std::string name() const {
    switch (kind_) {
      case Kind::mean:
        return "mean";
      case Kind::quantile:
        return "quantile(" + format_double(level_) + ",lower)";
      case Kind::expected_shortfall:
        return "expected_shortfall(" + format_double(level_) + ")";
      case Kind::custom:
        return name_;
    }
    return name_;
  }

  double operator()(const DiscreteMeasure& mu) const {
    require(!mu.empty(), "statistic of an empty measure");
    switch (kind_) {
      case Kind::mean:
        return integrate(mu, [](double x) { return x; });
      case Kind::quantile:
        return lower_quantile(mu, level_);
      case Kind::expected_shortfall: {
        const double q = lower_quantile(mu, level_);
        double cum = 0.0, tail = 0.0;
        for (const auto& a : mu.atoms()) {
          if (a.point <= q) {
            cum += a.weight;
          } else {
            tail += a.weight * a.point;
          }
        }
        tail += std::max(0.0, cum - level_) * q;
        return tail / (1.0 - level_);
      }
      case Kind::custom:
        return fn_(mu);
    }
    return 0.0;
  }

  static double lower_quantile(const DiscreteMeasure& mu, double level) {
    double cum = 0.0;
    for (const auto& a : mu.atoms()) {
      cum += a.weight;
      if (cum >= level - kLevelTol) return a.point;
    }
    return mu.atoms().back().point;
  }

 private:
  Kind kind_ = Kind::mean;
  double level_ = 0.0;
  std::string name_;
  Functional fn_;
};

/// evaluate with a ground-space check: order statistics need the real line.
inline double evaluate(const Statistic& tau, const DiscreteMeasure& mu,
                       const GroundSpace& space = GroundSpace::real_line()) {
  if ((tau.kind() == Statistic::Kind::quantile || tau.kind() == Statistic::Kind::expected_shortfall) &&
      !space.is_real_line()) {
    fail(ErrorKind::unsupported, tau.name() + " requires the real line as ground space");
  }
  return tau(mu);
}

/// Modulus of continuity kappa: continuous, kappa(0) = 0, strictly increasing.
class Modulus {
 public:
  enum class Kind { identity, sqrt, power, table };

  static Modulus identity(double scale = 1.0) { return make(Kind::identity, 1.0, scale); }
  static Modulus sqrt(double scale = 1.0) { return make(Kind::sqrt, 0.5, scale); }
  static Modulus power(double exponent, double scale = 1.0) {
    require(std::isfinite(exponent) && exponent > 0.0, "modulus exponent must be positive");
    return make(Kind::power, exponent, scale);
  }

  /// Piecewise linear through (0, 0) and the given knots, continued past the
  /// last knot with the last slope. Knots must increase strictly in both axes.
  static Modulus table(std::vector<std::pair<double, double>> knots) {
    require(!knots.empty(), "modulus table needs at least one knot");
    double px = 0.0, py = 0.0;
    for (const auto& [x, y] : knots) {
      require(std::isfinite(x) && std::isfinite(y), "modulus table entries must be finite");
      require(x > px && y > py, "modulus table must be strictly increasing from (0, 0)");
      px = x;
      py = y;
    }
    Modulus m;
    m.kind_ = Kind::table;
    m.knots_ = std::move(knots);
    return m;
  }

  Kind kind() const noexcept { return kind_; }
  double exponent() const noexcept { return exponent_; }
  double scale() const noexcept { return scale_; }
  const std::vector<std::pair<double, double>>& knots() const noexcept { return knots_; }

  std::string name() const {
    const std::string s = scale_ == 1.0 ? "" : format_double(scale_) + "*";
    switch (kind_) {
      case Kind::identity:
        return s + "identity";
      case Kind::sqrt:
        return s + "sqrt";
      case Kind::power:
        return s + "power(" + format_double(exponent_) + ")";
      case Kind::table:
        return "table(" + std::to_string(knots_.size()) + " knots)";
    }
    return "";
  }

  double operator()(double z) const {
    require(!(z < 0.0), "modulus evaluated at a negative argument");
    switch (kind_) {
      case Kind::identity:
        return scale_ * z;
      case Kind::sqrt:
        return scale_ * std::sqrt(z);
      case Kind::power:
        return scale_ * std::pow(z, exponent_);
      case Kind::table: {
        double px = 0.0, py = 0.0;
        for (const auto& [x, y] : knots_) {
          if (z <= x) return py + (y - py) * (z - px) / (x - px);
          px = x;
          py = y;
        }
        const double slope = knots_.size() == 1 ? py / px
                                                : (py - knots_[knots_.size() - 2].second) /
                                                      (px - knots_[knots_.size() - 2].first);
        return py + slope * (z - px);
      }
    }
    return 0.0;
  }

  friend bool operator==(const Modulus&, const Modulus&) = default;

 private:
  static Modulus make(Kind kind, double exponent, double scale) {
    require(std::isfinite(scale) && scale > 0.0, "modulus scale must be positive");
    Modulus m;
    m.kind_ = kind;
    m.exponent_ = exponent;
    m.scale_ = scale;
    return m;
  }

  Kind kind_ = Kind::identity;
  double exponent_ = 1.0;
  double scale_ = 1.0;
  std::vector<std::pair<double, double>> knots_;
};

/// Scoring function S(x, y) for a reported value x and an observation y.
class ScoringFunction {
 public:
  enum class Kind { squared, pinball_psi, custom };
  using Fn = std::function<double(double, double)>;

  static ScoringFunction squared() { return ScoringFunction{}; }

  /// (1{x >= y} - level) (psi(x) - psi(y)); consistent for the level-quantile
  /// when psi is strictly increasing on the evaluated points.
  static ScoringFunction pinball_psi(double level, Gauge psi) {
    require(level > 0.0 && level < 1.0, "pinball level must lie in (0, 1)");
    ScoringFunction s;
    s.kind_ = Kind::pinball_psi;
    s.level_ = level;
    s.psi_ = std::move(psi);
    return s;
  }

  static ScoringFunction custom(std::string name, Fn fn) {
    require(static_cast<bool>(fn), "custom scoring function needs a function");
    ScoringFunction s;
    s.kind_ = Kind::custom;
    s.name_ = std::move(name);
    s.fn_ = std::move(fn);
    return s;
  }

  Kind kind() const noexcept { return kind_; }
  double level() const noexcept { return level_; }
  const Gauge& gauge() const noexcept { return psi_; }

  std::string name() const {
    switch (kind_) {
      case Kind::squared:
        return "squared";
      case Kind::pinball_psi:
        return "pinball_psi(" + format_double(level_) + ")";
      case Kind::custom:
        return name_;
    }
    return name_;
  }

  double operator()(double x, double y) const {
    switch (kind_) {
      case Kind::squared:
        return (x - y) * (x - y);
      case Kind::pinball_psi:
        return ((x >= y ? 1.0 : 0.0) - level_) * (psi_(x) - psi_(y));
      case Kind::custom:
        return fn_(x, y);
    }
    return 0.0;
  }

 private:
  Kind kind_ = Kind::squared;
  double level_ = 0.5;
  Gauge psi_;
  std::string name_;
  Fn fn_;
};

/// S~(mu, nu) = integral of S(tau(mu), x) nu(dx).
inline double score_integral(const Statistic& tau, const ScoringFunction& score, const DiscreteMeasure& mu,
                             const DiscreteMeasure& nu) {
  const double t = evaluate(tau, mu);
  return integrate(nu, [&](double x) { return score(t, x); });
}

using MeasurePair = std::pair<DiscreteMeasure, DiscreteMeasure>;

struct ViolationRow {
  double lhs = 0.0;      // d_T(tau(mu), tau(nu))
  double s_tilde = 0.0;  // S~(mu, nu)
  double rhs = 0.0;      // kappa(S~(mu, nu))
  bool violated = false;
};

struct ViolationReport {
  std::string statistic, scoring, modulus;
  std::vector<ViolationRow> rows;
  std::size_t violations = 0;
};

/// Relative slack on lhs <= rhs to absorb rounding in provable identities.
inline constexpr double kViolationSlack = 1e-12;

inline ViolationRow scoring_row(const Statistic& tau, const ScoringFunction& score, const Modulus& kappa,
                                const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  ViolationRow r;
  r.lhs = std::abs(evaluate(tau, mu) - evaluate(tau, nu));
  r.s_tilde = score_integral(tau, score, mu, nu);
  r.rhs = kappa(std::max(0.0, r.s_tilde));
  r.violated = r.lhs > r.rhs + kViolationSlack * std::max(1.0, r.lhs);
  return r;
}

/// Checks d_T(tau(mu), tau(nu)) <= kappa(S~(mu, nu)) on each pair.
inline ViolationReport check_scoring_modulus(const Statistic& tau, const ScoringFunction& score,
                                             const Modulus& kappa, std::span<const MeasurePair> pairs) {
  ViolationReport rep{tau.name(), score.name(), kappa.name(), {}, 0};
  rep.rows.reserve(pairs.size());
  for (const auto& [mu, nu] : pairs) {
    rep.rows.push_back(scoring_row(tau, score, kappa, mu, nu));
    if (rep.rows.back().violated) ++rep.violations;
  }
  return rep;
}

struct Counterexample {
  DiscreteMeasure mu, nu;
  ViolationRow row;
};

/// Grid search over Dirac and two-atom measures on [0, inf) for a pair
/// violating d_T(tau(mu), tau(nu)) <= kappa(S~(mu, nu)). Returns the pair with
/// the largest excess lhs - rhs, if any.
///
/// The productive family is mu = delta_a, nu = eta delta_b + (1 - eta) delta_a
/// with eta >= level: tau(nu) = b while S~ only sees the small increment
/// psi(a) - psi(b), so S~ can be driven to zero at a fixed quantile gap.
inline std::optional<Counterexample> search_scoring_violation(const Statistic& tau, const ScoringFunction& score,
                                                              const Modulus& kappa) {
  static constexpr double kPoints[] = {0.0, 1e-3, 1e-2, 0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0, 100.0, 1000.0};
  const double level = tau.kind() == Statistic::Kind::quantile ? tau.level() : 0.5;
  const double masses[] = {level, 0.5 * (level + 1.0), 1.0 - 0.5 * level, 0.5 * level, 0.5};
  std::optional<Counterexample> best;
  double best_excess = 0.0;
  auto consider = [&](const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    const ViolationRow row = scoring_row(tau, score, kappa, mu, nu);
    const double excess = row.lhs - row.rhs;
    if (row.violated && (!best || excess > best_excess)) {
      best = Counterexample{mu, nu, row};
      best_excess = excess;
    }
  };
  for (double a : kPoints) {
    const DiscreteMeasure mu = DiscreteMeasure::dirac(a);
    for (double b : kPoints) {
      if (b == a) continue;
      consider(mu, DiscreteMeasure::dirac(b));
      for (double eta : masses) {
        if (eta <= 0.0 || eta >= 1.0) continue;
        consider(mu, DiscreteMeasure({{b, eta}, {a, 1.0 - eta}}));
        consider(DiscreteMeasure({{b, eta}, {a, 1.0 - eta}}), mu);
      }
    }
  }
  return best;
}

struct ModulusRow {
  double d_psi = 0.0;
  double d_t = 0.0;
  double envelope = 0.0;  // least concave non-decreasing majorant at d_psi
};

struct ModulusTable {
  std::string statistic;
  std::vector<ModulusRow> rows;  // sorted by d_psi, then d_t
};

namespace detail {

// Upper concave hull of the points together with the origin, evaluated at
// each point's abscissa, made non-decreasing by a running maximum.
inline std::vector<double> concave_envelope(const std::vector<std::pair<double, double>>& sorted_pts) {
  std::vector<std::pair<double, double>> hull{{0.0, 0.0}};
  for (const auto& p : sorted_pts) {
    if (hull.back().first == p.first) {
      if (hull.back().second >= p.second) continue;
      hull.pop_back();
    }
    while (hull.size() >= 2) {
      const auto& o = hull[hull.size() - 2];
      const auto& a = hull.back();
      const double cross = (a.first - o.first) * (p.second - o.second) - (a.second - o.second) * (p.first - o.first);
      if (cross >= 0.0) {
        hull.pop_back();
      } else {
        break;
      }
    }
    hull.push_back(p);
  }
  std::vector<double> env;
  env.reserve(sorted_pts.size());
  std::size_t h = 0;
  double running = 0.0;
  for (const auto& p : sorted_pts) {
    while (h + 1 < hull.size() && hull[h + 1].first < p.first) ++h;
    double v;
    if (h + 1 < hull.size()) {
      const auto& a = hull[h];
      const auto& b = hull[h + 1];
      v = a.second + (b.second - a.second) * (p.first - a.first) / (b.first - a.first);
      if (p.first == b.first) v = b.second;
    } else {
      v = hull[h].second;
    }
    running = std::max(running, std::max(v, p.second));
    env.push_back(running);
  }
  return env;
}

}  // namespace detail

/// Scatter of (d_psi(mu, nu), |tau(mu) - tau(nu)|) with its concave envelope,
/// a data-driven candidate for the modulus of continuity.
inline ModulusTable empirical_modulus(const Statistic& tau, const Gauge& psi, const GroundSpace& space,
                                      std::span<const MeasurePair> pairs) {
  std::vector<std::pair<double, double>> pts;
  pts.reserve(pairs.size());
  for (const auto& [mu, nu] : pairs) {
    pts.emplace_back(d_psi_value(mu, nu, psi, space), std::abs(evaluate(tau, mu, space) - evaluate(tau, nu, space)));
  }
  std::sort(pts.begin(), pts.end());
  const auto env = detail::concave_envelope(pts);
  ModulusTable table{tau.name(), {}};
  for (std::size_t i = 0; i < pts.size(); ++i) table.rows.push_back({pts[i].first, pts[i].second, env[i]});
  return table;
}

inline constexpr const char* kStatisticConventions = "quantile=lower;expected_shortfall=fractional_boundary_atom";

/// CSV with '#' header lines naming tau, S, kappa and the conventions.
inline void write_violation_report(std::ostream& os, const ViolationReport& rep) {
  os << "# statistic=" << rep.statistic << "\n# scoring=" << rep.scoring << "\n# modulus=" << rep.modulus
     << "\n# conventions=" << kStatisticConventions << "\n";
  os << "pair,lhs,s_tilde,rhs,violated\n";
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    const auto& r = rep.rows[i];
    os << i << ',' << format_double(r.lhs) << ',' << format_double(r.s_tilde) << ',' << format_double(r.rhs) << ','
       << (r.violated ? 1 : 0) << '\n';
  }
}

inline void write_modulus_table(std::ostream& os, const ModulusTable& table) {
  os << "# statistic=" << table.statistic << "\n# conventions=" << kStatisticConventions << "\n";
  os << "d_psi,d_t,envelope\n";
  for (const auto& r : table.rows) {
    os << format_double(r.d_psi) << ',' << format_double(r.d_t) << ',' << format_double(r.envelope) << '\n';
  }
}

}  // namespace robstat
