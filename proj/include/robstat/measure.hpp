#pragma once

// Finitely supported probability measures on a ground metric space, gauge
// functions and the line-oriented measure text format.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "robstat/error.hpp"
#include "robstat/format.hpp"

namespace robstat {

/// Points closer than this on the real line are treated as the same atom.
inline constexpr double kAtomMergeTol = 1e-12;
/// Allowed deviation of total mass from one.
inline constexpr double kMassTol = 1e-12;

enum class MetricMode {
  raw,      // d(x, y) as given
  bounded,  // min(d(x, y), 1)
};

inline std::string to_string(MetricMode mode) {
  return mode == MetricMode::raw ? "raw" : "bounded";
}

inline MetricMode metric_mode_from_string(const std::string& s) {
  if (s == "raw") return MetricMode::raw;
  if (s == "bounded") return MetricMode::bounded;
  fail(ErrorKind::invalid_argument, "unknown metric mode '" + s + "'");
}

struct LabeledPoint {
  std::string label;
  double coord = 0.0;

  friend bool operator==(const LabeledPoint&, const LabeledPoint&) = default;
};

/// The metric space (E, d). Either the real line with d(x, y) = |x - y|, or a
/// finite set of labeled points. Finite points are identified by their real
/// coordinate; the distance is |x - y| unless a pairwise table is supplied.
class GroundSpace {
 public:
  enum class Kind { real_line, finite };

  static GroundSpace real_line(MetricMode mode = MetricMode::raw) {
    GroundSpace s;
    s.kind_ = Kind::real_line;
    s.mode_ = mode;
    return s;
  }

  static GroundSpace finite(std::vector<LabeledPoint> points, MetricMode mode = MetricMode::raw,
                            std::vector<std::vector<double>> table = {}) {
    require(!points.empty(), "finite ground space needs at least one point");
    for (std::size_t i = 0; i < points.size(); ++i) {
      require(std::isfinite(points[i].coord), "non-finite coordinate for point '" + points[i].label + "'");
      for (std::size_t j = 0; j < i; ++j) {
        require(points[i].coord != points[j].coord, "duplicate coordinate in finite ground space");
        require(points[i].label != points[j].label, "duplicate label '" + points[i].label + "'");
      }
    }
    const std::size_t n = points.size();
    if (!table.empty()) {
      require(table.size() == n, "distance table must be n x n");
      for (const auto& row : table) require(row.size() == n, "distance table must be n x n");
      for (std::size_t i = 0; i < n; ++i) {
        require(table[i][i] == 0.0, "distance table must vanish on the diagonal");
        for (std::size_t j = 0; j < n; ++j) {
          require(std::isfinite(table[i][j]) && table[i][j] >= 0.0, "distances must be finite and non-negative");
          require(table[i][j] == table[j][i], "distance table must be symmetric");
          if (i != j) require(table[i][j] > 0.0, "distinct points must have positive distance");
          for (std::size_t k = 0; k < n; ++k) {
            require(table[i][k] <= table[i][j] + table[j][k] + 1e-12, "distance table violates the triangle inequality");
          }
        }
      }
    }
    GroundSpace s;
    s.kind_ = Kind::finite;
    s.mode_ = mode;
    s.points_ = std::move(points);
    s.table_ = std::move(table);
    return s;
  }

  Kind kind() const noexcept { return kind_; }
  bool is_real_line() const noexcept { return kind_ == Kind::real_line; }
  MetricMode mode() const noexcept { return mode_; }
  const std::vector<LabeledPoint>& points() const noexcept { return points_; }
  const std::vector<std::vector<double>>& table() const noexcept { return table_; }

  GroundSpace with_mode(MetricMode mode) const {
    GroundSpace s = *this;
    s.mode_ = mode;
    return s;
  }

  std::optional<std::size_t> index_of(double x) const {
    for (std::size_t i = 0; i < points_.size(); ++i) {
      if (points_[i].coord == x) return i;
    }
    return std::nullopt;
  }

  bool contains(double x) const {
    if (!std::isfinite(x)) return false;
    return is_real_line() || index_of(x).has_value();
  }

  double raw_distance(double x, double y) const {
    if (is_real_line() || table_.empty()) return std::abs(x - y);
    auto i = index_of(x);
    auto j = index_of(y);
    require(i && j, "point not in finite ground space");
    return table_[*i][*j];
  }

  double distance(double x, double y) const {
    const double d = raw_distance(x, y);
    return mode_ == MetricMode::bounded ? std::min(d, 1.0) : d;
  }

  std::string label_of(double x) const {
    if (auto i = index_of(x)) return points_[*i].label;
    return format_double(x);
  }

  friend bool operator==(const GroundSpace&, const GroundSpace&) = default;

 private:
  Kind kind_ = Kind::real_line;
  MetricMode mode_ = MetricMode::raw;
  std::vector<LabeledPoint> points_;
  std::vector<std::vector<double>> table_;
};

struct Atom {
  double point = 0.0;
  double weight = 0.0;

  friend bool operator==(const Atom&, const Atom&) = default;
};

/// Finitely supported probability measure. Atoms are kept sorted by point,
/// pairwise distinct, with strictly positive weights summing to one.
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;

  explicit DiscreteMeasure(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    require(!atoms_.empty(), "measure needs at least one atom");
    double total = 0.0;
    for (const auto& a : atoms_) {
      require(std::isfinite(a.point), "non-finite atom location");
      require(std::isfinite(a.weight) && a.weight >= 0.0, "atom weights must be non-negative");
      total += a.weight;
    }
    require(std::abs(total - 1.0) <= kMassTol,
            "atom weights must sum to 1 (got " + format_double(total) + ")");
    canonicalize();
  }

  static DiscreteMeasure dirac(double x) { return DiscreteMeasure({{x, 1.0}}); }

  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  std::size_t size() const noexcept { return atoms_.size(); }
  bool empty() const noexcept { return atoms_.empty(); }

  /// Mass at exactly the point x (up to the merge tolerance).
  double weight_at(double x) const {
    for (const auto& a : atoms_) {
      if (std::abs(a.point - x) <= kAtomMergeTol) return a.weight;
    }
    return 0.0;
  }

  friend bool operator==(const DiscreteMeasure&, const DiscreteMeasure&) = default;

 private:
  void canonicalize() {
    std::stable_sort(atoms_.begin(), atoms_.end(),
                     [](const Atom& a, const Atom& b) { return a.point < b.point; });
    std::vector<Atom> merged;
    merged.reserve(atoms_.size());
    for (const auto& a : atoms_) {
      if (!merged.empty() && a.point - merged.back().point <= kAtomMergeTol) {
        merged.back().weight += a.weight;
      } else {
        merged.push_back(a);
      }
    }
    std::erase_if(merged, [](const Atom& a) { return a.weight == 0.0; });
    atoms_ = std::move(merged);
  }

  std::vector<Atom> atoms_;
};

/// Rejects measures with atoms outside `space`.
inline void check_supported(const DiscreteMeasure& mu, const GroundSpace& space) {
  for (const auto& a : mu.atoms()) {
    if (!space.contains(a.point)) {
      fail(ErrorKind::invalid_argument,
           "mismatched ground spaces: atom " + format_double(a.point) + " is not a point of the space");
    }
  }
}

/// Empirical measure of an ordered sample: weight k/n on a point seen k times.
inline DiscreteMeasure make_empirical(std::span<const double> samples) {
  if (samples.empty()) fail(ErrorKind::invalid_argument, "empty path");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  std::vector<Atom> atoms;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] - sorted[i] <= kAtomMergeTol) ++j;
    atoms.push_back({sorted[i], static_cast<double>(j - i) / n});
    i = j;
  }
  return DiscreteMeasure(std::move(atoms));
}

/// mu f = sum_i w_i f(x_i).
template <typename F>
double integrate(const DiscreteMeasure& mu, F&& f) {
  double acc = 0.0;
  for (const auto& a : mu.atoms()) {
    const double v = f(a.point);
    if (!std::isfinite(v)) {
      fail(ErrorKind::numeric, "integrand is not finite at atom " + format_double(a.point));
    }
    acc += a.weight * v;
  }
  return acc;
}

/// Gauge function psi >= 1.
class Gauge {
 public:
  enum class Kind { one, polynomial, table };

  static Gauge one() { return Gauge{}; }

  /// psi(x) = 1 + scale * |x|^exponent.
  static Gauge polynomial(double exponent, double scale = 1.0) {
    require(std::isfinite(exponent) && exponent >= 1.0, "gauge exponent must be >= 1");
    require(std::isfinite(scale) && scale >= 0.0, "gauge scale must be >= 0");
    Gauge g;
    g.kind_ = Kind::polynomial;
    g.exponent_ = exponent;
    g.scale_ = scale;
    return g;
  }

  /// Explicit values on a finite set of points; every value must be >= 1.
  static Gauge table(std::vector<std::pair<double, double>> values) {
    require(!values.empty(), "gauge table must be nonempty");
    for (const auto& [x, v] : values) {
      require(std::isfinite(x) && std::isfinite(v), "gauge table entries must be finite");
      require(v >= 1.0, "gauge values must be >= 1");
    }
    std::sort(values.begin(), values.end());
    for (std::size_t i = 1; i < values.size(); ++i) {
      require(values[i].first != values[i - 1].first, "duplicate point in gauge table");
    }
    Gauge g;
    g.kind_ = Kind::table;
    g.table_ = std::move(values);
    return g;
  }

  Kind kind() const noexcept { return kind_; }
  double exponent() const noexcept { return exponent_; }
  double scale() const noexcept { return scale_; }
  const std::vector<std::pair<double, double>>& table_values() const noexcept { return table_; }

  double operator()(double x) const {
    switch (kind_) {
      case Kind::one:
        return 1.0;
      case Kind::polynomial:
        return 1.0 + scale_ * std::pow(std::abs(x), exponent_);
      case Kind::table: {
        auto it = std::lower_bound(table_.begin(), table_.end(), x,
                                   [](const auto& e, double v) { return e.first < v; });
        if (it == table_.end() || it->first != x) {
          fail(ErrorKind::invalid_argument, "gauge table has no value at " + format_double(x));
        }
        return it->second;
      }
    }
    return 1.0;
  }

  friend bool operator==(const Gauge&, const Gauge&) = default;

 private:
  Kind kind_ = Kind::one;
  double exponent_ = 1.0;
  double scale_ = 0.0;
  std::vector<std::pair<double, double>> table_;
};

/// mu psi.
inline double psi_moment(const DiscreteMeasure& mu, const Gauge& psi) {
  if (psi.kind() == Gauge::Kind::one) return 1.0;
  return integrate(mu, psi);
}

/// Convex combination sum_k w_k mu_k.
inline DiscreteMeasure mix(std::span<const DiscreteMeasure> measures, std::span<const double> weights) {
  require(!measures.empty(), "mix needs at least one measure");
  require(measures.size() == weights.size(), "mix: number of weights does not match number of measures");
  double total = 0.0;
  for (double w : weights) {
    require(std::isfinite(w) && w >= 0.0, "mix: weights must be non-negative");
    total += w;
  }
  require(std::abs(total - 1.0) <= kMassTol, "mix: weights must sum to 1");
  std::vector<Atom> atoms;
  for (std::size_t k = 0; k < measures.size(); ++k) {
    for (const auto& a : measures[k].atoms()) atoms.push_back({a.point, weights[k] * a.weight});
  }
  return DiscreteMeasure(std::move(atoms));
}

/// Image measure h_* mu.
template <typename H>
DiscreteMeasure pushforward(const DiscreteMeasure& mu, H&& h) {
  std::vector<Atom> atoms;
  atoms.reserve(mu.size());
  for (const auto& a : mu.atoms()) atoms.push_back({h(a.point), a.weight});
  return DiscreteMeasure(std::move(atoms));
}

// Text format: one "point,weight" pair per line. Blank lines and lines
// starting with '#' are ignored when reading.

inline void write_measure(std::ostream& os, const DiscreteMeasure& mu) {
  for (const auto& a : mu.atoms()) os << format_double(a.point) << ',' << format_double(a.weight) << '\n';
}

inline DiscreteMeasure read_measure(std::istream& is) {
  std::vector<Atom> atoms;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r" || line.front() == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
      fail(ErrorKind::invalid_argument, "measure line " + std::to_string(lineno) + ": expected 'point,weight'");
    }
    atoms.push_back({parse_double(std::string_view(line).substr(0, comma)),
                     parse_double(std::string_view(line).substr(comma + 1))});
  }
  return DiscreteMeasure(std::move(atoms));
}

}  // namespace robstat
