#pragma once

// Stationary observation sequences with analytically known directing
// measures: i.i.d., stationary Markov chains on finitely many states and
// exchangeable mixtures of i.i.d. laws.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "robstat/error.hpp"
#include "robstat/format.hpp"
#include "robstat/measure.hpp"

namespace robstat {

// ---------------------------------------------------------------------------
// Random streams

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed of replication `index` under `master`. Depends only on the pair, so
/// replications can be generated in any order or in parallel.
inline std::uint64_t replication_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  /// Uniform on [0, 1) from the top 53 bits; identical on every platform.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Index drawn from a probability vector by inversion.
  std::size_t categorical(std::span<const double> probs) {
    const double u = uniform();
    double cum = 0.0;
    std::size_t last = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (probs[i] <= 0.0) continue;
      cum += probs[i];
      last = i;
      if (u < cum) return i;
    }
    return last;
  }

 private:
  std::mt19937_64 engine_;
};

// ---------------------------------------------------------------------------
// Generators

namespace detail {

// Stationary law of a stochastic matrix restricted to one closed class.
inline std::vector<double> class_stationary(const std::vector<std::vector<double>>& p,
                                            const std::vector<std::size_t>& cls) {
  const Eigen::Index k = static_cast<Eigen::Index>(cls.size());
  Eigen::MatrixXd a(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      a(i, j) = p[cls[static_cast<std::size_t>(j)]][cls[static_cast<std::size_t>(i)]] - (i == j ? 1.0 : 0.0);
    }
  }
  Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
  a.row(k - 1).setOnes();
  b(k - 1) = 1.0;
  const Eigen::VectorXd x = a.fullPivLu().solve(b);
  return {x.data(), x.data() + k};
}

struct ClassDecomposition {
  std::vector<std::vector<std::size_t>> closed;  // closed communicating classes
};

inline ClassDecomposition closed_classes(const std::vector<std::vector<double>>& p) {
  const std::size_t n = p.size();
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i) {
    reach[i][i] = true;
    for (std::size_t j = 0; j < n; ++j) {
      if (p[i][j] > 0.0) reach[i][j] = true;
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!reach[i][k]) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (reach[k][j]) reach[i][j] = true;
      }
    }
  }
  ClassDecomposition dec;
  std::vector<bool> assigned(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    if (assigned[i]) continue;
    std::vector<std::size_t> cls;
    bool closed = true;
    for (std::size_t j = 0; j < n; ++j) {
      if (reach[i][j] && reach[j][i]) {
        cls.push_back(j);
        assigned[j] = true;
      } else if (reach[i][j]) {
        closed = false;
      }
    }
    if (closed) dec.closed.push_back(std::move(cls));
  }
  return dec;
}

}  // namespace detail

/// Descriptor of a stationary sequence model. Immutable after construction.
class PathGenerator {
 public:
  enum class Kind { iid, markov, exchangeable };

  static PathGenerator iid(DiscreteMeasure mu, GroundSpace space = GroundSpace::real_line()) {
    check_supported(mu, space);
    PathGenerator g;
    g.kind_ = Kind::iid;
    g.space_ = std::move(space);
    g.components_ = {std::move(mu)};
    g.weights_ = {1.0};
    return g;
  }

  /// Markov chain on `states` started from a stationary law. Irreducible
  /// chains start from their unique stationary law; reducible chains start
  /// from the uniform mixture of the stationary laws of their closed classes.
  static PathGenerator markov(std::vector<double> states, std::vector<std::vector<double>> transition,
                              GroundSpace space = GroundSpace::real_line()) {
    const std::size_t n = states.size();
    require(n > 0, "markov generator needs at least one state");
    require(transition.size() == n, "transition matrix must be square with one row per state");
    for (std::size_t i = 0; i < n; ++i) {
      require(space.contains(states[i]), "markov state is not a point of the ground space");
      for (std::size_t j = 0; j < i; ++j) require(states[i] != states[j], "markov states must be distinct");
      require(transition[i].size() == n, "transition matrix must be square with one row per state");
      double row = 0.0;
      for (double v : transition[i]) {
        require(std::isfinite(v) && v >= 0.0, "transition probabilities must be non-negative");
        row += v;
      }
      require(std::abs(row - 1.0) <= 1e-10, "transition matrix rows must sum to 1");
    }
    const auto dec = detail::closed_classes(transition);
    std::vector<double> initial(n, 0.0);
    const double share = 1.0 / static_cast<double>(dec.closed.size());
    for (const auto& cls : dec.closed) {
      const auto pi = detail::class_stationary(transition, cls);
      for (std::size_t k = 0; k < cls.size(); ++k) initial[cls[k]] = share * pi[k];
    }
    for (std::size_t j = 0; j < n; ++j) {
      double v = 0.0;
      for (std::size_t i = 0; i < n; ++i) v += initial[i] * transition[i][j];
      if (std::abs(v - initial[j]) > 1e-10) fail(ErrorKind::numeric, "stationary law failed the balance check");
    }
    PathGenerator g;
    g.kind_ = Kind::markov;
    g.space_ = std::move(space);
    g.states_ = std::move(states);
    g.transition_ = std::move(transition);
    g.initial_ = std::move(initial);
    g.irreducible_ = dec.closed.size() == 1 && dec.closed.front().size() == n;
    return g;
  }

  static PathGenerator exchangeable(std::vector<DiscreteMeasure> components, std::vector<double> weights,
                                    GroundSpace space = GroundSpace::real_line()) {
    require(!components.empty(), "exchangeable generator needs at least one component");
    require(components.size() == weights.size(), "exchangeable generator needs one weight per component");
    double total = 0.0;
    for (double w : weights) {
      require(std::isfinite(w) && w >= 0.0, "mixing weights must be non-negative");
      total += w;
    }
    require(std::abs(total - 1.0) <= kMassTol, "mixing weights must sum to 1");
    for (const auto& c : components) check_supported(c, space);
    PathGenerator g;
    g.kind_ = Kind::exchangeable;
    g.space_ = std::move(space);
    g.components_ = std::move(components);
    g.weights_ = std::move(weights);
    return g;
  }

  Kind kind() const noexcept { return kind_; }
  const GroundSpace& space() const noexcept { return space_; }
  const std::vector<double>& states() const noexcept { return states_; }
  const std::vector<std::vector<double>>& transition() const noexcept { return transition_; }
  const std::vector<double>& initial() const noexcept { return initial_; }
  bool irreducible() const noexcept { return irreducible_; }
  const std::vector<DiscreteMeasure>& components() const noexcept { return components_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

  /// Law of a single coordinate.
  DiscreteMeasure marginal() const {
    switch (kind_) {
      case Kind::iid:
        return components_.front();
      case Kind::markov: {
        std::vector<Atom> atoms;
        for (std::size_t i = 0; i < states_.size(); ++i) atoms.push_back({states_[i], initial_[i]});
        return DiscreteMeasure(std::move(atoms));
      }
      case Kind::exchangeable:
        return mix(components_, weights_);
    }
    return components_.front();
  }

  /// Every point the generator can emit.
  std::vector<double> support_points() const {
    std::vector<double> pts;
    if (kind_ == Kind::markov) {
      pts = states_;
    } else {
      for (const auto& c : components_) {
        for (const auto& a : c.atoms()) pts.push_back(a.point);
      }
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
  }

  std::string describe() const {
    switch (kind_) {
      case Kind::iid:
        return "iid";
      case Kind::markov:
        return "markov(" + std::to_string(states_.size()) + " states)";
      case Kind::exchangeable:
        return "exchangeable(" + std::to_string(components_.size()) + " components)";
    }
    return "";
  }

 private:
  PathGenerator() = default;

  Kind kind_ = Kind::iid;
  GroundSpace space_;
  std::vector<double> states_;
  std::vector<std::vector<double>> transition_;
  std::vector<double> initial_;
  bool irreducible_ = false;
  std::vector<DiscreteMeasure> components_;
  std::vector<double> weights_;
};

struct SamplePath {
  std::vector<double> points;
  std::string generator;
  std::uint64_t seed = 0;
  std::optional<std::size_t> component;  // exchangeable only
};

namespace detail {

inline double draw(Rng& rng, const DiscreteMeasure& mu) {
  const double u = rng.uniform();
  double cum = 0.0;
  for (const auto& a : mu.atoms()) {
    cum += a.weight;
    if (u < cum) return a.point;
  }
  return mu.atoms().back().point;
}

}  // namespace detail

/// Deterministic in (gen, n, seed). Paths of different lengths from the same
/// seed agree on their common prefix.
inline SamplePath generate(const PathGenerator& gen, std::size_t n, std::uint64_t seed) {
  require(n >= 1, "path length must be at least 1");
  Rng rng(seed);
  SamplePath path;
  path.generator = gen.describe();
  path.seed = seed;
  path.points.reserve(n);
  switch (gen.kind()) {
    case PathGenerator::Kind::iid:
      for (std::size_t i = 0; i < n; ++i) path.points.push_back(detail::draw(rng, gen.components().front()));
      break;
    case PathGenerator::Kind::markov: {
      std::size_t state = rng.categorical(gen.initial());
      path.points.push_back(gen.states()[state]);
      for (std::size_t i = 1; i < n; ++i) {
        state = rng.categorical(gen.transition()[state]);
        path.points.push_back(gen.states()[state]);
      }
      break;
    }
    case PathGenerator::Kind::exchangeable: {
      const std::size_t k = rng.categorical(gen.weights());
      path.component = k;
      for (std::size_t i = 0; i < n; ++i) path.points.push_back(detail::draw(rng, gen.components()[k]));
      break;
    }
  }
  return path;
}

struct DirectingMeasure {
  DiscreteMeasure measure;

  friend bool operator==(const DirectingMeasure&, const DirectingMeasure&) = default;
};

/// The almost sure limit of the empirical measures along `path`.
inline DirectingMeasure directing_measure(const PathGenerator& gen, const SamplePath& path) {
  switch (gen.kind()) {
    case PathGenerator::Kind::iid:
      return {gen.components().front()};
    case PathGenerator::Kind::markov:
      if (!gen.irreducible()) {
        fail(ErrorKind::unsupported, "non-ergodic chain: supply component decomposition");
      }
      return {gen.marginal()};
    case PathGenerator::Kind::exchangeable:
      require(path.component.has_value() && *path.component < gen.components().size(),
              "exchangeable path does not record a valid component");
      return {gen.components()[*path.component]};
  }
  return {gen.marginal()};
}

// ---------------------------------------------------------------------------
// Perturbations

/// Endomorphism of path space.
class Perturbation {
 public:
  enum class Kind { identity, shift, coordinate_map };

  static Perturbation identity() { return Perturbation{}; }

  static Perturbation shift() {
    Perturbation p;
    p.kind_ = Kind::shift;
    return p;
  }

  /// Pointwise map h given as (x, h(x)) pairs. Quasi-invariance of the path
  /// law under the map is declared, never verified.
  static Perturbation coordinate_map(std::vector<std::pair<double, double>> mapping, bool quasi_invariant = true) {
    require(!mapping.empty(), "coordinate map needs at least one entry");
    std::sort(mapping.begin(), mapping.end());
    for (std::size_t i = 0; i < mapping.size(); ++i) {
      require(std::isfinite(mapping[i].first) && std::isfinite(mapping[i].second), "coordinate map entries must be finite");
      if (i > 0) require(mapping[i].first != mapping[i - 1].first, "coordinate map assigns a point twice");
    }
    Perturbation p;
    p.kind_ = Kind::coordinate_map;
    p.mapping_ = std::move(mapping);
    p.quasi_invariant_ = quasi_invariant;
    return p;
  }

  Kind kind() const noexcept { return kind_; }
  bool quasi_invariant() const noexcept { return quasi_invariant_; }
  const std::vector<std::pair<double, double>>& mapping() const noexcept { return mapping_; }

  /// Number of leading coordinates consumed by the perturbation.
  std::size_t lookahead() const noexcept { return kind_ == Kind::shift ? 1 : 0; }

  std::optional<double> map_point(double x) const {
    if (kind_ != Kind::coordinate_map) return x;
    auto it = std::lower_bound(mapping_.begin(), mapping_.end(), x,
                               [](const auto& e, double v) { return e.first < v - kAtomMergeTol; });
    if (it == mapping_.end() || std::abs(it->first - x) > kAtomMergeTol) return std::nullopt;
    return it->second;
  }

  std::string describe() const {
    switch (kind_) {
      case Kind::identity:
        return "identity";
      case Kind::shift:
        return "shift";
      case Kind::coordinate_map:
        return "coordinate_map";
    }
    return "";
  }

  friend bool operator==(const Perturbation&, const Perturbation&) = default;

 private:
  Kind kind_ = Kind::identity;
  std::vector<std::pair<double, double>> mapping_;
  bool quasi_invariant_ = true;
};

inline SamplePath apply_perturbation(const Perturbation& theta, const SamplePath& path) {
  SamplePath out = path;
  switch (theta.kind()) {
    case Perturbation::Kind::identity:
      break;
    case Perturbation::Kind::shift:
      require(path.points.size() >= 2, "shift needs a path of length at least 2");
      out.points.erase(out.points.begin());
      break;
    case Perturbation::Kind::coordinate_map:
      for (double& x : out.points) {
        const auto y = theta.map_point(x);
        if (!y) fail(ErrorKind::invalid_argument, "coordinate map is undefined at " + format_double(x));
        x = *y;
      }
      break;
  }
  return out;
}

/// Directing measure of the perturbed path, (upsilon o theta).
inline DirectingMeasure directing_pushforward(const Perturbation& theta, const DirectingMeasure& upsilon) {
  if (theta.kind() != Perturbation::Kind::coordinate_map) return upsilon;
  for (const auto& a : upsilon.measure.atoms()) {
    if (!theta.map_point(a.point)) {
      fail(ErrorKind::unsupported,
           "no directing-measure pushforward: coordinate map undefined at " + format_double(a.point) +
               "; supported pairs are (identity, any generator), (shift, any generator) and "
               "(coordinate_map defined on the generator support, any generator)");
    }
  }
  return {pushforward(upsilon.measure, [&](double x) { return *theta.map_point(x); })};
}

/// Throws unless the pushforward rule covers every path `gen` can produce.
inline void check_supported_pair(const PathGenerator& gen, const Perturbation& theta) {
  if (theta.kind() != Perturbation::Kind::coordinate_map) return;
  for (double x : gen.support_points()) {
    if (!theta.map_point(x)) {
      fail(ErrorKind::unsupported,
           "perturbation unsupported for generator " + gen.describe() + ": coordinate map undefined at " +
               format_double(x) + "; supported pairs are (identity, any), (shift, any), "
               "(coordinate_map covering the generator support, any)");
    }
  }
}

/// (1/n) sum_{i<n} f(path_i).
template <typename F>
double birkhoff_average(const SamplePath& path, F&& f, std::size_t n) {
  require(n >= 1 && n <= path.points.size(), "birkhoff_average: prefix length out of range");
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += f(path.points[i]);
  return acc / static_cast<double>(n);
}

/// One observation per line.
inline void write_path(std::ostream& os, const SamplePath& path) {
  for (double x : path.points) os << format_double(x) << '\n';
}

}  // namespace robstat
