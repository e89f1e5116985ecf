#pragma once

// JSON experiment configuration. Parsing is strict: unknown keys, wrong
// types and missing required fields are config errors. to_json writes the
// canonical form (defaults made explicit) and parse_config(to_json(c)) == c.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "robstat/asymptotics.hpp"
#include "robstat/error.hpp"
#include "robstat/measure.hpp"
#include "robstat/process.hpp"
#include "robstat/risk.hpp"

namespace robstat {

using Json = nlohmann::ordered_json;

enum class Command { metrics, consistency, gc, robustness, elicitability };

inline std::string to_string(Command c) {
  switch (c) {
    case Command::metrics:
      return "metrics";
    case Command::consistency:
      return "consistency";
    case Command::gc:
      return "gc";
    case Command::robustness:
      return "robustness";
    case Command::elicitability:
      return "elicitability";
  }
  return "";
}

inline Command command_from_string(const std::string& s) {
  for (auto c : {Command::metrics, Command::consistency, Command::gc, Command::robustness, Command::elicitability}) {
    if (to_string(c) == s) return c;
  }
  fail(ErrorKind::config, "unknown command '" + s + "'");
}

using AtomList = std::vector<std::pair<double, double>>;

struct SpaceSpec {
  std::string kind = "real_line";  // real_line | finite
  std::vector<LabeledPoint> points;
  std::vector<std::vector<double>> table;
  friend bool operator==(const SpaceSpec& a, const SpaceSpec& b) {
    if (a.kind != b.kind || a.table != b.table || a.points.size() != b.points.size()) return false;
    for (std::size_t i = 0; i < a.points.size(); ++i) {
      if (a.points[i].label != b.points[i].label || a.points[i].coord != b.points[i].coord) return false;
    }
    return true;
  }
};

struct GeneratorSpec {
  std::string kind;  // iid | markov | exchangeable
  AtomList measure;
  std::vector<double> states;
  std::vector<std::vector<double>> transition;
  std::vector<AtomList> components;
  std::vector<double> weights;
  friend bool operator==(const GeneratorSpec&, const GeneratorSpec&) = default;
};

struct GaugeSpec {
  std::string kind = "one";  // one | polynomial
  double exponent = 1.0;
  double scale = 1.0;
  friend bool operator==(const GaugeSpec&, const GaugeSpec&) = default;
};

struct StatisticSpec {
  std::string kind = "mean";  // mean | quantile | expected_shortfall
  double level = 0.5;
  friend bool operator==(const StatisticSpec&, const StatisticSpec&) = default;
};

struct PerturbationSpec {
  std::string kind = "identity";  // identity | shift | coordinate_map
  std::vector<std::pair<double, double>> map;
  bool quasi_invariant = true;
  friend bool operator==(const PerturbationSpec&, const PerturbationSpec&) = default;
};

struct ModulusSpec {
  std::string kind = "identity";  // identity | sqrt | power | table
  double exponent = 1.0;
  double scale = 1.0;
  std::vector<std::pair<double, double>> knots;
  friend bool operator==(const ModulusSpec&, const ModulusSpec&) = default;
};

struct ScoringSpec {
  std::string kind = "squared";  // squared | pinball_psi
  double level = 0.5;
  GaugeSpec gauge;
  friend bool operator==(const ScoringSpec&, const ScoringSpec&) = default;
};

/// Random measure pairs for the elicitability check, drawn from the master seed.
struct PairsSpec {
  std::size_t count = 0;
  std::size_t max_atoms = 5;
  double lo = -10.0;
  double hi = 10.0;
  friend bool operator==(const PairsSpec&, const PairsSpec&) = default;
};

struct ExperimentConfig {
  Command command = Command::metrics;
  std::uint64_t master_seed = 0;
  MetricMode metric_mode = MetricMode::bounded;
  SpaceSpec space;
  std::optional<GeneratorSpec> generator;
  GaugeSpec gauge;
  std::optional<StatisticSpec> statistic;
  std::optional<PerturbationSpec> perturbation;
  std::optional<ModulusSpec> modulus;
  std::optional<ScoringSpec> scoring;
  std::vector<std::size_t> n_schedule;
  std::size_t seeds = 0;
  std::size_t reps = 0;
  std::optional<AtomList> mu, nu;
  std::optional<PairsSpec> pairs;
  std::vector<ModulusSpec> search_moduli;
  bool dump_paths = false;
  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

// ---------------------------------------------------------------------------
// Reading

namespace detail {

class Reader {
 public:
  Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) bad("must be an object");
  }

  /// Rejects keys outside `allowed`.
  void only(std::initializer_list<const char*> allowed) const {
    for (const auto& item : j_.items()) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || item.key() == a;
      if (!ok) fail(ErrorKind::config, "unknown key '" + where(item.key()) + "'");
    }
  }

  bool has(const char* key) const { return j_.contains(key); }
  const Json& at(const char* key) const {
    if (!has(key)) fail(ErrorKind::config, "missing required key '" + where(key) + "'");
    return j_.at(key);
  }
  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  double number(const char* key) const { return as_number(at(key), where(key)); }
  double number_or(const char* key, double def) const { return has(key) ? number(key) : def; }
  std::uint64_t count(const char* key) const { return as_count(at(key), where(key)); }
  std::string string(const char* key) const {
    const Json& v = at(key);
    if (!v.is_string()) fail(ErrorKind::config, "'" + where(key) + "' must be a string");
    return v.get<std::string>();
  }
  bool boolean_or(const char* key, bool def) const {
    if (!has(key)) return def;
    const Json& v = at(key);
    if (!v.is_boolean()) fail(ErrorKind::config, "'" + where(key) + "' must be a boolean");
    return v.get<bool>();
  }

  static double as_number(const Json& v, const std::string& where) {
    if (!v.is_number()) fail(ErrorKind::config, "'" + where + "' must be a number");
    return v.get<double>();
  }
  static std::uint64_t as_count(const Json& v, const std::string& where) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      fail(ErrorKind::config, "'" + where + "' must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }
  static std::vector<double> numbers(const Json& v, const std::string& where) {
    if (!v.is_array()) fail(ErrorKind::config, "'" + where + "' must be an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], where + "[" + std::to_string(i) + "]"));
    return out;
  }
  static std::vector<std::pair<double, double>> pairs(const Json& v, const std::string& where) {
    if (!v.is_array()) fail(ErrorKind::config, "'" + where + "' must be an array of [a, b] pairs");
    std::vector<std::pair<double, double>> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto p = numbers(v[i], where + "[" + std::to_string(i) + "]");
      if (p.size() != 2) fail(ErrorKind::config, "'" + where + "[" + std::to_string(i) + "]' must have two entries");
      out.emplace_back(p[0], p[1]);
    }
    return out;
  }
  static std::vector<std::vector<double>> matrix(const Json& v, const std::string& where) {
    if (!v.is_array()) fail(ErrorKind::config, "'" + where + "' must be an array of rows");
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(numbers(v[i], where + "[" + std::to_string(i) + "]"));
    return out;
  }

 private:
  [[noreturn]] void bad(const std::string& what) const {
    fail(ErrorKind::config, "'" + (path_.empty() ? std::string("config") : path_) + "' " + what);
  }

  const Json& j_;
  std::string path_;
};

inline void check_kind(const std::string& kind, std::initializer_list<const char*> allowed, const std::string& where) {
  for (const char* a : allowed) {
    if (kind == a) return;
  }
  fail(ErrorKind::config, "unknown kind '" + kind + "' in '" + where + "'");
}

inline GaugeSpec read_gauge(const Json& j, const std::string& path) {
  Reader r(j, path);
  GaugeSpec g;
  g.kind = r.string("kind");
  check_kind(g.kind, {"one", "polynomial"}, path);
  if (g.kind == "one") {
    r.only({"kind"});
  } else {
    r.only({"kind", "exponent", "scale"});
    g.exponent = r.number_or("exponent", 1.0);
    g.scale = r.number_or("scale", 1.0);
  }
  return g;
}

inline ModulusSpec read_modulus(const Json& j, const std::string& path) {
  Reader r(j, path);
  ModulusSpec m;
  m.kind = r.string("kind");
  check_kind(m.kind, {"identity", "sqrt", "power", "table"}, path);
  if (m.kind == "table") {
    r.only({"kind", "knots"});
    m.knots = Reader::pairs(r.at("knots"), r.where("knots"));
  } else if (m.kind == "power") {
    r.only({"kind", "exponent", "scale"});
    m.exponent = r.number("exponent");
    m.scale = r.number_or("scale", 1.0);
  } else {
    r.only({"kind", "scale"});
    m.scale = r.number_or("scale", 1.0);
  }
  return m;
}

inline GeneratorSpec read_generator(const Json& j, const std::string& path) {
  Reader r(j, path);
  GeneratorSpec g;
  g.kind = r.string("kind");
  check_kind(g.kind, {"iid", "markov", "exchangeable"}, path);
  if (g.kind == "iid") {
    r.only({"kind", "measure"});
    g.measure = Reader::pairs(r.at("measure"), r.where("measure"));
  } else if (g.kind == "markov") {
    r.only({"kind", "states", "transition"});
    g.states = Reader::numbers(r.at("states"), r.where("states"));
    g.transition = Reader::matrix(r.at("transition"), r.where("transition"));
  } else {
    r.only({"kind", "components", "weights"});
    const Json& comps = r.at("components");
    if (!comps.is_array()) fail(ErrorKind::config, "'" + r.where("components") + "' must be an array of measures");
    for (std::size_t i = 0; i < comps.size(); ++i) {
      g.components.push_back(Reader::pairs(comps[i], r.where("components") + "[" + std::to_string(i) + "]"));
    }
    g.weights = Reader::numbers(r.at("weights"), r.where("weights"));
  }
  return g;
}

}  // namespace detail

inline ExperimentConfig parse_config(const Json& j) {
  using detail::Reader;
  Reader r(j, "");
  r.only({"command", "master_seed", "metric_mode", "space", "generator", "gauge", "statistic", "perturbation",
          "modulus", "scoring", "n_schedule", "seeds", "reps", "mu", "nu", "pairs", "search_moduli", "dump_paths"});
  ExperimentConfig c;
  c.command = command_from_string(r.string("command"));
  c.master_seed = r.count("master_seed");
  if (r.has("metric_mode")) {
    try {
      c.metric_mode = metric_mode_from_string(r.string("metric_mode"));
    } catch (const Error& e) {
      fail(ErrorKind::config, e.what());
    }
  }
  if (r.has("space")) {
    Reader s(r.at("space"), "space");
    c.space.kind = s.string("kind");
    detail::check_kind(c.space.kind, {"real_line", "finite"}, "space");
    if (c.space.kind == "finite") {
      s.only({"kind", "points", "table"});
      const Json& pts = s.at("points");
      if (!pts.is_array()) fail(ErrorKind::config, "'space.points' must be an array");
      for (std::size_t i = 0; i < pts.size(); ++i) {
        Reader p(pts[i], "space.points[" + std::to_string(i) + "]");
        p.only({"label", "coord"});
        c.space.points.push_back({p.string("label"), p.number("coord")});
      }
      c.space.table = Reader::matrix(s.at("table"), "space.table");
    } else {
      s.only({"kind"});
    }
  }
  if (r.has("generator")) c.generator = detail::read_generator(r.at("generator"), "generator");
  if (r.has("gauge")) c.gauge = detail::read_gauge(r.at("gauge"), "gauge");
  if (r.has("statistic")) {
    Reader s(r.at("statistic"), "statistic");
    StatisticSpec st;
    st.kind = s.string("kind");
    detail::check_kind(st.kind, {"mean", "quantile", "expected_shortfall"}, "statistic");
    if (st.kind == "mean") {
      s.only({"kind"});
    } else {
      s.only({"kind", "level"});
      st.level = s.number("level");
    }
    c.statistic = st;
  }
  if (r.has("perturbation")) {
    Reader s(r.at("perturbation"), "perturbation");
    PerturbationSpec p;
    p.kind = s.string("kind");
    detail::check_kind(p.kind, {"identity", "shift", "coordinate_map"}, "perturbation");
    if (p.kind == "coordinate_map") {
      s.only({"kind", "map", "quasi_invariant"});
      p.map = Reader::pairs(s.at("map"), "perturbation.map");
      p.quasi_invariant = s.boolean_or("quasi_invariant", true);
    } else {
      s.only({"kind"});
    }
    c.perturbation = p;
  }
  if (r.has("modulus")) c.modulus = detail::read_modulus(r.at("modulus"), "modulus");
  if (r.has("scoring")) {
    Reader s(r.at("scoring"), "scoring");
    ScoringSpec sc;
    sc.kind = s.string("kind");
    detail::check_kind(sc.kind, {"squared", "pinball_psi"}, "scoring");
    if (sc.kind == "squared") {
      s.only({"kind"});
    } else {
      s.only({"kind", "level", "gauge"});
      sc.level = s.number("level");
      sc.gauge = detail::read_gauge(s.at("gauge"), "scoring.gauge");
    }
    c.scoring = sc;
  }
  if (r.has("n_schedule")) {
    const Json& v = r.at("n_schedule");
    if (!v.is_array()) fail(ErrorKind::config, "'n_schedule' must be an array of positive integers");
    for (std::size_t i = 0; i < v.size(); ++i) {
      c.n_schedule.push_back(Reader::as_count(v[i], "n_schedule[" + std::to_string(i) + "]"));
    }
  }
  if (r.has("seeds")) c.seeds = r.count("seeds");
  if (r.has("reps")) c.reps = r.count("reps");
  if (r.has("mu")) c.mu = Reader::pairs(r.at("mu"), "mu");
  if (r.has("nu")) c.nu = Reader::pairs(r.at("nu"), "nu");
  if (r.has("pairs")) {
    Reader s(r.at("pairs"), "pairs");
    s.only({"count", "max_atoms", "lo", "hi"});
    PairsSpec p;
    p.count = s.count("count");
    p.max_atoms = s.has("max_atoms") ? s.count("max_atoms") : p.max_atoms;
    p.lo = s.number_or("lo", p.lo);
    p.hi = s.number_or("hi", p.hi);
    c.pairs = p;
  }
  if (r.has("search_moduli")) {
    const Json& v = r.at("search_moduli");
    if (!v.is_array()) fail(ErrorKind::config, "'search_moduli' must be an array of moduli");
    for (std::size_t i = 0; i < v.size(); ++i) {
      c.search_moduli.push_back(detail::read_modulus(v[i], "search_moduli[" + std::to_string(i) + "]"));
    }
  }
  c.dump_paths = r.boolean_or("dump_paths", false);
  return c;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    fail(ErrorKind::config, std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

// ---------------------------------------------------------------------------
// Writing

namespace detail {

inline Json pairs_json(const std::vector<std::pair<double, double>>& v) {
  Json a = Json::array();
  for (const auto& [x, y] : v) a.push_back(Json::array({x, y}));
  return a;
}

inline Json gauge_json(const GaugeSpec& g) {
  Json j{{"kind", g.kind}};
  if (g.kind == "polynomial") {
    j["exponent"] = g.exponent;
    j["scale"] = g.scale;
  }
  return j;
}

inline Json modulus_json(const ModulusSpec& m) {
  Json j{{"kind", m.kind}};
  if (m.kind == "table") {
    j["knots"] = pairs_json(m.knots);
  } else {
    if (m.kind == "power") j["exponent"] = m.exponent;
    j["scale"] = m.scale;
  }
  return j;
}

}  // namespace detail

inline Json to_json(const ExperimentConfig& c) {
  Json j;
  j["command"] = to_string(c.command);
  j["master_seed"] = c.master_seed;
  j["metric_mode"] = to_string(c.metric_mode);
  Json space{{"kind", c.space.kind}};
  if (c.space.kind == "finite") {
    Json pts = Json::array();
    for (const auto& p : c.space.points) pts.push_back({{"label", p.label}, {"coord", p.coord}});
    space["points"] = pts;
    space["table"] = c.space.table;
  }
  j["space"] = space;
  if (c.generator) {
    const auto& g = *c.generator;
    Json gj{{"kind", g.kind}};
    if (g.kind == "iid") {
      gj["measure"] = detail::pairs_json(g.measure);
    } else if (g.kind == "markov") {
      gj["states"] = g.states;
      gj["transition"] = g.transition;
    } else {
      Json comps = Json::array();
      for (const auto& comp : g.components) comps.push_back(detail::pairs_json(comp));
      gj["components"] = comps;
      gj["weights"] = g.weights;
    }
    j["generator"] = gj;
  }
  j["gauge"] = detail::gauge_json(c.gauge);
  if (c.statistic) {
    Json s{{"kind", c.statistic->kind}};
    if (c.statistic->kind != "mean") s["level"] = c.statistic->level;
    j["statistic"] = s;
  }
  if (c.perturbation) {
    Json p{{"kind", c.perturbation->kind}};
    if (c.perturbation->kind == "coordinate_map") {
      p["map"] = detail::pairs_json(c.perturbation->map);
      p["quasi_invariant"] = c.perturbation->quasi_invariant;
    }
    j["perturbation"] = p;
  }
  if (c.modulus) j["modulus"] = detail::modulus_json(*c.modulus);
  if (c.scoring) {
    Json s{{"kind", c.scoring->kind}};
    if (c.scoring->kind == "pinball_psi") {
      s["level"] = c.scoring->level;
      s["gauge"] = detail::gauge_json(c.scoring->gauge);
    }
    j["scoring"] = s;
  }
  if (!c.n_schedule.empty()) j["n_schedule"] = c.n_schedule;
  if (c.seeds) j["seeds"] = c.seeds;
  if (c.reps) j["reps"] = c.reps;
  if (c.mu) j["mu"] = detail::pairs_json(*c.mu);
  if (c.nu) j["nu"] = detail::pairs_json(*c.nu);
  if (c.pairs) {
    j["pairs"] = {{"count", c.pairs->count}, {"max_atoms", c.pairs->max_atoms}, {"lo", c.pairs->lo},
                  {"hi", c.pairs->hi}};
  }
  if (!c.search_moduli.empty()) {
    Json a = Json::array();
    for (const auto& m : c.search_moduli) a.push_back(detail::modulus_json(m));
    j["search_moduli"] = a;
  }
  j["dump_paths"] = c.dump_paths;
  return j;
}

// ---------------------------------------------------------------------------
// Building library objects. Invalid values surface as config errors.

namespace detail {

template <typename F>
auto as_config_error(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::invalid_argument) fail(ErrorKind::config, e.what());
    throw;
  }
}

inline DiscreteMeasure measure_of(const AtomList& atoms) {
  std::vector<Atom> v;
  for (const auto& [x, w] : atoms) v.push_back({x, w});
  return DiscreteMeasure(std::move(v));
}

}  // namespace detail

inline GroundSpace build_space(const ExperimentConfig& c) {
  return detail::as_config_error([&] {
    if (c.space.kind == "finite") return GroundSpace::finite(c.space.points, c.metric_mode, c.space.table);
    return GroundSpace::real_line(c.metric_mode);
  });
}

inline Gauge build_gauge(const GaugeSpec& g) {
  return detail::as_config_error([&] { return g.kind == "one" ? Gauge::one() : Gauge::polynomial(g.exponent, g.scale); });
}

inline DiscreteMeasure build_measure(const AtomList& atoms, const GroundSpace& space) {
  return detail::as_config_error([&] {
    auto m = detail::measure_of(atoms);
    check_supported(m, space);
    return m;
  });
}

inline PathGenerator build_generator(const GeneratorSpec& g, const GroundSpace& space) {
  return detail::as_config_error([&] {
    if (g.kind == "iid") return PathGenerator::iid(detail::measure_of(g.measure), space);
    if (g.kind == "markov") return PathGenerator::markov(g.states, g.transition, space);
    std::vector<DiscreteMeasure> comps;
    for (const auto& a : g.components) comps.push_back(detail::measure_of(a));
    return PathGenerator::exchangeable(std::move(comps), g.weights, space);
  });
}

inline Statistic build_statistic(const StatisticSpec& s) {
  return detail::as_config_error([&] {
    if (s.kind == "quantile") return Statistic::quantile(s.level);
    if (s.kind == "expected_shortfall") return Statistic::expected_shortfall(s.level);
    return Statistic::mean();
  });
}

inline Perturbation build_perturbation(const PerturbationSpec& p) {
  return detail::as_config_error([&] {
    if (p.kind == "shift") return Perturbation::shift();
    if (p.kind == "coordinate_map") return Perturbation::coordinate_map(p.map, p.quasi_invariant);
    return Perturbation::identity();
  });
}

inline Modulus build_modulus(const ModulusSpec& m) {
  return detail::as_config_error([&] {
    if (m.kind == "sqrt") return Modulus::sqrt(m.scale);
    if (m.kind == "power") return Modulus::power(m.exponent, m.scale);
    if (m.kind == "table") return Modulus::table(m.knots);
    return Modulus::identity(m.scale);
  });
}

inline ScoringFunction build_scoring(const ScoringSpec& s) {
  return detail::as_config_error([&] {
    if (s.kind == "pinball_psi") return ScoringFunction::pinball_psi(s.level, build_gauge(s.gauge));
    return ScoringFunction::squared();
  });
}

}  // namespace robstat
