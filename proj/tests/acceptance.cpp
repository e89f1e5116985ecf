// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "robstat/asymptotics.hpp"
#include "robstat/config.hpp"
#include "robstat/metrics.hpp"
#include "robstat/runner.hpp"

namespace {

using namespace robstat;
namespace fs = std::filesystem;

const fs::path kSource = ROBSTAT_SOURCE_DIR;
constexpr unsigned kThreads = 4;

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) fail(ErrorKind::config, "cannot read " + p.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

ExperimentConfig load(const std::string& name) { return parse_config_text(slurp(kSource / "configs" / (name + ".json"))); }

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& title, double limit_s, const std::function<Verdict()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("error: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = limit_s <= 0 || secs < limit_s;
  const bool pass = v.pass && in_time;
  if (!pass) ++failures;
  std::printf("[%s] %2d %s: %s; %.2f s", pass ? "PASS" : "FAIL", id, title.c_str(), v.detail.c_str(), secs);
  if (limit_s > 0) std::printf(" (limit %.0f s)", limit_s);
  std::printf("\n");
  std::fflush(stdout);
}

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

Verdict closed_forms() {
  Rng rng(1001);
  double worst = 0.0;
  for (auto mode : {MetricMode::raw, MetricMode::bounded}) {
    const auto space = GroundSpace::real_line(mode);
    for (int i = 0; i < 50; ++i) {
      const double x = 6 * rng.uniform() - 3, y = 6 * rng.uniform() - 3;
      const auto a = DiscreteMeasure::dirac(x), b = DiscreteMeasure::dirac(y);
      const double d = space.distance(x, y);
      worst = std::max(worst, std::abs(prohorov(a, b, space) - std::min(d, 1.0)));
      worst = std::max(worst, std::abs(bl_metric(a, b, space) - 2 * d / (2 + d)));
    }
  }
  return {worst <= 1e-6, "max |error| " + num(worst) + " (tol 1e-6) over 50 pairs per metric mode"};
}

Verdict oracle_equivalence() {
  Rng rng(1002);
  const auto space = GroundSpace::real_line(MetricMode::raw);
  double worst_pi = 0.0, worst_bl = 0.0;
  for (int i = 0; i < 200; ++i) {
    const auto mu = oracle::random_measure(rng, 3, -2, 2);
    const auto nu = oracle::random_measure(rng, 3, -2, 2);
    worst_pi = std::max(worst_pi, std::abs(prohorov(mu, nu, space) - oracle::prohorov_subset_grid(mu, nu, space)));
    worst_bl = std::max(worst_bl, std::abs(bl_metric(mu, nu, space) - oracle::bl_function_grid(mu, nu)));
  }
  return {worst_pi <= 2e-4 && worst_bl <= 2e-3, "200 pairs: prohorov max gap " + num(worst_pi) +
                                                      " (tol 2e-4), bl max gap " + num(worst_bl) + " (tol 2e-3)"};
}

Verdict metric_axioms() {
  Rng rng(1003);
  const auto space = GroundSpace::real_line(MetricMode::bounded);
  const auto psi = Gauge::polynomial(1.0);
  using Fn = std::function<double(const DiscreteMeasure&, const DiscreteMeasure&)>;
  const std::pair<const char*, Fn> metrics[] = {
      {"prohorov", [&](const auto& a, const auto& b) { return prohorov(a, b, space); }},
      {"bl", [&](const auto& a, const auto& b) { return bl_metric(a, b, space); }},
      {"d_psi", [&](const auto& a, const auto& b) { return d_psi_value(a, b, psi, space); }}};
  std::size_t asym = 0, ident = 0, tri = 0;
  double worst_tri = 0.0, worst_self = 0.0;
  for (int i = 0; i < 500; ++i) {
    const auto a = oracle::random_measure(rng, 4, -2, 2);
    const auto b = oracle::random_measure(rng, 4, -2, 2);
    const auto c = oracle::random_measure(rng, 4, -2, 2);
    for (const auto& [name, d] : metrics) {
      const double ab = d(a, b), bc = d(b, c), ac = d(a, c);
      if (ab != d(b, a) || bc != d(c, b) || ac != d(c, a)) ++asym;
      const double self = std::max({d(a, a), d(b, b), d(c, c)});
      worst_self = std::max(worst_self, self);
      if (self > 1e-9 || (a != b && ab <= 1e-9)) ++ident;
      const double excess = std::max({ac - ab - bc, ab - ac - bc, bc - ab - ac});
      worst_tri = std::max(worst_tri, excess);
      if (excess > 1e-8) ++tri;
    }
  }
  return {asym == 0 && ident == 0 && tri == 0,
          "500 triples x {prohorov, bl, d_psi}: asymmetric " + std::to_string(asym) + ", identity failures " +
              std::to_string(ident) + " (max self-distance " + num(worst_self) + ", tol 1e-9), triangle failures " +
              std::to_string(tri) + " (max excess " + num(worst_tri) + ", slack 1e-8)"};
}

Verdict markov_consistency() {
  const auto cfg = load("consistency_markov");
  const auto gen = build_generator(*cfg.generator, build_space(cfg));
  const auto pilot = Json::parse(slurp(kSource / "calibration" / "pilot.json"));
  const double threshold = pilot.at("threshold").get<double>();
  if (pilot.at("master_seed").get<std::uint64_t>() == cfg.master_seed) {
    return {false, "pilot and acceptance share a master seed"};
  }
  const std::vector<std::size_t> schedule{100, 10000};
  const auto run = consistency_experiment(gen, build_gauge(cfg.gauge), schedule, 100, {cfg.master_seed, kThreads});
  const double m2 = run.summary[0].median_d_psi, m4 = run.summary[1].median_d_psi;
  return {m4 < m2 && m4 < threshold, "100 seeds: median d_psi " + num(m2) + " at n=1e2, " + num(m4) +
                                         " at n=1e4; pilot threshold " + num(threshold)};
}

Verdict de_finetti() {
  const auto cfg = load("consistency_exchangeable");
  const auto gen = build_generator(*cfg.generator, build_space(cfg));
  const std::vector<std::size_t> schedule{10000};
  const auto run = consistency_experiment(gen, build_gauge(cfg.gauge), schedule, 100, {cfg.master_seed, kThreads});
  const auto& s = run.summary[0];
  return {s.median_d_psi < 0.05 && s.min_d_psi_marginal >= 0.2,
          "100 seeds, n=1e4: median d_psi(m_n, directing) " + num(s.median_d_psi) +
              " (< 0.05), min d_psi(m_n, marginal) " + num(s.min_d_psi_marginal) + " (>= 0.2)"};
}

Verdict glivenko_cantelli() {
  const auto cfg = load("gc_uniform");
  const auto gen = build_generator(*cfg.generator, build_space(cfg));
  const std::vector<std::size_t> schedule{100, 1000, 10000};
  const auto run = gc_sup_check(gen, schedule, 100, {cfg.master_seed, kThreads});
  bool dec = true;
  std::string medians;
  for (std::size_t k = 0; k < run.summary.size(); ++k) {
    if (k > 0) dec = dec && run.summary[k].median_bl < run.summary[k - 1].median_bl;
    medians += (k ? ", " : "") + num(run.summary[k].median_bl);
  }
  return {dec, "100 seeds: median bl at n=1e2,1e3,1e4 = " + medians};
}

Verdict robustness() {
  bool ok = true;
  std::string detail;
  for (const char* name : {"robustness_identity", "robustness_exchangeable_swap", "robustness_markov_invariant"}) {
    const auto cfg = load(name);
    if (cfg.reps != 2000) return {false, std::string(name) + " does not use reps = 2000"};
    const auto gen = build_generator(*cfg.generator, build_space(cfg));
    const auto theta = build_perturbation(*cfg.perturbation);
    const auto run = robustness_check(gen, theta, build_statistic(*cfg.statistic), build_modulus(*cfg.modulus),
                                      build_gauge(cfg.gauge), cfg.n_schedule, cfg.reps, {cfg.master_seed, kThreads});
    bool preset_ok = run.holds;
    if (theta.kind() == Perturbation::Kind::identity) {
      for (const auto& row : run.rows) preset_ok = preset_ok && row.lhs == 0.0 && row.rhs == 0.0;
    }
    ok = ok && preset_ok;
    detail += std::string(detail.empty() ? "" : "; ") + name + ": max lhs " + num(run.max_lhs) + " <= rhs " +
              num(run.rhs) + " + margin " + num(run.rows.front().margin) + (preset_ok ? "" : " VIOLATED");
  }
  return {ok, detail};
}

Verdict theta_norm_exactness() {
  Rng rng(1008);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t k = 1 + static_cast<std::size_t>(rng.uniform() * 50);
    const double spread = 0.05 + 1.5 * rng.uniform();
    const double zeros = 0.5 * rng.uniform();
    std::vector<double> s(k);
    for (auto& x : s) x = rng.uniform() < zeros ? 0.0 : spread * rng.uniform();
    const LambdaCurve curve(s);
    for (const auto& kappa : {Modulus::identity(), Modulus::sqrt()}) {
      worst = std::max(worst, std::abs(theta_norm(curve, kappa) - oracle::theta_norm_grid(s, kappa)));
    }
  }
  return {worst <= 1e-4, "100 curves x {identity, sqrt}: max gap to 1e-5 grid scan " + num(worst) + " (tol 1e-4)"};
}

Verdict elicitability() {
  const auto mean_cfg = load("elicitability_mean");
  const auto mean_out = run_experiment(mean_cfg, kThreads);
  const auto mean_meta = Json::parse(mean_out.files.at("metadata.json"));
  const auto violations = mean_meta.at("result").at("violations").get<std::size_t>();
  const auto pairs = mean_meta.at("result").at("pairs").get<std::size_t>();

  const auto tau = Statistic::quantile(0.5);
  const auto score = ScoringFunction::pinball_psi(0.5, Gauge::polynomial(2.0));
  std::size_t found = 0;
  const Modulus test_set[] = {Modulus::identity(), Modulus::sqrt(), Modulus::power(1.0 / 3.0), Modulus::power(2.0),
                              Modulus::identity(4.0)};
  std::string missing;
  for (const auto& kappa : test_set) {
    const auto ce = search_scoring_violation(tau, score, kappa);
    if (ce && std::abs(evaluate(tau, ce->mu) - evaluate(tau, ce->nu)) > kappa(score_integral(tau, score, ce->mu, ce->nu))) {
      ++found;
    } else {
      missing += " " + kappa.name();
    }
  }
  return {violations == 0 && pairs == 10000 && found == std::size(test_set),
          "mean/squared/sqrt: " + std::to_string(violations) + " violations on " + std::to_string(pairs) +
              " pairs; pinball(psi = 1 + x^2) counterexamples for " + std::to_string(found) + "/" +
              std::to_string(std::size(test_set)) + " moduli" + (missing.empty() ? "" : ", missing:" + missing)};
}

Verdict determinism() {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(kSource / "configs")) {
    if (e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::size_t differing = 0;
  std::string which;
  for (const auto& f : files) {
    const auto cfg = parse_config_text(slurp(f));
    const auto serial = run_experiment(cfg, 0);
    const auto again = run_experiment(cfg, 0);
    const auto threaded = run_experiment(cfg, 4);
    if (serial.files != again.files || serial.files != threaded.files) {
      ++differing;
      which += " " + f.filename().string();
    }
  }
  return {differing == 0 && !files.empty(),
          std::to_string(files.size()) + " configs rerun serial, serial and 4-thread: " + std::to_string(differing) +
              " with differing bytes" + which};
}

}  // namespace

int main() {
  criterion(1, "metric closed forms on Dirac pairs", 1, closed_forms);
  criterion(2, "prohorov and bl against brute-force oracles", 120, oracle_equivalence);
  criterion(3, "metric axioms", 120, metric_axioms);
  criterion(4, "Markov psi-weak consistency", 300, markov_consistency);
  criterion(5, "directing-measure discrimination", 300, de_finetti);
  criterion(6, "Glivenko-Cantelli over the BL unit ball", 300, glivenko_cantelli);
  criterion(7, "robustness bound on presets", 600, robustness);
  criterion(8, "theta_norm exactness", 60, theta_norm_exactness);
  criterion(9, "elicitability condition", 120, elicitability);
  criterion(10, "determinism, serial vs 4 threads", 0, determinism);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures;
}
