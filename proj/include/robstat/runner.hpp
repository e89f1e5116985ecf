#pragma once

// Executes an ExperimentConfig. All output is rendered in memory first and
// written with temp-file-and-rename, so an error never leaves a partial file.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "robstat/asymptotics.hpp"
#include "robstat/config.hpp"
#include "robstat/format.hpp"
#include "robstat/metrics.hpp"
#include "robstat/risk.hpp"

namespace robstat {

inline constexpr const char* kVersion = "0.1.0";

struct RunOutput {
  std::map<std::string, std::string> files;  // relative path -> content
  std::string stdout_text;
};

namespace detail {

inline Json conventions(const ExperimentConfig& c) {
  Json j;
  j["metric_mode"] = to_string(c.metric_mode);
  j["quantile"] = "lower: inf{x : F(x) >= level}, cumulative slack 1e-12";
  j["expected_shortfall"] = "upper tail mean with fractional boundary atom";
  j["d_psi"] = "prohorov + |mu psi - nu psi|";
  j["prohorov_atom_cap"] = kMaxProhorovAtoms;
  j["seeding"] = "replication r uses replication_seed(master_seed, r)";
  return j;
}

inline std::string b01(bool b) { return b ? "1" : "0"; }

template <typename T>
T required(const std::optional<T>& v, const char* key, Command cmd) {
  if (!v) fail(ErrorKind::config, "command '" + to_string(cmd) + "' requires '" + key + "'");
  return *v;
}

inline void require_positive(std::size_t v, const char* key, Command cmd) {
  if (v == 0) fail(ErrorKind::config, "command '" + to_string(cmd) + "' requires a positive '" + key + "'");
}

inline void require_schedule(const ExperimentConfig& c) {
  if (c.n_schedule.empty()) fail(ErrorKind::config, "command '" + to_string(c.command) + "' requires 'n_schedule'");
  for (auto n : c.n_schedule) {
    if (n == 0) fail(ErrorKind::config, "'n_schedule' entries must be positive");
  }
}

inline RunOutput run_metrics(const ExperimentConfig& c, Json& meta) {
  const GroundSpace space = build_space(c);
  const auto mu = build_measure(required(c.mu, "mu", c.command), space);
  const auto nu = build_measure(required(c.nu, "nu", c.command), space);
  const auto rep = d_psi(mu, nu, build_gauge(c.gauge), space);
  const auto pr = prohorov_detailed(mu, nu, space);
  RunOutput out;
  const std::string table = metric_report_csv_header() + "\n" + to_csv_row(rep) + "\n";
  out.files["records.csv"] = table;
  out.files["summary.csv"] = table;
  out.stdout_text = to_csv_row(rep) + "\n";
  meta["result"] = {{"prohorov_error_bound", pr.error_bound}};
  return out;
}

inline RunOutput run_consistency(const ExperimentConfig& c, const RunOptions& opt, Json& meta) {
  const GroundSpace space = build_space(c);
  const auto gen = build_generator(required(c.generator, "generator", c.command), space);
  require_schedule(c);
  require_positive(c.seeds, "seeds", c.command);
  const auto run = consistency_experiment(gen, build_gauge(c.gauge), c.n_schedule, c.seeds, opt);
  RunOutput out;
  std::ostringstream rec, sum;
  rec << "replication,seed,n,bl,prohorov,psi_gap,d_psi,d_psi_marginal\n";
  for (const auto& r : run.records) {
    rec << r.replication << ',' << r.seed << ',' << r.n << ',' << format_double(r.bl) << ','
        << format_double(r.prohorov) << ',' << format_double(r.psi_gap) << ',' << format_double(r.d_psi) << ','
        << format_double(r.d_psi_marginal) << '\n';
  }
  sum << "n,median_bl,median_prohorov,median_psi_gap,median_d_psi,median_d_psi_marginal,min_d_psi_marginal\n";
  for (const auto& s : run.summary) {
    sum << s.n << ',' << format_double(s.median_bl) << ',' << format_double(s.median_prohorov) << ','
        << format_double(s.median_psi_gap) << ',' << format_double(s.median_d_psi) << ','
        << format_double(s.median_d_psi_marginal) << ',' << format_double(s.min_d_psi_marginal) << '\n';
  }
  out.files["records.csv"] = rec.str();
  out.files["summary.csv"] = sum.str();
  if (c.dump_paths) {
    const std::size_t n_max = *std::max_element(c.n_schedule.begin(), c.n_schedule.end());
    for (std::size_t r = 0; r < c.seeds; ++r) {
      std::ostringstream os;
      write_path(os, generate(gen, n_max, replication_seed(c.master_seed, r)));
      out.files["paths/path_" + std::to_string(r) + ".txt"] = os.str();
    }
  }
  meta["generator"] = gen.describe();
  return out;
}

inline RunOutput run_gc(const ExperimentConfig& c, const RunOptions& opt, Json& meta) {
  const GroundSpace space = build_space(c);
  const auto gen = build_generator(required(c.generator, "generator", c.command), space);
  require_schedule(c);
  require_positive(c.seeds, "seeds", c.command);
  const auto run = gc_sup_check(gen, c.n_schedule, c.seeds, opt);
  RunOutput out;
  std::ostringstream rec, sum;
  rec << "replication,seed,n,bl\n";
  for (const auto& r : run.records) rec << r.replication << ',' << r.seed << ',' << r.n << ',' << format_double(r.bl) << '\n';
  sum << "n,median_bl,max_bl\n";
  for (const auto& s : run.summary) sum << s.n << ',' << format_double(s.median_bl) << ',' << format_double(s.max_bl) << '\n';
  out.files["records.csv"] = rec.str();
  out.files["summary.csv"] = sum.str();
  meta["generator"] = gen.describe();
  return out;
}

inline RunOutput run_robustness(const ExperimentConfig& c, const RunOptions& opt, Json& meta) {
  const GroundSpace space = build_space(c);
  const auto gen = build_generator(required(c.generator, "generator", c.command), space);
  const auto theta = build_perturbation(required(c.perturbation, "perturbation", c.command));
  const auto tau = build_statistic(required(c.statistic, "statistic", c.command));
  const auto kappa = build_modulus(required(c.modulus, "modulus", c.command));
  require_schedule(c);
  require_positive(c.reps, "reps", c.command);
  const auto run = robustness_check(gen, theta, tau, kappa, build_gauge(c.gauge), c.n_schedule, c.reps, opt);
  RunOutput out;
  std::ostringstream rec, sum;
  rec << "replication,d_psi_sorted\n";
  for (std::size_t i = 0; i < run.lambda_samples.size(); ++i) rec << i << ',' << format_double(run.lambda_samples[i]) << '\n';
  sum << "n,lhs,lhs_error_bound,rhs,margin,holds\n";
  for (const auto& r : run.rows) {
    sum << r.n << ',' << format_double(r.lhs) << ',' << format_double(r.lhs_error_bound) << ','
        << format_double(r.rhs) << ',' << format_double(r.margin) << ',' << b01(r.holds) << '\n';
  }
  out.files["records.csv"] = rec.str();
  out.files["summary.csv"] = sum.str();
  meta["generator"] = gen.describe();
  meta["quasi_invariant"] = run.quasi_invariant;
  meta["result"] = {{"theta_norm", run.theta_norm},
                    {"ky_fan", run.ky_fan},
                    {"rhs", run.rhs},
                    {"max_lhs", run.max_lhs},
                    {"holds", run.holds},
                    {"directing_lhs", run.directing_lhs},
                    {"directing_holds", run.directing_holds}};
  meta["conventions"]["limsup"] = "limsup approximated by max over n_schedule";
  meta["conventions"]["estimator_law_metric"] = "bounded: min(|x - y|, 1)";
  meta["conventions"]["margin"] = "2 * 0.5 / sqrt(reps)";
  meta["conventions"]["estimator_laws"] = "paired seeds: perturbed and plain estimators share each path";
  return out;
}

inline RunOutput run_elicitability(const ExperimentConfig& c, Json& meta) {
  const auto tau = build_statistic(required(c.statistic, "statistic", c.command));
  const auto score = build_scoring(required(c.scoring, "scoring", c.command));
  const auto kappa = build_modulus(required(c.modulus, "modulus", c.command));
  const auto ps = required(c.pairs, "pairs", c.command);
  require_positive(ps.count, "pairs.count", c.command);
  if (!(ps.lo < ps.hi) || ps.max_atoms == 0) fail(ErrorKind::config, "'pairs' needs lo < hi and max_atoms >= 1");

  Rng rng(c.master_seed);
  auto draw = [&] {
    const std::size_t k = 1 + static_cast<std::size_t>(rng.uniform() * static_cast<double>(ps.max_atoms));
    std::vector<double> w(k);
    double total = 0.0;
    for (auto& x : w) total += (x = 0.05 + rng.uniform());
    std::vector<Atom> atoms;
    for (std::size_t i = 0; i < k; ++i) atoms.push_back({ps.lo + (ps.hi - ps.lo) * rng.uniform(), w[i] / total});
    return DiscreteMeasure(std::move(atoms));
  };
  std::vector<MeasurePair> pairs;
  for (std::size_t i = 0; i < ps.count; ++i) {
    auto mu = draw();
    pairs.emplace_back(std::move(mu), draw());
  }
  const auto rep = check_scoring_modulus(tau, score, kappa, pairs);
  RunOutput out;
  std::ostringstream rec, sum;
  write_violation_report(rec, rep);
  sum << "check,modulus,pairs,violations,mu,nu,lhs,s_tilde,rhs\n";
  sum << "random_pairs," << rep.modulus << ',' << pairs.size() << ',' << rep.violations << ",,,,,\n";
  auto measure_text = [](const DiscreteMeasure& m) {
    std::string s;
    for (const auto& a : m.atoms()) s += (s.empty() ? "" : " ") + format_double(a.point) + ":" + format_double(a.weight);
    return s;
  };
  for (const auto& ms : c.search_moduli) {
    const auto k = build_modulus(ms);
    const auto ce = search_scoring_violation(tau, score, k);
    sum << "search," << k.name() << ",," << (ce ? 1 : 0);
    if (ce) {
      sum << ',' << measure_text(ce->mu) << ',' << measure_text(ce->nu) << ',' << format_double(ce->row.lhs) << ','
          << format_double(ce->row.s_tilde) << ',' << format_double(ce->row.rhs) << '\n';
    } else {
      sum << ",,,,,\n";
    }
  }
  out.files["records.csv"] = rec.str();
  out.files["summary.csv"] = sum.str();
  meta["result"] = {{"violations", rep.violations}, {"pairs", pairs.size()}};
  return out;
}

inline void write_atomically(const std::filesystem::path& dir, const std::map<std::string, std::string>& files) {
  namespace fs = std::filesystem;
  std::vector<std::pair<fs::path, fs::path>> staged;
  try {
    for (const auto& [name, content] : files) {
      const fs::path target = dir / name;
      fs::create_directories(target.parent_path());
      fs::path tmp = target;
      tmp += ".tmp";
      std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
      os << content;
      os.close();
      if (!os) fail(ErrorKind::numeric, "could not write " + tmp.string());
      staged.emplace_back(tmp, target);
    }
  } catch (const fs::filesystem_error& e) {
    for (const auto& s : staged) fs::remove(s.first);
    fail(ErrorKind::numeric, std::string("output error: ") + e.what());
  } catch (...) {
    for (const auto& s : staged) fs::remove(s.first);
    throw;
  }
  for (const auto& [tmp, target] : staged) fs::rename(tmp, target);
}

}  // namespace detail

/// Runs the experiment and renders every output file. Throws robstat::Error.
inline RunOutput run_experiment(const ExperimentConfig& c, unsigned threads = 0) {
  const RunOptions opt{c.master_seed, threads};
  Json meta;
  meta["tool"] = std::string("robstat ") + kVersion;
  meta["config"] = to_json(c);
  meta["conventions"] = detail::conventions(c);
  if (c.perturbation) meta["quasi_invariant"] = c.perturbation->quasi_invariant;
  RunOutput out;
  switch (c.command) {
    case Command::metrics:
      out = detail::run_metrics(c, meta);
      break;
    case Command::consistency:
      out = detail::run_consistency(c, opt, meta);
      break;
    case Command::gc:
      out = detail::run_gc(c, opt, meta);
      break;
    case Command::robustness:
      out = detail::run_robustness(c, opt, meta);
      break;
    case Command::elicitability:
      out = detail::run_elicitability(c, meta);
      break;
  }
  out.files["metadata.json"] = meta.dump(2) + "\n";
  return out;
}

inline void write_output(const std::filesystem::path& dir, const RunOutput& out) {
  detail::write_atomically(dir, out.files);
}

}  // namespace robstat
