#include "robstat/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "robstat/runner.hpp"

namespace robstat {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::vector<fs::path> shipped_configs() {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(fs::path(ROBSTAT_SOURCE_DIR) / "configs")) {
    if (e.path().extension() == ".json") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

ErrorKind kind_of(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error for " << text;
  return ErrorKind::numeric;
}

TEST(Config, ShippedConfigsRoundTrip) {
  const auto files = shipped_configs();
  ASSERT_FALSE(files.empty());
  for (const auto& f : files) {
    const auto cfg = parse_config_text(slurp(f));
    EXPECT_EQ(parse_config(to_json(cfg)), cfg) << f;
    EXPECT_EQ(to_json(parse_config(to_json(cfg))), to_json(cfg)) << f;
  }
}

TEST(Config, MinimalMetrics) {
  const auto cfg = parse_config_text(R"({"command":"metrics","master_seed":3,"mu":[[0,1]],"nu":[[1,1]]})");
  EXPECT_EQ(cfg.command, Command::metrics);
  EXPECT_EQ(cfg.master_seed, 3u);
  EXPECT_EQ(cfg.metric_mode, MetricMode::bounded);
  EXPECT_EQ(cfg.gauge.kind, "one");
  const auto out = run_experiment(cfg);
  EXPECT_EQ(out.stdout_text, "1,0.66666666666666663,0,1,bounded\n");
}

TEST(Config, Rejections) {
  EXPECT_EQ(kind_of("{"), ErrorKind::config);
  EXPECT_EQ(kind_of("[]"), ErrorKind::config);
  EXPECT_EQ(kind_of(R"({"command":"metrics"})"), ErrorKind::config);  // no master seed
  EXPECT_EQ(kind_of(R"({"command":"metrics","master_seed":-1})"), ErrorKind::config);
  EXPECT_EQ(kind_of(R"({"command":"metrics","master_seed":1.5})"), ErrorKind::config);
  EXPECT_EQ(kind_of(R"({"command":"fit","master_seed":1})"), ErrorKind::config);
  EXPECT_EQ(kind_of(R"({"command":"metrics","master_seed":1,"colour":1})"), ErrorKind::config);
  EXPECT_EQ(kind_of(R"({"command":"metrics","master_seed":1,"gauge":{"kind":"one","exponent":2}})"),
            ErrorKind::config);
  EXPECT_EQ(kind_of(R"({"command":"metrics","master_seed":1,"metric_mode":"huge"})"), ErrorKind::config);
  EXPECT_EQ(kind_of(R"({"command":"gc","master_seed":1,"generator":{"kind":"iid","measure":[[0]]}})"),
            ErrorKind::config);
  EXPECT_EQ(kind_of(R"({"command":"gc","master_seed":1,"generator":{"kind":"ar1"}})"), ErrorKind::config);
  EXPECT_EQ(kind_of(R"({"command":"gc","master_seed":1,"n_schedule":[10,"x"]})"), ErrorKind::config);
  try {
    parse_config_text(R"({"command":"gc","master_seed":1,"generator":{"kind":"iid","measure":[],"extra":0}})");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("generator.extra"), std::string::npos);
  }
}

TEST(Config, InvalidValuesAndMissingFieldsAreConfigErrors) {
  auto run_kind = [](const std::string& text) {
    try {
      run_experiment(parse_config_text(text));
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::numeric;
  };
  EXPECT_EQ(run_kind(R"({"command":"metrics","master_seed":1,"mu":[[0,0.5]],"nu":[[0,1]]})"), ErrorKind::config);
  EXPECT_EQ(run_kind(R"({"command":"metrics","master_seed":1,"mu":[[0,1]]})"), ErrorKind::config);
  EXPECT_EQ(run_kind(R"({"command":"consistency","master_seed":1,
                        "generator":{"kind":"iid","measure":[[0,1]]},"seeds":2})"),
            ErrorKind::config);
  EXPECT_EQ(run_kind(R"({"command":"consistency","master_seed":1,"n_schedule":[5],"seeds":2,
                        "generator":{"kind":"markov","states":[0,1],"transition":[[0.5,0.6],[0.5,0.5]]}})"),
            ErrorKind::config);
  // Reducible chains are valid but unsupported for directing measures.
  EXPECT_EQ(run_kind(R"({"command":"consistency","master_seed":1,"n_schedule":[5],"seeds":2,
                        "generator":{"kind":"markov","states":[0,1],"transition":[[1,0],[0,1]]}})"),
            ErrorKind::unsupported);
  EXPECT_EQ(run_kind(R"({"command":"gc","master_seed":1,"n_schedule":[5],"seeds":2,
                        "generator":{"kind":"markov","states":[0,1],"transition":[[0.5,0.5],[0.5,0.5]]}})"),
            ErrorKind::unsupported);
}

TEST(Runner, ConsistencyOfDiracIsAllZeros) {
  const auto cfg = parse_config_text(R"({"command":"consistency","master_seed":1,"n_schedule":[10,100],"seeds":4,
                                         "gauge":{"kind":"polynomial","exponent":1,"scale":1},
                                         "generator":{"kind":"iid","measure":[[2.5,1]]}})");
  const auto out = run_experiment(cfg);
  EXPECT_EQ(out.files.at("summary.csv"),
            "n,median_bl,median_prohorov,median_psi_gap,median_d_psi,median_d_psi_marginal,min_d_psi_marginal\n"
            "10,0,0,0,0,0,0\n100,0,0,0,0,0,0\n");
}

TEST(Runner, MetadataEchoesConfig) {
  for (const auto& f : shipped_configs()) {
    const auto cfg = parse_config_text(slurp(f));
    if (cfg.command == Command::robustness) continue;  // covered by the determinism test below
    const auto out = run_experiment(cfg);
    const auto meta = Json::parse(out.files.at("metadata.json"));
    EXPECT_EQ(parse_config(meta.at("config")), cfg) << f;
    EXPECT_TRUE(meta.contains("conventions"));
  }
}

TEST(Runner, SerialAndThreadedOutputsAreIdentical) {
  for (const auto& f : shipped_configs()) {
    auto cfg = parse_config_text(slurp(f));
    if (cfg.reps > 200) cfg.reps = 200;
    if (cfg.seeds > 20) cfg.seeds = 20;
    const auto a = run_experiment(cfg, 0);
    const auto b = run_experiment(cfg, 4);
    EXPECT_EQ(a.files, b.files) << f;
    if (cfg.command == Command::robustness) {
      const auto meta = Json::parse(a.files.at("metadata.json"));
      EXPECT_EQ(meta.at("quasi_invariant"), true);
      EXPECT_NE(meta.at("conventions").at("limsup").get<std::string>().find("max over"), std::string::npos);
    }
  }
}

TEST(Runner, AtomicWrite) {
  const fs::path dir = fs::temp_directory_path() / "robstat_config_test_out";
  fs::remove_all(dir);
  RunOutput out;
  out.files["a.csv"] = "x\n";
  out.files["sub/b.csv"] = "y\n";
  write_output(dir, out);
  EXPECT_EQ(slurp(dir / "a.csv"), "x\n");
  EXPECT_EQ(slurp(dir / "sub/b.csv"), "y\n");
  std::size_t tmp = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir)) tmp += e.path().extension() == ".tmp";
  EXPECT_EQ(tmp, 0u);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace robstat
