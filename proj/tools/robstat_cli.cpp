// robstat command-line front end.
//
//   robstat <metrics|consistency|gc|robustness|elicitability> --config FILE [--out DIR] [--threads K]
//
// Exit status: 0 success, 2 config error, 3 invalid or unsupported
// combination, 4 numeric or output failure.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "robstat/runner.hpp"

namespace {

int exit_code(robstat::ErrorKind kind) {
  switch (kind) {
    case robstat::ErrorKind::config:
      return 2;
    case robstat::ErrorKind::invalid_argument:
    case robstat::ErrorKind::unsupported:
      return 3;
    case robstat::ErrorKind::numeric:
      return 4;
  }
  return 4;
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) robstat::fail(robstat::ErrorKind::config, "cannot read config file " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust statistics experiments on empirical measures of stationary sequences"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  unsigned threads = 0;
  for (const char* name : {"metrics", "consistency", "gc", "robustness", "elicitability"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory for metadata.json, records.csv, summary.csv");
    sub->add_option("--threads", threads, "worker threads; 0 runs sequentially")->default_val(0);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  const std::string sub = app.get_subcommands().front()->get_name();

  try {
    const auto cfg = robstat::parse_config_text(read_file(config_path));
    if (robstat::to_string(cfg.command) != sub) {
      robstat::fail(robstat::ErrorKind::config,
                    "config command '" + robstat::to_string(cfg.command) + "' does not match subcommand '" + sub + "'");
    }
    const auto out = robstat::run_experiment(cfg, threads);
    if (!out_dir.empty()) robstat::write_output(out_dir, out);
    if (cfg.command == robstat::Command::metrics) {
      std::cout << out.stdout_text;
    } else if (out_dir.empty()) {
      std::cout << out.files.at("summary.csv");
    }
    return 0;
  } catch (const robstat::Error& e) {
    std::cerr << "robstat: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "robstat: " << e.what() << '\n';
    return 4;
  }
}
