// Pilot run that calibrates the Markov consistency threshold used by the
// acceptance suite. Uses its own master seed, disjoint from the acceptance
// run, and writes calibration/pilot.json.
//
//   robstat_pilot [output path]

#include <cmath>
#include <fstream>
#include <iostream>
#include <vector>

#include <nlohmann/json.hpp>

#include "robstat/asymptotics.hpp"

int main(int argc, char** argv) {
  using namespace robstat;
  const std::string path = argc > 1 ? argv[1] : "calibration/pilot.json";
  constexpr std::uint64_t kPilotSeed = 987654321;
  constexpr std::size_t kSeeds = 100;
  constexpr double kFactor = 2.0;
  const std::vector<std::size_t> schedule{100, 10000};

  const auto gen = PathGenerator::markov({0.0, 1.0}, {{0.7, 0.3}, {0.4, 0.6}},
                                         GroundSpace::real_line(MetricMode::bounded));
  const auto run = consistency_experiment(gen, Gauge::polynomial(1.0), schedule, kSeeds, {kPilotSeed, 0});
  const double median = run.summary.back().median_d_psi;
  // Rounded up to three significant digits.
  const double scale = std::pow(10.0, std::floor(std::log10(kFactor * median)) - 2);
  const double threshold = std::ceil(kFactor * median / scale) * scale;

  nlohmann::ordered_json j;
  j["purpose"] = "threshold for the median d_psi(m_n, upsilon) at n = 10000 in the Markov consistency check";
  j["generator"] = {{"kind", "markov"}, {"states", {0, 1}}, {"transition", {{0.7, 0.3}, {0.4, 0.6}}}};
  j["gauge"] = "1 + |x|";
  j["metric_mode"] = "bounded";
  j["master_seed"] = kPilotSeed;
  j["seeds"] = kSeeds;
  j["n"] = schedule.back();
  j["median_d_psi_n100"] = run.summary.front().median_d_psi;
  j["median_d_psi"] = median;
  j["factor"] = kFactor;
  j["threshold"] = threshold;

  std::ofstream os(path);
  if (!os) {
    std::cerr << "robstat_pilot: cannot write " << path << '\n';
    return 1;
  }
  os << j.dump(2) << '\n';
  std::cout << "pilot median d_psi at n=10000: " << median << ", threshold " << threshold << '\n';
  return 0;
}
