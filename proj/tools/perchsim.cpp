// perchsim <scenario> --config <path> [--seed N] [--out DIR]
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "perchsim/harness.hpp"

using namespace perchsim;

int main(int argc, char** argv) {
  CLI::App app{"Perching flight simulator"};
  std::string scenario;
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  bool print_config = false;
  app.add_option("scenario", scenario, "ClawSweep, ImpactSuite, FlightOnly, SoftBranch, FullPerch, Envelope, "
                                       "Optimize or LauncherProfile")
      ->required();
  app.add_option("--config", config_path, "key = value config file")->required();
  auto* seed_opt = app.add_option("--seed", seed, "base seed");
  auto* out_opt = app.add_option("--out", out_dir, "output directory");
  app.add_flag("--print-config", print_config, "print the effective config and exit");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : harness::kConfigError;
  }

  harness::RunConfig cfg;
  try {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config " + config_path);
    std::ostringstream text;
    text << in.rdbuf();
    config::KeyValues kv = config::parse_text(text.str());
    const auto named = kv.find("scenario");
    if (named != kv.end() && named->second != scenario)
      throw ConfigError("config names scenario " + named->second + " but " + scenario + " was requested");
    kv["scenario"] = scenario;
    cfg = harness::from_keys(kv);
    if (*seed_opt) cfg.seed = seed;
    if (*out_opt) cfg.output_dir = out_dir;
    harness::validate(cfg);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return harness::kConfigError;
  }

  if (print_config) {
    std::cout << harness::serialize(cfg);
    return 0;
  }

  try {
    const harness::ScenarioReport rep = harness::run_scenario(cfg);
    for (const auto& [k, v] : rep.summary) std::printf("%s: %s\n", k.c_str(), v.c_str());
    return rep.exit_code;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return harness::kConfigError;
  } catch (const DomainError& e) {
    std::fprintf(stderr, "invalid parameter: %s\n", e.what());
    return harness::kConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return harness::kCriteriaFailed;
  }
}
