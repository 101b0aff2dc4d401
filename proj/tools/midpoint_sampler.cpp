#include "midpoint/cli.hpp"
#include "midpoint/workers.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <map>

int main(int argc, char** argv) {
  using namespace midpoint::cli;
  CLI::App app{"Randomized-midpoint diffusion and log-concave samplers"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::size_t workers = 0;
  std::string out_dir;
  std::map<std::string, double> overrides;
  const char* names[] = {"T", "delta", "hpred", "hcorr", "Tcorr", "gamma", "R", "K", "Rcorr", "Kcorr", "hrand", "Nrand"};

  std::vector<CLI::App*> subs;
  for (const char* name : {"sample", "study-convergence", "study-picard", "verify"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON run config")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "64-bit seed (overrides the config)");
    sub->add_option("--workers", workers, "worker threads (fallback: MIDPOINT_SAMPLER_THREADS)");
    sub->add_option("--out", out_dir, "output directory");
    for (const char* c : names) {
      sub->add_option_function<double>(
          std::string("--c-") + c, [&overrides, c](double v) { overrides[std::string("c_") + c] = v; },
          "schedule constant override");
    }
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kParseError;
  }

  try {
    RunConfig config = load_config(config_path);
    nlohmann::json raw = config.raw;
    for (const auto& [k, v] : overrides) raw["constants"][k] = v;
    for (CLI::App* sub : subs) {
      if (!sub->parsed()) continue;
      if (sub->count("--seed")) raw["seed"] = seed;
      if (sub->count("--out")) raw["out"] = out_dir;
      if (sub->count("--workers")) raw["workers"] = workers;
    }
    if (!raw.contains("workers")) raw["workers"] = midpoint::WorkerPool::from_env(1);
    config = parse_config(raw);
    if (app.got_subcommand("sample")) return cmd_sample(config);
    if (app.got_subcommand("study-convergence")) return cmd_convergence_study(config);
    if (app.got_subcommand("study-picard")) return cmd_picard_study(config);
    return cmd_verify(config);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kParseError;
  } catch (const midpoint::NumericalError& e) {
    std::cerr << "error: numerical blow-up: " << e.what() << '\n';
    return kBlowUp;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
}
