#include <CLI11.hpp>

#include <cstdio>
#include <string>
#include <vector>

#include "tripend/config.hpp"
#include "tripend/errors.hpp"
#include "tripend/runner.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> sets;
  std::string out_dir;
  std::string seed;
};

void add_common(CLI::App* cmd, CommonArgs* args) {
  cmd->add_option("--config", args->config_path, "key=value configuration file");
  cmd->add_option("--set", args->sets, "override, key=value (repeatable)")
      ->take_all();
  cmd->add_option("--out", args->out_dir, "output directory (default from config)");
  cmd->add_option("--seed", args->seed, "shorthand for --set seed=N");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"robust control toolkit for a belt-driven triple pendulum"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string method = "hinf";
  std::string scenario;
  std::string controller_path;

  CLI::App* c_model = app.add_subcommand("model", "write the derived model");
  add_common(c_model, &args);

  CLI::App* c_synth = app.add_subcommand("synth", "synthesize a controller");
  c_synth->add_option("--method", method, "hinf or dk")->required();
  add_common(c_synth, &args);

  CLI::App* c_sim = app.add_subcommand("simulate", "closed-loop step response");
  c_sim->add_option("--scenario", scenario, "tracking or disturbance")->required();
  c_sim->add_option("--controller", controller_path, "controller.json path")
      ->required();
  add_common(c_sim, &args);

  CLI::App* c_analyze =
      app.add_subcommand("analyze", "robustness sweep and worst corners");
  c_analyze->add_option("--controller", controller_path, "controller.json path")
      ->required();
  add_common(c_analyze, &args);

  CLI::App* c_repro =
      app.add_subcommand("reproduce", "full pipeline into one directory");
  add_common(c_repro, &args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : tripend::kExitConfig;
  }

  tripend::RunConfig cfg;
  try {
    std::vector<std::string> overrides = args.sets;
    if (!args.seed.empty()) overrides.push_back("seed=" + args.seed);
    cfg = tripend::RunConfig::load(args.config_path, overrides);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return tripend::kExitConfig;
  }
  const std::string out = args.out_dir.empty() ? cfg.out_dir : args.out_dir;

  if (c_model->parsed()) return tripend::cmd_model(cfg, out);
  if (c_synth->parsed()) return tripend::cmd_synth(cfg, method, out);
  if (c_sim->parsed())
    return tripend::cmd_simulate(cfg, scenario, controller_path, out);
  if (c_analyze->parsed()) return tripend::cmd_analyze(cfg, controller_path, out);
  if (c_repro->parsed()) return tripend::cmd_reproduce(cfg, out);
  return tripend::kExitConfig;
}
