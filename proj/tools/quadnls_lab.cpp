#include <iostream>

#include <CLI11.hpp>

#include "quadnls/lab.hpp"

using namespace quadnls;

int main(int argc, char** argv) {
  CLI::App app{"Batch front-end for the three-wave quadratic Schrodinger lab"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* opt = sub->add_option("config", config_path, "scenario config (JSON)");
    if (config_required) opt->required();
    opt->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (overrides output_dir)");
    sub->add_option("--seed", seed, "rng seed for randomized suites");
  };
  auto* gs = app.add_subcommand("groundstate", "certify W and write its record");
  auto* ev = app.add_subcommand("evolve", "evolve a scenario and classify it");
  auto* sw = app.add_subcommand("sweep", "amplitude sweep c W over sweep.c_values");
  auto* ck = app.add_subcommand("check", "property suite; exit status 0 when all pass");
  add_common(gs, true);
  add_common(ev, true);
  add_common(sw, true);
  add_common(ck, false);

  CLI11_PARSE(app, argc, argv);

  try {
    lab::ScenarioConfig cfg;
    if (!config_path.empty()) {
      cfg = lab::load_config(config_path);
    } else {
      // The bare check profile runs on a 64-point line.
      cfg.grid.kind = "cartesian";
      cfg.grid.dim = 1;
      cfg.grid.points_per_axis = 64;
      cfg.grid.box_length = 40.0;
    }
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (seed) cfg.rng_seed = *seed;

    lab::CommandResult res;
    if (*gs)
      res = lab::cmd_groundstate(cfg);
    else if (*ev)
      res = lab::cmd_evolve(cfg);
    else if (*sw)
      res = lab::cmd_sweep(cfg);
    else
      res = lab::cmd_check(cfg);
    std::cout << res.summary;
    for (const auto& f : res.files) std::cout << "wrote " << cfg.output_dir << "/" << f << "\n";
    return res.exit_code;
  } catch (const SizingError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
