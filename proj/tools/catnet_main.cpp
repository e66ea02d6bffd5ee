#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "catnet/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"catnet - class-incremental learning experiments"};
  app.require_subcommand(1);

  std::string gen_spec, gen_out;
  bool gen_force = false;
  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic dataset + split manifest");
  gen->add_option("--spec", gen_spec, "generation spec (JSON)")->required();
  gen->add_option("--out", gen_out, "output dataset path")->required();
  gen->add_flag("--force", gen_force, "overwrite an existing dataset file");

  std::string run_config, run_out;
  bool run_force = false;
  CLI::App* run = app.add_subcommand("run", "run an incremental training schedule");
  run->add_option("--config", run_config, "run config (JSON)")->required();
  run->add_option("--out", run_out, "run output directory")->required();
  run->add_flag("--force", run_force, "overwrite an existing run directory");

  std::string report_dir, report_compare;
  CLI::App* report = app.add_subcommand("report", "summarize a finished run");
  report->add_option("--run", report_dir, "run directory")->required();
  report->add_option("--compare", report_compare, "second run directory for side-by-side");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : catnet::kExitConfig;
  }

  if (gen->parsed()) {
    return catnet::cmd_gen(gen_spec, gen_out, gen_force, std::cout, std::cerr);
  }
  if (run->parsed()) {
    return catnet::cmd_run(run_config, run_out, run_force, std::cout, std::cerr);
  }
  return catnet::cmd_report(report_dir, report_compare, std::cout, std::cerr);
}
