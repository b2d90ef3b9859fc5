// Command line front end: run experiments from config files or presets,
// dump graph sequences, and self-check the analytic invariants.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "saddlesim/harness.hpp"

namespace {

// A positional that names a preset resolves to its embedded config; anything
// else is read as a config file.
saddlesim::ExperimentConfig load_config(const std::string& source) {
  if (const saddlesim::Preset* p = saddlesim::find_preset(source))
    return saddlesim::parse_config(p->text);
  std::ifstream in(source, std::ios::binary);
  if (!in) throw saddlesim::IoError("cannot open config " + source);
  std::ostringstream buf;
  buf << in.rdbuf();
  return saddlesim::parse_config(buf.str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"decentralized saddle-point experiment runner"};
  app.require_subcommand(1);

  std::string run_source, dump_source;
  std::string output_override;
  bool plot = false, quiet = false;
  int checkpoint_stride = 0;
  std::int64_t dump_rounds = 0;

  CLI::App* run = app.add_subcommand("run", "run an experiment from a config file or preset");
  run->add_option("config", run_source, "config file path or preset name")->required();
  run->add_option("--output", output_override, "override the output directory");
  run->add_flag("--plot", plot, "also write an SVG convergence plot");
  run->add_option("--checkpoint-stride", checkpoint_stride, "record metrics every N iterations");
  run->add_flag("--quiet", quiet, "suppress the summary echo");

  CLI::App* dump = app.add_subcommand("dump-graphs", "print the first K graphs of the sequence");
  dump->add_option("config", dump_source, "config file path or preset name")->required();
  dump->add_option("--rounds", dump_rounds, "how many rounds to print")->required();

  CLI::App* verify = app.add_subcommand("verify", "self-check the analytic invariants");
  CLI::App* list = app.add_subcommand("presets", "list built-in presets");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      saddlesim::ExperimentConfig cfg = load_config(run_source);
      if (!output_override.empty()) cfg.output.directory = output_override;
      if (plot) cfg.output.plot = true;
      if (checkpoint_stride > 0) cfg.output.checkpoint_stride = checkpoint_stride;
      saddlesim::run_experiment(cfg, std::cout, quiet);
      return 0;
    }
    if (dump->parsed()) {
      saddlesim::dump_graph_sequence(load_config(dump_source), dump_rounds, std::cout);
      return 0;
    }
    if (verify->parsed()) return saddlesim::verify_invariants(std::cout) ? 0 : 1;
    if (list->parsed()) {
      for (const saddlesim::Preset& p : saddlesim::presets())
        std::cout << p.name << ": " << p.description << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
