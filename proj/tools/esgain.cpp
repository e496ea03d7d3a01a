#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "app.hpp"

namespace {

int fail(const std::exception& e) {
  std::cerr << esgain::app::dump_json(esgain::app::error_json(e), -1) << "\n";
  return esgain::app::exit_code_for(e);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Extremum seeking gain tuning, averaging and simulation"};
  cli.set_version_flag("--version", esgain::app::kToolVersion);
  cli.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  unsigned threads = 0;
  bool verbose = false;

  const char* commands[][2] = {
      {"tune", "Select gains and write tune.json"},
      {"simulate", "Integrate full, averaged and ideal systems; write CSV and metrics.json"},
      {"perfmap", "Sweep the (a, p) performance map; write perfmap.csv"},
      {"average", "Run the averaging engine; write average.json and average.txt"},
      {"verify", "Run the invariant checks for the configured scheme; write verify.json"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = cli.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--out", out_dir, "Output directory (overrides output.dir)");
    sub->add_option("--threads", threads, "Worker threads, 0 = hardware concurrency");
    sub->add_flag("--verbose", verbose, "Progress messages on stderr");
  }

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = cli.exit(e);
    return rc == 0 ? 0 : 2;
  }

  const std::string command = cli.get_subcommands().front()->get_name();
  try {
    esgain::app::RunConfig cfg = esgain::app::load_config(config_path);
    esgain::app::RunOptions opts;
    if (!out_dir.empty()) opts.out_dir = out_dir;
    opts.threads = threads;
    opts.verbose = verbose;
    return esgain::app::run_command(command, cfg, opts, std::cerr);
  } catch (const std::exception& e) {
    return fail(e);
  }
}
