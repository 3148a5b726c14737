#include "osp/cli.hpp"
#include "osp/parallel.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

int main(int argc, char** argv) {
  CLI::App app{"Optimal stopping by region optimization: batch experiments and oracle checks"};
  std::string command;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  unsigned threads = 0;
  app.add_option("command", command, "price | qcurves | oracle-check | adversarial | rates")
      ->required()
      ->check(CLI::IsMember({"price", "qcurves", "oracle-check", "adversarial", "rates"}));
  app.add_option("--config", config_path, "configuration file")->required()->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "master seed (overrides plan.seed)");
  app.add_option("--out", out, "output directory (overrides output.dir)");
  app.add_option("--threads", threads, "worker threads, 0 = all cores; results do not depend on it");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : osp::cli::exit_validation;
  }

  std::ifstream in(config_path, std::ios::binary);
  std::stringstream text;
  text << in.rdbuf();
  osp::cli::RunConfig config;
  try {
    config = osp::cli::parse_config(text.str());
  } catch (const osp::cli::ConfigError& e) {
    for (const auto& m : e.messages()) std::cerr << config_path << ": " << m << "\n";
    return osp::cli::exit_validation;
  }
  osp::set_thread_count(threads);
  return osp::cli::run(command, config, {seed, out});
}
