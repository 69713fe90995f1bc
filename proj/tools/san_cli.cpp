#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "san/io/formats.hpp"
#include "san/io/run.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Sequentially additive nonignorable missing-data models"};
  app.set_version_flag("--version", san::io::kVersion);
  app.require_subcommand(1);

  san::io::RunOptions options;
  std::uint64_t seed = 0;
  std::string out;
  const char* commands[][2] = {
      {"simulate", "draw a dataset from the truth model in the config"},
      {"project", "run one f-projection"},
      {"identify", "reconstruct the full-data law from an observed table and margins"},
      {"fit", "run the Gibbs sampler and write posterior draws"},
      {"summarize", "summaries and histogram counts from a samples CSV"},
  };
  for (auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c[0], c[1]);
    sub->add_option("config", options.config_path, "JSON config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "overrides the config seed");
    sub->add_option("--out", out, "output directory, overrides the config");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--seed")) options.seed = seed;
  if (sub->count("--out")) options.out = out;
  return san::io::run(sub->get_name(), options, std::cout, std::cerr);
}
