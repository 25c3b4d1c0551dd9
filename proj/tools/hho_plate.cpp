// Command-line front end: `hho-plate run --config <file> [overrides]`.

#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <map>
#include <string>

#include "hho/config.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Clamped-plate solver with adaptive refinement and guaranteed "
               "lower eigenvalue bounds"};
  app.require_subcommand(1);

  CLI::App* run_cmd = app.add_subcommand("run", "execute a configured driver");
  std::string config_path;
  run_cmd->add_option("--config", config_path, "key=value configuration file")
      ->required();

  // Optional overrides; presence wins over the file.
  std::map<std::string, std::string> overrides;
  for (const char* key : {"mode", "domain", "k", "ell", "sigma", "theta",
                          "eig_index", "max_ndof", "output_dir", "seed"}) {
    run_cmd->add_option_function<std::string>(
        std::string("--") + key,
        [&overrides, key](const std::string& v) { overrides[key] = v; },
        std::string("override config key ") + key);
  }

  CLI11_PARSE(app, argc, argv);

  hho::RunConfig cfg;
  try {
    cfg = hho::parse_config(config_path, overrides);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  }
  try {
    hho::run(cfg);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "solver error: %s\n", e.what());
    return 1;
  }
  return 0;
}
