// Run configuration: flat key=value files with command-line overrides, and
// the top-level driver dispatch.

#pragma once

#include <map>
#include <string>

#include "hho/mesh.hpp"

namespace hho {

enum class RunMode { source_uniform, source_adaptive, eigen_adaptive, manufactured };

struct RunConfig {
  RunMode mode = RunMode::source_adaptive;
  Domain domain = Domain::lshape;
  int k = 0;
  int ell = -1;        // -1: auto (k+2)
  double sigma = 0.4086;
  double theta = 0.5;
  int eig_index = 1;
  long max_ndof = 10000;
  std::string output_dir = ".";
  unsigned seed = 1;

  int resolved_ell() const { return ell < 0 ? k + 2 : ell; }
};

// Throws std::invalid_argument naming the offending key on unknown keys,
// type mismatches, or constraint violations.
RunConfig parse_config(const std::string& path,
                       const std::map<std::string, std::string>& overrides = {});

RunConfig config_from_keys(const std::map<std::string, std::string>& keys);

// Executes the configured driver and writes history.csv, mesh snapshots, and
// summary.txt into output_dir. Throws on solver failure.
void run(const RunConfig& config);

}  // namespace hho
