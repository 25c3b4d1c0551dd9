#include "hho/config.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "hho/adapt.hpp"

namespace hho {

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& why) {
  throw std::invalid_argument("config key '" + key + "': " + why);
}

long parse_long(const std::string& key, const std::string& value) {
  size_t pos = 0;
  long v = 0;
  try {
    v = std::stol(value, &pos);
  } catch (const std::exception&) {
    bad(key, "expected an integer, got '" + value + "'");
  }
  if (pos != value.size()) bad(key, "expected an integer, got '" + value + "'");
  return v;
}

double parse_double(const std::string& key, const std::string& value) {
  size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(value, &pos);
  } catch (const std::exception&) {
    bad(key, "expected a number, got '" + value + "'");
  }
  if (pos != value.size()) bad(key, "expected a number, got '" + value + "'");
  return v;
}

}  // namespace

RunConfig config_from_keys(const std::map<std::string, std::string>& keys) {
  RunConfig cfg;
  for (const auto& [key, value] : keys) {
    if (key == "mode") {
      if (value == "source_uniform") cfg.mode = RunMode::source_uniform;
      else if (value == "source_adaptive") cfg.mode = RunMode::source_adaptive;
      else if (value == "eigen_adaptive") cfg.mode = RunMode::eigen_adaptive;
      else if (value == "manufactured") cfg.mode = RunMode::manufactured;
      else bad(key, "unknown mode '" + value + "'");
    } else if (key == "domain") {
      if (value == "lshape") cfg.domain = Domain::lshape;
      else if (value == "unit_square") cfg.domain = Domain::unit_square;
      else bad(key, "unknown domain '" + value + "'");
    } else if (key == "k") {
      cfg.k = static_cast<int>(parse_long(key, value));
    } else if (key == "ell") {
      cfg.ell = value == "auto" ? -1 : static_cast<int>(parse_long(key, value));
    } else if (key == "sigma") {
      cfg.sigma = parse_double(key, value);
    } else if (key == "theta") {
      cfg.theta = parse_double(key, value);
    } else if (key == "eig_index") {
      cfg.eig_index = static_cast<int>(parse_long(key, value));
    } else if (key == "max_ndof") {
      cfg.max_ndof = parse_long(key, value);
    } else if (key == "output_dir") {
      cfg.output_dir = value;
    } else if (key == "seed") {
      cfg.seed = static_cast<unsigned>(parse_long(key, value));
    } else {
      bad(key, "unknown key");
    }
  }

  if (cfg.k < 0 || cfg.k > 4) bad("k", "must lie in 0..4");
  const int ell_min = std::max(cfg.k - 2, 0);
  if (cfg.ell >= 0 && cfg.ell < ell_min)
    bad("ell", "must be at least max{k-2,0} = " + std::to_string(ell_min));
  if (!(cfg.sigma > 0.0)) bad("sigma", "must be positive");
  if (!(cfg.theta > 0.0 && cfg.theta <= 1.0)) bad("theta", "must lie in (0,1]");
  if (cfg.eig_index < 1) bad("eig_index", "must be >= 1");
  if (cfg.max_ndof < 1) bad("max_ndof", "must be >= 1");
  if (cfg.mode == RunMode::eigen_adaptive && cfg.resolved_ell() != cfg.k + 2)
    bad("ell", "the eigenvalue driver requires ell = k+2");
  return cfg;
}

RunConfig parse_config(const std::string& path,
                       const std::map<std::string, std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
  std::map<std::string, std::string> keys;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    // trim
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": expected key=value");
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t");
      const auto b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    keys[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  for (const auto& [k, v] : overrides) keys[k] = v;
  return config_from_keys(keys);
}

void run(const RunConfig& cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  const fs::path out(cfg.output_dir);

  SnapshotFn snapshot = [&](int step, const Mesh& mesh) {
    std::ofstream os(out / ("mesh_" + std::to_string(step) + ".txt"));
    mesh.write_ascii(os);
  };

  const auto t0 = std::chrono::steady_clock::now();
  ConvergenceHistory history;
  switch (cfg.mode) {
    case RunMode::source_uniform:
      history = uniform_source(cfg, [](const Vec2&) { return 1.0; }, nullptr,
                               snapshot);
      break;
    case RunMode::source_adaptive:
      history = adaptive_source(cfg, [](const Vec2&) { return 1.0; }, snapshot);
      break;
    case RunMode::manufactured: {
      const Field exact = manufactured_solution();
      history = uniform_source(cfg, manufactured_load(), &exact, snapshot);
      break;
    }
    case RunMode::eigen_adaptive:
      history = adaptive_eigen(cfg, snapshot);
      break;
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  {
    std::ofstream os(out / "history.csv");
    write_csv(os, history);
  }

  std::ofstream os(out / "summary.txt");
  os.precision(10);
  const HistoryRow& last = history.rows.back();
  os << "steps " << history.rows.size() << "\n";
  os << "final_ndof " << last.ndof << "\n";
  os << "final_hmax " << last.hmax << "\n";

  auto tail_rate = [&](auto getter, const char* name, bool use_h) {
    std::vector<double> err, x;
    for (const HistoryRow& r : history.rows) {
      const double e = getter(r);
      if (std::isnan(e) || e <= 0.0) continue;
      err.push_back(e);
      x.push_back(use_h ? 1.0 / r.hmax : std::sqrt(double(r.ndof)));
    }
    if (err.size() < 2) return;
    const std::vector<double> rates = eoc(err, x);
    os << name << " " << rates.back() << "\n";
  };
  const bool use_h = cfg.mode == RunMode::manufactured ||
                     cfg.mode == RunMode::source_uniform;
  tail_rate([](const HistoryRow& r) { return r.eta; }, "eoc_eta", use_h);
  tail_rate([](const HistoryRow& r) { return r.energy_err; }, "eoc_energy",
            use_h);
  tail_rate([](const HistoryRow& r) { return r.l2_err; }, "eoc_l2", use_h);

  if (cfg.mode == RunMode::eigen_adaptive) {
    const LebResult bound = leb(last.lambda_h, cfg.sigma, last.hmax);
    os << "final_lambda_h " << last.lambda_h << "\n";
    os << "final_leb " << last.leb << "\n";
    os << "alpha " << bound.alpha << "\n";
    os << "beta " << bound.beta << "\n";
  }
  os << "wall_seconds " << elapsed << "\n";
}

}  // namespace hho
