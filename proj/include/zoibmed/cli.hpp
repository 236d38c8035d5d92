#pragma once

// Command-line front end. Configuration is a plain-text file of
// `key = value` lines ('#' starts a comment); every key can also be given
// as a flag `--key value`, and flags win over the file.

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "zoibmed/ingest.hpp"

namespace zoibmed::cli {

/// Keys understood in config files and as flags, with one-line help.
const std::vector<std::pair<std::string, std::string>>& config_keys();

using KeyValues = std::map<std::string, std::string>;

/// Parses `key = value` lines. Throws DataError on malformed lines or
/// unknown keys (with the line number).
KeyValues parse_config(const std::string& text);

struct RunConfig {
  std::string input;
  IngestOptions ingest;
  ModelSpec spec;
  int K = 10;
  std::size_t B = 200;
  std::vector<double> q = {0.5};
  std::vector<double> lambdas;      // explicit grid; empty means pilot range
  std::size_t lambda_points = 9;    // pilot-range grid size
  double rho = 0.95;
  std::string scale = "both";       // logit | linear | both
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::string output = ".";
  std::vector<std::string> formats = {"csv", "json"};
  bool stratify = false;
  bool original_scale = true;
  bool percent = false;
  // simulate
  std::string pool;
  std::string model;
  std::vector<double> xi_m = {0.0, 1.0};
  std::vector<double> xi_y = {1.0, 1.0};
  std::size_t N = 899;
  std::size_t reps = 200;
  std::size_t truth_mc = 90799;
  // check
  bool check_quick = false;
};

/// Builds a RunConfig from merged key-values. `env_seed` is the default seed
/// when the `seed` key is absent.
RunConfig make_config(const KeyValues& kv, const std::string& env_seed = {});

/// Runs the program; returns the exit status (0 ok, 1 error, 2 usage,
/// 3 failed check).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace zoibmed::cli
