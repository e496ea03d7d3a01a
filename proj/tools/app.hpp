#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "esgain/averaging.hpp"
#include "esgain/contraction.hpp"
#include "esgain/error.hpp"
#include "esgain/metaopt.hpp"
#include "esgain/schemes.hpp"
#include "esgain/sim.hpp"
#include "json.hpp"

namespace esgain::app {

inline constexpr const char* kToolVersion = "0.1.0";

/// Config or validation problem; the CLI maps it to exit status 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct SchemeBlock {
  SchemeInstance instance;
  std::string h_text;
  int avg_order = 2;
  TransformConvention convention = TransformConvention::ZeroMean;
};

struct LedgerBlock {
  Domain domain;
  int order = 3;
  LedgerOptions options;
  std::vector<double> norm_overrides;
  std::optional<double> kappa_override;
};

struct TuningBlock {
  std::string method = "auto";
  int strategy = 3;
  double delta = 0.02, delta1 = 0.01, delta2 = 0.01;
  int m = 1, n = 1;
  bool delta2_uses_h1 = false;
  double remainder_safety = 2.0;
  GridOptions grid;
  FilteredTuningOptions filtered;
  ConsistencyOptions consistency;
  std::optional<double> consistency_x0;
  std::optional<int> consistency_order;
};

struct SimBlock {
  std::optional<double> dt;
  double horizon_periods = 300.0;
  std::vector<double> x0;
  std::size_t stride = 1;
  std::optional<double> band;
  std::vector<double> x_star;
};

struct PerfMapBlock {
  double a_lo = 0.02, a_hi = 1.0;
  double p_lo = 0.1, p_hi = 10.0;
  std::size_t a_points = 20, p_points = 20;
  PerfMapOptions options;
};

struct RunConfig {
  nlohmann::json raw;
  std::string hash;
  std::optional<SchemeBlock> scheme;
  LedgerBlock ledger;
  TuningBlock tuning;
  SimBlock sim;
  PerfMapBlock perfmap;
  std::filesystem::path out_dir = ".";
};

/// 64-bit FNV-1a of the canonical (key-sorted, compact) JSON dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& j);

RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

/// JSON text with every floating-point number printed as %.17g.
std::string dump_json(const nlohmann::json& j, int indent = 2);

struct RunOptions {
  std::optional<std::filesystem::path> out_dir;
  unsigned threads = 0;
  bool verbose = false;
};

/// Runs one subcommand and writes its artifacts. Returns the exit status for
/// completed runs (0, or 1 when verify finds a failing check); errors
/// propagate as exceptions.
int run_command(const std::string& command, RunConfig& cfg, const RunOptions& opts,
                std::ostream& log);

/// Exit status and error JSON for an exception escaping run_command.
int exit_code_for(const std::exception& e);
nlohmann::json error_json(const std::exception& e);

}  // namespace esgain::app
