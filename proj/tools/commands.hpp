#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "waitgame/waitinggame.hpp"

namespace waitgame::cli {

/// Bad flags or configuration. Exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable or malformed input data. Exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CommonArgs {
  std::string config;  // empty: built-in defaults only
  std::optional<std::uint64_t> seed;
  std::string out;
  bool verbose = false;
};

struct IngestArgs {
  CommonArgs common;
  std::vector<std::string> bids;       // relay=path
  std::vector<std::string> delivered;  // relay=path
  std::optional<std::int64_t> genesis_ms;
  std::string fields;  // JSON file with field-name overrides
};

struct AnalyzeArgs {
  CommonArgs common;
  std::string analysis;  // regress | winners | shares | orphans | rewards
  std::string bids;
  std::string delivered;
  std::string input;
};

struct SimArgs {
  CommonArgs common;
  std::optional<double> x_d;
  std::optional<double> t_d;
  std::optional<double> duration;
  std::optional<std::size_t> seeds;
  std::optional<unsigned> threads;
  std::string blocks_out;
  std::string trace_out;
};

/// Everything `sim run` / `sim sweep` read from a config document.
struct SimSettings {
  waitinggame::SimConfig config;
  std::size_t seeds = 20;
  waitinggame::SweepGrid grid = waitinggame::SweepGrid::defaults();
  unsigned threads = 0;

  /// Keys: n, mean_degree, topology_seed, tau_block, tau_attestation,
  /// duration, x_d, t_d, seed, seeds, threads, lambda_eth_per_ms,
  /// base_value_eth, proposer_boost, grid {x_d: [...], t_d: [...]}.
  /// Unknown keys and wrongly typed values raise UsageError naming the key.
  static SimSettings from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

void cmd_ingest(const IngestArgs& args);
void cmd_analyze(const AnalyzeArgs& args);
void cmd_sim_run(const SimArgs& args);
void cmd_sim_sweep(const SimArgs& args);

std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// Path with `suffix` inserted before the extension: a/b.csv + "_x" -> a/b_x.csv.
std::string sibling_path(const std::string& path, std::string_view suffix);

}  // namespace waitgame::cli
