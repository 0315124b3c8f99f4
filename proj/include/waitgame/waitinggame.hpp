#pragma once

// Delay strategies, the MEV payoff model, per-run consensus metrics and the
// (x_d, t_d) parameter sweep.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "waitgame/common.hpp"
#include "waitgame/consensus.hpp"
#include "waitgame/simnet.hpp"

namespace waitgame::waitinggame {

using consensus::Block;
using consensus::BlockId;

struct StrategyAssignment {
  std::uint32_t n = 0;
  double x_d = 0.0;
  std::uint64_t seed = 0;
  std::vector<ValidatorIndex> delayers;  // ascending
  std::vector<std::uint8_t> mask;        // mask[v] != 0 iff v is a delayer

  bool is_delayer(ValidatorIndex v) const { return v < mask.size() && mask[v] != 0; }
};

/// round(x_d * n) validators drawn uniformly without replacement.
StrategyAssignment assign_strategies(std::uint32_t n, double x_d, std::uint64_t seed);

struct DelayPolicy {
  double t_d = 0.0;  // seconds into the slot, in [0, 12]
  void validate() const;
};

/// Honest proposers release at slot start; delayers at slot start + t_d.
double release_time(ValidatorIndex proposer, double slot_start, const DelayPolicy& policy,
                    const StrategyAssignment& assignment);

struct PayoffModel {
  double base_value_eth = 0.0;
  double lambda_eth_per_ms = 5.71e-6;
};

/// base + lambda * interval for mainchain blocks, 0 for orphaned ones.
double mev_payoff(double interval_since_previous_release_ms, const PayoffModel& model,
                  bool in_mainchain = true);

/// |M| / |B|; nullopt when no block was produced.
std::optional<double> mainchain_rate(std::size_t mainchain_blocks, std::size_t produced_blocks);

struct DelayerOrphans {
  std::size_t count = 0;           // produced blocks outside M by a delayer
  std::size_t delayer_blocks = 0;  // produced blocks by a delayer
  std::optional<double> normalized;
};

DelayerOrphans delayer_orphan_count(std::span<const Block> blocks,
                                    std::span<const std::uint8_t> in_mainchain,
                                    const StrategyAssignment& assignment);

struct SimConfig {
  std::uint32_t n = 128;
  double mean_degree = 8.0;
  std::uint64_t topology_seed = 1;
  simnet::GossipConfig gossip;
  double duration = 1000.0;
  double x_d = 0.0;
  double t_d = 0.0;
  std::uint64_t seed = 1;
  PayoffModel payoff;
  bool proposer_boost = false;

  void validate() const;
};

struct RunMetrics {
  std::optional<double> mu;
  std::size_t theta_d = 0;
  std::optional<double> theta_d_normalized;
  std::size_t blocks_total = 0;
  std::size_t blocks_mainchain = 0;
  std::size_t delayer_blocks = 0;
  double payoff_honest_eth = 0.0;
  double payoff_delayer_eth = 0.0;
  std::vector<double> validator_payoff_eth;
};

struct RunArtifacts {
  RunMetrics metrics;
  simnet::Trace trace;
  std::vector<Block> blocks;              // produced (released) blocks, genesis excluded
  std::vector<std::uint8_t> in_mainchain; // parallel to blocks
  simnet::EngineStats engine;
};

RunMetrics run_simulation(const SimConfig& config);
RunArtifacts run_simulation_detailed(const SimConfig& config, bool record_trace);
/// Same, on a caller-supplied topology (the sweep shares one).
RunArtifacts run_on_topology(const SimConfig& config, const simnet::Topology& topology,
                             bool record_trace);

/// CSV: block_id,slot,proposer,parent,release_time,in_mainchain
void write_blocks_csv(std::ostream& out, const RunArtifacts& run);

/// CSV: seed,x_d,t_d,blocks_total,blocks_mainchain,mu,theta_d,theta_d_normalized,
///      payoff_honest_eth,payoff_delayer_eth
void write_run_csv(std::ostream& out, const SimConfig& config, const RunMetrics& metrics);

// --- sweep -------------------------------------------------------------------

struct SweepGrid {
  std::vector<double> x_d;
  std::vector<double> t_d;

  /// x_d in {0, .25, .5, .75, 1}, t_d in {0..11}.
  static SweepGrid defaults();
};

struct SweepCell {
  double x_d = 0.0;
  double t_d = 0.0;
  std::size_t x_index = 0;
  std::size_t t_index = 0;
  std::size_t seed_count = 0;
  double mu_mean = 0.0, mu_std = 0.0;
  double theta_mean = 0.0, theta_std = 0.0;
  std::optional<double> theta_norm_mean;
  double payoff_honest_mean = 0.0;
  double payoff_delayer_mean = 0.0;
  std::vector<double> mu_samples;
  std::vector<double> theta_samples;
  std::optional<std::string> error;
};

struct SweepResult {
  std::vector<SweepCell> cells;  // x-major, then t
  std::size_t seeds = 0;
  std::uint64_t master_seed = 0;
  double duration = 0.0;

  const SweepCell& cell(std::size_t x_index, std::size_t t_index) const;
};

/// derive_seed({master, x_index, t_index, replicate}).
std::uint64_t replicate_seed(std::uint64_t master, std::size_t x_index, std::size_t t_index,
                             std::size_t replicate);

/// Runs `seeds` replicates per cell on one shared topology built from
/// base.topology_seed. Cells run on up to `threads` workers (0 = hardware
/// concurrency); the result does not depend on the thread count.
SweepResult sweep(const SweepGrid& grid, std::size_t seeds, const SimConfig& base,
                  unsigned threads = 0);

/// CSV: x_d,t_d,seed_count,mu_mean,mu_std,theta_mean,theta_std,theta_norm_mean,
///      payoff_honest_mean,payoff_delayer_mean
void write_sweep_csv(std::ostream& out, const SweepResult& result);

}  // namespace waitgame::waitinggame
