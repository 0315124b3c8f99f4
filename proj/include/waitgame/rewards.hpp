#pragma once

// Consensus-layer reward quantities (integer gwei arithmetic) and the
// MEV-versus-proposal reward comparison.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "waitgame/common.hpp"

namespace waitgame::rewards {

struct FlagSpec {
  std::string name;
  std::uint64_t weight = 0;
  std::uint64_t denominator = 64;
};

struct RewardParams {
  std::uint64_t base_reward_factor = 64;
  std::vector<FlagSpec> flags;

  /// Beacon-chain timely source/target/head weights (14, 26, 14) over 64.
  /// Conventional defaults, shipped as data.
  static RewardParams consensus_defaults();
  void validate() const;
};

struct BalanceState {
  Gwei effective_balance_gwei = 0;
  Gwei active_balance_gwei = 0;
  Gwei attestation_balance_gwei = 0;
};

/// floor(sqrt(n)).
std::uint64_t integer_sqrt(std::uint64_t n) noexcept;

/// floor(effective * factor / isqrt(active)).
Gwei base_reward(Gwei effective_balance_gwei, Gwei active_balance_gwei,
                 const RewardParams& params = {});

/// floor(weight * base * attestation / (denominator * active)).
Gwei flag_reward(std::uint64_t flag_weight, std::uint64_t weight_denominator,
                 Gwei base_reward_gwei, Gwei attestation_balance_gwei, Gwei active_balance_gwei);

Gwei attestation_reward(std::span<const Gwei> flag_rewards);

/// base_reward then one flag_reward per configured flag.
std::vector<Gwei> flag_rewards(const BalanceState& balances, const RewardParams& params);

struct BlockReward {
  std::uint64_t epoch = 0;
  std::uint64_t slot = 0;
  double mev_eth = 0.0;
  double proposal_eth = 0.0;
};

struct EpochMedians {
  std::uint64_t epoch = 0;
  std::size_t blocks = 0;
  double median_mev_eth = 0.0;
  double median_proposal_eth = 0.0;
};

struct RewardComparison {
  std::vector<EpochMedians> epochs;  // ascending epoch
  std::optional<double> median_mev_eth;
  std::optional<double> median_proposal_eth;
  std::optional<double> median_difference_eth;  // median_mev - median_proposal
  std::optional<double> mev_share_of_total;
};

RewardComparison compare_rewards(std::span<const BlockReward> per_block);

}  // namespace waitgame::rewards
