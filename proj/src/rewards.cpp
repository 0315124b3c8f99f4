#include "waitgame/rewards.hpp"

#include <limits>
#include <map>
#include <stdexcept>

#include <fmt/format.h>

namespace waitgame::rewards {

using u128 = unsigned __int128;

RewardParams RewardParams::consensus_defaults() {
  RewardParams p;
  p.flags = {{"timely_source", 14, 64}, {"timely_target", 26, 64}, {"timely_head", 14, 64}};
  return p;
}

void RewardParams::validate() const {
  if (base_reward_factor == 0) throw std::invalid_argument("base_reward_factor must be > 0");
  for (const auto& f : flags) {
    if (f.denominator == 0) {
      throw std::invalid_argument(fmt::format("flag '{}': weight_denominator must be > 0", f.name));
    }
  }
}

std::uint64_t integer_sqrt(std::uint64_t n) noexcept {
  // Newton iteration from the consensus specs, done in 128 bits so x + 1
  // cannot overflow.
  u128 x = n;
  u128 y = (x + 1) / 2;
  while (y < x) {
    x = y;
    y = (x + n / x) / 2;
  }
  return static_cast<std::uint64_t>(x);
}

Gwei base_reward(Gwei effective_balance_gwei, Gwei active_balance_gwei,
                 const RewardParams& params) {
  if (active_balance_gwei == 0) throw std::invalid_argument("base_reward: active balance is zero");
  if (params.base_reward_factor == 0) throw std::invalid_argument("base_reward: factor is zero");
  const u128 num = static_cast<u128>(effective_balance_gwei) * params.base_reward_factor;
  const u128 q = num / integer_sqrt(active_balance_gwei);
  if (q > std::numeric_limits<Gwei>::max()) throw std::overflow_error("base_reward overflow");
  return static_cast<Gwei>(q);
}

Gwei flag_reward(std::uint64_t flag_weight, std::uint64_t weight_denominator,
                 Gwei base_reward_gwei, Gwei attestation_balance_gwei, Gwei active_balance_gwei) {
  if (weight_denominator == 0 || active_balance_gwei == 0) {
    throw std::invalid_argument("flag_reward: zero denominator");
  }
  // weight * base fits in 128 bits trivially; the product with the
  // attestation balance needs a headroom check.
  const u128 wb = static_cast<u128>(flag_weight) * base_reward_gwei;
  if (attestation_balance_gwei != 0 &&
      wb > std::numeric_limits<u128>::max() / attestation_balance_gwei) {
    throw std::overflow_error("flag_reward overflow");
  }
  const u128 num = wb * attestation_balance_gwei;
  const u128 den = static_cast<u128>(weight_denominator) * active_balance_gwei;
  const u128 q = num / den;
  if (q > std::numeric_limits<Gwei>::max()) throw std::overflow_error("flag_reward overflow");
  return static_cast<Gwei>(q);
}

Gwei attestation_reward(std::span<const Gwei> flag_rewards) {
  Gwei total = 0;
  for (auto r : flag_rewards) {
    if (r > std::numeric_limits<Gwei>::max() - total) {
      throw std::overflow_error("attestation_reward overflow");
    }
    total += r;
  }
  return total;
}

std::vector<Gwei> flag_rewards(const BalanceState& balances, const RewardParams& params) {
  params.validate();
  const Gwei base = base_reward(balances.effective_balance_gwei, balances.active_balance_gwei, params);
  std::vector<Gwei> out;
  out.reserve(params.flags.size());
  for (const auto& f : params.flags) {
    out.push_back(flag_reward(f.weight, f.denominator, base, balances.attestation_balance_gwei,
                              balances.active_balance_gwei));
  }
  return out;
}

RewardComparison compare_rewards(std::span<const BlockReward> per_block) {
  RewardComparison out;
  std::map<std::uint64_t, std::pair<std::vector<double>, std::vector<double>>> by_epoch;
  std::vector<double> all_mev, all_prop;
  double sum_mev = 0.0, sum_total = 0.0;
  for (const auto& b : per_block) {
    by_epoch[b.epoch].first.push_back(b.mev_eth);
    by_epoch[b.epoch].second.push_back(b.proposal_eth);
    all_mev.push_back(b.mev_eth);
    all_prop.push_back(b.proposal_eth);
    sum_mev += b.mev_eth;
    sum_total += b.mev_eth + b.proposal_eth;
  }
  for (auto& [epoch, v] : by_epoch) {
    EpochMedians e;
    e.epoch = epoch;
    e.blocks = v.first.size();
    e.median_mev_eth = *median(v.first);
    e.median_proposal_eth = *median(v.second);
    out.epochs.push_back(e);
  }
  out.median_mev_eth = median(std::move(all_mev));
  out.median_proposal_eth = median(std::move(all_prop));
  if (out.median_mev_eth && out.median_proposal_eth) {
    out.median_difference_eth = *out.median_mev_eth - *out.median_proposal_eth;
  }
  if (sum_total > 0.0) out.mev_share_of_total = sum_mev / sum_total;
  return out;
}

}  // namespace waitgame::rewards
