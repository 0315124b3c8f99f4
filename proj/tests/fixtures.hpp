#pragma once

// Synthetic data generators shared by the unit and acceptance suites.

#include <cstdint>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "oracles.hpp"
#include "waitgame/common.hpp"
#include "waitgame/consensus.hpp"
#include "waitgame/relaydata.hpp"

namespace fixtures {

using waitgame::Rng;
using waitgame::relaydata::BidRecord;
using waitgame::relaydata::Wei;

inline std::string random_hash(Rng& rng) {
  return fmt::format("0x{:016x}{:016x}{:016x}{:016x}", rng.next(), rng.next(), rng.next(),
                     rng.next());
}

inline std::string hash_from(std::uint64_t n) { return fmt::format("0x{:064x}", n); }

/// Bids from `relays` over consecutive slots. About `dup_rate` of records
/// repeat an earlier key (same relay or another one) with a fresh arrival;
/// some repeats reuse the exact arrival to exercise first-read tie-breaking.
inline std::vector<BidRecord> planted_bids(std::uint64_t seed, std::size_t count,
                                           const std::vector<std::string>& relays,
                                           double dup_rate, std::size_t slots = 20) {
  Rng rng(seed);
  std::vector<BidRecord> out;
  out.reserve(count);
  const std::vector<std::string> builders{"b-alpha", "b-beta", "b-gamma", "b-delta"};
  while (out.size() < count) {
    if (!out.empty() && rng.uniform01() < dup_rate) {
      BidRecord dup = out[rng.below(out.size())];
      dup.relay_id = relays[rng.below(relays.size())];
      if (rng.uniform01() >= 0.2) dup.arrival_ms = static_cast<std::int64_t>(rng.below(24000)) - 12000;
      out.push_back(std::move(dup));
      continue;
    }
    BidRecord b;
    b.slot = 6087501 + rng.below(slots);
    b.relay_id = relays[rng.below(relays.size())];
    b.builder_id = builders[rng.below(builders.size())];
    b.block_hash = random_hash(rng);
    b.parent_hash = hash_from(b.slot);
    b.value_wei = Wei(rng.below(60'000'000)) * Wei(1'000'000'000);
    b.num_transactions = rng.below(300);
    b.arrival_ms = static_cast<std::int64_t>(rng.below(24000)) - 12000;
    out.push_back(std::move(b));
  }
  return out;
}

inline std::vector<BidRecord> only_relay(const std::vector<BidRecord>& bids,
                                         const std::string& relay) {
  std::vector<BidRecord> out;
  for (const auto& b : bids) {
    if (b.relay_id == relay) out.push_back(b);
  }
  return out;
}

/// Bid values (ETH) = slot effect + builder effect + slope * arrival + noise.
struct RegressionFixture {
  std::vector<double> values;
  std::vector<double> arrival_ms;
  std::vector<std::uint64_t> slots;
  std::vector<std::uint64_t> builders;
  std::vector<double> noise;
};

inline RegressionFixture regression_fixture(std::uint64_t seed, std::size_t n, double slope,
                                            double noise_sd, std::size_t n_slots = 500,
                                            std::size_t n_builders = 30) {
  Rng rng(seed);
  std::vector<double> slot_fx(n_slots), builder_fx(n_builders);
  for (auto& s : slot_fx) s = 0.05 * rng.uniform01();
  for (auto& b : builder_fx) b = 0.01 * rng.normal();
  RegressionFixture f;
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = rng.below(n_slots);
    const auto b = rng.below(n_builders);
    const double t = static_cast<double>(rng.below(13000)) - 10000.0;
    const double e = noise_sd * rng.normal();
    f.slots.push_back(s);
    f.builders.push_back(b);
    f.arrival_ms.push_back(t);
    f.noise.push_back(e);
    f.values.push_back(slot_fx[s] + builder_fx[b] + slope * t + e);
  }
  return f;
}

/// One slot of deduplicated bids with deliberate value ties.
inline std::vector<BidRecord> winner_slot(Rng& rng, std::uint64_t slot, std::size_t count) {
  std::vector<BidRecord> bids;
  for (std::size_t i = 0; i < count; ++i) {
    BidRecord b;
    b.slot = slot;
    b.relay_id = rng.below(2) ? "flashbots" : "ultrasound";
    b.builder_id = fmt::format("builder-{}", rng.below(5));
    b.block_hash = random_hash(rng);
    // Coarse values so that ties on value (and sometimes arrival) happen.
    b.value_wei = Wei(rng.below(8)) * Wei("10000000000000000");
    b.arrival_ms = static_cast<std::int64_t>(rng.below(40)) * 100 - 2000;
    bids.push_back(std::move(b));
  }
  return bids;
}

/// Random block tree with shuffled ids (so id order differs from insertion
/// order), random votes including some for unknown blocks, and small
/// weights so that ties happen.
struct ForkInstance {
  std::vector<waitgame::consensus::Block> blocks;  // genesis first, parents first
  std::vector<oracle::Vote> votes;
  std::vector<std::uint64_t> weights;
};

inline ForkInstance random_fork_instance(Rng& rng, std::size_t max_blocks = 50,
                                         std::size_t max_votes = 200,
                                         std::uint32_t validators = 64) {
  using waitgame::consensus::Block;
  ForkInstance f;
  f.blocks.push_back(waitgame::consensus::genesis_block());
  const std::size_t k = rng.below(max_blocks);  // non-genesis blocks
  std::vector<std::uint32_t> ids(k);
  for (std::size_t i = 0; i < k; ++i) ids[i] = static_cast<std::uint32_t>(i + 1);
  for (std::size_t i = k; i > 1; --i) std::swap(ids[i - 1], ids[rng.below(i)]);
  for (std::size_t i = 0; i < k; ++i) {
    const auto& parent = f.blocks[rng.below(f.blocks.size())];
    Block b;
    b.id = ids[i];
    b.parent = parent.id;
    b.slot = parent.slot + 1 + static_cast<std::int64_t>(rng.below(3));
    b.proposer = static_cast<std::uint32_t>(rng.below(validators));
    b.release_time = 12.0 * static_cast<double>(b.slot);
    f.blocks.push_back(b);
  }
  const std::size_t nv = rng.below(max_votes + 1);
  for (std::size_t i = 0; i < nv; ++i) {
    oracle::Vote v;
    v.validator = static_cast<std::uint32_t>(rng.below(validators));
    v.slot = static_cast<std::int64_t>(rng.below(30));
    v.target = rng.below(20) == 0 ? static_cast<std::uint32_t>(1000 + rng.below(5))
                                  : f.blocks[rng.below(f.blocks.size())].id;
    f.votes.push_back(v);
  }
  f.weights.resize(validators);
  for (auto& w : f.weights) w = 1 + rng.below(3);
  return f;
}

}  // namespace fixtures
