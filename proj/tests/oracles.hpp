#pragma once

// Reference implementations used to check the library. Each one is written
// the slow, obvious way and shares no code with the implementation it checks.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "waitgame/analytics.hpp"
#include "waitgame/consensus.hpp"
#include "waitgame/relaydata.hpp"

namespace oracle {

using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;
using waitgame::relaydata::BidRecord;

// --- dedup -------------------------------------------------------------------

/// A record survives iff no record with the same key arrived earlier, or at
/// the same time but earlier in the input. Pairwise scan within each slot.
inline std::vector<BidRecord> dedup(const std::vector<BidRecord>& bids) {
  std::map<std::uint64_t, std::vector<std::size_t>> by_slot;
  for (std::size_t i = 0; i < bids.size(); ++i) by_slot[bids[i].slot].push_back(i);
  auto same_key = [&](std::size_t a, std::size_t b) {
    return bids[a].builder_id == bids[b].builder_id && bids[a].block_hash == bids[b].block_hash &&
           bids[a].value_wei == bids[b].value_wei;
  };
  std::vector<std::size_t> keep;
  for (const auto& [slot, idx] : by_slot) {
    for (auto i : idx) {
      bool dominated = false;
      for (auto j : idx) {
        if (j == i || !same_key(i, j)) continue;
        if (bids[j].arrival_ms < bids[i].arrival_ms ||
            (bids[j].arrival_ms == bids[i].arrival_ms && j < i)) {
          dominated = true;
          break;
        }
      }
      if (!dominated) keep.push_back(i);
    }
  }
  std::sort(keep.begin(), keep.end(), [&](std::size_t a, std::size_t b) {
    return std::make_pair(bids[a].arrival_ms, a) < std::make_pair(bids[b].arrival_ms, b);
  });
  std::vector<BidRecord> out;
  for (auto i : keep) out.push_back(bids[i]);
  return out;
}

inline std::size_t distinct_keys(const std::vector<BidRecord>& bids) {
  std::set<std::tuple<std::uint64_t, std::string, std::string, std::string>> keys;
  for (const auto& b : bids) keys.emplace(b.slot, b.builder_id, b.block_hash, b.value_wei.str());
  return keys.size();
}

// --- rewards -----------------------------------------------------------------

/// floor(sqrt(n)) by bisection over arbitrary-precision integers.
inline cpp_int isqrt(const cpp_int& n) {
  cpp_int lo = 0, hi = n + 1;
  while (hi - lo > 1) {
    cpp_int mid = (lo + hi) / 2;
    if (mid * mid <= n) lo = mid;
    else hi = mid;
  }
  return lo;
}

inline cpp_int floor_of(const cpp_rational& q) {
  cpp_int num = boost::multiprecision::numerator(q);
  cpp_int den = boost::multiprecision::denominator(q);
  cpp_int f = num / den;
  if (num < 0 && f * den != num) f -= 1;
  return f;
}

inline std::uint64_t base_reward(std::uint64_t effective, std::uint64_t active,
                                 std::uint64_t factor) {
  cpp_rational q(cpp_int(effective) * factor, isqrt(cpp_int(active)));
  return floor_of(q).convert_to<std::uint64_t>();
}

inline std::uint64_t flag_reward(std::uint64_t weight, std::uint64_t denominator,
                                 std::uint64_t base, std::uint64_t attesting,
                                 std::uint64_t active) {
  cpp_rational q = cpp_rational(cpp_int(weight) * base) * cpp_rational(cpp_int(attesting)) /
                   cpp_rational(cpp_int(denominator) * active);
  return floor_of(q).convert_to<std::uint64_t>();
}

// --- winners -------------------------------------------------------------------

struct WinnerOracle {
  std::size_t highest_index = 0;
  waitgame::analytics::WinnerClass cls{};
  cpp_int delta_v;
  std::int64_t delta_t = 0;
};

/// Scan for the bid no other bid beats on (value desc, arrival asc, hash asc).
inline WinnerOracle classify(const BidRecord& winner, const std::vector<BidRecord>& slot_bids) {
  std::size_t best = 0;
  for (std::size_t i = 0; i < slot_bids.size(); ++i) {
    bool beaten = false;
    for (std::size_t j = 0; j < slot_bids.size() && !beaten; ++j) {
      const auto& a = slot_bids[i];
      const auto& b = slot_bids[j];
      if (b.value_wei > a.value_wei) beaten = true;
      else if (b.value_wei == a.value_wei && b.arrival_ms < a.arrival_ms) beaten = true;
      else if (b.value_wei == a.value_wei && b.arrival_ms == a.arrival_ms &&
               b.block_hash < a.block_hash)
        beaten = true;
    }
    if (!beaten) {
      best = i;
      break;
    }
  }
  const auto& h = slot_bids[best];
  WinnerOracle r;
  r.highest_index = best;
  r.delta_v = h.value_wei - winner.value_wei;
  r.delta_t = h.arrival_ms - winner.arrival_ms;
  const bool same = h.slot == winner.slot && h.builder_id == winner.builder_id &&
                    h.block_hash == winner.block_hash && h.value_wei == winner.value_wei;
  if (same) r.cls = waitgame::analytics::WinnerClass::Highest;
  else if (winner.arrival_ms < h.arrival_ms) r.cls = waitgame::analytics::WinnerClass::Early;
  else r.cls = waitgame::analytics::WinnerClass::Late;
  return r;
}

// --- fork choice ---------------------------------------------------------------

struct TreeSpec {
  std::vector<waitgame::consensus::Block> blocks;  // genesis first, parents before children
};

struct Vote {
  std::uint32_t validator;
  std::int64_t slot;
  std::uint32_t target;
};

/// Latest message per validator: highest slot wins, first seen wins ties.
inline std::map<std::uint32_t, Vote> latest(const std::vector<Vote>& votes) {
  std::map<std::uint32_t, Vote> out;
  for (const auto& v : votes) {
    auto it = out.find(v.validator);
    if (it == out.end() || v.slot > it->second.slot) out[v.validator] = v;
  }
  return out;
}

/// Every leaf's path is scored by the sequence (-subtree weight, id) of its
/// non-genesis blocks; the lexicographically smallest sequence is the head.
/// A block's weight is the sum over validators whose latest target is the
/// block or one of its descendants, found by walking up from each target.
inline std::uint32_t ghost_head(const TreeSpec& t, const std::vector<Vote>& votes,
                                const std::vector<std::uint64_t>& weights) {
  const auto lm = latest(votes);
  std::map<std::uint32_t, std::uint32_t> parent;
  std::set<std::uint32_t> has_child;
  for (const auto& b : t.blocks) parent[b.id] = b.parent;
  for (const auto& b : t.blocks) {
    if (b.parent != waitgame::consensus::kNoBlock) has_child.insert(b.parent);
  }
  std::map<std::uint32_t, cpp_int> weight;
  for (const auto& [id, p] : parent) weight[id] = 0;
  for (const auto& [v, vote] : lm) {
    if (!parent.count(vote.target)) continue;
    for (auto cur = vote.target; cur != waitgame::consensus::kNoBlock; cur = parent.at(cur)) {
      weight[cur] += weights.at(v);
    }
  }
  using Score = std::vector<std::pair<cpp_int, std::uint32_t>>;
  std::optional<Score> best;
  std::uint32_t head = t.blocks.front().id;
  for (const auto& [id, p] : parent) {
    if (has_child.count(id)) continue;
    std::vector<std::uint32_t> path;
    for (auto cur = id; parent.at(cur) != waitgame::consensus::kNoBlock; cur = parent.at(cur)) {
      path.push_back(cur);
    }
    std::reverse(path.begin(), path.end());
    Score s;
    for (auto b : path) s.emplace_back(-weight[b], b);
    if (!best || s < *best) {
      best = s;
      head = id;
    }
  }
  return head;
}

}  // namespace oracle
