#include "waitgame/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include <fmt/format.h>

namespace waitgame::analytics {

namespace {

std::vector<std::size_t> dense_codes(std::span<const std::uint64_t> ids, std::size_t& groups) {
  std::unordered_map<std::uint64_t, std::size_t> index;
  std::vector<std::size_t> codes(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    codes[i] = index.try_emplace(ids[i], index.size()).first->second;
  }
  groups = index.size();
  return codes;
}

// Subtracts per-group means in place; returns the largest |mean| removed.
double demean(std::vector<double>& r, const std::vector<std::size_t>& codes,
              const std::vector<double>& counts, std::vector<double>& sums) {
  std::fill(sums.begin(), sums.end(), 0.0);
  for (std::size_t i = 0; i < r.size(); ++i) sums[codes[i]] += r[i];
  double largest = 0.0;
  for (std::size_t g = 0; g < sums.size(); ++g) {
    sums[g] /= counts[g];
    largest = std::max(largest, std::abs(sums[g]));
  }
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= sums[codes[i]];
  return largest;
}

}  // namespace

std::vector<double> residualize(std::span<const double> values,
                                std::span<const std::uint64_t> slot_ids,
                                std::span<const std::uint64_t> builder_ids,
                                ResidualizeOptions options) {
  if (values.size() != slot_ids.size() || values.size() != builder_ids.size()) {
    throw std::invalid_argument(fmt::format("residualize: length mismatch ({}, {}, {})",
                                            values.size(), slot_ids.size(), builder_ids.size()));
  }
  if (values.empty()) throw std::invalid_argument("residualize: empty input");

  std::size_t n_slots = 0, n_builders = 0;
  const auto slot_codes = dense_codes(slot_ids, n_slots);
  const auto builder_codes = dense_codes(builder_ids, n_builders);
  std::vector<double> slot_counts(n_slots, 0.0), builder_counts(n_builders, 0.0);
  for (auto c : slot_codes) slot_counts[c] += 1.0;
  for (auto c : builder_codes) builder_counts[c] += 1.0;

  std::vector<double> r(values.begin(), values.end());
  std::vector<double> slot_sums(n_slots), builder_sums(n_builders);
  for (int it = 0; it < options.max_iterations; ++it) {
    const double a = demean(r, slot_codes, slot_counts, slot_sums);
    const double b = demean(r, builder_codes, builder_counts, builder_sums);
    if (std::max(a, b) < options.tolerance) break;
  }
  return r;
}

std::vector<std::uint64_t> encode_labels(std::span<const std::string> labels) {
  std::unordered_map<std::string, std::uint64_t> index;
  std::vector<std::uint64_t> codes(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    codes[i] = index.try_emplace(labels[i], index.size()).first->second;
  }
  return codes;
}

RegressionResult fit_marginal_value(std::span<const double> arrival_ms,
                                    std::span<const double> residuals) {
  if (arrival_ms.size() != residuals.size()) {
    throw std::invalid_argument("fit_marginal_value: length mismatch");
  }
  const std::size_t n = arrival_ms.size();
  if (n < 2) throw std::invalid_argument("fit_marginal_value: need at least two samples");

  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += arrival_ms[i];
    my += residuals[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = arrival_ms[i] - mx;
    const double dy = residuals[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_marginal_value: arrival times have zero variance");

  RegressionResult out;
  out.n = n;
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  out.r_squared = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 0.0;
  return out;
}

RegressionResult marginal_value_of_time(std::span<const BidRecord> bids) {
  std::vector<double> values, times;
  std::vector<std::uint64_t> slots;
  std::vector<std::string> builders;
  values.reserve(bids.size());
  for (const auto& b : bids) {
    values.push_back(relaydata::wei_to_eth(b.value_wei));
    times.push_back(static_cast<double>(b.arrival_ms));
    slots.push_back(b.slot);
    builders.push_back(b.builder_id);
  }
  const auto builder_codes = encode_labels(builders);
  const auto resid = residualize(values, slots, builder_codes);
  // Within estimator: time gets the same two-way demeaning as value.
  const auto resid_times = residualize(times, slots, builder_codes);
  return fit_marginal_value(resid_times, resid);
}

// ---------------------------------------------------------------------------

const char* to_string(WinnerClass c) {
  switch (c) {
    case WinnerClass::Early: return "EARLY";
    case WinnerClass::Late: return "LATE";
    case WinnerClass::Highest: return "HIGHEST";
  }
  return "?";
}

namespace {

bool ranks_higher(const BidRecord& a, const BidRecord& b) {
  if (a.value_wei != b.value_wei) return a.value_wei > b.value_wei;
  if (a.arrival_ms != b.arrival_ms) return a.arrival_ms < b.arrival_ms;
  return a.block_hash < b.block_hash;
}

}  // namespace

WinnerTiming classify_winner(const BidRecord& winner, std::span<const BidRecord> slot_bids) {
  const auto key = relaydata::key_of(winner);
  const BidRecord* member = nullptr;
  const BidRecord* highest = nullptr;
  for (const auto& b : slot_bids) {
    if (!member && relaydata::key_of(b) == key) member = &b;
    if (!highest || ranks_higher(b, *highest)) highest = &b;
  }
  if (!member) {
    throw std::invalid_argument(
        fmt::format("classify_winner: winner {} not among bids of slot {}", winner.block_hash,
                    winner.slot));
  }

  WinnerTiming t;
  t.slot = winner.slot;
  t.winner_relay = winner.relay_id;
  t.winner_arrival_ms = winner.arrival_ms;
  t.highest_arrival_ms = highest->arrival_ms;
  t.delta_t_ms = highest->arrival_ms - winner.arrival_ms;
  t.winner_value_wei = winner.value_wei;
  t.highest_value_wei = highest->value_wei;
  t.delta_v_wei = highest->value_wei - winner.value_wei;
  t.delta_v_eth = relaydata::wei_to_eth(t.delta_v_wei);
  if (relaydata::key_of(*highest) == key) {
    t.cls = WinnerClass::Highest;
  } else if (winner.arrival_ms < highest->arrival_ms) {
    t.cls = WinnerClass::Early;
  } else {
    t.cls = WinnerClass::Late;
  }
  return t;
}

namespace {

std::map<std::uint64_t, std::vector<BidRecord>> bids_by_slot(std::span<const BidRecord> bids) {
  std::map<std::uint64_t, std::vector<BidRecord>> out;
  for (const auto& b : bids) out[b.slot].push_back(b);
  return out;
}

const BidRecord* earliest_with_hash(const std::vector<BidRecord>& slot_bids,
                                    const std::string& hash, const std::string* relay = nullptr) {
  const BidRecord* best = nullptr;
  for (const auto& b : slot_bids) {
    if (b.block_hash != hash) continue;
    if (relay && b.relay_id != *relay) continue;
    if (!best || b.arrival_ms < best->arrival_ms) best = &b;
  }
  return best;
}

}  // namespace

std::vector<WinnerTiming> classify_winners(std::span<const DeliveredPayload> payloads,
                                           std::span<const BidRecord> bids) {
  const auto by_slot = bids_by_slot(bids);
  std::map<std::pair<std::uint64_t, std::string>, bool> done;
  std::vector<WinnerTiming> out;
  for (const auto& p : payloads) {
    if (!done.try_emplace({p.slot, p.block_hash}, true).second) continue;
    auto it = by_slot.find(p.slot);
    if (it == by_slot.end()) continue;
    const BidRecord* winner = earliest_with_hash(it->second, p.block_hash);
    if (!winner) continue;
    out.push_back(classify_winner(*winner, it->second));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const WinnerTiming& a, const WinnerTiming& b) { return a.slot < b.slot; });
  return out;
}

UnrealizedSummary unrealized_value(std::span<const WinnerTiming> timings) {
  UnrealizedSummary s;
  Wei unrealized = 0, realizable = 0;
  std::vector<double> gaps;
  for (const auto& t : timings) {
    switch (t.cls) {
      case WinnerClass::Highest:
        ++s.highest_count;
        continue;
      case WinnerClass::Early:
        ++s.early_count;
        unrealized += t.delta_v_wei;
        break;
      case WinnerClass::Late:
        ++s.late_count;
        realizable += t.delta_v_wei;
        break;
    }
    gaps.push_back(static_cast<double>(t.delta_t_ms));
  }
  s.unrealized_eth = relaydata::wei_to_eth(unrealized);
  s.realizable_eth = relaydata::wei_to_eth(realizable);
  s.median_delta_t_ms = median(std::move(gaps));
  return s;
}

std::optional<double> growth_from_first_bid_pct(const BidRecord& winner,
                                                std::span<const BidRecord> slot_bids) {
  const BidRecord* first = nullptr;
  for (const auto& b : slot_bids) {
    if (b.slot != winner.slot) continue;
    if (!first || b.arrival_ms < first->arrival_ms) first = &b;
  }
  if (!first || first->value_wei == 0) return std::nullopt;
  const double w = relaydata::wei_to_eth(winner.value_wei);
  const double f = relaydata::wei_to_eth(first->value_wei);
  return (w / f - 1.0) * 100.0;
}

std::vector<RelayWinnerStats> relay_winner_stats(std::span<const DeliveredPayload> payloads,
                                                 std::span<const BidRecord> bids) {
  const auto by_slot = bids_by_slot(bids);
  struct Acc {
    std::size_t delivered = 0;
    std::size_t bids = 0;
    std::map<std::uint64_t, bool> slots;
    std::vector<double> arrivals, values;
  };
  std::map<std::string, Acc> acc;
  for (const auto& b : bids) {
    auto& a = acc[b.relay_id];
    ++a.bids;
    a.slots[b.slot] = true;
  }
  for (const auto& p : payloads) {
    auto& a = acc[p.relay_id];
    ++a.delivered;
    a.values.push_back(relaydata::wei_to_eth(p.value_wei));
    auto it = by_slot.find(p.slot);
    if (it == by_slot.end()) continue;
    const BidRecord* w = earliest_with_hash(it->second, p.block_hash, &p.relay_id);
    if (!w) w = earliest_with_hash(it->second, p.block_hash);
    if (w) a.arrivals.push_back(static_cast<double>(w->arrival_ms));
  }
  std::vector<RelayWinnerStats> out;
  for (auto& [relay, a] : acc) {
    RelayWinnerStats s;
    s.relay_id = relay;
    s.blocks_delivered = a.delivered;
    s.avg_bids_per_slot =
        a.slots.empty() ? 0.0 : static_cast<double>(a.bids) / static_cast<double>(a.slots.size());
    s.median_winner_arrival_ms = median(std::move(a.arrivals));
    s.median_winner_value_eth = median(std::move(a.values));
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------

double attestation_share(Gwei block_weight_gwei, Gwei committee_weight_gwei) {
  if (committee_weight_gwei == 0) {
    throw std::invalid_argument("attestation_share: committee weight is zero");
  }
  const double share =
      static_cast<double>(block_weight_gwei) / static_cast<double>(committee_weight_gwei);
  return std::clamp(share, 0.0, 1.0);
}

double attestation_share_from_counts(std::uint64_t attestor_count, std::uint64_t committee_size) {
  return attestation_share(attestor_count * kUniformEffectiveBalanceGwei,
                           committee_size * kUniformEffectiveBalanceGwei);
}

// ---------------------------------------------------------------------------

BlockStatus parse_block_status(std::string_view text) {
  if (text == "canonical") return BlockStatus::Canonical;
  if (text == "orphaned") return BlockStatus::Orphaned;
  if (text == "missed") return BlockStatus::Missed;
  throw std::invalid_argument(fmt::format("unknown block status '{}'", text));
}

OrphanReport orphan_comparison(std::span<const BlockObservation> blocks) {
  OrphanReport r;
  r.slots = blocks.size();
  std::vector<double> orphaned, canonical;
  for (const auto& b : blocks) {
    switch (b.status) {
      case BlockStatus::Orphaned:
        ++r.orphaned_count;
        if (b.arrival_ms) {
          orphaned.push_back(static_cast<double>(*b.arrival_ms));
          if (!r.earliest_orphaned_arrival_ms || *b.arrival_ms < *r.earliest_orphaned_arrival_ms) {
            r.earliest_orphaned_arrival_ms = *b.arrival_ms;
          }
        }
        break;
      case BlockStatus::Missed:
        ++r.missed_count;
        break;
      case BlockStatus::Canonical:
        if (b.arrival_ms) canonical.push_back(static_cast<double>(*b.arrival_ms));
        break;
    }
  }
  r.orphan_fraction =
      r.slots ? static_cast<double>(r.orphaned_count) / static_cast<double>(r.slots) : 0.0;
  r.median_orphaned_arrival_ms = median(orphaned);
  r.median_nonorphaned_arrival_ms = median(canonical);
  for (double a : canonical) {
    if (r.median_orphaned_arrival_ms && a > *r.median_orphaned_arrival_ms) ++r.late_nonorphaned_count;
    if (r.earliest_orphaned_arrival_ms &&
        a >= static_cast<double>(*r.earliest_orphaned_arrival_ms)) {
      ++r.nonorphaned_after_earliest_orphan;
    }
  }
  return r;
}

}  // namespace waitgame::analytics
