#pragma once

// Empirical analyses over deduplicated bid data: value-of-time regression,
// winner timing, attestation shares and orphaned-block timing.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "waitgame/common.hpp"
#include "waitgame/relaydata.hpp"

namespace waitgame::analytics {

using relaydata::BidRecord;
using relaydata::DeliveredPayload;
using relaydata::Wei;

inline constexpr double kReorgShareThreshold = 0.40;

// --- value of time ---------------------------------------------------------

struct ResidualizeOptions {
  double tolerance = 1e-12;
  int max_iterations = 1000;
};

/// Two-way fixed-effect demeaning by alternating projections: subtract slot
/// group means, then builder group means, until the largest absolute change
/// in one sweep is below `tolerance`.
std::vector<double> residualize(std::span<const double> values,
                                std::span<const std::uint64_t> slot_ids,
                                std::span<const std::uint64_t> builder_ids,
                                ResidualizeOptions options = {});

/// Dense codes 0..k-1 in first-appearance order.
std::vector<std::uint64_t> encode_labels(std::span<const std::string> labels);

struct RegressionResult {
  double slope = 0.0;      // ETH per ms
  double intercept = 0.0;  // ETH
  std::size_t n = 0;
  double r_squared = 0.0;
};

/// OLS of `residuals` on `arrival_ms`. Throws std::invalid_argument for
/// mismatched lengths, n < 2 or zero variance in time.
RegressionResult fit_marginal_value(std::span<const double> arrival_ms,
                                    std::span<const double> residuals);

/// Two-way fixed-effect slope of bid value (ETH) on arrival time: value and
/// arrival are both residualized by slot and builder, then fitted.
RegressionResult marginal_value_of_time(std::span<const BidRecord> bids);

// --- winners -----------------------------------------------------------------

enum class WinnerClass { Early, Late, Highest };

const char* to_string(WinnerClass c);

struct WinnerTiming {
  std::uint64_t slot = 0;
  std::string winner_relay;
  std::int64_t winner_arrival_ms = 0;
  std::int64_t highest_arrival_ms = 0;
  std::int64_t delta_t_ms = 0;  // highest - winner
  Wei winner_value_wei = 0;
  Wei highest_value_wei = 0;
  Wei delta_v_wei = 0;  // highest - winner, never negative
  double delta_v_eth = 0.0;
  WinnerClass cls = WinnerClass::Highest;
};

/// Highest bid = max value_wei, ties to earliest arrival then smallest
/// block_hash. Throws std::invalid_argument if `winner` (by DedupKey) is not
/// among `slot_bids`.
WinnerTiming classify_winner(const BidRecord& winner, std::span<const BidRecord> slot_bids);

/// Joins each delivered payload to the bids of its slot by block_hash (the
/// earliest matching record is the winner) and classifies it. Payloads of
/// the same block delivered by several relays are counted once. Slots with
/// no matching bid are skipped.
std::vector<WinnerTiming> classify_winners(std::span<const DeliveredPayload> payloads,
                                           std::span<const BidRecord> bids);

struct UnrealizedSummary {
  double unrealized_eth = 0.0;  // sum of delta_v over EARLY winners
  double realizable_eth = 0.0;  // sum of delta_v over LATE winners
  std::optional<double> median_delta_t_ms;  // over non-HIGHEST winners
  std::size_t early_count = 0;
  std::size_t late_count = 0;
  std::size_t highest_count = 0;
};

UnrealizedSummary unrealized_value(std::span<const WinnerTiming> timings);

/// Relative growth of the winning bid over the slot's earliest bid, in
/// percent. nullopt when the earliest bid has zero value.
std::optional<double> growth_from_first_bid_pct(const BidRecord& winner,
                                                std::span<const BidRecord> slot_bids);

/// Per-relay delivery summary (one row per relay, ordered by name).
struct RelayWinnerStats {
  std::string relay_id;
  std::size_t blocks_delivered = 0;
  double avg_bids_per_slot = 0.0;
  std::optional<double> median_winner_arrival_ms;
  std::optional<double> median_winner_value_eth;
};

std::vector<RelayWinnerStats> relay_winner_stats(std::span<const DeliveredPayload> payloads,
                                                 std::span<const BidRecord> bids);

// --- attestation shares ------------------------------------------------------

double attestation_share(Gwei block_weight_gwei, Gwei committee_weight_gwei);

/// share from attestor counts under a uniform 32 ETH effective balance.
double attestation_share_from_counts(std::uint64_t attestor_count, std::uint64_t committee_size);

constexpr bool reorg_vulnerable(double share) noexcept { return share < kReorgShareThreshold; }

struct AttestationShareRecord {
  std::uint64_t slot = 0;
  std::string block_root;
  double share = 0.0;
  std::optional<std::int64_t> winner_arrival_ms;
  bool vulnerable = false;
};

// --- orphaned blocks -----------------------------------------------------------

enum class BlockStatus { Canonical, Orphaned, Missed };

BlockStatus parse_block_status(std::string_view text);

struct BlockObservation {
  std::uint64_t slot = 0;
  std::optional<std::int64_t> arrival_ms;
  BlockStatus status = BlockStatus::Canonical;
};

struct OrphanReport {
  std::size_t slots = 0;
  std::size_t orphaned_count = 0;
  std::size_t missed_count = 0;
  double orphan_fraction = 0.0;  // orphaned / slots
  std::optional<double> median_orphaned_arrival_ms;
  std::optional<double> median_nonorphaned_arrival_ms;
  std::size_t late_nonorphaned_count = 0;  // non-orphaned later than the orphaned median
  std::optional<std::int64_t> earliest_orphaned_arrival_ms;
  std::size_t nonorphaned_after_earliest_orphan = 0;
};

OrphanReport orphan_comparison(std::span<const BlockObservation> blocks);

}  // namespace waitgame::analytics
