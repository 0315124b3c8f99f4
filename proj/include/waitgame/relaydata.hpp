#pragma once

// Relay bid ingestion, slot-relative arrival times and bid deduplication.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <nlohmann/json_fwd.hpp>

namespace waitgame::relaydata {

using Wei = boost::multiprecision::cpp_int;

inline const Wei kWeiPerEth{"1000000000000000000"};

/// wei -> ETH, exact up to double rounding of the final quotient.
double wei_to_eth(const Wei& wei);
Wei parse_wei(std::string_view decimal);

struct BidRecord {
  std::uint64_t slot = 0;
  std::string relay_id;
  std::string builder_id;
  std::string block_hash;
  std::string parent_hash;
  Wei value_wei = 0;
  std::uint64_t num_transactions = 0;
  std::int64_t arrival_ms = 0;  // relative to slot start

  friend bool operator==(const BidRecord&, const BidRecord&) = default;
};

struct DeliveredPayload {
  std::uint64_t slot = 0;
  std::string relay_id;
  std::string builder_id;
  std::string block_hash;
  Wei value_wei = 0;
  std::string proposer_id;

  friend bool operator==(const DeliveredPayload&, const DeliveredPayload&) = default;
};

/// Two bids are duplicates iff all four fields are equal.
struct DedupKey {
  std::uint64_t slot = 0;
  std::string builder_id;
  std::string block_hash;
  Wei value_wei = 0;

  friend bool operator==(const DedupKey&, const DedupKey&) = default;
  friend bool operator<(const DedupKey& a, const DedupKey& b) {
    return std::tie(a.slot, a.builder_id, a.block_hash, a.value_wei) <
           std::tie(b.slot, b.builder_id, b.block_hash, b.value_wei);
  }
};

DedupKey key_of(const BidRecord& bid);

struct ArrivalWindow {
  std::int64_t min_ms = -24000;
  std::int64_t max_ms = 24000;
};

class ArrivalOutOfWindow : public std::runtime_error {
 public:
  ArrivalOutOfWindow(std::int64_t arrival_ms, std::string raw);
  std::int64_t arrival_ms() const noexcept { return arrival_ms_; }
  const std::string& raw_record() const noexcept { return raw_; }

 private:
  std::int64_t arrival_ms_;
  std::string raw_;
};

/// unix_ms - (genesis_unix_ms + slot * 12000). Throws ArrivalOutOfWindow
/// (carrying `raw_record`) when the result falls outside `window`.
std::int64_t normalize_arrival(std::int64_t unix_ms, std::uint64_t slot,
                               std::int64_t genesis_unix_ms, ArrivalWindow window = {},
                               std::string_view raw_record = {});

/// One record per DedupKey, keeping the earliest arrival (first read wins
/// ties), sorted by ascending arrival. All inputs must carry `relay_id`.
std::vector<BidRecord> dedup_within_relay(std::span<const BidRecord> bids,
                                          std::string_view relay_id);

/// Same rule across relays; the survivor keeps its originating relay_id.
std::vector<BidRecord> dedup_across_relays(std::span<const BidRecord> bids);

struct SlotDuplicates {
  std::string relay_id;
  std::uint64_t slot = 0;
  std::size_t raw = 0;
  std::size_t unique = 0;
  std::size_t duplicates = 0;
};

struct RelayDuplicates {
  std::string relay_id;
  std::size_t slots = 0;
  std::size_t raw = 0;
  std::size_t unique = 0;
  double mean_duplicates_per_slot = 0.0;
};

struct DuplicateStats {
  std::vector<SlotDuplicates> per_slot;   // ordered by (relay, slot)
  std::vector<RelayDuplicates> per_relay; // ordered by relay
};

DuplicateStats duplicate_stats(std::span<const BidRecord> raw_bids);

// ---------------------------------------------------------------------------
// Ingestion

/// Logical field -> source key. Defaults follow the relay data API.
struct FieldMap {
  std::string slot = "slot";
  std::string builder = "builder_pubkey";
  std::string block_hash = "block_hash";
  std::string parent_hash = "parent_hash";
  std::string value = "value";
  std::string num_tx = "num_tx";
  std::string timestamp_ms = "timestamp_ms";
  std::string timestamp = "timestamp";  // seconds; used when timestamp_ms is absent
  std::string proposer = "proposer_pubkey";

  /// Overrides any subset of the defaults from a JSON object whose keys are
  /// the logical names above. Unknown keys throw std::invalid_argument.
  static FieldMap from_json(const nlohmann::json& overrides);
};

struct IngestOptions {
  std::int64_t genesis_unix_ms = 0;
  ArrivalWindow window;
  FieldMap fields;
};

struct IngestReport {
  std::size_t lines = 0;
  std::size_t accepted = 0;
  std::size_t malformed = 0;
  std::size_t rejected = 0;
  std::vector<std::string> warnings;
  std::vector<std::string> rejected_records;
};

/// Raised when the first record of a stream lacks a mapped field; the
/// message names the field.
class SchemaMismatch : public std::runtime_error {
 public:
  SchemaMismatch(std::string field, std::string what)
      : std::runtime_error(std::move(what)), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct BidIngest {
  std::vector<BidRecord> bids;
  IngestReport report;
};

struct PayloadIngest {
  std::vector<DeliveredPayload> payloads;
  IngestReport report;
};

/// Newline-delimited JSON bid records from one relay.
BidIngest parse_bids(std::istream& in, const std::string& relay_id, const IngestOptions& options);
PayloadIngest parse_delivered(std::istream& in, const std::string& relay_id,
                              const FieldMap& fields = {});

bool is_hash32(std::string_view text);

// CSV: slot,relay,builder,block_hash,value_wei,arrival_ms,num_tx
void write_bids_csv(std::ostream& out, std::span<const BidRecord> bids);
std::vector<BidRecord> read_bids_csv(std::istream& in);

// CSV: slot,relay,builder,block_hash,value_wei,proposer
void write_delivered_csv(std::ostream& out, std::span<const DeliveredPayload> payloads);
std::vector<DeliveredPayload> read_delivered_csv(std::istream& in);

void write_duplicate_stats_csv(std::ostream& out, const DuplicateStats& stats);
void write_duplicate_summary_csv(std::ostream& out, const DuplicateStats& stats);

}  // namespace waitgame::relaydata
