#include "waitgame/relaydata.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <map>
#include <ostream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "waitgame/common.hpp"
#include "waitgame/csv.hpp"

namespace waitgame::relaydata {

double wei_to_eth(const Wei& wei) {
  Wei whole = wei / kWeiPerEth;
  Wei frac = wei % kWeiPerEth;
  return whole.convert_to<double>() + frac.convert_to<double>() / 1e18;
}

Wei parse_wei(std::string_view decimal) {
  if (decimal.empty() || decimal.size() > 78) {
    throw std::invalid_argument(fmt::format("not a wei amount: '{}'", decimal));
  }
  for (char c : decimal) {
    if (!std::isdigit(static_cast<unsigned char>(c))) {
      throw std::invalid_argument(fmt::format("not a wei amount: '{}'", decimal));
    }
  }
  return Wei(std::string(decimal));
}

DedupKey key_of(const BidRecord& bid) {
  return DedupKey{bid.slot, bid.builder_id, bid.block_hash, bid.value_wei};
}

ArrivalOutOfWindow::ArrivalOutOfWindow(std::int64_t arrival_ms, std::string raw)
    : std::runtime_error(fmt::format("arrival {} ms outside plausibility window", arrival_ms)),
      arrival_ms_(arrival_ms),
      raw_(std::move(raw)) {}

std::int64_t normalize_arrival(std::int64_t unix_ms, std::uint64_t slot,
                               std::int64_t genesis_unix_ms, ArrivalWindow window,
                               std::string_view raw_record) {
  const std::int64_t slot_start =
      genesis_unix_ms + static_cast<std::int64_t>(slot) * kSlotMillis;
  const std::int64_t arrival = unix_ms - slot_start;
  if (arrival < window.min_ms || arrival > window.max_ms) {
    throw ArrivalOutOfWindow(arrival, std::string(raw_record));
  }
  return arrival;
}

namespace {

std::vector<BidRecord> earliest_per_key(std::span<const BidRecord> bids) {
  std::map<DedupKey, std::size_t> best;
  for (std::size_t i = 0; i < bids.size(); ++i) {
    auto [it, inserted] = best.try_emplace(key_of(bids[i]), i);
    if (!inserted && bids[i].arrival_ms < bids[it->second].arrival_ms) it->second = i;
  }
  std::vector<std::size_t> keep;
  keep.reserve(best.size());
  for (const auto& [key, idx] : best) keep.push_back(idx);
  std::sort(keep.begin(), keep.end(), [&](std::size_t a, std::size_t b) {
    if (bids[a].arrival_ms != bids[b].arrival_ms) return bids[a].arrival_ms < bids[b].arrival_ms;
    return a < b;
  });
  std::vector<BidRecord> out;
  out.reserve(keep.size());
  for (auto idx : keep) out.push_back(bids[idx]);
  return out;
}

}  // namespace

std::vector<BidRecord> dedup_within_relay(std::span<const BidRecord> bids,
                                          std::string_view relay_id) {
  for (const auto& b : bids) {
    if (b.relay_id != relay_id) {
      throw std::invalid_argument(
          fmt::format("dedup_within_relay: bid from relay '{}' in stream for '{}'", b.relay_id,
                      relay_id));
    }
  }
  return earliest_per_key(bids);
}

std::vector<BidRecord> dedup_across_relays(std::span<const BidRecord> bids) {
  return earliest_per_key(bids);
}

DuplicateStats duplicate_stats(std::span<const BidRecord> raw_bids) {
  std::map<std::pair<std::string, std::uint64_t>, std::pair<std::size_t, std::map<DedupKey, int>>>
      groups;
  for (const auto& b : raw_bids) {
    auto& g = groups[{b.relay_id, b.slot}];
    ++g.first;
    g.second.try_emplace(key_of(b), 0);
  }
  DuplicateStats stats;
  std::map<std::string, RelayDuplicates> relays;
  for (const auto& [id, g] : groups) {
    SlotDuplicates row{id.first, id.second, g.first, g.second.size(), g.first - g.second.size()};
    auto& r = relays[id.first];
    r.relay_id = id.first;
    ++r.slots;
    r.raw += row.raw;
    r.unique += row.unique;
    stats.per_slot.push_back(std::move(row));
  }
  for (auto& [name, r] : relays) {
    r.mean_duplicates_per_slot =
        r.slots ? static_cast<double>(r.raw - r.unique) / static_cast<double>(r.slots) : 0.0;
    stats.per_relay.push_back(r);
  }
  return stats;
}

// ---------------------------------------------------------------------------

FieldMap FieldMap::from_json(const nlohmann::json& overrides) {
  FieldMap m;
  if (!overrides.is_object()) throw std::invalid_argument("field map must be a JSON object");
  for (const auto& [key, value] : overrides.items()) {
    if (!value.is_string()) {
      throw std::invalid_argument(fmt::format("field map entry '{}' must be a string", key));
    }
    auto v = value.get<std::string>();
    if (key == "slot") m.slot = v;
    else if (key == "builder") m.builder = v;
    else if (key == "block_hash") m.block_hash = v;
    else if (key == "parent_hash") m.parent_hash = v;
    else if (key == "value") m.value = v;
    else if (key == "num_tx") m.num_tx = v;
    else if (key == "timestamp_ms") m.timestamp_ms = v;
    else if (key == "timestamp") m.timestamp = v;
    else if (key == "proposer") m.proposer = v;
    else throw std::invalid_argument(fmt::format("unknown field map key '{}'", key));
  }
  return m;
}

bool is_hash32(std::string_view text) {
  if (text.size() != 66 || text[0] != '0' || (text[1] != 'x' && text[1] != 'X')) return false;
  return std::all_of(text.begin() + 2, text.end(),
                     [](char c) { return std::isxdigit(static_cast<unsigned char>(c)) != 0; });
}

namespace {

class MalformedRecord : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

const nlohmann::json& field(const nlohmann::json& obj, const std::string& name) {
  auto it = obj.find(name);
  if (it == obj.end() || it->is_null()) throw MalformedRecord("missing field '" + name + "'");
  return *it;
}

std::string text_of(const nlohmann::json& v, const std::string& name) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  throw MalformedRecord("field '" + name + "' has unsupported type");
}

std::uint64_t uint_of(const nlohmann::json& v, const std::string& name) {
  const auto s = text_of(v, name);
  try {
    return csv::to_uint64(s, name);
  } catch (const csv::ParseError&) {
    throw MalformedRecord("field '" + name + "' is not a non-negative integer");
  }
}

std::string hash_of(const nlohmann::json& obj, const std::string& name) {
  auto s = text_of(field(obj, name), name);
  if (!is_hash32(s)) throw MalformedRecord("field '" + name + "' is not a 32-byte hex hash");
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

Wei wei_of(const nlohmann::json& obj, const std::string& name) {
  const auto& v = field(obj, name);
  if (v.is_number_float()) throw MalformedRecord("field '" + name + "' must be an integer");
  try {
    return parse_wei(text_of(v, name));
  } catch (const std::invalid_argument&) {
    throw MalformedRecord("field '" + name + "' is not a wei amount");
  }
}

std::int64_t unix_ms_of(const nlohmann::json& obj, const FieldMap& f) {
  if (auto it = obj.find(f.timestamp_ms); it != obj.end() && !it->is_null()) {
    return static_cast<std::int64_t>(uint_of(*it, f.timestamp_ms));
  }
  if (auto it = obj.find(f.timestamp); it != obj.end() && !it->is_null()) {
    return static_cast<std::int64_t>(uint_of(*it, f.timestamp)) * 1000;
  }
  throw MalformedRecord("missing field '" + f.timestamp_ms + "' (or '" + f.timestamp + "')");
}

/// The first record decides whether the stream matches the mapping at all.
void check_schema(const nlohmann::json& obj, const std::vector<std::string>& required,
                  const FieldMap* timestamps) {
  for (const auto& name : required) {
    if (!obj.contains(name)) {
      throw SchemaMismatch(name, "schema mismatch: record lacks field '" + name + "'");
    }
  }
  if (timestamps && !obj.contains(timestamps->timestamp_ms) &&
      !obj.contains(timestamps->timestamp)) {
    throw SchemaMismatch(timestamps->timestamp_ms, "schema mismatch: record lacks field '" +
                                                       timestamps->timestamp_ms + "'");
  }
}

template <typename Parse>
IngestReport for_each_record(std::istream& in, Parse&& parse) {
  IngestReport report;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    ++report.lines;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
      if (!obj.is_object()) throw MalformedRecord("record is not a JSON object");
    } catch (const std::exception& e) {
      ++report.malformed;
      report.warnings.push_back(fmt::format("record {}: {}", report.lines, e.what()));
      continue;
    }
    try {
      parse(obj, line, first);
      ++report.accepted;
    } catch (const MalformedRecord& e) {
      ++report.malformed;
      report.warnings.push_back(fmt::format("record {}: {}", report.lines, e.what()));
    } catch (const ArrivalOutOfWindow& e) {
      ++report.rejected;
      report.rejected_records.push_back(e.raw_record());
    }
    first = false;
  }
  return report;
}

}  // namespace

BidIngest parse_bids(std::istream& in, const std::string& relay_id, const IngestOptions& options) {
  const auto& f = options.fields;
  BidIngest result;
  result.report = for_each_record(in, [&](const nlohmann::json& obj, const std::string& raw,
                                          bool first) {
    if (first) check_schema(obj, {f.slot, f.builder, f.block_hash, f.value}, &f);
    BidRecord bid;
    bid.slot = uint_of(field(obj, f.slot), f.slot);
    bid.relay_id = relay_id;
    bid.builder_id = text_of(field(obj, f.builder), f.builder);
    bid.block_hash = hash_of(obj, f.block_hash);
    bid.parent_hash = obj.contains(f.parent_hash) ? hash_of(obj, f.parent_hash) : std::string();
    bid.value_wei = wei_of(obj, f.value);
    bid.num_transactions = obj.contains(f.num_tx) ? uint_of(obj.at(f.num_tx), f.num_tx) : 0;
    bid.arrival_ms = normalize_arrival(unix_ms_of(obj, f), bid.slot, options.genesis_unix_ms,
                                       options.window, raw);
    result.bids.push_back(std::move(bid));
  });
  return result;
}

PayloadIngest parse_delivered(std::istream& in, const std::string& relay_id,
                              const FieldMap& f) {
  PayloadIngest result;
  result.report = for_each_record(in, [&](const nlohmann::json& obj, const std::string&,
                                          bool first) {
    if (first) check_schema(obj, {f.slot, f.builder, f.block_hash, f.value, f.proposer}, nullptr);
    DeliveredPayload p;
    p.slot = uint_of(field(obj, f.slot), f.slot);
    p.relay_id = relay_id;
    p.builder_id = text_of(field(obj, f.builder), f.builder);
    p.block_hash = hash_of(obj, f.block_hash);
    p.value_wei = wei_of(obj, f.value);
    p.proposer_id = text_of(field(obj, f.proposer), f.proposer);
    result.payloads.push_back(std::move(p));
  });
  // One delivered payload per (slot, relay): keep the first, warn on the rest.
  std::map<std::uint64_t, bool> seen;
  std::vector<DeliveredPayload> unique;
  for (auto& p : result.payloads) {
    if (seen.try_emplace(p.slot, true).second) {
      unique.push_back(std::move(p));
    } else {
      result.report.warnings.push_back(
          fmt::format("slot {}: duplicate delivered payload for relay {} ignored", p.slot,
                      relay_id));
    }
  }
  result.payloads = std::move(unique);
  return result;
}

// ---------------------------------------------------------------------------

void write_bids_csv(std::ostream& out, std::span<const BidRecord> bids) {
  csv::Writer w(out);
  w.row({"slot", "relay", "builder", "block_hash", "value_wei", "arrival_ms", "num_tx"});
  for (const auto& b : bids) {
    w.row({std::to_string(b.slot), b.relay_id, b.builder_id, b.block_hash, b.value_wei.str(),
           std::to_string(b.arrival_ms), std::to_string(b.num_transactions)});
  }
}

std::vector<BidRecord> read_bids_csv(std::istream& in) {
  const auto t = csv::Table::read(in);
  t.require({"slot", "relay", "builder", "block_hash", "value_wei", "arrival_ms"});
  const bool has_tx = t.has("num_tx");
  std::vector<BidRecord> bids;
  bids.reserve(t.rows());
  for (std::size_t r = 0; r < t.rows(); ++r) {
    BidRecord b;
    b.slot = csv::to_uint64(t.at(r, "slot"), "slot");
    b.relay_id = t.at(r, "relay");
    b.builder_id = t.at(r, "builder");
    b.block_hash = t.at(r, "block_hash");
    b.value_wei = parse_wei(t.at(r, "value_wei"));
    b.arrival_ms = csv::to_int64(t.at(r, "arrival_ms"), "arrival_ms");
    b.num_transactions = has_tx ? csv::to_uint64(t.at(r, "num_tx"), "num_tx") : 0;
    bids.push_back(std::move(b));
  }
  return bids;
}

void write_delivered_csv(std::ostream& out, std::span<const DeliveredPayload> payloads) {
  csv::Writer w(out);
  w.row({"slot", "relay", "builder", "block_hash", "value_wei", "proposer"});
  for (const auto& p : payloads) {
    w.row({std::to_string(p.slot), p.relay_id, p.builder_id, p.block_hash, p.value_wei.str(),
           p.proposer_id});
  }
}

std::vector<DeliveredPayload> read_delivered_csv(std::istream& in) {
  const auto t = csv::Table::read(in);
  t.require({"slot", "relay", "builder", "block_hash", "value_wei"});
  const bool has_proposer = t.has("proposer");
  std::vector<DeliveredPayload> out;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    DeliveredPayload p;
    p.slot = csv::to_uint64(t.at(r, "slot"), "slot");
    p.relay_id = t.at(r, "relay");
    p.builder_id = t.at(r, "builder");
    p.block_hash = t.at(r, "block_hash");
    p.value_wei = parse_wei(t.at(r, "value_wei"));
    if (has_proposer) p.proposer_id = t.at(r, "proposer");
    out.push_back(std::move(p));
  }
  return out;
}

void write_duplicate_stats_csv(std::ostream& out, const DuplicateStats& stats) {
  csv::Writer w(out);
  w.row({"relay", "slot", "raw_bids", "unique_bids", "duplicates"});
  for (const auto& s : stats.per_slot) {
    w.row({s.relay_id, std::to_string(s.slot), std::to_string(s.raw), std::to_string(s.unique),
           std::to_string(s.duplicates)});
  }
}

void write_duplicate_summary_csv(std::ostream& out, const DuplicateStats& stats) {
  csv::Writer w(out);
  w.row({"relay", "slots", "raw_bids", "unique_bids", "mean_duplicates_per_slot"});
  for (const auto& r : stats.per_relay) {
    w.row({r.relay_id, std::to_string(r.slots), std::to_string(r.raw), std::to_string(r.unique),
           csv::format_double(r.mean_duplicates_per_slot)});
  }
}

}  // namespace waitgame::relaydata
