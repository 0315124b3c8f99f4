#include <doctest.h>

#include <sstream>

#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "waitgame/csv.hpp"
#include "waitgame/relaydata.hpp"

using namespace waitgame::relaydata;

namespace {

constexpr std::int64_t kGenesis = 1606824023000;

BidRecord bid(std::uint64_t slot, std::string relay, std::string builder, std::string hash,
              std::int64_t value, std::int64_t arrival) {
  BidRecord b;
  b.slot = slot;
  b.relay_id = std::move(relay);
  b.builder_id = std::move(builder);
  b.block_hash = std::move(hash);
  b.value_wei = value;
  b.arrival_ms = arrival;
  return b;
}

std::string record(std::uint64_t slot, const std::string& hash, const std::string& value,
                   std::int64_t unix_ms) {
  nlohmann::json j{{"slot", std::to_string(slot)},
                   {"builder_pubkey", "0xbuilder"},
                   {"block_hash", hash},
                   {"parent_hash", fixtures::hash_from(1)},
                   {"value", value},
                   {"num_tx", "12"},
                   {"timestamp_ms", std::to_string(unix_ms)}};
  return j.dump();
}

}  // namespace

TEST_CASE("normalize_arrival") {
  const std::uint64_t slot = 6093815;
  const std::int64_t start = kGenesis + static_cast<std::int64_t>(slot) * 12000;
  CHECK(normalize_arrival(start, slot, kGenesis) == 0);
  CHECK(normalize_arrival(start - 10905, slot, kGenesis) == -10905);
  CHECK(normalize_arrival(start + 299, slot, kGenesis) == 299);
  CHECK(normalize_arrival(start + 24000, slot, kGenesis) == 24000);

  try {
    normalize_arrival(start + 24001, slot, kGenesis, {}, "raw-line");
    FAIL("expected rejection");
  } catch (const ArrivalOutOfWindow& e) {
    CHECK(e.arrival_ms() == 24001);
    CHECK(e.raw_record() == "raw-line");
  }
  CHECK_THROWS_AS(normalize_arrival(start - 101, slot, kGenesis, {-100, 100}), ArrivalOutOfWindow);
}

TEST_CASE("wei parsing and conversion") {
  CHECK(parse_wei("46000000000000000") == Wei("46000000000000000"));
  CHECK(wei_to_eth(Wei("46000000000000000")) == doctest::Approx(0.046).epsilon(1e-15));
  CHECK(wei_to_eth(Wei("931270000000000000000")) == doctest::Approx(931.27).epsilon(1e-15));
  CHECK_THROWS(parse_wei(""));
  CHECK_THROWS(parse_wei("-5"));
  CHECK_THROWS(parse_wei("1.5"));
  // Larger than any 64-bit integer.
  CHECK(parse_wei("123456789012345678901234567890").str() == "123456789012345678901234567890");
}

TEST_CASE("dedup_within_relay examples") {
  const auto h = fixtures::hash_from(7);
  SUBCASE("earliest arrival survives") {
    std::vector<BidRecord> in{bid(1, "r", "b", h, 5, 200), bid(1, "r", "b", h, 5, -500)};
    const auto out = dedup_within_relay(in, "r");
    REQUIRE(out.size() == 1);
    CHECK(out[0].arrival_ms == -500);
  }
  SUBCASE("no duplicates: same records, sorted by arrival") {
    std::vector<BidRecord> in{bid(1, "r", "b", h, 5, 300), bid(1, "r", "b", h, 6, 100),
                              bid(2, "r", "b", h, 5, 200)};
    const auto out = dedup_within_relay(in, "r");
    REQUIRE(out.size() == 3);
    CHECK(out[0] == in[1]);
    CHECK(out[1] == in[2]);
    CHECK(out[2] == in[0]);
  }
  SUBCASE("ties keep the first record read") {
    auto a = bid(1, "r", "b", h, 5, 100);
    auto b = a;
    b.num_transactions = 99;
    std::vector<BidRecord> in{a, b};
    const auto out = dedup_within_relay(in, "r");
    REQUIRE(out.size() == 1);
    CHECK(out[0].num_transactions == 0);
  }
  SUBCASE("empty input") { CHECK(dedup_within_relay({}, "r").empty()); }
  SUBCASE("foreign relay rejected") {
    std::vector<BidRecord> in{bid(1, "other", "b", h, 5, 1)};
    CHECK_THROWS_AS(dedup_within_relay(in, "r"), std::invalid_argument);
  }
}

TEST_CASE("dedup: 83 duplicates among 647 bids leaves 564") {
  waitgame::Rng rng(83);
  std::vector<BidRecord> bids;
  for (int i = 0; i < 564; ++i) {
    bids.push_back(bid(6093815, "r", "b" + std::to_string(i % 7), fixtures::random_hash(rng),
                       1000 + i, static_cast<std::int64_t>(rng.below(20000)) - 10000));
  }
  for (int i = 0; i < 83; ++i) {
    auto d = bids[rng.below(564)];
    d.arrival_ms += static_cast<std::int64_t>(rng.below(500));
    bids.push_back(d);
  }
  CHECK(dedup_within_relay(bids, "r").size() == 564);
  const auto stats = duplicate_stats(bids);
  REQUIRE(stats.per_slot.size() == 1);
  CHECK(stats.per_slot[0].raw == 647);
  CHECK(stats.per_slot[0].unique == 564);
  CHECK(stats.per_slot[0].duplicates == 83);
}

TEST_CASE("dedup_across_relays examples") {
  const auto h = fixtures::hash_from(9);
  std::vector<BidRecord> in{bid(1, "A", "b", h, 5, 150), bid(1, "B", "b", h, 5, 90)};
  auto out = dedup_across_relays(in);
  REQUIRE(out.size() == 1);
  CHECK(out[0].relay_id == "B");

  std::vector<BidRecord> disjoint{bid(1, "A", "b", h, 5, 150), bid(1, "B", "b", h, 6, 90)};
  CHECK(dedup_across_relays(disjoint).size() == 2);

  const auto one = fixtures::planted_bids(3, 500, {"solo"}, 0.3);
  CHECK(dedup_across_relays(one) == dedup_within_relay(one, "solo"));
}

TEST_CASE("dedup properties against the oracle") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    CAPTURE(seed);
    const auto bids = fixtures::planted_bids(seed, 800, {"A", "B", "C"}, 0.25, 5);
    const auto across = dedup_across_relays(bids);
    CHECK(across == oracle::dedup(bids));
    CHECK(across.size() == oracle::distinct_keys(bids));
    CHECK(dedup_across_relays(across) == across);
    for (const auto& r : across) {
      CHECK(std::find(bids.begin(), bids.end(), r) != bids.end());
      for (const auto& s : bids) {
        if (key_of(s) == key_of(r)) CHECK(r.arrival_ms <= s.arrival_ms);
      }
    }
    for (const auto& relay : {"A", "B", "C"}) {
      const auto mine = fixtures::only_relay(bids, relay);
      const auto within = dedup_within_relay(mine, relay);
      CHECK(within == oracle::dedup(mine));
      CHECK(dedup_within_relay(within, relay) == within);
    }
  }
}

TEST_CASE("duplicate_stats") {
  const auto h1 = fixtures::hash_from(1), h2 = fixtures::hash_from(2), h3 = fixtures::hash_from(3);
  std::vector<BidRecord> five{bid(10, "r", "b", h1, 1, 0), bid(10, "r", "b", h1, 1, 5),
                              bid(10, "r", "b", h2, 1, 0), bid(10, "r", "b", h3, 1, 0),
                              bid(10, "r", "b", h3, 1, 9)};
  auto s = duplicate_stats(five);
  REQUIRE(s.per_slot.size() == 1);
  CHECK(s.per_slot[0].duplicates == 2);
  REQUIRE(s.per_relay.size() == 1);
  CHECK(s.per_relay[0].mean_duplicates_per_slot == 2.0);

  std::vector<BidRecord> none{bid(10, "r", "b", h1, 1, 0), bid(11, "q", "b", h1, 1, 0)};
  s = duplicate_stats(none);
  for (const auto& row : s.per_slot) CHECK(row.duplicates == 0);
  for (const auto& r : s.per_relay) CHECK(r.mean_duplicates_per_slot == 0.0);
}

TEST_CASE("parse_bids") {
  const std::uint64_t slot = 6093815;
  const std::int64_t start = kGenesis + static_cast<std::int64_t>(slot) * 12000;
  IngestOptions opts;
  opts.genesis_unix_ms = kGenesis;

  SUBCASE("good, malformed and out-of-window records") {
    std::stringstream in;
    in << record(slot, fixtures::hash_from(1), "14000000000000000", start - 10905) << '\n'
       << record(slot, fixtures::hash_from(2), "46000000000000000", start + 299) << '\n'
       << "{not json\n"
       << record(slot, "0x1234", "1", start) << '\n'
       << record(slot, fixtures::hash_from(3), "1", start + 60000) << '\n'
       << "\n";
    const auto r = parse_bids(in, "flashbots", opts);
    CHECK(r.report.lines == 5);
    CHECK(r.report.accepted == 2);
    CHECK(r.report.malformed == 2);
    CHECK(r.report.rejected == 1);
    CHECK(r.report.warnings.size() == 2);
    REQUIRE(r.bids.size() == 2);
    CHECK(r.bids[0].arrival_ms == -10905);
    CHECK(r.bids[1].arrival_ms == 299);
    CHECK(r.bids[1].relay_id == "flashbots");
    CHECK(r.bids[1].num_transactions == 12);
    CHECK(r.bids[1].value_wei == Wei("46000000000000000"));
  }
  SUBCASE("seconds timestamp") {
    nlohmann::json j{{"slot", slot},
                     {"builder_pubkey", "x"},
                     {"block_hash", fixtures::hash_from(4)},
                     {"value", "5"},
                     {"timestamp", (start + 2000) / 1000}};
    std::stringstream in(j.dump() + "\n");
    const auto r = parse_bids(in, "r", opts);
    REQUIRE(r.bids.size() == 1);
    CHECK(r.bids[0].arrival_ms == ((start + 2000) / 1000) * 1000 - start);
  }
  SUBCASE("schema mismatch names the field") {
    std::stringstream in(R"({"slot": "1", "builder": "x", "block_hash": "0x00", "value": "1"})"
                         "\n");
    try {
      parse_bids(in, "r", opts);
      FAIL("expected SchemaMismatch");
    } catch (const SchemaMismatch& e) {
      CHECK(e.field() == "builder_pubkey");
      CHECK(std::string(e.what()).find("builder_pubkey") != std::string::npos);
    }
  }
  SUBCASE("field mapping") {
    auto fm = FieldMap::from_json(nlohmann::json{{"builder", "builder"}, {"value", "amount"}});
    CHECK(fm.builder == "builder");
    CHECK(fm.value == "amount");
    CHECK(fm.slot == "slot");
    CHECK_THROWS_AS(FieldMap::from_json(nlohmann::json{{"nope", "x"}}), std::invalid_argument);
    opts.fields = fm;
    nlohmann::json j{{"slot", slot},
                     {"builder", "x"},
                     {"block_hash", fixtures::hash_from(4)},
                     {"amount", "5"},
                     {"timestamp_ms", start}};
    std::stringstream in(j.dump() + "\n");
    CHECK(parse_bids(in, "r", opts).bids.size() == 1);
  }
  SUBCASE("empty input") {
    std::stringstream in;
    const auto r = parse_bids(in, "r", opts);
    CHECK(r.bids.empty());
    CHECK(r.report.lines == 0);
  }
}

TEST_CASE("parse_delivered keeps one payload per slot") {
  std::stringstream in;
  for (int i = 0; i < 2; ++i) {
    nlohmann::json j{{"slot", "100"},
                     {"builder_pubkey", "b"},
                     {"block_hash", fixtures::hash_from(static_cast<std::uint64_t>(i))},
                     {"value", "7"},
                     {"proposer_pubkey", "p"}};
    in << j.dump() << '\n';
  }
  const auto r = parse_delivered(in, "r");
  REQUIRE(r.payloads.size() == 1);
  CHECK(r.payloads[0].block_hash == fixtures::hash_from(0));
  CHECK(r.report.warnings.size() == 1);
}

TEST_CASE("bids CSV round trip") {
  const auto bids = fixtures::planted_bids(5, 200, {"A", "B"}, 0.1);
  std::stringstream s;
  write_bids_csv(s, bids);
  auto back = read_bids_csv(s);
  REQUIRE(back.size() == bids.size());
  for (std::size_t i = 0; i < bids.size(); ++i) {
    auto expect = bids[i];
    expect.parent_hash.clear();  // not part of the CSV schema
    CHECK(back[i] == expect);
  }
  std::stringstream bad("slot,relay\n1,r\n");
  CHECK_THROWS_AS(read_bids_csv(bad), waitgame::csv::SchemaError);
}

TEST_CASE("is_hash32") {
  CHECK(is_hash32(fixtures::hash_from(1)));
  CHECK(is_hash32("0x" + std::string(64, 'A')));
  CHECK_FALSE(is_hash32(std::string(64, 'a')));
  CHECK_FALSE(is_hash32("0x" + std::string(63, 'a')));
  CHECK_FALSE(is_hash32("0x" + std::string(64, 'g')));
}
