#include <doctest.h>

#include <cmath>
#include <numeric>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "waitgame/analytics.hpp"

using namespace waitgame::analytics;
using waitgame::relaydata::Wei;

namespace {

const Wei kMilliEth{"1000000000000000"};

BidRecord bid(std::string hash, Wei value, std::int64_t arrival, std::uint64_t slot = 6093815,
              std::string relay = "flashbots") {
  BidRecord b;
  b.slot = slot;
  b.relay_id = std::move(relay);
  b.builder_id = "builder";
  b.block_hash = std::move(hash);
  b.value_wei = std::move(value);
  b.arrival_ms = arrival;
  return b;
}

double max_group_mean(const std::vector<double>& r, const std::vector<std::uint64_t>& g) {
  std::map<std::uint64_t, std::pair<double, double>> acc;
  for (std::size_t i = 0; i < r.size(); ++i) {
    acc[g[i]].first += r[i];
    acc[g[i]].second += 1.0;
  }
  double worst = 0.0;
  for (const auto& [k, v] : acc) worst = std::max(worst, std::abs(v.first / v.second));
  return worst;
}

}  // namespace

TEST_CASE("residualize") {
  SUBCASE("one group is plain centering") {
    std::vector<double> v{1.0, 2.0, 6.0};
    std::vector<std::uint64_t> s(3, 4), b(3, 9);
    const auto r = residualize(v, s, b);
    CHECK(r[0] == doctest::Approx(-2.0));
    CHECK(r[1] == doctest::Approx(-1.0));
    CHECK(r[2] == doctest::Approx(3.0));
  }
  SUBCASE("values constant within slots") {
    std::vector<double> v{1.0, 1.0, 5.0, 5.0};
    std::vector<std::uint64_t> s{1, 1, 2, 2}, b(4, 0);
    for (double x : residualize(v, s, b)) CHECK(std::abs(x) < 1e-15);
  }
  SUBCASE("effects plus noise recover the noise") {
    auto f = fixtures::regression_fixture(11, 20000, 0.0, 1e-3, 200, 20);
    const auto r = residualize(f.values, f.slots, f.builders);
    // The noise itself carries group means; compare against the noise after
    // the same projection.
    const auto e = residualize(f.noise, f.slots, f.builders);
    double worst = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) worst = std::max(worst, std::abs(r[i] - e[i]));
    CHECK(worst < 1e-8);
    CHECK(max_group_mean(r, f.slots) < 1e-8);
    CHECK(max_group_mean(r, f.builders) < 1e-8);
  }
  SUBCASE("argument errors") {
    std::vector<double> v{1.0, 2.0};
    std::vector<std::uint64_t> s{1}, b{1, 2};
    CHECK_THROWS_AS(residualize(v, s, b), std::invalid_argument);
    CHECK_THROWS_AS(residualize({}, {}, {}), std::invalid_argument);
  }
}

TEST_CASE("fit_marginal_value") {
  std::vector<double> t(1001), v(1001);
  for (int i = 0; i <= 1000; ++i) {
    t[i] = i;
    v[i] = 5.71e-6 * i;
  }
  const auto fit = fit_marginal_value(t, v);
  CHECK(std::abs(fit.slope - 5.71e-6) / 5.71e-6 < 1e-12);
  CHECK(fit.r_squared == doctest::Approx(1.0));
  CHECK(fit.n == 1001);

  std::vector<double> flat(1001, 0.25);
  const auto zero = fit_marginal_value(t, flat);
  CHECK(std::abs(zero.slope) < 1e-18);
  CHECK(zero.r_squared == 0.0);

  std::vector<double> same(5, 3.0), any(5, 1.0);
  CHECK_THROWS_AS(fit_marginal_value(same, any), std::invalid_argument);
  CHECK_THROWS_AS(fit_marginal_value(std::vector<double>{1.0}, std::vector<double>{1.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(fit_marginal_value(t, any), std::invalid_argument);
}

TEST_CASE("marginal value of time on bid streams") {
  const double lambda = 5.71e-6;
  auto f = fixtures::regression_fixture(3, 5000, lambda, 0.0, 60, 8);
  std::vector<BidRecord> bids;
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    BidRecord b;
    b.slot = 7000000 + f.slots[i];
    b.builder_id = "builder-" + std::to_string(f.builders[i]);
    b.arrival_ms = static_cast<std::int64_t>(f.arrival_ms[i]);
    // Offsets keep every value positive; wei resolution is 1e-18 ETH.
    b.value_wei = Wei(static_cast<long long>(std::llround((f.values[i] + 1.0) * 1e15))) *
                  Wei(1000);
    bids.push_back(std::move(b));
  }
  const auto fit = marginal_value_of_time(bids);
  CHECK(std::abs(fit.slope - lambda) / lambda < 1e-6);

  // Adding a per-slot constant leaves the slope alone.
  auto shifted = bids;
  for (auto& b : shifted) b.value_wei += Wei(b.slot % 13) * kMilliEth;
  const auto fit2 = marginal_value_of_time(shifted);
  CHECK(std::abs(fit2.slope - fit.slope) < 1e-8 * std::abs(fit.slope) + 1e-20);
}

TEST_CASE("classify_winner examples") {
  SUBCASE("unique maximum wins -> HIGHEST") {
    std::vector<BidRecord> bids{bid(fixtures::hash_from(1), 46 * kMilliEth, 299),
                                bid(fixtures::hash_from(2), 14 * kMilliEth, -10905)};
    const auto t = classify_winner(bids[0], bids);
    CHECK(t.cls == WinnerClass::Highest);
    CHECK(t.delta_v_wei == 0);
    CHECK(t.delta_t_ms == 0);
  }
  SUBCASE("early winner") {
    std::vector<BidRecord> bids{bid(fixtures::hash_from(1), 46 * kMilliEth, 299),
                                bid(fixtures::hash_from(2), 50 * kMilliEth, 800)};
    const auto t = classify_winner(bids[0], bids);
    CHECK(t.cls == WinnerClass::Early);
    CHECK(t.delta_t_ms == 501);
    CHECK(t.delta_v_wei == 4 * kMilliEth);
    CHECK(t.delta_v_eth == doctest::Approx(0.004).epsilon(1e-12));
  }
  SUBCASE("late winner") {
    const Wei less = Wei("800000000000000");  // 0.0008 ETH
    std::vector<BidRecord> bids{bid(fixtures::hash_from(1), 50 * kMilliEth, 100),
                                bid(fixtures::hash_from(2), 50 * kMilliEth - less, 492)};
    const auto t = classify_winner(bids[1], bids);
    CHECK(t.cls == WinnerClass::Late);
    CHECK(t.delta_t_ms == -392);
    CHECK(t.delta_v_eth == doctest::Approx(0.0008).epsilon(1e-12));
  }
  SUBCASE("ties on value go to the earliest, then the smaller hash") {
    std::vector<BidRecord> bids{bid(fixtures::hash_from(9), 5 * kMilliEth, 100),
                                bid(fixtures::hash_from(3), 5 * kMilliEth, 100),
                                bid(fixtures::hash_from(1), 5 * kMilliEth, 200)};
    CHECK(classify_winner(bids[1], bids).cls == WinnerClass::Highest);
    CHECK(classify_winner(bids[0], bids).cls == WinnerClass::Late);
    CHECK(classify_winner(bids[2], bids).cls == WinnerClass::Late);
  }
  SUBCASE("absent winner") {
    std::vector<BidRecord> bids{bid(fixtures::hash_from(1), kMilliEth, 0)};
    CHECK_THROWS_AS(classify_winner(bid(fixtures::hash_from(2), kMilliEth, 0), bids),
                    std::invalid_argument);
  }
}

TEST_CASE("classify_winner agrees with the full-scan oracle") {
  waitgame::Rng rng(2024);
  for (std::uint64_t slot = 0; slot < 300; ++slot) {
    const auto bids = fixtures::winner_slot(rng, slot, 1 + rng.below(25));
    const auto& w = bids[rng.below(bids.size())];
    const auto got = classify_winner(w, bids);
    const auto want = oracle::classify(w, bids);
    CHECK(got.cls == want.cls);
    CHECK(got.delta_v_wei == want.delta_v);
    CHECK(got.delta_t_ms == want.delta_t);
    CHECK(got.delta_v_wei >= 0);
  }
}

TEST_CASE("unrealized_value") {
  std::vector<WinnerTiming> all_highest(3);
  auto s = unrealized_value(all_highest);
  CHECK(s.unrealized_eth == 0.0);
  CHECK(s.realizable_eth == 0.0);
  CHECK(s.highest_count == 3);
  CHECK_FALSE(s.median_delta_t_ms.has_value());

  std::vector<WinnerTiming> two(2);
  two[0].cls = two[1].cls = WinnerClass::Early;
  two[0].delta_v_wei = 10 * kMilliEth;
  two[1].delta_v_wei = 20 * kMilliEth;
  two[0].delta_t_ms = 500;
  two[1].delta_t_ms = 1500;
  s = unrealized_value(two);
  CHECK(s.unrealized_eth == doctest::Approx(0.03).epsilon(1e-14));
  CHECK(s.early_count == 2);
  CHECK(*s.median_delta_t_ms == 1000.0);
}

TEST_CASE("winner join and growth from first bid") {
  std::vector<BidRecord> bids{bid(fixtures::hash_from(1), 14 * kMilliEth, -10905),
                              bid(fixtures::hash_from(2), 46 * kMilliEth, 299, 6093815, "ultra"),
                              bid(fixtures::hash_from(2), 46 * kMilliEth, 350),
                              bid(fixtures::hash_from(3), 50 * kMilliEth, 800)};
  DeliveredPayload p;
  p.slot = 6093815;
  p.relay_id = "flashbots";
  p.block_hash = fixtures::hash_from(2);
  p.value_wei = 46 * kMilliEth;
  std::vector<DeliveredPayload> payloads{p, p};
  payloads[1].relay_id = "ultra";
  const auto t = classify_winners(payloads, bids);
  REQUIRE(t.size() == 1);
  CHECK(t[0].winner_arrival_ms == 299);
  CHECK(t[0].cls == WinnerClass::Early);
  const auto g = growth_from_first_bid_pct(bids[1], bids);
  REQUIRE(g);
  CHECK(*g == doctest::Approx(228.5714).epsilon(1e-5));

  const auto stats = relay_winner_stats(payloads, bids);
  REQUIRE(stats.size() == 2);
  CHECK(stats[0].relay_id == "flashbots");
  CHECK(stats[0].blocks_delivered == 1);
  CHECK(*stats[0].median_winner_arrival_ms == 350.0);
  CHECK(stats[0].avg_bids_per_slot == 3.0);
  CHECK(*stats[1].median_winner_arrival_ms == 299.0);
}

TEST_CASE("attestation shares") {
  CHECK(attestation_share_from_counts(0, 100) == 0.0);
  CHECK(attestation_share_from_counts(98, 100) == doctest::Approx(0.98));
  CHECK(attestation_share_from_counts(39, 100) == doctest::Approx(0.39));
  CHECK(reorg_vulnerable(attestation_share_from_counts(39, 100)));
  CHECK(reorg_vulnerable(0.399));
  CHECK_FALSE(reorg_vulnerable(0.400));
  CHECK_FALSE(reorg_vulnerable(0.98));
  CHECK(attestation_share(200, 100) == 1.0);
  CHECK_THROWS_AS(attestation_share(1, 0), std::invalid_argument);
  double prev = -1.0;
  for (std::uint64_t k = 0; k <= 128; ++k) {
    const double s = attestation_share_from_counts(k, 128);
    CHECK(s >= prev);
    prev = s;
  }
}

TEST_CASE("orphan_comparison") {
  using S = BlockStatus;
  SUBCASE("hand example") {
    std::vector<BlockObservation> blocks{{1, 1000, S::Orphaned}, {2, 1230, S::Orphaned},
                                         {3, 100, S::Canonical}, {4, 200, S::Canonical},
                                         {5, 1300, S::Canonical}};
    const auto r = orphan_comparison(blocks);
    CHECK(*r.median_orphaned_arrival_ms == 1115.0);
    CHECK(*r.median_nonorphaned_arrival_ms == 200.0);
    CHECK(r.late_nonorphaned_count == 1);
    CHECK(*r.earliest_orphaned_arrival_ms == 1000);
    CHECK(r.nonorphaned_after_earliest_orphan == 1);
  }
  SUBCASE("no orphans") {
    std::vector<BlockObservation> blocks{{1, 10, S::Canonical}};
    const auto r = orphan_comparison(blocks);
    CHECK_FALSE(r.median_orphaned_arrival_ms.has_value());
    CHECK(r.orphaned_count == 0);
  }
  SUBCASE("28 orphans in 12500 slots") {
    std::vector<BlockObservation> blocks;
    for (std::uint64_t s = 0; s < 12500; ++s) {
      blocks.push_back({6087501 + s, static_cast<std::int64_t>(s % 900),
                        s % 446 == 0 && s / 446 < 28 ? S::Orphaned : S::Canonical});
    }
    const auto r = orphan_comparison(blocks);
    CHECK(r.orphaned_count == 28);
    CHECK(r.orphan_fraction == doctest::Approx(0.00224));
  }
  CHECK(parse_block_status("missed") == S::Missed);
  CHECK_THROWS(parse_block_status("gone"));
}
