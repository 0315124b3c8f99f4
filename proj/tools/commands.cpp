#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "waitgame/analytics.hpp"
#include "waitgame/csv.hpp"
#include "waitgame/relaydata.hpp"
#include "waitgame/rewards.hpp"

namespace waitgame::cli {

using nlohmann::json;

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string sibling_path(const std::string& path, std::string_view suffix) {
  std::filesystem::path p(path);
  auto name = p.stem().string() + std::string(suffix) + p.extension().string();
  return (p.parent_path() / name).string();
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot read {}", path));
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw UsageError(fmt::format("cannot read config {}", path));
  try {
    auto doc = json::parse(in);
    if (!doc.is_object()) throw UsageError(fmt::format("config {}: expected a JSON object", path));
    return doc;
  } catch (const json::parse_error& e) {
    throw UsageError(fmt::format("config {}: {}", path, e.what()));
  }
}

template <typename T>
T get_key(const json& doc, const std::string& key) {
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception&) {
    throw UsageError(fmt::format("config key '{}': wrong type", key));
  }
}

std::ofstream open_out(const std::string& path) {
  if (path.empty()) throw UsageError("--out is required");
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write {}", path));
  return out;
}

std::ifstream open_in(const std::string& path, std::string_view flag) {
  if (path.empty()) throw UsageError(fmt::format("{} is required", flag));
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot read {}", path));
  return in;
}

/// One line: command, digest of the resolved configuration, seed, version,
/// outputs, and the resolved configuration itself.
void write_manifest(const std::string& out, std::string_view command, const json& resolved,
                    std::optional<std::uint64_t> seed, const std::vector<std::string>& outputs) {
  const auto dump = resolved.dump();
  json line;
  line["command"] = command;
  line["config_digest"] = fmt::format("fnv1a64:{:016x}", fnv1a64(dump));
  line["seed"] = seed ? json(*seed) : json(nullptr);
  line["version"] = WAITGAME_VERSION;
  line["outputs"] = outputs;
  line["config"] = resolved;
  auto f = open_out(out + ".manifest");
  f << line.dump() << '\n';
}

std::pair<std::string, std::string> split_relay_path(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos) {
    return {std::filesystem::path(spec).stem().string(), spec};
  }
  if (eq == 0 || eq + 1 == spec.size()) {
    throw UsageError(fmt::format("expected RELAY=PATH, got '{}'", spec));
  }
  return {spec.substr(0, eq), spec.substr(eq + 1)};
}

template <typename F>
auto as_data_error(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const csv::SchemaError& e) {
    throw DataError(e.what());
  } catch (const csv::ParseError& e) {
    throw DataError(e.what());
  } catch (const relaydata::SchemaMismatch& e) {
    throw DataError(e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
}

}  // namespace

// --- ingest -------------------------------------------------------------------

void cmd_ingest(const IngestArgs& args) {
  const json cfg = load_config(args.common.config);
  for (const auto& [key, _] : cfg.items()) {
    if (key != "genesis_ms" && key != "window_ms" && key != "fields" && key != "bids" &&
        key != "delivered") {
      throw UsageError(fmt::format("unknown config key '{}'", key));
    }
  }

  relaydata::IngestOptions options;
  if (cfg.contains("genesis_ms")) options.genesis_unix_ms = get_key<std::int64_t>(cfg, "genesis_ms");
  if (args.genesis_ms) options.genesis_unix_ms = *args.genesis_ms;
  if (!args.genesis_ms && !cfg.contains("genesis_ms")) {
    throw UsageError("genesis timestamp required (--genesis-ms or config key 'genesis_ms')");
  }
  if (cfg.contains("window_ms")) {
    const auto w = get_key<std::vector<std::int64_t>>(cfg, "window_ms");
    if (w.size() != 2 || w[0] > w[1]) throw UsageError("config key 'window_ms': expected [min, max]");
    options.window = {w[0], w[1]};
  }
  json fields = cfg.value("fields", json::object());
  if (!args.fields.empty()) fields = load_config(args.fields);
  try {
    options.fields = relaydata::FieldMap::from_json(fields);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  std::vector<std::pair<std::string, std::string>> bid_inputs, delivered_inputs;
  for (const char* key : {"bids", "delivered"}) {
    if (!cfg.contains(key)) continue;
    auto& dest = std::string_view(key) == "bids" ? bid_inputs : delivered_inputs;
    for (const auto& [relay, path] : get_key<std::map<std::string, std::string>>(cfg, key)) {
      dest.emplace_back(relay, path);
    }
  }
  // Flags replace the config's list rather than extending it.
  if (!args.bids.empty()) bid_inputs.clear();
  for (const auto& s : args.bids) bid_inputs.push_back(split_relay_path(s));
  if (!args.delivered.empty()) delivered_inputs.clear();
  for (const auto& s : args.delivered) delivered_inputs.push_back(split_relay_path(s));
  if (bid_inputs.empty()) throw UsageError("no bid inputs (--bids RELAY=PATH)");

  std::vector<relaydata::BidRecord> raw;
  std::vector<relaydata::BidRecord> within;
  for (const auto& [relay, path] : bid_inputs) {
    auto in = open_in(path, "--bids");
    auto ingest = as_data_error([&] { return relaydata::parse_bids(in, relay, options); });
    if (args.common.verbose) {
      std::cerr << fmt::format("{}: {} lines, {} accepted, {} malformed, {} out of window\n", path,
                               ingest.report.lines, ingest.report.accepted,
                               ingest.report.malformed, ingest.report.rejected);
      for (const auto& w : ingest.report.warnings) std::cerr << "  " << w << '\n';
    }
    auto dedup = relaydata::dedup_within_relay(ingest.bids, relay);
    within.insert(within.end(), dedup.begin(), dedup.end());
    raw.insert(raw.end(), std::make_move_iterator(ingest.bids.begin()),
               std::make_move_iterator(ingest.bids.end()));
  }
  std::stable_sort(within.begin(), within.end(), [](const auto& a, const auto& b) {
    return std::tie(a.relay_id, a.slot, a.arrival_ms) < std::tie(b.relay_id, b.slot, b.arrival_ms);
  });
  const auto across = relaydata::dedup_across_relays(within);
  const auto stats = relaydata::duplicate_stats(raw);

  std::vector<std::string> outputs{args.common.out, sibling_path(args.common.out, "_across"),
                                   sibling_path(args.common.out, "_duplicates"),
                                   sibling_path(args.common.out, "_duplicate_summary")};
  {
    auto f = open_out(outputs[0]);
    relaydata::write_bids_csv(f, within);
  }
  {
    auto f = open_out(outputs[1]);
    relaydata::write_bids_csv(f, across);
  }
  {
    auto f = open_out(outputs[2]);
    relaydata::write_duplicate_stats_csv(f, stats);
  }
  {
    auto f = open_out(outputs[3]);
    relaydata::write_duplicate_summary_csv(f, stats);
  }

  if (!delivered_inputs.empty()) {
    std::vector<relaydata::DeliveredPayload> payloads;
    for (const auto& [relay, path] : delivered_inputs) {
      auto in = open_in(path, "--delivered");
      auto ingest = as_data_error([&] { return relaydata::parse_delivered(in, relay, options.fields); });
      payloads.insert(payloads.end(), ingest.payloads.begin(), ingest.payloads.end());
    }
    std::stable_sort(payloads.begin(), payloads.end(), [](const auto& a, const auto& b) {
      return std::tie(a.slot, a.relay_id) < std::tie(b.slot, b.relay_id);
    });
    outputs.push_back(sibling_path(args.common.out, "_delivered"));
    auto f = open_out(outputs.back());
    relaydata::write_delivered_csv(f, payloads);
  }

  json resolved;
  resolved["genesis_ms"] = options.genesis_unix_ms;
  resolved["window_ms"] = {options.window.min_ms, options.window.max_ms};
  resolved["fields"] = fields;
  resolved["bids"] = json::array();
  for (const auto& [r, p] : bid_inputs) resolved["bids"].push_back({r, p});
  resolved["delivered"] = json::array();
  for (const auto& [r, p] : delivered_inputs) resolved["delivered"].push_back({r, p});
  write_manifest(args.common.out, "ingest", resolved, std::nullopt, outputs);
}

// --- analyze ------------------------------------------------------------------

namespace {

std::vector<relaydata::BidRecord> load_bids(const std::string& path) {
  auto in = open_in(path, "--bids");
  return as_data_error([&] { return relaydata::read_bids_csv(in); });
}

std::vector<relaydata::DeliveredPayload> load_delivered(const std::string& path) {
  auto in = open_in(path, "--delivered");
  return as_data_error([&] { return relaydata::read_delivered_csv(in); });
}

csv::Table load_table(const std::string& path, const std::vector<std::string>& required) {
  auto in = open_in(path, "--input");
  return as_data_error([&] {
    auto t = csv::Table::read(in);
    t.require(required);
    return t;
  });
}

std::string wei_string(const relaydata::Wei& w) { return w.str(); }

std::vector<std::string> analyze_regress(const AnalyzeArgs& args) {
  const auto bids = load_bids(args.bids);
  const auto fit = as_data_error([&] { return analytics::marginal_value_of_time(bids); });
  auto f = open_out(args.common.out);
  csv::Writer w(f);
  w.row({"n", "slope_eth_per_ms", "intercept_eth", "r_squared"});
  w.row({std::to_string(fit.n), csv::format_double(fit.slope), csv::format_double(fit.intercept),
         csv::format_double(fit.r_squared)});
  return {args.common.out};
}

std::vector<std::string> analyze_winners(const AnalyzeArgs& args) {
  const auto bids = load_bids(args.bids);
  const auto payloads = load_delivered(args.delivered);
  auto timings = as_data_error([&] { return analytics::classify_winners(payloads, bids); });
  std::stable_sort(timings.begin(), timings.end(),
                   [](const auto& a, const auto& b) { return a.slot < b.slot; });

  std::map<std::uint64_t, std::vector<relaydata::BidRecord>> by_slot;
  for (const auto& b : bids) by_slot[b.slot].push_back(b);

  const std::string detail = args.common.out;
  const std::string summary = sibling_path(args.common.out, "_summary");
  const std::string relays = sibling_path(args.common.out, "_relays");
  {
    auto f = open_out(detail);
    csv::Writer w(f);
    w.row({"slot", "relay", "class", "winner_arrival_ms", "highest_arrival_ms", "delta_t_ms",
           "winner_value_wei", "highest_value_wei", "delta_v_eth", "growth_from_first_bid_pct"});
    for (const auto& t : timings) {
      std::optional<double> growth;
      const auto& slot_bids = by_slot[t.slot];
      for (const auto& b : slot_bids) {
        if (b.value_wei == t.winner_value_wei && b.arrival_ms == t.winner_arrival_ms) {
          growth = analytics::growth_from_first_bid_pct(b, slot_bids);
          break;
        }
      }
      w.row({std::to_string(t.slot), t.winner_relay, analytics::to_string(t.cls),
             std::to_string(t.winner_arrival_ms), std::to_string(t.highest_arrival_ms),
             std::to_string(t.delta_t_ms), wei_string(t.winner_value_wei),
             wei_string(t.highest_value_wei), csv::format_double(t.delta_v_eth),
             csv::format_optional(growth)});
    }
  }
  {
    const auto s = analytics::unrealized_value(timings);
    auto f = open_out(summary);
    csv::Writer w(f);
    w.row({"slots", "early_count", "late_count", "highest_count", "unrealized_eth",
           "realizable_eth", "median_delta_t_ms"});
    w.row({std::to_string(timings.size()), std::to_string(s.early_count),
           std::to_string(s.late_count), std::to_string(s.highest_count),
           csv::format_double(s.unrealized_eth), csv::format_double(s.realizable_eth),
           csv::format_optional(s.median_delta_t_ms)});
  }
  {
    const auto stats = analytics::relay_winner_stats(payloads, bids);
    auto f = open_out(relays);
    csv::Writer w(f);
    w.row({"relay", "blocks_delivered", "avg_bids_per_slot", "median_winner_arrival_ms",
           "median_winner_value_eth"});
    for (const auto& r : stats) {
      w.row({r.relay_id, std::to_string(r.blocks_delivered),
             csv::format_double(r.avg_bids_per_slot),
             csv::format_optional(r.median_winner_arrival_ms),
             csv::format_optional(r.median_winner_value_eth)});
    }
  }
  return {detail, summary, relays};
}

std::vector<std::string> analyze_shares(const AnalyzeArgs& args) {
  auto in = open_in(args.input, "--input");
  const auto table = as_data_error([&] { return csv::Table::read(in); });
  const bool counts = table.has("attestor_count");
  as_data_error([&] {
    table.require(counts ? std::vector<std::string>{"slot", "block_root", "attestor_count",
                                                    "committee_size"}
                         : std::vector<std::string>{"slot", "block_root", "block_weight_gwei",
                                                    "committee_weight_gwei"});
    return 0;
  });
  std::vector<analytics::AttestationShareRecord> records;
  as_data_error([&] {
    for (std::size_t i = 0; i < table.rows(); ++i) {
      analytics::AttestationShareRecord r;
      r.slot = csv::to_uint64(table.at(i, "slot"), "slot");
      r.block_root = table.at(i, "block_root");
      r.share = counts ? analytics::attestation_share_from_counts(
                             csv::to_uint64(table.at(i, "attestor_count"), "attestor_count"),
                             csv::to_uint64(table.at(i, "committee_size"), "committee_size"))
                       : analytics::attestation_share(
                             csv::to_uint64(table.at(i, "block_weight_gwei"), "block_weight_gwei"),
                             csv::to_uint64(table.at(i, "committee_weight_gwei"),
                                            "committee_weight_gwei"));
      if (table.has("winner_arrival_ms") && !table.at(i, "winner_arrival_ms").empty()) {
        r.winner_arrival_ms = csv::to_int64(table.at(i, "winner_arrival_ms"), "winner_arrival_ms");
      }
      r.vulnerable = analytics::reorg_vulnerable(r.share);
      records.push_back(std::move(r));
    }
    return 0;
  });
  std::stable_sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    return std::tie(a.slot, a.block_root) < std::tie(b.slot, b.block_root);
  });

  const std::string summary = sibling_path(args.common.out, "_summary");
  {
    auto f = open_out(args.common.out);
    csv::Writer w(f);
    w.row({"slot", "block_root", "share", "winner_arrival_ms", "vulnerable"});
    for (const auto& r : records) {
      w.row({std::to_string(r.slot), r.block_root, csv::format_double(r.share),
             r.winner_arrival_ms ? std::to_string(*r.winner_arrival_ms) : "",
             r.vulnerable ? "1" : "0"});
    }
  }
  {
    std::size_t vulnerable = 0;
    double sum = 0.0;
    for (const auto& r : records) {
      sum += r.share;
      if (r.vulnerable) ++vulnerable;
    }
    auto f = open_out(summary);
    csv::Writer w(f);
    w.row({"blocks", "mean_share", "vulnerable_count"});
    w.row({std::to_string(records.size()),
           records.empty() ? "" : csv::format_double(sum / static_cast<double>(records.size())),
           std::to_string(vulnerable)});
  }
  return {args.common.out, summary};
}

std::vector<std::string> analyze_orphans(const AnalyzeArgs& args) {
  const auto table = load_table(args.input, {"slot", "arrival_ms", "status"});
  std::vector<analytics::BlockObservation> blocks;
  as_data_error([&] {
    for (std::size_t i = 0; i < table.rows(); ++i) {
      analytics::BlockObservation b;
      b.slot = csv::to_uint64(table.at(i, "slot"), "slot");
      if (!table.at(i, "arrival_ms").empty()) {
        b.arrival_ms = csv::to_int64(table.at(i, "arrival_ms"), "arrival_ms");
      }
      b.status = analytics::parse_block_status(table.at(i, "status"));
      blocks.push_back(b);
    }
    return 0;
  });
  const auto r = as_data_error([&] { return analytics::orphan_comparison(blocks); });
  auto f = open_out(args.common.out);
  csv::Writer w(f);
  w.row({"slots", "orphaned", "missed", "orphan_fraction", "median_orphaned_arrival_ms",
         "median_nonorphaned_arrival_ms", "late_nonorphaned", "earliest_orphaned_arrival_ms",
         "nonorphaned_after_earliest_orphan"});
  w.row({std::to_string(r.slots), std::to_string(r.orphaned_count), std::to_string(r.missed_count),
         csv::format_double(r.orphan_fraction),
         csv::format_optional(r.median_orphaned_arrival_ms),
         csv::format_optional(r.median_nonorphaned_arrival_ms),
         std::to_string(r.late_nonorphaned_count),
         r.earliest_orphaned_arrival_ms ? std::to_string(*r.earliest_orphaned_arrival_ms) : "",
         std::to_string(r.nonorphaned_after_earliest_orphan)});
  return {args.common.out};
}

std::vector<std::string> analyze_rewards(const AnalyzeArgs& args) {
  const auto table = load_table(args.input, {"epoch", "slot", "mev_eth", "proposal_eth"});
  std::vector<rewards::BlockReward> blocks;
  as_data_error([&] {
    for (std::size_t i = 0; i < table.rows(); ++i) {
      blocks.push_back({csv::to_uint64(table.at(i, "epoch"), "epoch"),
                        csv::to_uint64(table.at(i, "slot"), "slot"),
                        csv::to_double(table.at(i, "mev_eth"), "mev_eth"),
                        csv::to_double(table.at(i, "proposal_eth"), "proposal_eth")});
    }
    return 0;
  });
  // Medians are order-free, but sort anyway so ties in input order cannot leak.
  std::stable_sort(blocks.begin(), blocks.end(), [](const auto& a, const auto& b) {
    return std::tie(a.epoch, a.slot) < std::tie(b.epoch, b.slot);
  });
  const auto cmp = rewards::compare_rewards(blocks);
  const std::string summary = sibling_path(args.common.out, "_summary");
  {
    auto f = open_out(args.common.out);
    csv::Writer w(f);
    w.row({"epoch", "blocks", "median_mev_eth", "median_proposal_eth"});
    for (const auto& e : cmp.epochs) {
      w.row({std::to_string(e.epoch), std::to_string(e.blocks),
             csv::format_double(e.median_mev_eth), csv::format_double(e.median_proposal_eth)});
    }
  }
  {
    auto f = open_out(summary);
    csv::Writer w(f);
    w.row({"blocks", "median_mev_eth", "median_proposal_eth", "median_difference_eth",
           "mev_share_of_total"});
    w.row({std::to_string(blocks.size()), csv::format_optional(cmp.median_mev_eth),
           csv::format_optional(cmp.median_proposal_eth),
           csv::format_optional(cmp.median_difference_eth),
           csv::format_optional(cmp.mev_share_of_total)});
  }
  return {args.common.out, summary};
}

}  // namespace

void cmd_analyze(const AnalyzeArgs& args) {
  if (!args.common.config.empty()) {
    const auto cfg = load_config(args.common.config);
    if (!cfg.empty()) throw UsageError(fmt::format("unknown config key '{}'", cfg.begin().key()));
  }
  std::vector<std::string> outputs;
  if (args.analysis == "regress") {
    outputs = analyze_regress(args);
  } else if (args.analysis == "winners") {
    outputs = analyze_winners(args);
  } else if (args.analysis == "shares") {
    outputs = analyze_shares(args);
  } else if (args.analysis == "orphans") {
    outputs = analyze_orphans(args);
  } else if (args.analysis == "rewards") {
    outputs = analyze_rewards(args);
  } else {
    throw UsageError(fmt::format("unknown analysis '{}'", args.analysis));
  }
  json resolved;
  resolved["bids"] = args.bids;
  resolved["delivered"] = args.delivered;
  resolved["input"] = args.input;
  const std::string input_bytes =
      (args.bids.empty() ? "" : read_file(args.bids)) +
      (args.delivered.empty() ? "" : read_file(args.delivered)) +
      (args.input.empty() ? "" : read_file(args.input));
  resolved["input_digest"] = fmt::format("fnv1a64:{:016x}", fnv1a64(input_bytes));
  write_manifest(args.common.out, "analyze " + args.analysis, resolved, std::nullopt, outputs);
}

// --- sim ------------------------------------------------------------------------

SimSettings SimSettings::from_json(const json& doc) {
  SimSettings s;
  auto& c = s.config;
  for (const auto& [key, value] : doc.items()) {
    if (key == "n") c.n = get_key<std::uint32_t>(doc, key);
    else if (key == "mean_degree") c.mean_degree = get_key<double>(doc, key);
    else if (key == "topology_seed") c.topology_seed = get_key<std::uint64_t>(doc, key);
    else if (key == "tau_block") c.gossip.tau_block = get_key<double>(doc, key);
    else if (key == "tau_attestation") c.gossip.tau_attestation = get_key<double>(doc, key);
    else if (key == "duration") c.duration = get_key<double>(doc, key);
    else if (key == "x_d") c.x_d = get_key<double>(doc, key);
    else if (key == "t_d") c.t_d = get_key<double>(doc, key);
    else if (key == "seed") c.seed = get_key<std::uint64_t>(doc, key);
    else if (key == "seeds") s.seeds = get_key<std::size_t>(doc, key);
    else if (key == "threads") s.threads = get_key<unsigned>(doc, key);
    else if (key == "lambda_eth_per_ms") c.payoff.lambda_eth_per_ms = get_key<double>(doc, key);
    else if (key == "base_value_eth") c.payoff.base_value_eth = get_key<double>(doc, key);
    else if (key == "proposer_boost") c.proposer_boost = get_key<bool>(doc, key);
    else if (key == "grid") {
      if (!value.is_object()) throw UsageError("config key 'grid': expected an object");
      for (const auto& [gk, _] : value.items()) {
        if (gk == "x_d") s.grid.x_d = get_key<std::vector<double>>(value, gk);
        else if (gk == "t_d") s.grid.t_d = get_key<std::vector<double>>(value, gk);
        else throw UsageError(fmt::format("unknown config key 'grid.{}'", gk));
      }
    } else {
      throw UsageError(fmt::format("unknown config key '{}'", key));
    }
  }
  return s;
}

json SimSettings::to_json() const {
  const auto& c = config;
  return json{{"n", c.n},
              {"mean_degree", c.mean_degree},
              {"topology_seed", c.topology_seed},
              {"tau_block", c.gossip.tau_block},
              {"tau_attestation", c.gossip.tau_attestation},
              {"duration", c.duration},
              {"x_d", c.x_d},
              {"t_d", c.t_d},
              {"seed", c.seed},
              {"seeds", seeds},
              {"lambda_eth_per_ms", c.payoff.lambda_eth_per_ms},
              {"base_value_eth", c.payoff.base_value_eth},
              {"proposer_boost", c.proposer_boost},
              {"grid", {{"x_d", grid.x_d}, {"t_d", grid.t_d}}}};
}

namespace {

SimSettings resolve_sim(const SimArgs& args) {
  auto s = SimSettings::from_json(load_config(args.common.config));
  if (args.common.seed) s.config.seed = *args.common.seed;
  if (args.x_d) s.config.x_d = *args.x_d;
  if (args.t_d) s.config.t_d = *args.t_d;
  if (args.duration) s.config.duration = *args.duration;
  if (args.seeds) s.seeds = *args.seeds;
  if (args.threads) s.threads = *args.threads;
  try {
    s.config.validate();
    if (s.seeds < 1) throw std::invalid_argument("seeds must be >= 1");
    for (double x : s.grid.x_d) {
      if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("grid.x_d values must lie in [0, 1]");
    }
    for (double t : s.grid.t_d) waitinggame::DelayPolicy{t}.validate();
    if (s.grid.x_d.empty() || s.grid.t_d.empty()) throw std::invalid_argument("grid is empty");
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return s;
}

}  // namespace

void cmd_sim_run(const SimArgs& args) {
  const auto s = resolve_sim(args);
  const bool want_trace = !args.trace_out.empty();
  const auto run = waitinggame::run_simulation_detailed(s.config, want_trace);
  std::vector<std::string> outputs{args.common.out};
  {
    auto f = open_out(args.common.out);
    waitinggame::write_run_csv(f, s.config, run.metrics);
  }
  if (!args.blocks_out.empty()) {
    auto f = open_out(args.blocks_out);
    waitinggame::write_blocks_csv(f, run);
    outputs.push_back(args.blocks_out);
  }
  if (want_trace) {
    auto f = open_out(args.trace_out);
    simnet::write_trace_csv(f, run.trace);
    outputs.push_back(args.trace_out);
  }
  if (args.common.verbose) {
    std::cerr << fmt::format("events {} interactions {} deliveries {} slots {}\n",
                             run.engine.events, run.engine.interactions, run.engine.deliveries,
                             run.engine.slots);
  }
  auto resolved = s.to_json();
  resolved.erase("seeds");
  resolved.erase("grid");
  write_manifest(args.common.out, "sim run", resolved, s.config.seed, outputs);
}

void cmd_sim_sweep(const SimArgs& args) {
  const auto s = resolve_sim(args);
  const auto result = waitinggame::sweep(s.grid, s.seeds, s.config, s.threads);
  for (const auto& c : result.cells) {
    if (c.error) {
      std::cerr << fmt::format("cell x_d={} t_d={} failed: {}\n", c.x_d, c.t_d, *c.error);
    }
  }
  {
    auto f = open_out(args.common.out);
    waitinggame::write_sweep_csv(f, result);
  }
  auto resolved = s.to_json();
  resolved.erase("x_d");
  resolved.erase("t_d");
  write_manifest(args.common.out, "sim sweep", resolved, s.config.seed, {args.common.out});
}

}  // namespace waitgame::cli
