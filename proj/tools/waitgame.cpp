// waitgame: ingest relay data, run the analyses, simulate the waiting game.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 data error.

#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

void add_common(CLI::App* cmd, waitgame::cli::CommonArgs& common, bool out_required = true) {
  cmd->add_option("--config", common.config, "JSON configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", common.seed, "master seed (overrides the config)");
  auto* out = cmd->add_option("--out", common.out, "output CSV path");
  if (out_required) out->required();
  cmd->add_flag("--verbose,-v", common.verbose, "diagnostics on stderr");
}

}  // namespace

int main(int argc, char** argv) {
  namespace cli = waitgame::cli;
  CLI::App app{"Timing games in MEV-Boost: data pipeline and consensus simulator", "waitgame"};
  app.set_version_flag("--version", std::string(WAITGAME_VERSION));
  app.require_subcommand(1);

  cli::IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "normalize and deduplicate relay bid dumps");
  add_common(ingest_cmd, ingest.common);
  ingest_cmd->add_option("--bids", ingest.bids, "RELAY=PATH of newline-delimited bid records");
  ingest_cmd->add_option("--delivered", ingest.delivered, "RELAY=PATH of delivered payloads");
  ingest_cmd->add_option("--genesis-ms", ingest.genesis_ms, "genesis unix time in ms");
  ingest_cmd->add_option("--fields", ingest.fields, "JSON field-name mapping")
      ->check(CLI::ExistingFile);

  cli::AnalyzeArgs analyze;
  auto* analyze_cmd = app.add_subcommand("analyze", "empirical analyses over ingested data");
  analyze_cmd->require_subcommand(1);
  for (const char* name : {"regress", "winners", "shares", "orphans", "rewards"}) {
    auto* sub = analyze_cmd->add_subcommand(name);
    add_common(sub, analyze.common);
    sub->add_option("--bids", analyze.bids, "deduplicated bids CSV");
    sub->add_option("--delivered", analyze.delivered, "delivered payloads CSV");
    sub->add_option("--input", analyze.input, "input CSV");
    sub->callback([&analyze, name] { analyze.analysis = name; });
  }
  analyze_cmd->description("regress | winners | shares | orphans | rewards");

  cli::SimArgs sim;
  auto* sim_cmd = app.add_subcommand("sim", "agent-based consensus simulation");
  sim_cmd->require_subcommand(1);
  auto* run_cmd = sim_cmd->add_subcommand("run", "one simulation");
  auto* sweep_cmd = sim_cmd->add_subcommand("sweep", "grid over x_d and t_d");
  for (auto* sub : {run_cmd, sweep_cmd}) {
    add_common(sub, sim.common);
    sub->add_option("--x-d", sim.x_d, "fraction of delayers");
    sub->add_option("--t-d", sim.t_d, "delay in seconds");
    sub->add_option("--duration", sim.duration, "simulated seconds");
  }
  run_cmd->add_option("--blocks", sim.blocks_out, "per-block CSV");
  run_cmd->add_option("--trace", sim.trace_out, "event trace CSV");
  sweep_cmd->add_option("--seeds", sim.seeds, "replicates per cell");
  sweep_cmd->add_option("--threads", sim.threads, "worker threads (0 = all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (ingest_cmd->parsed()) {
      cli::cmd_ingest(ingest);
    } else if (analyze_cmd->parsed()) {
      cli::cmd_analyze(analyze);
    } else if (run_cmd->parsed()) {
      cli::cmd_sim_run(sim);
    } else if (sweep_cmd->parsed()) {
      cli::cmd_sim_sweep(sim);
    }
  } catch (const cli::UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const cli::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
