#include "waitgame/waitinggame.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

#include "waitgame/csv.hpp"

namespace waitgame::waitinggame {

StrategyAssignment assign_strategies(std::uint32_t n, double x_d, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("assign_strategies: n must be >= 1");
  if (!(x_d >= 0.0 && x_d <= 1.0)) throw std::invalid_argument("assign_strategies: x_d not in [0, 1]");
  StrategyAssignment a;
  a.n = n;
  a.x_d = x_d;
  a.seed = seed;
  a.mask.assign(n, 0);
  const auto k = static_cast<std::uint32_t>(std::lround(x_d * static_cast<double>(n)));
  // Partial Fisher-Yates: the first k slots of a shuffled identity.
  std::vector<ValidatorIndex> pool(n);
  std::iota(pool.begin(), pool.end(), 0u);
  Rng rng(seed);
  for (std::uint32_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::uint32_t>(rng.below(n - i));
    std::swap(pool[i], pool[j]);
    a.mask[pool[i]] = 1;
  }
  a.delayers.assign(pool.begin(), pool.begin() + k);
  std::sort(a.delayers.begin(), a.delayers.end());
  return a;
}

void DelayPolicy::validate() const {
  if (!(t_d >= 0.0 && t_d <= kSlotSeconds)) {
    throw std::invalid_argument(fmt::format("t_d = {} outside [0, 12]", t_d));
  }
}

double release_time(ValidatorIndex proposer, double slot_start, const DelayPolicy& policy,
                    const StrategyAssignment& assignment) {
  return assignment.is_delayer(proposer) ? slot_start + policy.t_d : slot_start;
}

double mev_payoff(double interval_since_previous_release_ms, const PayoffModel& model,
                  bool in_mainchain) {
  if (interval_since_previous_release_ms < 0.0) {
    throw std::invalid_argument("mev_payoff: negative interval");
  }
  if (!in_mainchain) return 0.0;
  return model.base_value_eth + model.lambda_eth_per_ms * interval_since_previous_release_ms;
}

std::optional<double> mainchain_rate(std::size_t mainchain_blocks, std::size_t produced_blocks) {
  if (produced_blocks == 0) return std::nullopt;
  return static_cast<double>(mainchain_blocks) / static_cast<double>(produced_blocks);
}

DelayerOrphans delayer_orphan_count(std::span<const Block> blocks,
                                    std::span<const std::uint8_t> in_mainchain,
                                    const StrategyAssignment& assignment) {
  if (blocks.size() != in_mainchain.size()) {
    throw std::invalid_argument("delayer_orphan_count: blocks and mainchain flags differ in length");
  }
  DelayerOrphans out;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (!assignment.is_delayer(blocks[i].proposer)) continue;
    ++out.delayer_blocks;
    if (!in_mainchain[i]) ++out.count;
  }
  if (out.delayer_blocks) {
    out.normalized = static_cast<double>(out.count) / static_cast<double>(out.delayer_blocks);
  }
  return out;
}

void SimConfig::validate() const {
  if (n < 2) throw std::invalid_argument("n must be >= 2");
  if (!(mean_degree > 0.0 && mean_degree < static_cast<double>(n))) {
    throw std::invalid_argument("mean_degree must lie in (0, n)");
  }
  gossip.validate();
  if (!(duration > 0.0)) throw std::invalid_argument("duration must be positive");
  if (!(x_d >= 0.0 && x_d <= 1.0)) throw std::invalid_argument("x_d must lie in [0, 1]");
  DelayPolicy{t_d}.validate();
}

// ---------------------------------------------------------------------------

namespace {

using consensus::Attestation;
using consensus::ValidatorView;
using simnet::Channel;
using simnet::Engine;
using simnet::NodeId;

/// Consensus behaviour of every validator, driven by engine events.
/// Proposers fix their parent when the slot starts; delayers only withhold
/// the broadcast.
class SlotDriver final : public simnet::EngineHooks {
 public:
  SlotDriver(const SimConfig& config, const StrategyAssignment& assignment)
      : config_(config),
        assignment_(assignment),
        policy_{config.t_d},
        proposer_rng_(derive_seed({config.seed, 2})),
        weights_(config.n, kUniformEffectiveBalanceGwei),
        committee_weight_(static_cast<Gwei>(config.n - 1) * kUniformEffectiveBalanceGwei) {
    views_.reserve(config.n);
    for (ValidatorIndex v = 0; v < config.n; ++v) views_.emplace_back(v, config.n);
  }

  void on_slot_start(Engine& engine, std::int64_t slot, double now) override {
    const auto proposer = static_cast<ValidatorIndex>(proposer_rng_.below(config_.n));
    proposers_.push_back(proposer);
    Block b;
    b.id = static_cast<BlockId>(blocks_.size() + 1);
    b.slot = slot;
    b.proposer = proposer;
    b.parent = views_[proposer].head(weights_);
    b.release_time = release_time(proposer, now, policy_, assignment_);
    blocks_.push_back(b);
    released_.push_back(0);
    engine.schedule_block_release(proposer, b.id, b.release_time);
  }

  void on_block_release(Engine&, NodeId proposer, std::uint64_t block, double now) override {
    views_[proposer].receive_block(blocks_[block - 1], now);
    released_[block - 1] = 1;
  }

  void on_attest_deadline(Engine& engine, std::int64_t slot, double now) override {
    const double slot_start = engine.slot_start(slot);
    const auto proposer = proposers_.at(static_cast<std::size_t>(slot));
    const Block& slot_block = blocks_.at(static_cast<std::size_t>(slot));
    consensus::BoostCandidate boost;
    boost.enabled = config_.proposer_boost;
    boost.block = slot_block.id;
    boost.release_offset = slot_block.release_time - slot_start;
    for (ValidatorIndex v = 0; v < config_.n; ++v) {
      if (v == proposer) continue;
      const auto att = consensus::attest_decision(views_[v], slot, slot_start, weights_,
                                                  now - slot_start, boost, committee_weight_);
      const auto id = attestations_.size();
      attestations_.push_back(att);
      views_[v].receive_attestation(att);
      engine.publish(v, Channel::Attestation, id);
    }
  }

  void on_receive(Engine&, NodeId node, Channel channel, std::uint64_t message,
                  double now) override {
    if (channel == Channel::Block) {
      views_[node].receive_block(blocks_[message - 1], now);
    } else {
      views_[node].receive_attestation(attestations_[message]);
    }
  }

  RunArtifacts finish() const {
    RunArtifacts out;
    consensus::BlockTree global;
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      if (!released_[i]) continue;
      global.insert(blocks_[i], blocks_[i].release_time);
      out.blocks.push_back(blocks_[i]);
    }
    consensus::LatestMessageTable table(config_.n);
    for (const auto& a : attestations_) table.update(a);
    const auto chain = consensus::mainchain(global, table, weights_);

    std::vector<std::uint8_t> on_chain(blocks_.size() + 1, 0);
    for (auto id : chain) on_chain[id] = 1;
    out.in_mainchain.reserve(out.blocks.size());
    for (const auto& b : out.blocks) out.in_mainchain.push_back(on_chain[b.id]);

    auto& m = out.metrics;
    m.blocks_total = out.blocks.size();
    m.blocks_mainchain = chain.size();
    m.mu = mainchain_rate(m.blocks_mainchain, m.blocks_total);
    const auto orphans = delayer_orphan_count(out.blocks, out.in_mainchain, assignment_);
    m.theta_d = orphans.count;
    m.theta_d_normalized = orphans.normalized;
    m.delayer_blocks = orphans.delayer_blocks;

    // Payoff interval runs from the previous release, on chain or not.
    std::vector<std::size_t> by_release(out.blocks.size());
    std::iota(by_release.begin(), by_release.end(), std::size_t{0});
    std::stable_sort(by_release.begin(), by_release.end(), [&](std::size_t a, std::size_t b) {
      return out.blocks[a].release_time < out.blocks[b].release_time;
    });
    m.validator_payoff_eth.assign(config_.n, 0.0);
    double previous = consensus::genesis_block().release_time;
    for (auto i : by_release) {
      const auto& b = out.blocks[i];
      const double pay =
          mev_payoff((b.release_time - previous) * 1000.0, config_.payoff, out.in_mainchain[i] != 0);
      previous = b.release_time;
      m.validator_payoff_eth[b.proposer] += pay;
      (assignment_.is_delayer(b.proposer) ? m.payoff_delayer_eth : m.payoff_honest_eth) += pay;
    }
    return out;
  }

 private:
  const SimConfig& config_;
  const StrategyAssignment& assignment_;
  DelayPolicy policy_;
  Rng proposer_rng_;
  std::vector<Gwei> weights_;
  Gwei committee_weight_;
  std::vector<ValidatorView> views_;
  std::vector<Block> blocks_;  // blocks_[id - 1]
  std::vector<std::uint8_t> released_;
  std::vector<ValidatorIndex> proposers_;  // per slot
  std::vector<Attestation> attestations_;
};

}  // namespace

RunArtifacts run_on_topology(const SimConfig& config, const simnet::Topology& topology,
                             bool record_trace) {
  config.validate();
  if (topology.n != config.n) throw std::invalid_argument("topology size differs from config.n");
  const auto assignment = assign_strategies(config.n, config.x_d, derive_seed({config.seed, 3}));
  simnet::EngineOptions opts;
  opts.record_trace = record_trace;
  Engine engine(topology, config.gossip, derive_seed({config.seed, 1}), opts);
  SlotDriver driver(config, assignment);
  auto trace = engine.run(driver, config.duration);
  auto out = driver.finish();
  out.trace = std::move(trace);
  out.engine = engine.stats();
  return out;
}

RunArtifacts run_simulation_detailed(const SimConfig& config, bool record_trace) {
  config.validate();
  const auto topology = simnet::generate_er_graph(config.n, config.mean_degree, config.topology_seed);
  return run_on_topology(config, topology, record_trace);
}

RunMetrics run_simulation(const SimConfig& config) {
  return run_simulation_detailed(config, false).metrics;
}

void write_blocks_csv(std::ostream& out, const RunArtifacts& run) {
  csv::Writer w(out);
  w.row({"block_id", "slot", "proposer", "parent", "release_time", "in_mainchain"});
  for (std::size_t i = 0; i < run.blocks.size(); ++i) {
    const auto& b = run.blocks[i];
    w.row({std::to_string(b.id), std::to_string(b.slot), std::to_string(b.proposer),
           std::to_string(b.parent), csv::format_double(b.release_time),
           run.in_mainchain[i] ? "1" : "0"});
  }
}

void write_run_csv(std::ostream& out, const SimConfig& config, const RunMetrics& m) {
  csv::Writer w(out);
  w.row({"seed", "x_d", "t_d", "blocks_total", "blocks_mainchain", "mu", "theta_d",
         "theta_d_normalized", "payoff_honest_eth", "payoff_delayer_eth"});
  w.row({std::to_string(config.seed), csv::format_double(config.x_d),
         csv::format_double(config.t_d), std::to_string(m.blocks_total),
         std::to_string(m.blocks_mainchain), csv::format_optional(m.mu),
         std::to_string(m.theta_d), csv::format_optional(m.theta_d_normalized),
         csv::format_double(m.payoff_honest_eth), csv::format_double(m.payoff_delayer_eth)});
}

// ---------------------------------------------------------------------------

SweepGrid SweepGrid::defaults() {
  SweepGrid g;
  g.x_d = {0.0, 0.25, 0.5, 0.75, 1.0};
  for (int t = 0; t <= 11; ++t) g.t_d.push_back(t);
  return g;
}

const SweepCell& SweepResult::cell(std::size_t x_index, std::size_t t_index) const {
  for (const auto& c : cells) {
    if (c.x_index == x_index && c.t_index == t_index) return c;
  }
  throw std::out_of_range("SweepResult::cell: no such cell");
}

std::uint64_t replicate_seed(std::uint64_t master, std::size_t x_index, std::size_t t_index,
                             std::size_t replicate) {
  return derive_seed({master, x_index, t_index, replicate});
}

namespace {

std::pair<double, double> mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

}  // namespace

SweepResult sweep(const SweepGrid& grid, std::size_t seeds, const SimConfig& base,
                  unsigned threads) {
  if (grid.x_d.empty() || grid.t_d.empty()) throw std::invalid_argument("sweep: empty grid");
  if (seeds < 1) throw std::invalid_argument("sweep: seeds must be >= 1");
  base.validate();
  const auto topology = simnet::generate_er_graph(base.n, base.mean_degree, base.topology_seed);

  const std::size_t n_cells = grid.x_d.size() * grid.t_d.size();
  const std::size_t n_jobs = n_cells * seeds;
  std::vector<std::optional<RunMetrics>> results(n_jobs);
  std::vector<std::string> errors(n_jobs);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t job; (job = next.fetch_add(1)) < n_jobs;) {
      const std::size_t cell = job / seeds, rep = job % seeds;
      const std::size_t xi = cell / grid.t_d.size(), ti = cell % grid.t_d.size();
      SimConfig cfg = base;
      cfg.x_d = grid.x_d[xi];
      cfg.t_d = grid.t_d[ti];
      cfg.seed = replicate_seed(base.seed, xi, ti, rep);
      try {
        results[job] = run_on_topology(cfg, topology, false).metrics;
      } catch (const std::exception& e) {
        errors[job] = e.what();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n_jobs));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  }

  SweepResult out;
  out.seeds = seeds;
  out.master_seed = base.seed;
  out.duration = base.duration;
  for (std::size_t c = 0; c < n_cells; ++c) {
    SweepCell cell;
    cell.x_index = c / grid.t_d.size();
    cell.t_index = c % grid.t_d.size();
    cell.x_d = grid.x_d[cell.x_index];
    cell.t_d = grid.t_d[cell.t_index];
    std::vector<double> norm, honest, delayer;
    for (std::size_t r = 0; r < seeds; ++r) {
      const auto job = c * seeds + r;
      if (!results[job]) {
        cell.error = fmt::format("replicate {}: {}", r, errors[job]);
        break;
      }
      const auto& m = *results[job];
      cell.mu_samples.push_back(m.mu.value_or(std::nan("")));
      cell.theta_samples.push_back(static_cast<double>(m.theta_d));
      if (m.theta_d_normalized) norm.push_back(*m.theta_d_normalized);
      honest.push_back(m.payoff_honest_eth);
      delayer.push_back(m.payoff_delayer_eth);
    }
    if (!cell.error) {
      cell.seed_count = seeds;
      std::tie(cell.mu_mean, cell.mu_std) = mean_std(cell.mu_samples);
      std::tie(cell.theta_mean, cell.theta_std) = mean_std(cell.theta_samples);
      if (!norm.empty()) cell.theta_norm_mean = mean_std(norm).first;
      cell.payoff_honest_mean = mean_std(honest).first;
      cell.payoff_delayer_mean = mean_std(delayer).first;
    }
    out.cells.push_back(std::move(cell));
  }
  return out;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
  csv::Writer w(out);
  w.row({"x_d", "t_d", "seed_count", "mu_mean", "mu_std", "theta_mean", "theta_std",
         "theta_norm_mean", "payoff_honest_mean", "payoff_delayer_mean"});
  for (const auto& c : result.cells) {
    if (c.error) {
      w.row({csv::format_double(c.x_d), csv::format_double(c.t_d), "0", "", "", "", "", "", "",
             ""});
      continue;
    }
    w.row({csv::format_double(c.x_d), csv::format_double(c.t_d), std::to_string(c.seed_count),
           csv::format_double(c.mu_mean), csv::format_double(c.mu_std),
           csv::format_double(c.theta_mean), csv::format_double(c.theta_std),
           csv::format_optional(c.theta_norm_mean), csv::format_double(c.payoff_honest_mean),
           csv::format_double(c.payoff_delayer_mean)});
  }
}

}  // namespace waitgame::waitinggame
