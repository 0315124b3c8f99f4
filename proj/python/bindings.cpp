#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <tuple>
#include <vector>

#include "waitgame/analytics.hpp"
#include "waitgame/consensus.hpp"
#include "waitgame/rewards.hpp"
#include "waitgame/simnet.hpp"
#include "waitgame/waitinggame.hpp"

namespace py = pybind11;
using namespace waitgame;
namespace wg = waitgame::waitinggame;

namespace {

/// blocks: (id, slot, parent); votes: (validator, slot, target).
consensus::BlockId ghost_head(const std::vector<std::tuple<std::uint32_t, std::int64_t, std::uint32_t>>& blocks,
                              const std::vector<std::tuple<std::uint32_t, std::int64_t, std::uint32_t>>& votes,
                              const std::vector<Gwei>& weights) {
  consensus::BlockTree tree;
  for (const auto& [id, slot, parent] : blocks) {
    consensus::Block b;
    b.id = id;
    b.slot = slot;
    b.parent = parent;
    tree.insert(b, 0.0);
  }
  consensus::LatestMessageTable table(weights.size());
  for (const auto& [v, slot, target] : votes) table.update({v, slot, target, 0.0});
  return consensus::lmd_ghost_head(tree, table, weights);
}

py::dict cell_dict(const wg::SweepCell& c) {
  py::dict d;
  d["x_d"] = c.x_d;
  d["t_d"] = c.t_d;
  d["seed_count"] = c.seed_count;
  d["mu_mean"] = c.mu_mean;
  d["mu_std"] = c.mu_std;
  d["theta_mean"] = c.theta_mean;
  d["theta_std"] = c.theta_std;
  d["mu_samples"] = c.mu_samples;
  d["theta_samples"] = c.theta_samples;
  d["error"] = c.error;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.attr("__version__") = WAITGAME_VERSION;

  py::register_exception<consensus::MalformedTree>(m, "MalformedTree", PyExc_ValueError);

  m.def("integer_sqrt", &rewards::integer_sqrt, py::arg("n"));
  m.def(
      "base_reward",
      [](Gwei effective, Gwei active, std::uint64_t factor) {
        rewards::RewardParams p;
        p.base_reward_factor = factor;
        return rewards::base_reward(effective, active, p);
      },
      py::arg("effective_balance_gwei"), py::arg("active_balance_gwei"),
      py::arg("base_reward_factor") = 64);
  m.def("flag_reward", &rewards::flag_reward, py::arg("flag_weight"),
        py::arg("weight_denominator"), py::arg("base_reward"), py::arg("attesting_balance_gwei"),
        py::arg("active_balance_gwei"));

  m.def("attestation_share", &analytics::attestation_share, py::arg("block_weight_gwei"),
        py::arg("committee_weight_gwei"));
  m.def("reorg_vulnerable", &analytics::reorg_vulnerable, py::arg("share"));

  m.def("ghost_head", &ghost_head, py::arg("blocks"), py::arg("votes"), py::arg("weights"),
        "Head of the tree rooted at genesis (id 0). blocks: (id, slot, parent), parents first; "
        "votes: (validator, slot, target).");

  m.def(
      "er_graph",
      [](std::uint32_t n, double mean_degree, std::uint64_t seed) {
        return simnet::generate_er_graph(n, mean_degree, seed).edges;
      },
      py::arg("n"), py::arg("mean_degree"), py::arg("seed"));

  py::class_<wg::SimConfig>(m, "SimConfig")
      .def(py::init<>())
      .def_readwrite("n", &wg::SimConfig::n)
      .def_readwrite("mean_degree", &wg::SimConfig::mean_degree)
      .def_readwrite("topology_seed", &wg::SimConfig::topology_seed)
      .def_property(
          "tau_block", [](const wg::SimConfig& c) { return c.gossip.tau_block; },
          [](wg::SimConfig& c, double v) { c.gossip.tau_block = v; })
      .def_property(
          "tau_attestation", [](const wg::SimConfig& c) { return c.gossip.tau_attestation; },
          [](wg::SimConfig& c, double v) { c.gossip.tau_attestation = v; })
      .def_readwrite("duration", &wg::SimConfig::duration)
      .def_readwrite("x_d", &wg::SimConfig::x_d)
      .def_readwrite("t_d", &wg::SimConfig::t_d)
      .def_readwrite("seed", &wg::SimConfig::seed)
      .def_readwrite("proposer_boost", &wg::SimConfig::proposer_boost)
      .def("validate", &wg::SimConfig::validate);

  py::class_<wg::RunMetrics>(m, "RunMetrics")
      .def_readonly("mu", &wg::RunMetrics::mu)
      .def_readonly("theta_d", &wg::RunMetrics::theta_d)
      .def_readonly("theta_d_normalized", &wg::RunMetrics::theta_d_normalized)
      .def_readonly("blocks_total", &wg::RunMetrics::blocks_total)
      .def_readonly("blocks_mainchain", &wg::RunMetrics::blocks_mainchain)
      .def_readonly("delayer_blocks", &wg::RunMetrics::delayer_blocks)
      .def_readonly("payoff_honest_eth", &wg::RunMetrics::payoff_honest_eth)
      .def_readonly("payoff_delayer_eth", &wg::RunMetrics::payoff_delayer_eth)
      .def_readonly("validator_payoff_eth", &wg::RunMetrics::validator_payoff_eth);

  m.def(
      "run_simulation",
      [](const wg::SimConfig& c) {
        py::gil_scoped_release release;
        return wg::run_simulation(c);
      },
      py::arg("config"));

  m.def(
      "sweep",
      [](const std::vector<double>& x_d, const std::vector<double>& t_d, std::size_t seeds,
         const wg::SimConfig& base, unsigned threads) {
        wg::SweepResult r;
        {
          py::gil_scoped_release release;
          r = wg::sweep(wg::SweepGrid{x_d, t_d}, seeds, base, threads);
        }
        py::list cells;
        for (const auto& c : r.cells) cells.append(cell_dict(c));
        return cells;
      },
      py::arg("x_d"), py::arg("t_d"), py::arg("seeds"), py::arg("base"), py::arg("threads") = 0);
}
