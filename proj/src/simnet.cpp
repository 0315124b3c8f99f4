#include "waitgame/simnet.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>

namespace waitgame::simnet {

std::vector<std::vector<NodeId>> Topology::adjacency() const {
  std::vector<std::vector<NodeId>> adj(n);
  for (auto [u, v] : edges) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  for (auto& a : adj) std::sort(a.begin(), a.end());
  return adj;
}

double Topology::mean_degree() const {
  return n ? 2.0 * static_cast<double>(edges.size()) / static_cast<double>(n) : 0.0;
}

bool Topology::connected() const {
  if (n == 0) return true;
  const auto adj = adjacency();
  std::vector<std::uint8_t> seen(n, 0);
  std::vector<NodeId> stack{0};
  seen[0] = 1;
  std::uint32_t count = 1;
  while (!stack.empty()) {
    const NodeId u = stack.back();
    stack.pop_back();
    for (NodeId v : adj[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        stack.push_back(v);
      }
    }
  }
  return count == n;
}

Topology generate_er_graph(std::uint32_t n, double mean_degree, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("generate_er_graph: n must be >= 2");
  if (!(mean_degree > 0.0) || !(mean_degree < static_cast<double>(n))) {
    throw std::invalid_argument("generate_er_graph: mean_degree must lie in (0, n)");
  }
  const double p = std::min(1.0, mean_degree / static_cast<double>(n - 1));
  constexpr int kMaxAttempts = 100;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Rng rng(derive_seed({seed, static_cast<std::uint64_t>(attempt)}));
    Topology t;
    t.n = n;
    t.seed = seed;
    for (NodeId u = 0; u < n; ++u) {
      for (NodeId v = u + 1; v < n; ++v) {
        if (rng.uniform01() < p) t.edges.emplace_back(u, v);
      }
    }
    if (t.connected()) return t;
  }
  throw std::runtime_error(fmt::format(
      "generate_er_graph: no connected graph for n={} mean_degree={} after {} attempts", n,
      mean_degree, kMaxAttempts));
}

void GossipConfig::validate() const {
  if (!(tau_block > 0.0)) throw std::invalid_argument("tau_block must be positive");
  if (!(tau_attestation > 0.0)) throw std::invalid_argument("tau_attestation must be positive");
}

double exponential_gap(double tau, double u) { return -tau * std::log(u); }

double sample_interaction_gap(double tau, Rng& rng) {
  if (!(tau > 0.0)) throw std::invalid_argument("sample_interaction_gap: tau must be positive");
  return exponential_gap(tau, rng.uniform_open_closed());
}

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::SlotStart: return "SLOT_START";
    case EventKind::AttestDeadline: return "ATTEST_DEADLINE";
    case EventKind::BlockRelease: return "BLOCK_RELEASE";
    case EventKind::GossipInteraction: return "GOSSIP_INTERACTION";
    case EventKind::SimEnd: return "SIM_END";
  }
  return "?";
}

const char* to_string(Channel channel) {
  return channel == Channel::Block ? "block" : "attestation";
}

void write_trace_csv(std::ostream& out, const Trace& trace) {
  out << "time,kind,node,detail\n";
  for (const auto& r : trace) {
    out << fmt::format("{:.9f},{},{},{}\n", r.time, to_string(r.kind),
                       r.node == kNoNode ? std::string() : std::to_string(r.node), r.detail);
  }
}

// ---------------------------------------------------------------------------

Engine::Engine(const Topology& topology, GossipConfig gossip, std::uint64_t seed,
               EngineOptions options)
    : n_(topology.n), gossip_(gossip), options_(options), rng_(seed), known_(2 * topology.n) {
  gossip_.validate();
  edges_.reserve(topology.edges.size() * 2);
  for (auto [u, v] : topology.edges) {
    edges_.push_back(DirectedEdge{u, v});
    edges_.push_back(DirectedEdge{v, u});
  }
}

std::int64_t Engine::complete_slots(double end_time, double slot_seconds) {
  if (!(end_time > 0.0)) return 0;
  return static_cast<std::int64_t>(std::floor(end_time / slot_seconds + 1e-12));
}

void Engine::push(Event e) {
  e.seq = next_seq_++;
  queue_.push(e);
}

void Engine::trace(double time, EventKind kind, NodeId node, std::string detail) {
  if (options_.record_trace) trace_.push_back(TraceRow{time, kind, node, std::move(detail)});
}

bool Engine::publish(NodeId node, Channel channel, std::uint64_t message) {
  auto& k = knowledge(node, channel);
  if (message >= k.has.size()) k.has.resize(std::max<std::size_t>(message + 1, k.has.size() * 2), 0);
  if (k.has[message]) return false;
  k.has[message] = 1;
  k.order.push_back(message);
  return true;
}

bool Engine::knows(NodeId node, Channel channel, std::uint64_t message) const {
  const auto& k = knowledge(node, channel);
  return message < k.has.size() && k.has[message];
}

void Engine::schedule_block_release(NodeId proposer, std::uint64_t block, double time) {
  if (time < now_) throw std::invalid_argument("schedule_block_release: time in the past");
  Event e;
  e.time = time;
  e.kind = EventKind::BlockRelease;
  e.node = proposer;
  e.payload = block;
  push(e);
}

void Engine::interact(EngineHooks& hooks, const Event& e) {
  auto& edge = edges_[e.payload];
  const auto ch = static_cast<std::size_t>(e.channel);
  const auto& from = knowledge(edge.from, e.channel);
  std::size_t moved = 0;
  // `from.order` may not grow during this loop: hooks only publish to the
  // receiving node, never to the sender.
  const std::size_t end = from.order.size();
  for (std::size_t i = edge.cursor[ch]; i < end; ++i) {
    const auto msg = from.order[i];
    if (publish(edge.to, e.channel, msg)) {
      ++moved;
      ++stats_.deliveries;
      hooks.on_receive(*this, edge.to, e.channel, msg, e.time);
    }
  }
  edge.cursor[ch] = end;
  ++stats_.interactions;
  if (moved) {
    trace(e.time, EventKind::GossipInteraction, edge.from,
          fmt::format("to={} channel={} messages={}", edge.to, to_string(e.channel), moved));
  }
}

Trace Engine::run(EngineHooks& hooks, double end_time) {
  if (!(end_time > 0.0)) throw std::invalid_argument("Engine::run: end_time must be positive");
  if (running_) throw std::logic_error("Engine::run called twice");
  running_ = true;

  const std::int64_t slots = complete_slots(end_time, options_.slot_seconds);
  stats_.slots = slots;
  for (std::int64_t s = 0; s < slots; ++s) {
    Event e;
    e.time = slot_start(s);
    e.kind = EventKind::SlotStart;
    e.slot = s;
    push(e);
  }
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    for (Channel c : {Channel::Block, Channel::Attestation}) {
      const double tau = c == Channel::Block ? gossip_.tau_block : gossip_.tau_attestation;
      Event e;
      e.time = sample_interaction_gap(tau, rng_);
      e.kind = EventKind::GossipInteraction;
      e.channel = c;
      e.payload = i;
      e.node = edges_[i].from;
      e.peer = edges_[i].to;
      push(e);
    }
  }

  while (!queue_.empty() && queue_.top().time <= end_time) {
    const Event e = queue_.top();
    queue_.pop();
    now_ = e.time;
    ++stats_.events;
    try {
      switch (e.kind) {
        case EventKind::SlotStart: {
          trace(e.time, e.kind, kNoNode, fmt::format("slot={}", e.slot));
          // Deadline is queued before anything the slot-start hook schedules,
          // so a release at exactly slot_start + offset is processed after it.
          Event deadline;
          deadline.time = e.time + options_.attest_offset;
          deadline.kind = EventKind::AttestDeadline;
          deadline.slot = e.slot;
          push(deadline);
          hooks.on_slot_start(*this, e.slot, e.time);
          break;
        }
        case EventKind::AttestDeadline:
          trace(e.time, e.kind, kNoNode, fmt::format("slot={}", e.slot));
          hooks.on_attest_deadline(*this, e.slot, e.time);
          break;
        case EventKind::BlockRelease:
          trace(e.time, e.kind, e.node, fmt::format("block={}", e.payload));
          publish(e.node, Channel::Block, e.payload);
          hooks.on_block_release(*this, e.node, e.payload, e.time);
          break;
        case EventKind::GossipInteraction: {
          interact(hooks, e);
          const double tau =
              e.channel == Channel::Block ? gossip_.tau_block : gossip_.tau_attestation;
          Event next = e;
          next.time = e.time + sample_interaction_gap(tau, rng_);
          push(next);
          break;
        }
        case EventKind::SimEnd:
          break;
      }
    } catch (const EngineError&) {
      throw;
    } catch (const std::exception& ex) {
      throw EngineError(fmt::format("handler failed at t={} ({}): {}", e.time,
                                    to_string(e.kind), ex.what()),
                        e);
    }
  }
  now_ = end_time;
  trace(end_time, EventKind::SimEnd, kNoNode, "");
  return std::move(trace_);
}

}  // namespace waitgame::simnet
