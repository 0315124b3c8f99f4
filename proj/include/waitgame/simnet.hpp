#pragma once

// Peer-to-peer topology and the continuous-time gossip event engine.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "waitgame/common.hpp"

namespace waitgame::simnet {

using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

struct Topology {
  std::uint32_t n = 0;
  std::vector<std::pair<NodeId, NodeId>> edges;  // u < v, sorted, unique
  std::uint64_t seed = 0;

  std::vector<std::vector<NodeId>> adjacency() const;
  double mean_degree() const;
  bool connected() const;
};

/// G(n, p) with p = mean_degree / (n - 1), resampled with sub-seeds
/// derive_seed({seed, attempt}) until connected. Throws std::runtime_error
/// after 100 disconnected draws.
Topology generate_er_graph(std::uint32_t n, double mean_degree, std::uint64_t seed);

struct GossipConfig {
  double tau_block = 3.0;        // mean seconds between block exchanges on an edge
  double tau_attestation = 3.0;  // same, attestations

  void validate() const;
};

/// -tau * ln(u) for u in (0, 1]: exponential with mean tau.
double exponential_gap(double tau, double u);
double sample_interaction_gap(double tau, Rng& rng);

enum class EventKind : std::uint8_t {
  SlotStart,
  AttestDeadline,
  BlockRelease,
  GossipInteraction,
  SimEnd,
};

enum class Channel : std::uint8_t { Block = 0, Attestation = 1 };

const char* to_string(EventKind kind);
const char* to_string(Channel channel);

struct Event {
  double time = 0.0;
  std::uint64_t seq = 0;
  EventKind kind = EventKind::SimEnd;
  NodeId node = kNoNode;
  NodeId peer = kNoNode;
  Channel channel = Channel::Block;
  std::int64_t slot = 0;
  std::uint64_t payload = 0;
};

struct TraceRow {
  double time = 0.0;
  EventKind kind = EventKind::SimEnd;
  NodeId node = kNoNode;
  std::string detail;
};

using Trace = std::vector<TraceRow>;

/// CSV: time,kind,node,detail
void write_trace_csv(std::ostream& out, const Trace& trace);

class Engine;

/// Consensus logic plugs in here. Exceptions thrown from a hook abort the
/// run as an EngineError carrying the event being processed.
class EngineHooks {
 public:
  virtual ~EngineHooks() = default;
  virtual void on_slot_start(Engine&, std::int64_t /*slot*/, double /*now*/) {}
  virtual void on_attest_deadline(Engine&, std::int64_t /*slot*/, double /*now*/) {}
  virtual void on_block_release(Engine&, NodeId /*proposer*/, std::uint64_t /*block*/,
                                double /*now*/) {}
  virtual void on_receive(Engine&, NodeId /*node*/, Channel, std::uint64_t /*message*/,
                          double /*now*/) {}
};

class EngineError : public std::runtime_error {
 public:
  EngineError(const std::string& what, Event event)
      : std::runtime_error(what), event_(event) {}
  const Event& event() const noexcept { return event_; }

 private:
  Event event_;
};

struct EngineOptions {
  double slot_seconds = kSlotSeconds;
  double attest_offset = kAttestationDeadlineSeconds;
  bool record_trace = false;
};

struct EngineStats {
  std::uint64_t events = 0;
  std::uint64_t interactions = 0;
  std::uint64_t deliveries = 0;
  std::int64_t slots = 0;
};

/// Single-threaded discrete-event loop. Every ordered adjacent pair (u, v)
/// runs two renewal clocks (block and attestation channel) with exponential
/// gaps; on each tick u hands v everything on that channel that v lacks.
/// Slots start every `slot_seconds`; only slots that end by `end_time` are
/// scheduled.
class Engine {
 public:
  Engine(const Topology& topology, GossipConfig gossip, std::uint64_t seed,
         EngineOptions options = {});

  /// `node` learns `message` locally (a release or its own attestation).
  /// Returns false if it already knew it.
  bool publish(NodeId node, Channel channel, std::uint64_t message);
  bool knows(NodeId node, Channel channel, std::uint64_t message) const;

  void schedule_block_release(NodeId proposer, std::uint64_t block, double time);

  double now() const noexcept { return now_; }
  std::uint32_t node_count() const noexcept { return n_; }
  const EngineOptions& options() const noexcept { return options_; }
  double slot_start(std::int64_t slot) const noexcept {
    return static_cast<double>(slot) * options_.slot_seconds;
  }

  /// Number of complete slots in [0, end_time].
  static std::int64_t complete_slots(double end_time, double slot_seconds = kSlotSeconds);

  /// Runs to `end_time`; returns the trace (empty unless record_trace).
  Trace run(EngineHooks& hooks, double end_time);

  const EngineStats& stats() const noexcept { return stats_; }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const noexcept {
      if (a.time != b.time) return a.time > b.time;
      return a.seq > b.seq;
    }
  };

  struct Knowledge {
    std::vector<std::uint64_t> order;  // acquisition order
    std::vector<std::uint8_t> has;     // dense membership by message id
  };

  struct DirectedEdge {
    NodeId from;
    NodeId to;
    std::size_t cursor[2] = {0, 0};  // prefix of from's order already offered to `to`
  };

  void push(Event e);
  void trace(double time, EventKind kind, NodeId node, std::string detail);
  Knowledge& knowledge(NodeId node, Channel channel) {
    return known_[static_cast<std::size_t>(node) * 2 + static_cast<std::size_t>(channel)];
  }
  const Knowledge& knowledge(NodeId node, Channel channel) const {
    return known_[static_cast<std::size_t>(node) * 2 + static_cast<std::size_t>(channel)];
  }
  void interact(EngineHooks& hooks, const Event& e);

  std::uint32_t n_;
  GossipConfig gossip_;
  EngineOptions options_;
  Rng rng_;
  std::vector<DirectedEdge> edges_;
  std::vector<Knowledge> known_;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::uint64_t next_seq_ = 0;
  double now_ = 0.0;
  bool running_ = false;
  Trace trace_;
  EngineStats stats_;
};

}  // namespace waitgame::simnet
