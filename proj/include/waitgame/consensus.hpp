#pragma once

// Block tree, latest-message table and LMD-GHOST head selection.

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "waitgame/common.hpp"

namespace waitgame::consensus {

using BlockId = std::uint32_t;

inline constexpr BlockId kGenesisId = 0;
inline constexpr std::int64_t kGenesisSlot = -1;
inline constexpr BlockId kNoBlock = std::numeric_limits<BlockId>::max();

struct Block {
  BlockId id = kGenesisId;
  std::int64_t slot = kGenesisSlot;
  ValidatorIndex proposer = 0;
  BlockId parent = kNoBlock;  // kNoBlock only for genesis
  double release_time = 0.0;
};

/// Genesis block (id 0, slot -1) released at the start of slot -1.
Block genesis_block(double slot_seconds = kSlotSeconds);

class MalformedTree : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rooted tree of blocks known to one observer, each with its local arrival
/// time. Blocks must be inserted after their parent.
class BlockTree {
 public:
  explicit BlockTree(const Block& genesis = genesis_block(), double genesis_arrival = 0.0);

  /// Throws MalformedTree on unknown parent, non-increasing slot or a
  /// duplicate id.
  void insert(const Block& block, double arrival_time);

  bool contains(BlockId id) const noexcept {
    return id < index_.size() && index_[id] != kAbsent;
  }
  const Block& block(BlockId id) const;
  double arrival(BlockId id) const;
  std::span<const BlockId> children(BlockId id) const;

  BlockId root() const noexcept { return order_.front(); }
  std::size_t size() const noexcept { return order_.size(); }
  /// Insertion order; every parent precedes its children.
  std::span<const BlockId> ids() const noexcept { return order_; }

  /// Position of `id` in ids(); used to index per-block arrays.
  std::size_t position(BlockId id) const { return index_.at(id); }

 private:
  static constexpr std::uint32_t kAbsent = std::numeric_limits<std::uint32_t>::max();

  std::vector<std::uint32_t> index_;  // block id -> position
  std::vector<BlockId> order_;
  std::vector<Block> blocks_;
  std::vector<double> arrivals_;
  std::vector<std::vector<BlockId>> children_;
};

struct Attestation {
  ValidatorIndex validator = 0;
  std::int64_t slot = 0;
  BlockId target = kGenesisId;
  double creation_time = 0.0;
};

struct LatestMessage {
  std::int64_t slot = 0;
  BlockId target = kGenesisId;
};

class LatestMessageTable {
 public:
  explicit LatestMessageTable(std::size_t validators = 0) : entries_(validators) {}

  /// Replaces the entry iff it is empty or the attestation's slot is
  /// strictly greater. Equal-slot votes keep whichever arrived first.
  bool update(const Attestation& attestation);

  const std::optional<LatestMessage>& get(ValidatorIndex v) const;
  std::size_t capacity() const noexcept { return entries_.size(); }

 private:
  std::vector<std::optional<LatestMessage>> entries_;
};

/// Subtree weight per block, indexed by BlockTree::position.
struct SubtreeWeights {
  std::vector<Gwei> by_position;
};

struct BoostCandidate {
  BlockId block = kNoBlock;
  double release_offset = 0.0;  // release time minus its slot start
  bool enabled = false;
};

struct ForkChoiceOptions {
  /// Blocks whose local arrival is not strictly before the cutoff are
  /// treated as unknown.
  std::optional<double> arrival_cutoff;
  BoostCandidate boost;
  Gwei committee_weight = 0;
};

/// Each validator's weight lands on its latest target and every ancestor.
/// Votes for blocks not in the tree (or not visible) are ignored.
SubtreeWeights compute_subtree_weights(const BlockTree& tree, const LatestMessageTable& table,
                                       std::span<const Gwei> weights,
                                       std::optional<double> arrival_cutoff = std::nullopt);

/// Adds 40% of `committee_weight` to the boosted block and its ancestors
/// when the boost is enabled and the block was released strictly within the
/// first 4 seconds of its slot.
void proposer_boost_adjust(SubtreeWeights& weights, const BlockTree& tree,
                           const BoostCandidate& boost, Gwei committee_weight);

/// Greedy descent from the root to the heaviest child; ties go to the
/// smaller block id.
BlockId select_head(const BlockTree& tree, const SubtreeWeights& weights,
                    std::optional<double> arrival_cutoff = std::nullopt);

BlockId lmd_ghost_head(const BlockTree& tree, const LatestMessageTable& table,
                       std::span<const Gwei> weights, const ForkChoiceOptions& options = {});

/// Root-to-head path under `table`, genesis excluded.
std::vector<BlockId> mainchain(const BlockTree& tree, const LatestMessageTable& table,
                               std::span<const Gwei> weights);

/// One validator's partial knowledge.
class ValidatorView {
 public:
  ValidatorView(ValidatorIndex self, std::size_t validators,
                const Block& genesis = genesis_block());

  ValidatorIndex self() const noexcept { return self_; }
  /// Ignores blocks already known. The parent must be known.
  void receive_block(const Block& block, double arrival_time);
  bool receive_attestation(const Attestation& attestation);

  const BlockTree& tree() const noexcept { return tree_; }
  const LatestMessageTable& table() const noexcept { return table_; }

  BlockId head(std::span<const Gwei> weights, const ForkChoiceOptions& options = {}) const;

 private:
  ValidatorIndex self_;
  BlockTree tree_;
  LatestMessageTable table_;
};

/// The attestation `view` casts at slot_start + offset: the head over blocks
/// received strictly before that instant. A slot block that arrived late is
/// therefore invisible and the vote goes to the previous head.
Attestation attest_decision(const ValidatorView& view, std::int64_t slot, double slot_start,
                            std::span<const Gwei> weights,
                            double attest_offset = kAttestationDeadlineSeconds,
                            const BoostCandidate& boost = {}, Gwei committee_weight = 0);

}  // namespace waitgame::consensus
