#include "waitgame/consensus.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace waitgame::consensus {

Block genesis_block(double slot_seconds) {
  Block g;
  g.id = kGenesisId;
  g.slot = kGenesisSlot;
  g.parent = kNoBlock;
  g.release_time = static_cast<double>(kGenesisSlot) * slot_seconds;
  return g;
}

BlockTree::BlockTree(const Block& genesis, double genesis_arrival) {
  index_.assign(static_cast<std::size_t>(genesis.id) + 1, kAbsent);
  index_[genesis.id] = 0;
  order_.push_back(genesis.id);
  blocks_.push_back(genesis);
  arrivals_.push_back(genesis_arrival);
  children_.emplace_back();
}

void BlockTree::insert(const Block& block, double arrival_time) {
  if (block.id == kNoBlock) throw MalformedTree("block id reserved");
  if (contains(block.id)) throw MalformedTree(fmt::format("duplicate block id {}", block.id));
  if (!contains(block.parent)) {
    throw MalformedTree(
        fmt::format("block {} references unknown parent {}", block.id, block.parent));
  }
  const auto parent_pos = index_[block.parent];
  if (blocks_[parent_pos].slot >= block.slot) {
    throw MalformedTree(fmt::format("block {} (slot {}) not later than parent {} (slot {})",
                                    block.id, block.slot, block.parent,
                                    blocks_[parent_pos].slot));
  }
  if (block.id >= index_.size()) index_.resize(static_cast<std::size_t>(block.id) + 1, kAbsent);
  const auto pos = static_cast<std::uint32_t>(order_.size());
  index_[block.id] = pos;
  order_.push_back(block.id);
  blocks_.push_back(block);
  arrivals_.push_back(arrival_time);
  children_.emplace_back();
  auto& siblings = children_[parent_pos];
  siblings.insert(std::upper_bound(siblings.begin(), siblings.end(), block.id), block.id);
}

const Block& BlockTree::block(BlockId id) const {
  if (!contains(id)) throw MalformedTree(fmt::format("unknown block {}", id));
  return blocks_[index_[id]];
}

double BlockTree::arrival(BlockId id) const {
  if (!contains(id)) throw MalformedTree(fmt::format("unknown block {}", id));
  return arrivals_[index_[id]];
}

std::span<const BlockId> BlockTree::children(BlockId id) const {
  if (!contains(id)) throw MalformedTree(fmt::format("unknown block {}", id));
  return children_[index_[id]];
}

// ---------------------------------------------------------------------------

bool LatestMessageTable::update(const Attestation& a) {
  if (a.validator >= entries_.size()) entries_.resize(static_cast<std::size_t>(a.validator) + 1);
  auto& e = entries_[a.validator];
  if (e && a.slot <= e->slot) return false;
  e = LatestMessage{a.slot, a.target};
  return true;
}

const std::optional<LatestMessage>& LatestMessageTable::get(ValidatorIndex v) const {
  static const std::optional<LatestMessage> kEmpty;
  return v < entries_.size() ? entries_[v] : kEmpty;
}

// ---------------------------------------------------------------------------

namespace {

bool visible(const BlockTree& tree, BlockId id, std::optional<double> cutoff) {
  if (!tree.contains(id)) return false;
  return !cutoff || id == tree.root() || tree.arrival(id) < *cutoff;
}

}  // namespace

SubtreeWeights compute_subtree_weights(const BlockTree& tree, const LatestMessageTable& table,
                                       std::span<const Gwei> weights,
                                       std::optional<double> arrival_cutoff) {
  SubtreeWeights w;
  w.by_position.assign(tree.size(), 0);
  const std::size_t validators = std::min(weights.size(), table.capacity());
  for (std::size_t v = 0; v < validators; ++v) {
    const auto& msg = table.get(static_cast<ValidatorIndex>(v));
    if (!msg || !visible(tree, msg->target, arrival_cutoff)) continue;
    w.by_position[tree.position(msg->target)] += weights[v];
  }
  // Children always follow their parent in ids(), so one reverse pass
  // accumulates every subtree.
  const auto ids = tree.ids();
  for (std::size_t i = ids.size(); i-- > 1;) {
    const auto parent = tree.block(ids[i]).parent;
    w.by_position[tree.position(parent)] += w.by_position[i];
  }
  return w;
}

void proposer_boost_adjust(SubtreeWeights& weights, const BlockTree& tree,
                           const BoostCandidate& boost, Gwei committee_weight) {
  if (!boost.enabled || !tree.contains(boost.block)) return;
  if (!(boost.release_offset < kAttestationDeadlineSeconds)) return;
  const Gwei bonus = committee_weight / 100 * 40 + committee_weight % 100 * 40 / 100;
  for (BlockId b = boost.block; b != kNoBlock; b = tree.block(b).parent) {
    weights.by_position[tree.position(b)] += bonus;
  }
}

BlockId select_head(const BlockTree& tree, const SubtreeWeights& weights,
                    std::optional<double> arrival_cutoff) {
  BlockId head = tree.root();
  for (;;) {
    BlockId best = kNoBlock;
    Gwei best_weight = 0;
    for (BlockId c : tree.children(head)) {  // ascending id
      if (!visible(tree, c, arrival_cutoff)) continue;
      const Gwei cw = weights.by_position[tree.position(c)];
      if (best == kNoBlock || cw > best_weight) {
        best = c;
        best_weight = cw;
      }
    }
    if (best == kNoBlock) return head;
    head = best;
  }
}

BlockId lmd_ghost_head(const BlockTree& tree, const LatestMessageTable& table,
                       std::span<const Gwei> weights, const ForkChoiceOptions& options) {
  auto w = compute_subtree_weights(tree, table, weights, options.arrival_cutoff);
  if (options.boost.enabled && visible(tree, options.boost.block, options.arrival_cutoff)) {
    proposer_boost_adjust(w, tree, options.boost, options.committee_weight);
  }
  return select_head(tree, w, options.arrival_cutoff);
}

std::vector<BlockId> mainchain(const BlockTree& tree, const LatestMessageTable& table,
                               std::span<const Gwei> weights) {
  std::vector<BlockId> path;
  for (BlockId b = lmd_ghost_head(tree, table, weights); b != tree.root();
       b = tree.block(b).parent) {
    path.push_back(b);
  }
  std::reverse(path.begin(), path.end());
  return path;
}

// ---------------------------------------------------------------------------

ValidatorView::ValidatorView(ValidatorIndex self, std::size_t validators, const Block& genesis)
    : self_(self), tree_(genesis), table_(validators) {}

void ValidatorView::receive_block(const Block& block, double arrival_time) {
  if (tree_.contains(block.id)) return;
  tree_.insert(block, arrival_time);
}

bool ValidatorView::receive_attestation(const Attestation& attestation) {
  return table_.update(attestation);
}

BlockId ValidatorView::head(std::span<const Gwei> weights, const ForkChoiceOptions& options) const {
  return lmd_ghost_head(tree_, table_, weights, options);
}

Attestation attest_decision(const ValidatorView& view, std::int64_t slot, double slot_start,
                            std::span<const Gwei> weights, double attest_offset,
                            const BoostCandidate& boost, Gwei committee_weight) {
  const double now = slot_start + attest_offset;
  ForkChoiceOptions opts;
  opts.arrival_cutoff = now;
  opts.boost = boost;
  opts.committee_weight = committee_weight;
  Attestation a;
  a.validator = view.self();
  a.slot = slot;
  a.target = view.head(weights, opts);
  a.creation_time = now;
  return a;
}

}  // namespace waitgame::consensus
