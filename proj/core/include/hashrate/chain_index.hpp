#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "hashrate/chain.hpp"

namespace hashrate {

/// Read-only view over a header set: the main chain (longest path through
/// non-ommer headers, genesis first) plus id lookup for every header.
class ChainIndex {
public:
  explicit ChainIndex(std::vector<BlockHeader> headers);

  const std::vector<BlockHeader>& headers() const { return headers_; }

  std::size_t main_length() const { return main_.size(); }
  const BlockHeader& main_at(std::size_t height) const { return headers_[main_[height]]; }

  std::optional<std::size_t> find(const Digest256& id) const;

  /// Position of `id` on the main chain, if it is a main-chain block.
  std::optional<std::size_t> height_of(const Digest256& id) const;

  /// Time window spanning the `blocks` main-chain blocks that end at
  /// `end_height`: (ts(end_height - blocks), ts(end_height)].
  TimeWindow window_ending_at(std::size_t end_height, std::size_t blocks) const;

  /// Window from main block `from_height` to `to_height`:
  /// (ts(from_height), ts(to_height)].
  TimeWindow window_between(std::size_t from_height, std::size_t to_height) const;

  /// Headers (main and ommer) whose timestamp falls into `window`.
  std::vector<const BlockHeader*> headers_in(const TimeWindow& window) const;

private:
  std::vector<BlockHeader> headers_;
  std::vector<std::size_t> main_;
  std::vector<std::size_t> by_time_; // header positions sorted by timestamp
  std::unordered_map<Digest256, std::size_t, Digest256Hasher> by_id_;
  std::unordered_map<Digest256, std::size_t, Digest256Hasher> main_height_;
};

} // namespace hashrate
