#include "hashrate/chain_index.hpp"

#include <algorithm>

#include "hashrate/errors.hpp"

namespace hashrate {

ChainIndex::ChainIndex(std::vector<BlockHeader> headers) : headers_(std::move(headers)) {
  by_id_.reserve(headers_.size());
  for (std::size_t i = 0; i < headers_.size(); ++i) {
    if (!by_id_.emplace(headers_[i].id, i).second) {
      throw InvalidArgument("duplicate header id " + headers_[i].id.to_hex());
    }
  }

  // Depth of each header along parent links; headers whose parent is
  // unknown are roots at depth 0.
  std::vector<std::ptrdiff_t> depth(headers_.size(), -1);
  for (std::size_t i = 0; i < headers_.size(); ++i) {
    std::vector<std::size_t> stack;
    std::size_t cur = i;
    while (depth[cur] < 0) {
      stack.push_back(cur);
      auto parent = by_id_.find(headers_[cur].parent_id);
      if (parent == by_id_.end()) {
        depth[cur] = 0;
        stack.pop_back();
        break;
      }
      if (stack.size() > headers_.size()) throw InvalidArgument("cycle detected in header parents");
      cur = parent->second;
    }
    while (!stack.empty()) {
      const std::size_t node = stack.back();
      stack.pop_back();
      depth[node] = depth[by_id_.at(headers_[node].parent_id)] + 1;
    }
  }

  std::optional<std::size_t> tip;
  for (std::size_t i = 0; i < headers_.size(); ++i) {
    if (headers_[i].is_ommer) continue;
    if (!tip || depth[i] > depth[*tip]) tip = i;
  }
  if (tip) {
    for (std::size_t cur = *tip;;) {
      main_.push_back(cur);
      auto parent = by_id_.find(headers_[cur].parent_id);
      if (parent == by_id_.end()) break;
      cur = parent->second;
    }
    std::reverse(main_.begin(), main_.end());
  }
  for (std::size_t h = 0; h < main_.size(); ++h) main_height_.emplace(headers_[main_[h]].id, h);

  by_time_.resize(headers_.size());
  for (std::size_t i = 0; i < by_time_.size(); ++i) by_time_[i] = i;
  std::stable_sort(by_time_.begin(), by_time_.end(), [&](std::size_t a, std::size_t b) {
    return headers_[a].timestamp < headers_[b].timestamp;
  });
}

std::optional<std::size_t> ChainIndex::find(const Digest256& id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> ChainIndex::height_of(const Digest256& id) const {
  auto it = main_height_.find(id);
  if (it == main_height_.end()) return std::nullopt;
  return it->second;
}

TimeWindow ChainIndex::window_ending_at(std::size_t end_height, std::size_t blocks) const {
  if (end_height >= main_.size()) throw InvalidArgument("block height beyond chain tip");
  if (blocks == 0 || blocks > end_height) {
    throw InvalidArgument("window of " + std::to_string(blocks) + " blocks needs more history before height " +
                          std::to_string(end_height));
  }
  return window_between(end_height - blocks, end_height);
}

TimeWindow ChainIndex::window_between(std::size_t from_height, std::size_t to_height) const {
  if (to_height >= main_.size() || from_height > to_height) {
    throw InvalidArgument("invalid main-chain window");
  }
  return {static_cast<double>(main_at(from_height).timestamp),
          static_cast<double>(main_at(to_height).timestamp)};
}

std::vector<const BlockHeader*> ChainIndex::headers_in(const TimeWindow& window) const {
  std::vector<const BlockHeader*> out;
  auto first = std::upper_bound(by_time_.begin(), by_time_.end(), window.start,
                                [&](double t, std::size_t i) { return t < static_cast<double>(headers_[i].timestamp); });
  for (auto it = first; it != by_time_.end(); ++it) {
    const auto& h = headers_[*it];
    if (static_cast<double>(h.timestamp) > window.end) break;
    out.push_back(&h);
  }
  return out;
}

} // namespace hashrate
