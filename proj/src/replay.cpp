#include "lamaml/replay.hpp"

#include <utility>

namespace lamaml {

void ReplayBuffer::reservoir_push(Example item, Rng& rng) {
  ++seen_;
  if (slots_.size() < capacity_) {
    slots_.push_back(std::move(item));
    return;
  }
  if (capacity_ == 0) return;
  // Keep with probability capacity/seen, replacing a uniform slot.
  const std::uint64_t r = rng.next_below(seen_);
  if (r < capacity_) {
    slots_[static_cast<std::size_t>(r)] = std::move(item);
  }
}

std::vector<Example> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  const std::size_t take = std::min(n, slots_.size());
  std::vector<Example> out;
  out.reserve(take);
  // Partial Fisher-Yates over an index array.
  std::vector<std::size_t> idx(slots_.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + rng.index(idx.size() - i);
    std::swap(idx[i], idx[j]);
    out.push_back(slots_[idx[i]]);
  }
  return out;
}

}  // namespace lamaml
