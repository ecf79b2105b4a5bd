#pragma once

#include <cstddef>
#include <vector>

#include "lamaml/example.hpp"
#include "lamaml/rng.hpp"

namespace lamaml {

// Capacity-bounded episodic memory filled by reservoir sampling: after N
// offered items every item has inclusion probability capacity/N.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}

  std::size_t capacity() const { return capacity_; }
  std::size_t seen_count() const { return seen_; }
  std::size_t size() const { return slots_.size(); }
  bool empty() const { return slots_.empty(); }
  const std::vector<Example>& slots() const { return slots_; }

  void reservoir_push(Example item, Rng& rng);

  // min(n, size()) items drawn uniformly without replacement.
  std::vector<Example> sample(std::size_t n, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t seen_ = 0;
  std::vector<Example> slots_;
};

}  // namespace lamaml
