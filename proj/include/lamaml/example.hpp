#pragma once

#include <cstdint>
#include <vector>

namespace lamaml {

// One labelled input. task_id is kept for metrics that group replayed
// samples by task; single-head trainers ignore it.
struct Example {
  std::vector<double> x;
  std::int32_t y = 0;
  std::int32_t task_id = -1;
};

}  // namespace lamaml
