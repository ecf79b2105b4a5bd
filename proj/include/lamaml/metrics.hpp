#pragma once

#include <optional>
#include <span>

#include "lamaml/nn.hpp"
#include "lamaml/replay.hpp"
#include "lamaml/trainers.hpp"

namespace lamaml {

// Mean test accuracy over all tasks at the end of training, in percent.
double retained_accuracy(const RunRecord& rec);

// Mean change, in percentage points, of each task's accuracy from when it
// was learnt to the end of training; the final task is excluded (its change
// is identically zero). Negative means forgetting. Requires >= 2 tasks.
double bti(const RunRecord& rec);

// Cosine similarity between the mean gradients of the replay batch and the
// incoming batch. A zero-norm gradient makes it undefined (missing).
std::optional<double> grad_alignment(const Network& net, const ParamVector& params,
                                     std::span<const Example> replay_batch,
                                     std::span<const Example> new_batch);

// Mean pairwise dot product of per-task mean gradients over the old tasks
// (task_id < current_task_id) represented in the buffer; missing when fewer
// than two old tasks are present.
std::optional<double> old_task_alignment(const Network& net, const ParamVector& params,
                                         const ReplayBuffer& buffer,
                                         std::int32_t current_task_id);

// Mean of the per-update alignments recorded in a run; missing if none.
std::optional<double> mean_alignment(const RunRecord& rec);

}  // namespace lamaml
