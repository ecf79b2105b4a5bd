#include "lamaml/metrics.hpp"

#include <cmath>
#include <map>

#include "lamaml/errors.hpp"

namespace lamaml {

namespace {

const EvalRow& boundary_row(const RunRecord& rec, std::size_t after_task) {
  for (const EvalRow& row : rec.rows) {
    if (row.after_task == after_task) return row;
  }
  throw ConfigError("incomplete run record: no evaluation after task " +
                    std::to_string(after_task));
}

}  // namespace

double retained_accuracy(const RunRecord& rec) {
  if (rec.num_tasks == 0) throw ConfigError("empty run record");
  const EvalRow& last = boundary_row(rec, rec.num_tasks);
  double total = 0.0;
  for (double a : last.acc) total += a;
  return 100.0 * total / static_cast<double>(last.acc.size());
}

double bti(const RunRecord& rec) {
  if (rec.num_tasks < 2) throw ConfigError("BTI needs at least 2 tasks");
  const EvalRow& last = boundary_row(rec, rec.num_tasks);
  double total = 0.0;
  for (std::size_t j = 0; j + 1 < rec.num_tasks; ++j) {
    const EvalRow& learnt = boundary_row(rec, j + 1);
    total += last.acc[j] - learnt.acc[j];
  }
  return 100.0 * total / static_cast<double>(rec.num_tasks - 1);
}

std::optional<double> grad_alignment(const Network& net, const ParamVector& params,
                                     std::span<const Example> replay_batch,
                                     std::span<const Example> new_batch) {
  if (replay_batch.empty() || new_batch.empty()) return std::nullopt;
  auto [lr_, g_replay] = batch_loss_grad(net, params, replay_batch);
  auto [ln_, g_new] = batch_loss_grad(net, params, new_batch);
  (void)lr_;
  (void)ln_;
  const double nr = l2_norm(g_replay), nn = l2_norm(g_new);
  if (nr == 0.0 || nn == 0.0) return std::nullopt;
  return dot(g_replay, g_new) / (nr * nn);
}

std::optional<double> old_task_alignment(const Network& net, const ParamVector& params,
                                         const ReplayBuffer& buffer,
                                         std::int32_t current_task_id) {
  std::map<std::int32_t, std::vector<Example>> by_task;
  for (const Example& e : buffer.slots()) {
    if (e.task_id < current_task_id) by_task[e.task_id].push_back(e);
  }
  if (by_task.size() < 2) return std::nullopt;

  std::vector<ParamVector> grads;
  grads.reserve(by_task.size());
  for (const auto& [id, examples] : by_task) {
    auto [loss, g] = batch_loss_grad(net, params, examples);
    (void)loss;
    grads.push_back(std::move(g));
  }
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < grads.size(); ++i) {
    for (std::size_t j = i + 1; j < grads.size(); ++j) {
      total += dot(grads[i], grads[j]);
      ++pairs;
    }
  }
  return total / static_cast<double>(pairs);
}

std::optional<double> mean_alignment(const RunRecord& rec) {
  if (rec.alignments.empty()) return std::nullopt;
  double total = 0.0;
  for (double a : rec.alignments) total += a;
  return total / static_cast<double>(rec.alignments.size());
}

}  // namespace lamaml
