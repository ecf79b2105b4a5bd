#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lamaml/nn.hpp"
#include "lamaml/replay.hpp"
#include "lamaml/tasks.hpp"

namespace lamaml {

enum class Algorithm { online, er, agem, c_maml, sync, la_er, la_maml };

enum class MetaLossMode { all_steps, last_step };

Algorithm algorithm_from_string(const std::string& name);
std::string to_string(Algorithm a);

struct TrainerConfig {
  Algorithm algorithm = Algorithm::online;
  std::size_t k = 1;                 // inner steps per meta-update
  double lr = 0.03;                  // online / er / agem step size
  double alpha = 0.03;               // c_maml inner LR
  double beta = 0.03;                // c_maml / sync outer LR
  double alpha0 = 0.1;               // initial value of the learnable LR vector
  double eta = 0.1;                  // LR of the LRs
  std::size_t replay_capacity = 200;
  std::size_t replay_draw = 10;      // replay samples joined into the meta-batch
  double clip = 2.0;                 // gradient L2 clip norm
  MetaLossMode meta_mode = MetaLossMode::all_steps;
  bool clip_alpha_in_inner = false;  // optionally use max(0, alpha) in inner steps too

  bool uses_replay() const { return algorithm != Algorithm::online; }
  bool is_meta() const {
    return algorithm == Algorithm::c_maml || algorithm == Algorithm::sync ||
           algorithm == Algorithm::la_er || algorithm == Algorithm::la_maml;
  }
  bool has_lr_vector() const {
    return algorithm == Algorithm::sync || algorithm == Algorithm::la_er ||
           algorithm == Algorithm::la_maml;
  }
};

// Learnable per-parameter learning rates. alpha is stored unclipped;
// max(0, alpha) is applied only where an update consumes it, so suppressed
// coordinates can recover when alignment returns.
struct LrState {
  ParamVector alpha;
  double alpha_init = 0.1;
  double eta = 0.1;

  static LrState init(std::size_t n_params, double alpha0, double eta);
};

// One meta-update's data: k sub-batches of current-task data for the fast
// updates, plus the meta set b_m = b u Sample(R).
struct MetaBatch {
  std::vector<std::vector<Example>> inner_stream;
  std::vector<Example> meta_set;
};

// Splits `batch` into k consecutive sub-batches (singletons when k ==
// batch size) and joins the replay draw into the meta set.
MetaBatch make_meta_batch(std::span<const Example> batch, std::span<const Example> replay,
                          std::size_t k);

struct InnerResult {
  ParamVector theta_k;
  std::vector<ParamVector> traj_grads;       // grad of step loss at each pre-step point
  std::vector<ParamVector> per_step_params;  // theta_1 .. theta_k
};

// Sequential SGD steps through the sub-batches with scalar or per-parameter
// LR. Throws NumericError (with step diagnostic) on a non-finite gradient.
InnerResult inner_loop(const Network& net, const ParamVector& theta0, double lr,
                       std::span<const std::vector<Example>> stream);
InnerResult inner_loop(const Network& net, const ParamVector& theta0, const ParamVector& lr,
                       std::span<const std::vector<Example>> stream);

// First-order meta gradient w.r.t. the weights. last_step: gradient of the
// mean meta-loss at eval_points.back(); all_steps: sum of those gradients
// over every evaluation point.
ParamVector meta_grad_theta(const Network& net, std::span<const ParamVector> eval_points,
                            std::span<const Example> meta_set, MetaLossMode mode);

// First-order LR hypergradient: -g_meta (.) sum of trajectory gradients.
// Negative entries where meta and trajectory gradients align (LR rises),
// positive where they interfere (LR falls), zero where orthogonal.
ParamVector meta_grad_alpha(const ParamVector& g_meta, std::span<const ParamVector> traj_grads);

struct UpdateDiag {
  ParamVector g_meta;   // clipped gradient applied to the weights
  ParamVector g_alpha;  // clipped LR gradient (empty when the update has none)
};

struct MetaUpdateResult {
  ParamVector params;
  LrState lr;
  UpdateDiag diag;
};

// Asynchronous look-ahead update: inner unroll with raw alpha, then alpha
// step with the hypergradient, then weight step with max(0, alpha_new).
MetaUpdateResult la_maml_update(const Network& net, const ParamVector& theta0,
                                const LrState& lrstate, const MetaBatch& mb,
                                const TrainerConfig& cfg);

// Fixed scalar LRs: inner unroll with alpha, outer step with beta.
MetaUpdateResult c_maml_update(const Network& net, const ParamVector& theta0, const MetaBatch& mb,
                               const TrainerConfig& cfg);

// Synchronous variant: weights step with scalar beta from the same
// pre-update quantities; alpha evolves but never gates the weight step.
MetaUpdateResult sync_update(const Network& net, const ParamVector& theta0, const LrState& lrstate,
                             const MetaBatch& mb, const TrainerConfig& cfg);

// ER-style weight update (plain gradient on the meta set at theta0) gated
// by max(0, alpha_new); the inner unroll feeds only the hypergradient.
MetaUpdateResult la_er_update(const Network& net, const ParamVector& theta0, const LrState& lrstate,
                              const MetaBatch& mb, const TrainerConfig& cfg);

// One SGD step on the mean loss over the joined batch.
ParamVector er_update(const Network& net, const ParamVector& theta0,
                      std::span<const Example> meta_set, const TrainerConfig& cfg);

// Projects the incoming gradient away from the replay gradient when they
// interfere, then steps. Empty reference batch degrades to plain SGD.
ParamVector agem_update(const Network& net, const ParamVector& theta0,
                        std::span<const Example> batch, std::span<const Example> replay_ref,
                        const TrainerConfig& cfg);

// Plain SGD on the incoming batch only.
ParamVector online_update(const Network& net, const ParamVector& theta0,
                          std::span<const Example> batch, const TrainerConfig& cfg);

// --- Training loop ---------------------------------------------------------

struct EvalRow {
  std::size_t after_task = 0;          // 1-based count of finished tasks
  std::vector<double> acc;             // acc[j] = test accuracy on task j
};

struct RunRecord {
  std::vector<EvalRow> rows;                            // one per finished task
  std::vector<EvalRow> curve;                           // optional eval-cadence rows
  std::vector<double> alignments;                       // per-update replay/incoming cosine
  std::vector<std::pair<std::size_t, double>> old_task_alignment;  // (after_task, mean dot)
  std::size_t num_tasks = 0;
  std::uint64_t seed = 0;
  double wall_time_s = 0.0;
  bool completed = false;
  std::string error;
};

struct RunOptions {
  std::size_t eval_every = 0;    // extra accuracy rows every N meta-updates (0 = off)
  bool record_alignment = true;  // per-update replay/incoming gradient cosine
};

// Streams the tasks in order, reservoir-pushing every incoming sample
// (replay algorithms), dispatching per-batch updates, and evaluating all
// seen tasks after each task completes. Deterministic given (stream,
// cfg, seed). A non-finite update aborts with a partial record.
RunRecord run_training(const Network& net, const TaskStream& stream, const TrainerConfig& cfg,
                       std::uint64_t seed, const RunOptions& opts = {});

}  // namespace lamaml
