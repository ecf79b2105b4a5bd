#include "lamaml/trainers.hpp"

#include <chrono>
#include <cmath>

#include "lamaml/errors.hpp"
#include "lamaml/metrics.hpp"

namespace lamaml {

Algorithm algorithm_from_string(const std::string& name) {
  if (name == "online") return Algorithm::online;
  if (name == "er") return Algorithm::er;
  if (name == "agem") return Algorithm::agem;
  if (name == "c_maml") return Algorithm::c_maml;
  if (name == "sync") return Algorithm::sync;
  if (name == "la_er") return Algorithm::la_er;
  if (name == "la_maml") return Algorithm::la_maml;
  throw ConfigError("unknown algorithm: " + name);
}

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::online: return "online";
    case Algorithm::er: return "er";
    case Algorithm::agem: return "agem";
    case Algorithm::c_maml: return "c_maml";
    case Algorithm::sync: return "sync";
    case Algorithm::la_er: return "la_er";
    case Algorithm::la_maml: return "la_maml";
  }
  return "?";
}

LrState LrState::init(std::size_t n_params, double alpha0, double eta) {
  LrState s;
  s.alpha = ParamVector(n_params, alpha0);
  s.alpha_init = alpha0;
  s.eta = eta;
  return s;
}

MetaBatch make_meta_batch(std::span<const Example> batch, std::span<const Example> replay,
                          std::size_t k) {
  MetaBatch mb;
  const std::size_t n = batch.size();
  const std::size_t k_eff = std::max<std::size_t>(1, std::min(k, n));
  const std::size_t base = n / k_eff;
  const std::size_t rem = n % k_eff;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < k_eff && pos < n; ++i) {
    const std::size_t take = base + (i < rem ? 1 : 0);
    mb.inner_stream.emplace_back(batch.begin() + pos, batch.begin() + pos + take);
    pos += take;
  }
  mb.meta_set.assign(batch.begin(), batch.end());
  mb.meta_set.insert(mb.meta_set.end(), replay.begin(), replay.end());
  return mb;
}

namespace {

ParamVector relu(const ParamVector& a) {
  ParamVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] > 0.0 ? a[i] : 0.0;
  return out;
}

template <typename LrT>
InnerResult inner_loop_impl(const Network& net, const ParamVector& theta0, const LrT& lr,
                            std::span<const std::vector<Example>> stream) {
  InnerResult r;
  r.theta_k = theta0;
  for (std::size_t step = 0; step < stream.size(); ++step) {
    auto [loss, g] = batch_loss_grad(net, r.theta_k, stream[step]);
    if (!std::isfinite(l2_norm(g)) || !std::isfinite(loss)) {
      throw NumericError("inner_loop: non-finite gradient at step " + std::to_string(step));
    }
    r.per_step_params.push_back(sgd_step(r.theta_k, g, lr));
    r.theta_k = r.per_step_params.back();
    r.traj_grads.push_back(std::move(g));
  }
  return r;
}

}  // namespace

InnerResult inner_loop(const Network& net, const ParamVector& theta0, double lr,
                       std::span<const std::vector<Example>> stream) {
  return inner_loop_impl(net, theta0, lr, stream);
}

InnerResult inner_loop(const Network& net, const ParamVector& theta0, const ParamVector& lr,
                       std::span<const std::vector<Example>> stream) {
  return inner_loop_impl(net, theta0, lr, stream);
}

ParamVector meta_grad_theta(const Network& net, std::span<const ParamVector> eval_points,
                            std::span<const Example> meta_set, MetaLossMode mode) {
  if (meta_set.empty()) throw ShapeError("meta_grad_theta: empty meta set");
  if (eval_points.empty()) throw ShapeError("meta_grad_theta: no evaluation points");
  ParamVector g(net.param_count());
  if (mode == MetaLossMode::last_step) {
    accumulate_batch_grad(net, eval_points.back(), meta_set, 1.0, g);
  } else {
    for (const ParamVector& p : eval_points) accumulate_batch_grad(net, p, meta_set, 1.0, g);
  }
  return g;
}

ParamVector meta_grad_alpha(const ParamVector& g_meta, std::span<const ParamVector> traj_grads) {
  ParamVector sum(g_meta.size());
  for (const ParamVector& t : traj_grads) axpy(sum, 1.0, t);
  ParamVector out(g_meta.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = -g_meta[i] * sum[i];
  return out;
}

MetaUpdateResult la_maml_update(const Network& net, const ParamVector& theta0,
                                const LrState& lrstate, const MetaBatch& mb,
                                const TrainerConfig& cfg) {
  const InnerResult ir =
      cfg.clip_alpha_in_inner
          ? inner_loop(net, theta0, relu(lrstate.alpha), mb.inner_stream)
          : inner_loop(net, theta0, lrstate.alpha, mb.inner_stream);
  ParamVector g_meta = meta_grad_theta(net, ir.per_step_params, mb.meta_set, cfg.meta_mode);
  ParamVector g_alpha = meta_grad_alpha(g_meta, ir.traj_grads);
  g_meta = clip_grad_norm(g_meta, cfg.clip);
  g_alpha = clip_grad_norm(g_alpha, cfg.clip);

  MetaUpdateResult out;
  out.lr = lrstate;
  out.lr.alpha = sgd_step(lrstate.alpha, g_alpha, lrstate.eta);  // (a) LRs first
  out.params = sgd_step(theta0, g_meta, relu(out.lr.alpha));     // (b) then weights
  out.diag = {std::move(g_meta), std::move(g_alpha)};
  return out;
}

MetaUpdateResult c_maml_update(const Network& net, const ParamVector& theta0, const MetaBatch& mb,
                               const TrainerConfig& cfg) {
  const InnerResult ir = inner_loop(net, theta0, cfg.alpha, mb.inner_stream);
  ParamVector g_meta = meta_grad_theta(net, ir.per_step_params, mb.meta_set, cfg.meta_mode);
  g_meta = clip_grad_norm(g_meta, cfg.clip);

  MetaUpdateResult out;
  out.params = sgd_step(theta0, g_meta, cfg.beta);
  out.diag.g_meta = std::move(g_meta);
  return out;
}

MetaUpdateResult sync_update(const Network& net, const ParamVector& theta0, const LrState& lrstate,
                             const MetaBatch& mb, const TrainerConfig& cfg) {
  const InnerResult ir =
      cfg.clip_alpha_in_inner
          ? inner_loop(net, theta0, relu(lrstate.alpha), mb.inner_stream)
          : inner_loop(net, theta0, lrstate.alpha, mb.inner_stream);
  ParamVector g_meta = meta_grad_theta(net, ir.per_step_params, mb.meta_set, cfg.meta_mode);
  ParamVector g_alpha = meta_grad_alpha(g_meta, ir.traj_grads);
  g_meta = clip_grad_norm(g_meta, cfg.clip);
  g_alpha = clip_grad_norm(g_alpha, cfg.clip);

  MetaUpdateResult out;
  out.params = sgd_step(theta0, g_meta, cfg.beta);  // scalar outer LR, no alpha gate
  out.lr = lrstate;
  out.lr.alpha = sgd_step(lrstate.alpha, g_alpha, lrstate.eta);
  out.diag = {std::move(g_meta), std::move(g_alpha)};
  return out;
}

MetaUpdateResult la_er_update(const Network& net, const ParamVector& theta0, const LrState& lrstate,
                              const MetaBatch& mb, const TrainerConfig& cfg) {
  const InnerResult ir =
      cfg.clip_alpha_in_inner
          ? inner_loop(net, theta0, relu(lrstate.alpha), mb.inner_stream)
          : inner_loop(net, theta0, lrstate.alpha, mb.inner_stream);
  const ParamVector g_meta_traj =
      meta_grad_theta(net, ir.per_step_params, mb.meta_set, cfg.meta_mode);
  ParamVector g_alpha = clip_grad_norm(meta_grad_alpha(g_meta_traj, ir.traj_grads), cfg.clip);

  MetaUpdateResult out;
  out.lr = lrstate;
  out.lr.alpha = sgd_step(lrstate.alpha, g_alpha, lrstate.eta);

  // Weight update direction is ER's: plain gradient on b_m at theta0.
  auto [loss, g_er] = batch_loss_grad(net, theta0, mb.meta_set);
  (void)loss;
  g_er = clip_grad_norm(g_er, cfg.clip);
  out.params = sgd_step(theta0, g_er, relu(out.lr.alpha));
  out.diag = {std::move(g_er), std::move(g_alpha)};
  return out;
}

ParamVector er_update(const Network& net, const ParamVector& theta0,
                      std::span<const Example> meta_set, const TrainerConfig& cfg) {
  auto [loss, g] = batch_loss_grad(net, theta0, meta_set);
  (void)loss;
  return sgd_step(theta0, clip_grad_norm(g, cfg.clip), cfg.lr);
}

ParamVector agem_update(const Network& net, const ParamVector& theta0,
                        std::span<const Example> batch, std::span<const Example> replay_ref,
                        const TrainerConfig& cfg) {
  auto [loss, g] = batch_loss_grad(net, theta0, batch);
  (void)loss;
  if (!replay_ref.empty()) {
    auto [ref_loss, g_ref] = batch_loss_grad(net, theta0, replay_ref);
    (void)ref_loss;
    const double ref_sq = dot(g_ref, g_ref);
    const double d = ref_sq > 0.0 ? dot(g, g_ref) : 0.0;
    if (d < 0.0) axpy(g, -d / ref_sq, g_ref);
  }
  return sgd_step(theta0, clip_grad_norm(g, cfg.clip), cfg.lr);
}

ParamVector online_update(const Network& net, const ParamVector& theta0,
                          std::span<const Example> batch, const TrainerConfig& cfg) {
  auto [loss, g] = batch_loss_grad(net, theta0, batch);
  (void)loss;
  return sgd_step(theta0, clip_grad_norm(g, cfg.clip), cfg.lr);
}

RunRecord run_training(const Network& net, const TaskStream& stream, const TrainerConfig& cfg,
                       std::uint64_t seed, const RunOptions& opts) {
  const auto t_start = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.num_tasks = stream.tasks.size();
  rec.seed = seed;

  Rng rng_init = seeded_rng(seed, "init");
  Rng rng_reservoir = seeded_rng(seed, "reservoir");
  Rng rng_sample = seeded_rng(seed, "replay-sample");

  ParamVector params = net.init_params(rng_init);
  LrState lr = LrState::init(net.param_count(), cfg.alpha0, cfg.eta);
  ReplayBuffer buffer(cfg.uses_replay() ? cfg.replay_capacity : 0);
  std::size_t updates = 0;

  const auto eval_all = [&](std::size_t finished) {
    EvalRow row;
    row.after_task = finished;
    for (std::size_t j = 0; j < finished; ++j) {
      row.acc.push_back(accuracy(net, params, stream.tasks[j].test));
    }
    return row;
  };

  try {
    for (std::size_t t = 0; t < stream.tasks.size(); ++t) {
      for (const Batch& b : stream_batches(stream, t)) {
        std::vector<Example> replay;
        if (cfg.uses_replay()) {
          // Sample(R) before this update's pushes, matching the line order
          // of the training procedure.
          replay = buffer.sample(cfg.replay_draw, rng_sample);
          if (b.first_presentation) {
            for (const Example& e : b.items) buffer.reservoir_push(e, rng_reservoir);
          }
        }
        if (opts.record_alignment && t > 0 && !replay.empty()) {
          if (auto a = grad_alignment(net, params, replay, b.items)) {
            rec.alignments.push_back(*a);
          }
        }
        switch (cfg.algorithm) {
          case Algorithm::online:
            params = online_update(net, params, b.items, cfg);
            break;
          case Algorithm::er: {
            std::vector<Example> bm = b.items;
            bm.insert(bm.end(), replay.begin(), replay.end());
            params = er_update(net, params, bm, cfg);
            break;
          }
          case Algorithm::agem:
            params = agem_update(net, params, b.items, replay, cfg);
            break;
          default: {
            const MetaBatch mb = make_meta_batch(b.items, replay, cfg.k);
            MetaUpdateResult r;
            if (cfg.algorithm == Algorithm::c_maml) {
              r = c_maml_update(net, params, mb, cfg);
            } else if (cfg.algorithm == Algorithm::sync) {
              r = sync_update(net, params, lr, mb, cfg);
            } else if (cfg.algorithm == Algorithm::la_er) {
              r = la_er_update(net, params, lr, mb, cfg);
            } else {
              r = la_maml_update(net, params, lr, mb, cfg);
            }
            params = std::move(r.params);
            if (cfg.has_lr_vector()) lr = std::move(r.lr);
            break;
          }
        }
        ++updates;
        if (opts.eval_every > 0 && updates % opts.eval_every == 0) {
          rec.curve.push_back(eval_all(t + 1));
        }
      }
      rec.rows.push_back(eval_all(t + 1));
      if (t >= 1) {
        if (auto v = old_task_alignment(net, params, buffer, static_cast<std::int32_t>(t) + 1)) {
          rec.old_task_alignment.emplace_back(t + 1, *v);
        }
      }
    }
    rec.completed = true;
  } catch (const NumericError& e) {
    rec.error = e.what();  // keep the partial record
  }
  rec.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return rec;
}

}  // namespace lamaml
