#include "lamaml/verify.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lamaml/errors.hpp"

namespace lamaml {

namespace {

std::vector<Example> random_examples(std::size_t n, std::size_t dim, std::size_t classes, Rng& rng,
                                     std::int32_t task_id) {
  std::vector<Example> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].x.resize(dim);
    for (double& v : out[i].x) v = rng.uniform(-1.0, 1.0);
    out[i].y = static_cast<std::int32_t>(rng.next_below(classes));
    out[i].task_id = task_id;
  }
  return out;
}

double inf_norm(const ParamVector& a) {
  double m = 0.0;
  for (double v : a.v) m = std::max(m, std::abs(v));
  return m;
}

struct HypergradFixture {
  ParamVector theta0;
  ParamVector alpha;
  std::vector<std::vector<Example>> inner_stream;
  std::vector<Example> meta_set;
};

}  // namespace

double min_preactivation_margin(const Network& net, const ParamVector& params,
                                std::span<const Example> examples) {
  double margin = std::numeric_limits<double>::infinity();
  for (const Example& e : examples) {
    auto [logits, cache] = forward(net, params, Tensor({e.x.size()}, e.x));
    for (std::size_t l = 0; l + 1 < net.depth(); ++l) {  // hidden layers only
      for (double z : cache.pre[l]) margin = std::min(margin, std::abs(z));
    }
  }
  return margin;
}

HypergradCheck check_hypergradient(const Network& net, std::size_t k, std::uint64_t seed) {
  const double eps = 1e-6;
  const std::size_t dim = net.input_size();
  const std::size_t classes = net.output_size();

  // Reject-and-resample until all evaluation points sit clear of ReLU
  // kinks, so the central differences probe a smooth neighbourhood.
  for (std::uint64_t attempt = 0; attempt < 100; ++attempt) {
    Rng rng = seeded_rng(seed, "hypergrad/" + std::to_string(k) + "/" + std::to_string(attempt));
    HypergradFixture fx;
    fx.theta0 = net.init_params(rng);
    fx.alpha = ParamVector(net.param_count());
    for (double& a : fx.alpha.v) a = rng.uniform(0.02, 0.08);
    for (std::size_t i = 0; i < k; ++i) {
      fx.inner_stream.push_back(random_examples(2, dim, classes, rng, 1));
    }
    fx.meta_set = random_examples(6, dim, classes, rng, 0);

    const InnerResult ir = inner_loop(net, fx.theta0, fx.alpha, fx.inner_stream);
    if (min_preactivation_margin(net, ir.theta_k, fx.meta_set) < 1e-3) continue;

    const ParamVector g_meta =
        meta_grad_theta(net, ir.per_step_params, fx.meta_set, MetaLossMode::last_step);
    const ParamVector analytic = meta_grad_alpha(g_meta, ir.traj_grads);

    // First-order unrolled objective: trajectory gradients frozen from the
    // base run, endpoint re-derived at the perturbed alpha.
    ParamVector traj_sum(net.param_count());
    for (const ParamVector& g : ir.traj_grads) axpy(traj_sum, 1.0, g);
    const auto objective = [&](const ParamVector& alpha) {
      ParamVector theta = fx.theta0;
      for (std::size_t i = 0; i < theta.size(); ++i) theta.v[i] -= alpha[i] * traj_sum[i];
      return batch_loss(net, theta, fx.meta_set);
    };
    const ParamVector fd = finite_diff_grad(objective, fx.alpha, eps);

    const double scale = std::max({inf_norm(fd), inf_norm(analytic), 1e-12});
    double max_rel = 0.0;
    for (std::size_t i = 0; i < fd.size(); ++i) {
      max_rel = std::max(max_rel, std::abs(fd[i] - analytic[i]) / scale);
    }
    HypergradCheck out;
    out.k = k;
    out.max_rel_err = max_rel;
    out.pass = max_rel < 1e-5;
    return out;
  }
  throw NumericError("check_hypergradient: could not find a kink-free fixture");
}

HypergradCheck check_hypergradient(std::size_t k, std::uint64_t seed) {
  return check_hypergradient(Network({2, 4, 3}), k, seed);
}

EquivalenceCheck check_equivalence_k1(std::span<const double> alphas, std::uint64_t seed,
                                      bool single_task) {
  const Network net({2, 4, 3});
  const double eps = 1e-5;
  const double alpha_max = *std::max_element(alphas.begin(), alphas.end());

  for (std::uint64_t attempt = 0; attempt < 100; ++attempt) {
    Rng rng = seeded_rng(seed, "equivalence/" + std::to_string(attempt));
    const ParamVector theta0 = net.init_params(rng);
    // Two tasks; the current task's batch doubles as the inner data.
    const std::vector<Example> d_old =
        single_task ? std::vector<Example>{} : random_examples(4, 2, 3, rng, 0);
    const std::vector<Example> d_cur = random_examples(4, 2, 3, rng, 1);
    std::vector<Example> all = d_old;
    all.insert(all.end(), d_cur.begin(), d_cur.end());

    auto [l0, g_cur] = batch_loss_grad(net, theta0, d_cur);
    (void)l0;
    const ParamVector stepped = sgd_step(theta0, g_cur, alpha_max);
    if (min_preactivation_margin(net, theta0, all) < 2e-2 ||
        min_preactivation_margin(net, stepped, all) < 2e-2) {
      continue;
    }

    // Meta-loss: sum of per-task mean losses; inner objective: current task.
    const auto meta_loss = [&](const ParamVector& p) {
      return (single_task ? 0.0 : batch_loss(net, p, d_old)) + batch_loss(net, p, d_cur);
    };
    EquivalenceCheck out;
    for (double alpha : alphas) {
      const auto lookahead = [&](const ParamVector& p) {
        auto [li, gi] = batch_loss_grad(net, p, d_cur);
        (void)li;
        return meta_loss(sgd_step(p, gi, alpha));
      };
      const auto surrogate = [&](const ParamVector& p) {
        auto [li, gi] = batch_loss_grad(net, p, d_cur);
        double align = dot(gi, gi);
        double lo = 0.0;
        if (!single_task) {
          auto [lo_, go] = batch_loss_grad(net, p, d_old);
          lo = lo_;
          align += dot(go, gi);
        }
        return lo + li - alpha * align;
      };
      const ParamVector g1 = finite_diff_grad(lookahead, theta0, eps);
      const ParamVector g2 = finite_diff_grad(surrogate, theta0, eps);
      ParamVector diff = g1;
      axpy(diff, -1.0, g2);
      out.alphas.push_back(alpha);
      out.discrepancies.push_back(l2_norm(diff));
    }
    out.pass = true;
    for (std::size_t i = 0; i + 1 < out.discrepancies.size(); ++i) {
      const double r = out.discrepancies[i] / out.discrepancies[i + 1];
      out.ratios.push_back(r);
      if (!(r >= 3.5 && r <= 4.5)) out.pass = false;
    }
    return out;
  }
  throw NumericError("check_equivalence_k1: could not find a kink-free fixture");
}

EquivalenceCheck check_equivalence_k1(std::uint64_t seed) {
  const std::vector<double> alphas = {1e-2, 5e-3, 2.5e-3, 1.25e-3};
  return check_equivalence_k1(alphas, seed);
}

SignCheck check_sign_semantics() {
  SignCheck out;
  const std::size_t n = 16;
  Rng rng = seeded_rng(7, "sign-semantics");
  ParamVector g_meta(n);
  for (double& v : g_meta.v) v = rng.uniform(-1.0, 1.0);

  // Aligned: trajectory sum equals the meta gradient.
  {
    std::vector<ParamVector> traj = {g_meta};
    const ParamVector g_alpha = meta_grad_alpha(g_meta, traj);
    out.aligned_nonpositive = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (g_alpha[i] > 0.0) out.aligned_nonpositive = false;
      if (g_meta[i] != 0.0 && !(g_alpha[i] < 0.0)) out.aligned_nonpositive = false;
    }
  }
  // Orthogonal: disjoint supports.
  {
    ParamVector a(n), b(n);
    for (std::size_t i = 0; i < n / 2; ++i) a[i] = rng.uniform(0.5, 1.0);
    for (std::size_t i = n / 2; i < n; ++i) b[i] = rng.uniform(0.5, 1.0);
    std::vector<ParamVector> traj = {b};
    const ParamVector g_alpha = meta_grad_alpha(a, traj);
    out.orthogonal_zero = true;
    for (double v : g_alpha.v) {
      if (v != 0.0) out.orthogonal_zero = false;
    }
  }
  // Interfering: trajectory sum opposes the meta gradient.
  {
    std::vector<ParamVector> traj = {scale(g_meta, -1.0)};
    const ParamVector g_alpha = meta_grad_alpha(g_meta, traj);
    out.interfering_nonnegative = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (g_alpha[i] < 0.0) out.interfering_nonnegative = false;
      if (g_meta[i] != 0.0 && !(g_alpha[i] > 0.0)) out.interfering_nonnegative = false;
    }
  }
  // One real update: k = 1 with the meta set equal to the inner batch, so
  // trajectory and meta gradients are strongly aligned; alpha must move
  // with the sign of g_meta (.) traj_sum on every coordinate.
  {
    const Network net({2, 4, 3});
    Rng frng = seeded_rng(11, "sign-update");
    const ParamVector theta0 = net.init_params(frng);
    const std::vector<Example> batch = random_examples(3, 2, 3, frng, 0);
    MetaBatch mb = make_meta_batch(batch, {}, 1);

    TrainerConfig cfg;
    cfg.algorithm = Algorithm::la_maml;
    cfg.k = 1;
    cfg.alpha0 = 0.01;
    cfg.eta = 0.1;
    cfg.meta_mode = MetaLossMode::last_step;
    const LrState lr = LrState::init(net.param_count(), cfg.alpha0, cfg.eta);

    const InnerResult ir = inner_loop(net, theta0, lr.alpha, mb.inner_stream);
    const ParamVector g_meta_raw =
        meta_grad_theta(net, ir.per_step_params, mb.meta_set, cfg.meta_mode);
    const MetaUpdateResult r = la_maml_update(net, theta0, lr, mb, cfg);

    out.update_moves_alpha = true;
    bool any_aligned = false;
    for (std::size_t i = 0; i < net.param_count(); ++i) {
      const double prod = g_meta_raw[i] * ir.traj_grads[0][i];
      const double moved = r.lr.alpha[i] - cfg.alpha0;
      if (prod > 0.0) {
        any_aligned = true;
        if (!(moved > 0.0)) out.update_moves_alpha = false;
      } else if (prod < 0.0) {
        if (!(moved < 0.0)) out.update_moves_alpha = false;
      } else if (moved != 0.0) {
        out.update_moves_alpha = false;
      }
    }
    if (!any_aligned) out.update_moves_alpha = false;
  }
  out.pass = out.aligned_nonpositive && out.orthogonal_zero && out.interfering_nonnegative &&
             out.update_moves_alpha;
  return out;
}

}  // namespace lamaml
