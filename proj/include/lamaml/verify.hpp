#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lamaml/nn.hpp"
#include "lamaml/trainers.hpp"

namespace lamaml {

// Numerical certification of the trainer derivations on tiny fixtures.
// Every check is deterministic given its seed.

struct HypergradCheck {
  std::size_t k = 0;
  double max_rel_err = 0.0;  // max |fd - analytic| / max(|fd|_inf, |analytic|_inf)
  bool pass = false;         // max_rel_err < 1e-5
};

// Compares meta_grad_alpha against central differences (eps = 1e-6) of the
// first-order unrolled objective: the inner trajectory is re-run at
// perturbed alpha with the per-step gradients held fixed, exactly as the
// first-order expression prescribes, and the meta-loss is evaluated at the
// resulting endpoint.
HypergradCheck check_hypergradient(const Network& net, std::size_t k, std::uint64_t seed);
HypergradCheck check_hypergradient(std::size_t k, std::uint64_t seed);  // 2-4-3 fixture

struct EquivalenceCheck {
  std::vector<double> alphas;
  std::vector<double> discrepancies;  // ||G1(alpha) - G2(alpha)||_2
  std::vector<double> ratios;         // discrepancy[i] / discrepancy[i+1]
  bool pass = false;                  // all ratios in [3.5, 4.5]
};

// k = 1 objective equivalence: G1 = finite-diff gradient of the one-step
// look-ahead loss, G2 = finite-diff gradient of the surrogate
// sum_i(l_i - alpha grad l_i . grad l_t). Their gap shrinks as O(alpha^2),
// so halving alpha must shrink it by a factor close to 4. With single_task
// only the current task's loss (and its self-alignment term) remains.
EquivalenceCheck check_equivalence_k1(std::span<const double> alphas, std::uint64_t seed,
                                      bool single_task = false);
EquivalenceCheck check_equivalence_k1(std::uint64_t seed);  // {1e-2, 5e-3, 2.5e-3, 1.25e-3}

struct SignCheck {
  bool aligned_nonpositive = false;    // traj == g_meta  -> g_alpha <= 0, LR rises
  bool orthogonal_zero = false;        // disjoint support -> g_alpha == 0
  bool interfering_nonnegative = false;  // traj == -g_meta -> g_alpha >= 0, LR falls
  bool update_moves_alpha = false;     // one la_maml_update moves alpha per coordinate sign
  bool pass = false;
};

SignCheck check_sign_semantics();

// Smallest |pre-activation| over all hidden units and examples; finite-
// difference checks resample fixtures until this clears a margin so no
// ReLU kink sits inside the probed neighbourhood.
double min_preactivation_margin(const Network& net, const ParamVector& params,
                                std::span<const Example> examples);

}  // namespace lamaml
