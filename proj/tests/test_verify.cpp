#include <doctest.h>

#include "lamaml/verify.hpp"

using namespace lamaml;

TEST_SUITE_BEGIN("verify");

TEST_CASE("hypergradient matches finite differences for small k") {
  for (std::size_t k : {1, 2, 4}) {
    const HypergradCheck c = check_hypergradient(k, 123);
    CAPTURE(k);
    CAPTURE(c.max_rel_err);
    CHECK(c.pass);
    CHECK(c.max_rel_err < 1e-5);
  }
}

TEST_CASE("hypergradient of a converged meta-loss is exactly zero") {
  ParamVector g_meta(12);  // zero vector: the factor-of-zero case
  std::vector<ParamVector> traj(3, ParamVector(12, 0.5));
  const ParamVector g_alpha = meta_grad_alpha(g_meta, traj);
  for (double v : g_alpha.v) CHECK(v == 0.0);
}

TEST_CASE("k=1 equivalence: discrepancy decays quadratically in alpha") {
  const EquivalenceCheck c = check_equivalence_k1(0);
  REQUIRE(c.ratios.size() == 3);
  for (double r : c.ratios) {
    CHECK(r >= 3.5);
    CHECK(r <= 4.5);
  }
  CHECK(c.pass);
}

TEST_CASE("equivalence discrepancy vanishes as alpha goes to zero") {
  const std::vector<double> alphas = {1e-2, 1e-4};
  const EquivalenceCheck c = check_equivalence_k1(alphas, 1);
  REQUIRE(c.discrepancies.size() == 2);
  // at alpha=1e-4 the gap is ~1e-8 of its alpha=1e-2 size times 1e4
  CHECK(c.discrepancies[1] < c.discrepancies[0] / 1e3);
}

TEST_CASE("equivalence fixture with a single task still decays quadratically") {
  // L_t = l_t: only the self-alignment term remains
  const std::vector<double> alphas = {1e-2, 5e-3, 2.5e-3, 1.25e-3};
  const EquivalenceCheck c = check_equivalence_k1(alphas, 3, /*single_task=*/true);
  CHECK(c.pass);
}

TEST_CASE("sign semantics fixtures all hold") {
  const SignCheck c = check_sign_semantics();
  CHECK(c.aligned_nonpositive);
  CHECK(c.orthogonal_zero);
  CHECK(c.interfering_nonnegative);
  CHECK(c.update_moves_alpha);
  CHECK(c.pass);
}

TEST_SUITE_END();
