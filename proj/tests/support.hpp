// Shared test fixtures and independent statistical helpers. Everything here
// stays independent of the library paths it is used to check.
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "lamaml/example.hpp"
#include "lamaml/nn.hpp"
#include "lamaml/rng.hpp"

namespace testsupport {

inline std::vector<lamaml::Example> random_examples(std::size_t n, std::size_t dim,
                                                    std::size_t classes, lamaml::Rng& rng,
                                                    std::int32_t task_id = 0) {
  std::vector<lamaml::Example> out(n);
  for (auto& e : out) {
    e.x.resize(dim);
    for (double& v : e.x) v = rng.uniform(-1.0, 1.0);
    e.y = static_cast<std::int32_t>(rng.next_below(classes));
    e.task_id = task_id;
  }
  return out;
}

// Regularized upper incomplete gamma Q(a, x) via series / continued
// fraction (Numerical Recipes style); used for chi-square p-values.
inline double gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  if (x == 0.0) return 1.0;
  const double gln = std::lgamma(a);
  if (x < a + 1.0) {
    // P(a,x) by series, Q = 1 - P
    double ap = a, sum = 1.0 / a, del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * 1e-15) break;
    }
    return 1.0 - sum * std::exp(-x + a * std::log(x) - gln);
  }
  // Q(a,x) by Lentz continued fraction
  const double fpmin = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / fpmin, d = 1.0 / b, h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < fpmin) d = fpmin;
    c = b + an / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - gln) * h;
}

// Pearson chi-square p-value for observed counts vs uniform expectation.
inline double chi_square_uniform_pvalue(const std::vector<std::uint64_t>& counts,
                                        double expected) {
  double stat = 0.0;
  for (std::uint64_t c : counts) {
    const double d = static_cast<double>(c) - expected;
    stat += d * d / expected;
  }
  const double dof = static_cast<double>(counts.size() - 1);
  return gamma_q(dof / 2.0, stat / 2.0);
}

inline double rel_l2_error(const lamaml::ParamVector& a, const lamaml::ParamVector& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

}  // namespace testsupport
