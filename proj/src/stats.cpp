#include "moralmt/stats.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "moralmt/error.hpp"

namespace moralmt {

ProportionEstimate wilson(int hits, int n, double z) {
  if (n < 1) throw Error("proportion needs n >= 1");
  if (hits < 0 || hits > n) throw Error("hits " + std::to_string(hits) + " outside [0, n]");
  const double nn = n;
  const double p = hits / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  const double lo = hits == 0 ? 0.0 : std::max(0.0, centre - half);
  const double hi = hits == n ? 1.0 : std::min(1.0, centre + half);
  return {hits, n, p, lo, hi};
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

ZTest two_proportion_greater(int hits_a, int n_a, int hits_b, int n_b) {
  if (n_a < 1 || n_b < 1) throw Error("two-proportion test needs n >= 1 on both sides");
  const double pa = static_cast<double>(hits_a) / n_a;
  const double pb = static_cast<double>(hits_b) / n_b;
  const double pooled = static_cast<double>(hits_a + hits_b) / (n_a + n_b);
  const double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / n_a + 1.0 / n_b));
  if (!(se > 0.0)) return {};
  const double z = (pa - pb) / se;
  return {z, 1.0 - normal_cdf(z), true};
}

}  // namespace moralmt
