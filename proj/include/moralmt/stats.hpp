#pragma once

namespace moralmt {

struct ProportionEstimate {
  int hits = 0;
  int n = 0;
  double p_hat = 0.0;
  double lo = 0.0;  // Wilson interval
  double hi = 1.0;
};

inline constexpr double kZ95 = 1.959963984540054;

// Throws Error when n < 1 or hits is outside [0, n].
ProportionEstimate wilson(int hits, int n, double z = kZ95);

double normal_cdf(double x);

struct ZTest {
  double z = 0.0;
  double p_value = 1.0;
  bool defined = false;  // false when the pooled standard error is zero
};

// One-sided pooled two-proportion z-test of H1: p_a > p_b.
ZTest two_proportion_greater(int hits_a, int n_a, int hits_b, int n_b);

}  // namespace moralmt
