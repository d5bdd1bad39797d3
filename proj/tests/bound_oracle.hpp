#pragma once

// Straight-line re-evaluation of the asymptotic bounds, written directly from
// the displayed formulas without sharing code with grp/analysis.hpp.

#include <cmath>
#include <vector>

namespace grp::prop {

struct OracleInputs {
  int m;
  std::vector<double> sigma, L, alpha, gamma;
  double c, Gf, lambda;
};

inline double oracle_max(const std::vector<double>& v) {
  double r = v[0];
  for (double x : v)
    if (x > r) r = x;
  return r;
}

inline double oracle_rho(const OracleInputs& in, int i, bool lemma) {
  if (lemma) return in.sigma[i] * in.alpha[i] - 4.0 * (2.0 + in.c) * in.alpha[i] * in.alpha[i] * in.L[i] * in.L[i];
  return in.alpha[i] * in.sigma[i] - 8.0 * (1.0 + in.c) * in.alpha[i] * in.alpha[i] * in.L[i] * in.L[i];
}

inline double oracle_min_gamma_rho(const OracleInputs& in, bool lemma) {
  double r = in.gamma[0] * oracle_rho(in, 0, lemma);
  for (int i = 1; i < in.m; ++i) {
    const double v = in.gamma[i] * oracle_rho(in, i, lemma);
    if (v < r) r = v;
  }
  return r;
}

inline double oracle_delta(const OracleInputs& in) {
  double hi = in.gamma[0] * in.alpha[0], lo = hi;
  for (int i = 1; i < in.m; ++i) {
    const double p = in.gamma[i] * in.alpha[i];
    if (p > hi) hi = p;
    if (p < lo) lo = p;
  }
  return hi - lo;
}

/// (1/q) 4 gbar abar^2 Gf^2 (sqrt(C)/(1 - sqrt(lambda)) + 2(1+c)) + (1/q) Delta Gf^2,
/// q = min gamma rho - Delta/m, C = 4(8 gbar (1 + abar^2 Lbar^2)(1+c)/min gamma rho + 1).
inline double oracle_error_bound(const OracleInputs& in, bool lemma = true) {
  const double gbar = oracle_max(in.gamma), abar = oracle_max(in.alpha), Lbar = oracle_max(in.L);
  const double mgr = oracle_min_gamma_rho(in, lemma);
  const double delta = oracle_delta(in);
  const double q = mgr - delta / in.m;
  const double C = 4.0 * (8.0 * gbar * (1.0 + abar * abar * Lbar * Lbar) * (1.0 + in.c) / mgr + 1.0);
  const double first = (1.0 / q) * 4.0 * gbar * abar * abar * in.Gf * in.Gf *
                       (std::sqrt(C) / (1.0 - std::sqrt(in.lambda)) + 2.0 * (1.0 + in.c));
  const double second = (1.0 / q) * delta * in.Gf * in.Gf;
  return first + second;
}

/// 4 m abar^2 Gf^2 / (1 - sqrt(lambda))^2 * C, C = 8 gbar (1 + abar^2 Lbar^2)(1+c)/min gamma rho + 1.
inline double oracle_disagreement_bound(const OracleInputs& in, bool lemma = true) {
  const double gbar = oracle_max(in.gamma), abar = oracle_max(in.alpha), Lbar = oracle_max(in.L);
  const double C = 8.0 * gbar * (1.0 + abar * abar * Lbar * Lbar) * (1.0 + in.c) / oracle_min_gamma_rho(in, lemma) + 1.0;
  const double gap = 1.0 - std::sqrt(in.lambda);
  return 4.0 * in.m * abar * abar * in.Gf * in.Gf / (gap * gap) * C;
}

}  // namespace grp::prop
