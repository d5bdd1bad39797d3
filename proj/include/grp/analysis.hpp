#pragma once

// Closed-form constants and asymptotic bounds for the constant-stepsize
// regime: rho_i, Delta_{gamma alpha}, q, C, the error bound on
// (1/m) sum_i E||x_i - x*||^2 and the disagreement bound.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "grp/types.hpp"

namespace grp {

struct BoundInputs {
  int m = 0;
  std::vector<double> sigma;
  std::vector<double> L;
  std::vector<double> alpha;
  std::vector<double> gamma;
  double c = 1.0;       // set-regularity constant
  double Gf = 1.0;      // gradient bound
  double lambda = 0.0;  // second eigenvalue of W̄

  void validate() const {
    require(m >= 1, "bound inputs: m must be >= 1");
    const auto n = static_cast<std::size_t>(m);
    require(sigma.size() == n && L.size() == n && alpha.size() == n && gamma.size() == n,
            "bound inputs: per-agent vectors must have m entries");
    for (std::size_t i = 0; i < n; ++i) {
      require(sigma[i] > 0.0 && L[i] > 0.0 && alpha[i] > 0.0, "bound inputs: sigma, L, alpha must be positive");
      require(gamma[i] > 0.0 && gamma[i] <= 1.0, "bound inputs: gamma must lie in (0, 1]");
    }
    require(c > 0.0 && Gf > 0.0, "bound inputs: c and Gf must be positive");
    require(lambda >= 0.0 && lambda < 1.0, "bound inputs: lambda must lie in [0, 1)");
  }
};

/// The contraction factor appears in two forms: the one the convergence
/// lemmas establish (sigma a - 4(2+c) a^2 L^2, the default) and the one
/// printed with the error bound (a sigma - 8(1+c) a^2 L^2).
enum class RhoVariant { Lemma, Proposition };

inline double rho(const BoundInputs& in, int i, RhoVariant variant = RhoVariant::Lemma) {
  const double a = in.alpha.at(i);
  const double l = in.L.at(i);
  const double coeff = variant == RhoVariant::Lemma ? 4.0 * (2.0 + in.c) : 8.0 * (1.0 + in.c);
  return in.sigma.at(i) * a - coeff * a * a * l * l;
}

/// max_i gamma_i alpha_i - min_j gamma_j alpha_j
inline double delta_gamma_alpha(const BoundInputs& in) {
  double hi = -INFINITY, lo = INFINITY;
  for (int i = 0; i < in.m; ++i) {
    const double p = in.gamma[i] * in.alpha[i];
    hi = std::max(hi, p);
    lo = std::min(lo, p);
  }
  return hi - lo;
}

struct Assumption4Report {
  std::vector<double> rho;
  std::vector<bool> ok_a;  // 0 < rho_i < 1
  std::vector<bool> ok_b;  // 0 < gamma_i rho_i - Delta/m < 1
  double delta_ga = 0.0;

  bool ok() const {
    return std::all_of(ok_a.begin(), ok_a.end(), [](bool b) { return b; }) &&
           std::all_of(ok_b.begin(), ok_b.end(), [](bool b) { return b; });
  }
};

inline Assumption4Report check_assumption4(const BoundInputs& in) {
  in.validate();
  Assumption4Report r;
  r.delta_ga = delta_gamma_alpha(in);
  for (int i = 0; i < in.m; ++i) {
    const double p = rho(in, i, RhoVariant::Lemma);
    const double b = in.gamma[i] * p - r.delta_ga / in.m;
    r.rho.push_back(p);
    r.ok_a.push_back(p > 0.0 && p < 1.0);
    r.ok_b.push_back(b > 0.0 && b < 1.0);
  }
  return r;
}

struct ErrorBound {
  double q = 0.0;
  double C = 0.0;
  double network_term = 0.0;    // (1/q) 4 gbar abar^2 Gf^2 sqrt(C) / (1 - sqrt(lambda))
  double stepsize_term = 0.0;   // (1/q) 4 gbar abar^2 Gf^2 2(1+c)
  double asymmetry_term = 0.0;  // (1/q) Delta Gf^2
  double value = 0.0;
};

namespace detail {

struct Aggregates {
  double gamma_max = 0.0;
  double alpha_max = 0.0;
  double L_max = 0.0;
  double min_gamma_rho = INFINITY;
};

inline Aggregates aggregates(const BoundInputs& in, RhoVariant variant) {
  Aggregates a;
  for (int i = 0; i < in.m; ++i) {
    a.gamma_max = std::max(a.gamma_max, in.gamma[i]);
    a.alpha_max = std::max(a.alpha_max, in.alpha[i]);
    a.L_max = std::max(a.L_max, in.L[i]);
    a.min_gamma_rho = std::min(a.min_gamma_rho, in.gamma[i] * rho(in, i, variant));
  }
  return a;
}

}  // namespace detail

/// Asymptotic bound on limsup (1/m) sum_i E||x_i(k) - x*||^2 for constant
/// stepsizes. Throws NumericalError when q <= 0.
inline ErrorBound error_bound(const BoundInputs& in, RhoVariant variant = RhoVariant::Lemma) {
  in.validate();
  const auto agg = detail::aggregates(in, variant);
  const double delta = delta_gamma_alpha(in);
  ErrorBound out;
  out.q = agg.min_gamma_rho - delta / in.m;
  if (!(out.q > 0.0) || !(agg.min_gamma_rho > 0.0))
    throw NumericalError("error bound undefined: q = " + std::to_string(out.q) + " <= 0 (invalid stepsizes)");
  const double gf2 = in.Gf * in.Gf;
  out.C = 4.0 * (8.0 * agg.gamma_max * (1.0 + agg.alpha_max * agg.alpha_max * agg.L_max * agg.L_max) *
                     (1.0 + in.c) / agg.min_gamma_rho +
                 1.0);
  const double scale = 4.0 * agg.gamma_max * agg.alpha_max * agg.alpha_max * gf2 / out.q;
  out.network_term = scale * std::sqrt(out.C) / (1.0 - std::sqrt(in.lambda));
  out.stepsize_term = scale * 2.0 * (1.0 + in.c);
  out.asymmetry_term = delta * gf2 / out.q;
  out.value = out.network_term + out.stepsize_term + out.asymmetry_term;
  return out;
}

struct DisagreementBound {
  double C = 0.0;
  double value = 0.0;
};

/// Asymptotic bound on limsup sum_i E||x_i(k) - xbar(k)||^2.
inline DisagreementBound disagreement_bound(const BoundInputs& in, RhoVariant variant = RhoVariant::Lemma) {
  in.validate();
  const auto agg = detail::aggregates(in, variant);
  if (!(agg.min_gamma_rho > 0.0))
    throw NumericalError("disagreement bound undefined: min gamma_j rho_j <= 0 (invalid stepsizes)");
  DisagreementBound out;
  out.C = 8.0 * agg.gamma_max * (1.0 + agg.alpha_max * agg.alpha_max * agg.L_max * agg.L_max) * (1.0 + in.c) /
              agg.min_gamma_rho +
          1.0;
  const double gap = 1.0 - std::sqrt(in.lambda);
  out.value = 4.0 * in.m * agg.alpha_max * agg.alpha_max * in.Gf * in.Gf / (gap * gap) * out.C;
  return out;
}

/// alpha_i = nu / gamma_i, so every product gamma_i alpha_i equals nu.
inline std::vector<double> gamma_alpha_balance(const std::vector<double>& gammas, double nu) {
  require(nu > 0.0 && nu < 1.0, "nu must lie in (0, 1)");
  std::vector<double> alpha;
  alpha.reserve(gammas.size());
  for (double g : gammas) {
    require(g > 0.0, "gamma must be positive");
    alpha.push_back(nu / g);
  }
  return alpha;
}

}  // namespace grp
