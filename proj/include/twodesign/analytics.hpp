#pragma once

// Closed-form depth formulas and bounds. Natural logarithms throughout.
// Templated on the scalar so results can be cross-checked in long double.

#include "twodesign/errors.hpp"
#include "twodesign/perm_algebra.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <string_view>

namespace twodesign {

struct FormulaParams {
  int n = 0;
  LocalDim q;
  double epsilon = 0.01;
  void validate() const {
    if (n < 3) throw ConfigError("formulas need n >= 3");
    if (!(epsilon > 0 && epsilon < 1)) throw ConfigError("epsilon must lie in (0, 1)");
  }
};

/// Numerator of beta: entangled-boundaries experiment or collision probability.
enum class BetaVariant { entangled_boundaries, collision };

inline BetaVariant parse_beta_variant(std::string_view s) {
  if (s == "entangled_boundaries" || s == "entangled") return BetaVariant::entangled_boundaries;
  if (s == "collision") return BetaVariant::collision;
  throw ConfigError("unknown formula variant '" + std::string(s) + "'");
}

inline std::string_view beta_variant_name(BetaVariant v) {
  return v == BetaVariant::collision ? "collision" : "entangled_boundaries";
}

namespace detail {
inline void check_formula_n(int n) {
  if (n < 3) throw ConfigError("formulas need n >= 3");
}
inline void check_epsilon(double eps) {
  if (!(eps > 0 && eps < 1)) throw ConfigError("epsilon must lie in (0, 1)");
}
}  // namespace detail

/// 1 / log((q^2 + 1) / (2 q cos(pi/n))).
template <typename T = double>
T brickwork_alpha(int n, LocalDim q) {
  detail::check_formula_n(n);
  const T qq = static_cast<T>(q.value());
  const T pi = std::numbers::pi_v<T>;
  return T(1) / std::log((qq * qq + 1) / (2 * qq * std::cos(pi / n)));
}

template <typename T = double>
T brickwork_beta(int n, LocalDim q, BetaVariant variant) {
  detail::check_formula_n(n);
  const T qq = static_cast<T>(q.value()), nn = static_cast<T>(n);
  const T pi = std::numbers::pi_v<T>;
  const T q2 = qq * qq, q4 = q2 * q2, q8 = q4 * q4;
  const T c2 = std::cos(2 * pi / nn), c4 = std::cos(4 * pi / nn);
  const T cot = T(1) / std::tan(pi / nn);
  T factor;
  if (variant == BetaVariant::entangled_boundaries) {
    const T f = (q2 + 1) * (q2 + 1) - 4 * q2 * c2;
    factor = f * f;
  } else {
    const T f = q2 - 1;
    factor = f * f * f * f;
  }
  const T numer = 4 * cot * cot * factor;
  const T denom = nn * nn * (q8 - 2 * (q4 - 1) * q2 * c2 - 1) + nn * (4 * q4 * c4 - 4 * q4);
  return 1 + brickwork_alpha<T>(n, q) * std::log(numer / denom);
}

/// alpha (log n - log eps) + beta.
template <typename T = double>
T design_depth_formula(int n, LocalDim q, double epsilon, BetaVariant variant) {
  detail::check_epsilon(epsilon);
  const T eps = static_cast<T>(epsilon);
  return brickwork_alpha<T>(n, q) * (std::log(static_cast<T>(n)) - std::log(eps)) +
         brickwork_beta<T>(n, q, variant);
}

/// Large-n form log[(2/pi^2) (q^2-1)/q n/eps] / log((q^2+1)/(2q)).
template <typename T = double>
T leading_order_depth(int n, LocalDim q, double epsilon) {
  detail::check_epsilon(epsilon);
  const T qq = static_cast<T>(q.value());
  const T pi = std::numbers::pi_v<T>;
  return std::log(2 / (pi * pi) * (qq * qq - 1) / qq * static_cast<T>(n) / static_cast<T>(epsilon)) /
         std::log((qq * qq + 1) / (2 * qq));
}

/// Large-n depth gap between the entangled-boundaries and collision variants
/// at q = 2: 64 pi^2 / (9 log(5/4) n^2).
template <typename T = double>
T delta_gap_asymptote(int n) {
  const T pi = std::numbers::pi_v<T>;
  return 64 * pi * pi / (9 * std::log(T(5) / 4)) / (static_cast<T>(n) * n);
}

enum class DalzellKind { brickwork, general };

/// Brickwork anticoncentration lower bound on depth:
/// (log n + log A - log log(2(1+eps))) / log((q^2+1)/(2q)), A = 1/(8ce), c = 3e^10.
template <typename T = double>
T dalzell_brickwork_bound(int n, LocalDim q, double epsilon) {
  detail::check_epsilon(epsilon);
  const T qq = static_cast<T>(q.value());
  const T e = std::numbers::e_v<T>;
  const T c = 3 * std::exp(T(10));
  const T a = 1 / (8 * c * e);
  return (std::log(static_cast<T>(n)) + std::log(a) - std::log(std::log(2 * (1 + static_cast<T>(epsilon))))) /
         std::log((qq * qq + 1) / (2 * qq));
}

/// General-architecture bound on 2s/n:
/// (log n - log((q+1) log(1+2eps) / log(q+1))) / log(q^2+1).
template <typename T = double>
T dalzell_general_bound(int n, LocalDim q, double epsilon) {
  detail::check_epsilon(epsilon);
  const T qq = static_cast<T>(q.value());
  const T eps = static_cast<T>(epsilon);
  return (std::log(static_cast<T>(n)) - std::log((qq + 1) * std::log(1 + 2 * eps) / std::log(qq + 1))) /
         std::log(qq * qq + 1);
}

/// Relaxation using log(1+2eps) <= 2eps:
/// (log n + log(1/eps) - log(2(q+1)/log(q+1))) / log(q^2+1).
template <typename T = double>
T dalzell_general_relaxed(int n, LocalDim q, double epsilon) {
  detail::check_epsilon(epsilon);
  const T qq = static_cast<T>(q.value());
  return (std::log(static_cast<T>(n)) - std::log(static_cast<T>(epsilon)) -
          std::log(2 * (qq + 1) / std::log(qq + 1))) /
         std::log(qq * qq + 1);
}

/// The q = 2 shorthand log_5(n/eps) - 0.801 as quoted.
template <typename T = double>
T dalzell_general_quoted(int n, double epsilon) {
  detail::check_epsilon(epsilon);
  return std::log(static_cast<T>(n) / static_cast<T>(epsilon)) / std::log(T(5)) - T(0.801);
}

template <typename T = double>
T dalzell_bounds(int n, LocalDim q, double epsilon, DalzellKind kind) {
  return kind == DalzellKind::brickwork ? dalzell_brickwork_bound<T>(n, q, epsilon)
                                        : dalzell_general_bound<T>(n, q, epsilon);
}

/// Error lower bound when the circuit leaves an m-site subset disconnected
/// with probability p: p (q^m+1)(q^m+q^n) / ((q^m-1)(q^n-q^m)).
template <typename T = double>
T disconnection_error_bound(double p, int m, int n, LocalDim q) {
  if (m < 1 || m >= n) throw ConfigError("subset size must satisfy 1 <= m < n");
  if (!(p >= 0 && p <= 1)) throw ConfigError("probability must lie in [0, 1]");
  const T qm = std::pow(static_cast<T>(q.value()), m), qn = std::pow(static_cast<T>(q.value()), n);
  return static_cast<T>(p) * (qm + 1) * (qm + qn) / ((qm - 1) * (qn - qm));
}

/// Gates a bridge graph needs before its error can reach eps: log(1/eps) / log(1 + 4/(n(n-2))).
template <typename T = double>
T bridge_gate_bound_exact(int n, double epsilon) {
  detail::check_formula_n(n);
  detail::check_epsilon(epsilon);
  const T nn = static_cast<T>(n);
  return -std::log(static_cast<T>(epsilon)) / std::log1p(4 / (nn * (nn - 2)));
}

/// Simplified bridge bound n(n-2)/4 log(1/eps), never above the exact form.
template <typename T = double>
T bridge_gate_bound(int n, double epsilon) {
  detail::check_formula_n(n);
  detail::check_epsilon(epsilon);
  const T nn = static_cast<T>(n);
  return nn * (nn - 2) / 4 * -std::log(static_cast<T>(epsilon));
}

}  // namespace twodesign
