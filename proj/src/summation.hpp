#pragma once

// Internal helpers for summing slowly decaying positive series in log domain.

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <cstdint>
#include <limits>

#include "bnest/special.hpp"

namespace bnest::detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Estimated sum of terms beyond n relative to exp(log_total), assuming the
/// terms decay at least like m^-q from n on. q is the smaller of the local
/// exponent (from the last two terms) and the known asymptotic exponent.
inline double relative_tail_estimate(double log_prev, double log_cur, std::int64_t n,
                                     double q_asymptotic, double log_total) {
  if (!(log_cur < log_prev) || n < 2) return kInf;
  const double nd = static_cast<double>(n);
  const double q_local = (log_prev - log_cur) / std::log(nd / (nd - 1.0));
  const double q = std::min(q_local, q_asymptotic);
  if (!(q > 1.0)) return kInf;
  return std::exp(log_cur - log_total) * nd / (q - 1.0);
}

struct TailIntegral {
  double log_value = kNegInf;
  bool converged = false;
};

/// log of the integral of exp(log_f(x)) over [x0, x_end) (x_end may be +inf),
/// integrated in u = log(x / x0) with 10-point Gauss-Legendre panels.
template <class LogF>
TailIntegral log_tail_integral(LogF&& log_f, double x0, double x_end) {
  using Rule = boost::math::quadrature::gauss<double, 10>;
  static const auto& nodes = Rule::abscissa();
  static const auto& weights = Rule::weights();
  constexpr double kPanel = 0.5;
  constexpr double kNegligible = -41.4465316739;  // log(1e-18)

  const double log_x0 = std::log(x0);
  const double u_end = std::isinf(x_end) ? kInf : std::log(x_end / x0);
  const double u_limit = std::min(u_end, 690.0 - log_x0);

  auto log_g = [&](double u) { return log_f(x0 * std::exp(u)) + log_x0 + u; };

  LogSumAccumulator total;
  double prev_panel = kNegInf;
  TailIntegral out;
  for (double u0 = 0.0; u0 < u_limit; u0 += kPanel) {
    const double width = std::min(kPanel, u_limit - u0);
    const double mid = u0 + 0.5 * width;
    const double half = 0.5 * width;
    LogSumAccumulator panel;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const double lw = std::log(weights[i] * half);
      panel.add(lw + log_g(mid + half * nodes[i]));
      if (nodes[i] != 0.0) panel.add(lw + log_g(mid - half * nodes[i]));
    }
    const double log_panel = panel.value();
    total.add(log_panel);
    if (u0 + width >= u_end) {
      out.converged = true;
      break;
    }
    if (prev_panel != kNegInf && log_panel < prev_panel &&
        log_panel < total.value() + kNegligible) {
      const double log_ratio = log_panel - prev_panel;
      const double log_rest = log_panel + log_ratio - std::log(-std::expm1(log_ratio));
      if (log_rest < total.value() + kNegligible) {
        out.converged = true;
        break;
      }
    }
    if (log_panel == kNegInf && prev_panel == kNegInf && u0 > 0.0) {
      out.converged = true;
      break;
    }
    prev_panel = log_panel;
  }
  out.log_value = total.value();
  return out;
}

}  // namespace bnest::detail
