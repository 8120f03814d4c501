#pragma once

#include <cmath>
#include <limits>
#include <numbers>

#include "mixcascade/error.hpp"

namespace mixcascade {

/// Real branches of the Lambert W function (w e^w = x).
/// principal: x >= -1/e, w >= -1.  secondary: -1/e <= x < 0, w <= -1.
enum class LambertBranch { principal, secondary };

namespace detail {

inline constexpr double kInvE = 0.36787944117144232159552377016146087;

// Series about the branch point in q = +-sqrt(2 (e x + 1)).
inline double lambert_branch_series(double q) {
  return -1.0 + q * (1.0 + q * (-1.0 / 3.0 + q * (11.0 / 72.0 + q * (-43.0 / 540.0))));
}

inline double lambert_halley(double w, double x) {
  for (int iter = 0; iter < 64; ++iter) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    const double wp1 = w + 1.0;
    if (f == 0.0 || wp1 == 0.0) break;
    const double step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
    const double next = w - step;
    if (!std::isfinite(next)) break;
    if (std::abs(next - w) <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(next)) {
      w = next;
      break;
    }
    w = next;
  }
  return w;
}

}  // namespace detail

/// Halley iteration from branch-specific starting points.
inline double lambert_w(LambertBranch branch, double x) {
  using detail::kInvE;
  if (std::isnan(x)) return x;
  const double branch_point = -kInvE;
  // Arguments that miss -1/e only through rounding are snapped to it.
  const double snap = 8.0 * std::numeric_limits<double>::epsilon() * kInvE;
  if (x < branch_point - snap)
    throw Error(Errc::domain_error, "Lambert W undefined below -1/e");
  if (x <= branch_point + snap) return -1.0;
  const double q = std::sqrt(2.0 * (std::numbers::e * x + 1.0));

  if (branch == LambertBranch::principal) {
    if (x == 0.0) return 0.0;
    if (std::isinf(x)) return x;
    double w;
    if (x < -0.25)
      w = detail::lambert_branch_series(q);
    else if (x < 3.0)
      w = std::log1p(x) * (1.0 - std::log1p(std::log1p(x)) / (2.0 + std::log1p(x)));
    else {
      const double l1 = std::log(x);
      const double l2 = std::log(l1);
      w = l1 - l2 + l2 / l1;
    }
    return detail::lambert_halley(w, x);
  }

  if (!(x < 0.0)) throw Error(Errc::domain_error, "secondary Lambert W branch needs -1/e <= x < 0");
  double w;
  if (x < -0.25) {
    w = detail::lambert_branch_series(-q);
  } else {
    const double l1 = std::log(-x);
    const double l2 = std::log(-l1);
    w = l1 - l2 + l2 / l1;
  }
  return detail::lambert_halley(w, x);
}

}  // namespace mixcascade
