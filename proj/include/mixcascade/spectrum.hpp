#pragma once

// Closed-form and numeric theory of the mixed-asymptotic exponents:
// critical exponents p_chi^+-, piecewise tau_chi, Legendre spectrum D(h) and
// the Besov frontier.

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "mixcascade/error.hpp"
#include "mixcascade/generators.hpp"
#include "mixcascade/lambert_w.hpp"

namespace mixcascade {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Returned by legendre() for h outside the range of tau'.
inline constexpr double kUnattainable = -kInf;

struct CriticalExponents {
  double chi = 0.0;
  double p_plus = kInf;
  double p_minus = -kInf;
  double h_plus = std::numeric_limits<double>::quiet_NaN();
  double h_minus = std::numeric_limits<double>::quiet_NaN();
  /// False when p_plus is finite but tau(p_plus) <= 0, outside the moment
  /// hypothesis under which the scaling law holds.
  bool moment_hypothesis_ok = true;
};

namespace detail {

/// Bracket limits for root searches: the tau domain, and |p delta| <= 700 for
/// log-Poisson so exp(p delta) stays finite.
inline double search_limit(const GeneratorSpec& spec, bool positive) {
  double limit = 1e3;
  if (spec.family() == Family::LogPoisson) limit = std::min(limit, 700.0 / std::abs(spec.delta()));
  if (positive && spec.family() == Family::LogGamma) limit = spec.beta() - 1e-9;
  return limit;
}

/// Bisection of a function that is positive at `inside` and non-positive at
/// `outside`; runs until the bracket stops shrinking.
template <class F>
double bisect(F&& f, double inside, double outside) {
  for (int iter = 0; iter < 2000; ++iter) {
    const double mid = inside + 0.5 * (outside - inside);
    if (mid == inside || mid == outside) break;
    if (f(mid) > 0.0)
      inside = mid;
    else
      outside = mid;
  }
  return inside + 0.5 * (outside - inside);
}

}  // namespace detail

/// f(p) = p tau'(p) - tau(p) + chi.
inline double criticality(const GeneratorSpec& spec, double chi, double p) {
  return p * spec.tau_prime(p) - spec.tau(p) + chi;
}

/// Roots of p tau'(p) - tau(p) = -chi on (1, inf) and (-inf, 0) by bisection.
/// f has its maximum 1 + chi at p = 0 and is monotone on each side.
inline CriticalExponents critical_exponents(const GeneratorSpec& spec, double chi) {
  if (!(chi >= 0.0) || !std::isfinite(chi)) throw Error(Errc::invalid_parameter, "chi must be >= 0");
  CriticalExponents out;
  out.chi = chi;
  auto f = [&](double p) { return criticality(spec, chi, p); };

  const double lo = 1.0 + 1e-9;
  const double hi = detail::search_limit(spec, true);
  if (f(hi) <= 0.0) {
    out.p_plus = detail::bisect(f, lo, hi);
    out.h_plus = spec.tau_prime(out.p_plus);
    out.moment_hypothesis_ok = spec.tau(out.p_plus) > 0.0;
  }
  const double neg = -detail::search_limit(spec, false);
  if (f(neg) <= 0.0) {
    out.p_minus = detail::bisect(f, -1e-9, neg);
    out.h_minus = spec.tau_prime(out.p_minus);
  }
  return out;
}

/// Lambert-W closed forms, when the family has one.
///   log-normal : p = +-sqrt(2 (1 + chi) / lambda2)
///   log-Poisson: p = (W(z) + 1) / delta,        z = (delta^2 (1 + chi) - lambda2) / (e lambda2)
///   log-Gamma  : p = beta (1 + 1 / W(-e^(-1-c))), c = (1 + chi) / (lambda2 beta^2)
/// The branch is the one that gives p the required sign.
inline std::optional<CriticalExponents> closed_form_critical_exponents(const GeneratorSpec& spec,
                                                                       double chi) {
  CriticalExponents out;
  out.chi = chi;
  const double l2 = spec.lambda2();
  switch (spec.family()) {
    case Family::LogNormal: {
      const double p = std::sqrt(2.0 * (1.0 + chi) / l2);
      out.p_plus = p;
      out.p_minus = -p;
      break;
    }
    case Family::LogPoisson: {
      const double d = spec.delta();
      const double z = (d * d * (1.0 + chi) - l2) / (std::numbers::e * l2);
      // W < -1 makes (W + 1) / delta carry the sign of -delta.
      const double w_lower = z < 0.0 ? lambert_w(LambertBranch::secondary, z) : kInf;
      const double w_upper = lambert_w(LambertBranch::principal, z);
      const double from_lower = std::isfinite(w_lower) ? (w_lower + 1.0) / d : kInf;
      const double from_upper = (w_upper + 1.0) / d;
      if (d < 0.0) {
        out.p_plus = std::isfinite(from_lower) ? from_lower : kInf;
        out.p_minus = from_upper;
      } else {
        out.p_plus = from_upper;
        out.p_minus = std::isfinite(from_lower) ? from_lower : -kInf;
      }
      break;
    }
    case Family::LogGamma: {
      const double b = spec.beta();
      const double c = (1.0 + chi) / (l2 * b * b);
      const double z = -std::exp(-1.0 - c);
      out.p_plus = b * (1.0 + 1.0 / lambert_w(LambertBranch::secondary, z));
      out.p_minus = b * (1.0 + 1.0 / lambert_w(LambertBranch::principal, z));
      break;
    }
    case Family::Empirical:
      return std::nullopt;
  }
  if (std::isfinite(out.p_plus)) {
    out.h_plus = spec.tau_prime(out.p_plus);
    out.moment_hypothesis_ok = spec.tau(out.p_plus) > 0.0;
  }
  if (std::isfinite(out.p_minus)) out.h_minus = spec.tau_prime(out.p_minus);
  return out;
}

/// tau_chi(p): tau(p) - chi between the critical exponents, h^+- p beyond.
inline double theoretical_tau_chi(const GeneratorSpec& spec, const CriticalExponents& crit,
                                  double p) {
  if (p >= crit.p_plus) return crit.h_plus * p;
  if (p <= crit.p_minus) return crit.h_minus * p;
  return spec.tau(p) - crit.chi;
}

inline double theoretical_tau_chi(const GeneratorSpec& spec, double chi, double p) {
  return theoretical_tau_chi(spec, critical_exponents(spec, chi), p);
}

/// D(h) = min_p (p h - tau(p)), or kUnattainable outside the range of tau'.
inline double legendre(const GeneratorSpec& spec, double h) {
  if (spec.family() == Family::LogNormal) {
    const double l2 = spec.lambda2();
    const double d = h - 1.0 - 0.5 * l2;
    return 1.0 - d * d / (2.0 * l2);
  }
  // tau' is decreasing: solve tau'(p) = h inside the search bracket.
  const double p_hi = detail::search_limit(spec, true);
  const double p_lo = -detail::search_limit(spec, false);
  const double top = spec.tau_prime(p_lo);
  const double bottom = spec.tau_prime(p_hi);
  if (!(h <= top && h >= bottom)) return kUnattainable;
  const double p_star = detail::bisect([&](double p) { return spec.tau_prime(p) - h; }, p_lo, p_hi);
  return p_star * h - spec.tau(p_star);
}

/// Besov frontier s(1/p): (tau(p) + 1) / p below p_chi^+, and the line
/// h_chi^+ + (1 + chi) / p above it.
inline double besov_frontier(const GeneratorSpec& spec, const CriticalExponents& crit,
                             double inv_p) {
  if (!(inv_p > 0.0)) throw Error(Errc::invalid_parameter, "besov_frontier needs 1/p > 0");
  const double p = 1.0 / inv_p;
  if (p < crit.p_plus) return (spec.tau(p) + 1.0) * inv_p;
  return crit.h_plus + (1.0 + crit.chi) * inv_p;
}

inline double besov_frontier(const GeneratorSpec& spec, double chi, double inv_p) {
  return besov_frontier(spec, critical_exponents(spec, chi), inv_p);
}

struct SpectrumReport {
  std::string generator;
  CriticalExponents critical;
  std::vector<double> p, tau, tau_chi;
  std::vector<double> h, D;
  std::vector<double> inv_p, frontier;
};

/// Evaluates the theory on the given grids. p values outside the tau domain
/// are skipped; the frontier beyond p_chi^+ is linear and needs no tau.
inline SpectrumReport spectrum_report(const GeneratorSpec& spec, double chi,
                                      std::span<const double> p_grid,
                                      std::span<const double> h_grid,
                                      std::span<const double> inv_p_grid) {
  SpectrumReport r;
  r.generator = spec.describe();
  r.critical = critical_exponents(spec, chi);
  for (double p : p_grid) {
    if (!spec.in_domain(p)) continue;
    r.p.push_back(p);
    r.tau.push_back(spec.tau(p));
    r.tau_chi.push_back(theoretical_tau_chi(spec, r.critical, p));
  }
  for (double h : h_grid) {
    r.h.push_back(h);
    r.D.push_back(legendre(spec, h));
  }
  for (double x : inv_p_grid) {
    if (!(x > 0.0) || (1.0 / x < r.critical.p_plus && !spec.in_domain(1.0 / x))) continue;
    r.inv_p.push_back(x);
    r.frontier.push_back(besov_frontier(spec, r.critical, x));
  }
  return r;
}

/// Columns: chi,p_plus,p_minus,h_plus,h_minus,moment_hypothesis_ok
inline void write_critical_csv(std::ostream& os, std::span<const CriticalExponents> rows) {
  const auto old = os.precision(17);
  os << "chi,p_plus,p_minus,h_plus,h_minus,moment_hypothesis_ok\n";
  for (const auto& c : rows)
    os << c.chi << ',' << c.p_plus << ',' << c.p_minus << ',' << c.h_plus << ',' << c.h_minus
       << ',' << (c.moment_hypothesis_ok ? 1 : 0) << '\n';
  os.precision(old);
}

/// Columns: p,tau,tau_chi
inline void write_tau_csv(std::ostream& os, const SpectrumReport& r) {
  const auto old = os.precision(17);
  os << "p,tau,tau_chi\n";
  for (std::size_t i = 0; i < r.p.size(); ++i)
    os << r.p[i] << ',' << r.tau[i] << ',' << r.tau_chi[i] << '\n';
  os.precision(old);
}

/// Columns: h,D  (D = -inf outside the attainable range)
inline void write_legendre_csv(std::ostream& os, const SpectrumReport& r) {
  const auto old = os.precision(17);
  os << "h,D\n";
  for (std::size_t i = 0; i < r.h.size(); ++i) os << r.h[i] << ',' << r.D[i] << '\n';
  os.precision(old);
}

/// Columns: inv_p,s
inline void write_frontier_csv(std::ostream& os, const SpectrumReport& r) {
  const auto old = os.precision(17);
  os << "inv_p,s\n";
  for (std::size_t i = 0; i < r.inv_p.size(); ++i) os << r.inv_p[i] << ',' << r.frontier[i] << '\n';
  os.precision(old);
}

}  // namespace mixcascade
