#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <boost/math/special_functions/lambert_w.hpp>
#include <gtest/gtest.h>

#include "mixcascade/spectrum.hpp"

using namespace mixcascade;

namespace {

std::vector<GeneratorSpec> families() {
  return {make_log_normal(0.2), make_log_poisson(0.2, -0.1), make_log_poisson(0.2, 0.1),
          make_log_gamma(0.2, 10.0), make_log_normal(0.05), make_log_gamma(0.3, 4.0)};
}

const double kChis[] = {0.0, 0.5, 1.0, 2.0};

}  // namespace

TEST(LambertW, AgreesWithBoost) {
  for (double x : {-0.36787944, -0.3, -0.2, -0.1, -1e-3, -1e-8, 0.0, 1e-6, 0.5, 1.0, 3.0, 10.0, 1e3, 1e10}) {
    const double w = lambert_w(LambertBranch::principal, x);
    EXPECT_NEAR(w, boost::math::lambert_w0(x), 1e-12 * std::max(1.0, std::abs(w))) << x;
  }
  for (double x : {-0.36787944, -0.3, -0.2, -0.1, -1e-3, -1e-8, -1e-100}) {
    const double w = lambert_w(LambertBranch::secondary, x);
    EXPECT_NEAR(w, boost::math::lambert_wm1(x), 1e-12 * std::max(1.0, std::abs(w))) << x;
  }
}

TEST(LambertW, ResidualBelowTolerance) {
  for (double x = -0.3678; x < 20.0; x += 0.0173) {
    const double w = lambert_w(LambertBranch::principal, x);
    EXPECT_LE(std::abs(w * std::exp(w) - x), 1e-12 * std::max(1.0, std::abs(x))) << x;
    if (x < 0.0) {
      const double v = lambert_w(LambertBranch::secondary, x);
      EXPECT_LE(std::abs(v * std::exp(v) - x), 1e-12) << x;
      EXPECT_LE(v, -1.0);
    }
  }
}

TEST(LambertW, BranchPointAndDomain) {
  const double b = -1.0 / std::numbers::e;
  EXPECT_EQ(lambert_w(LambertBranch::principal, b), -1.0);
  EXPECT_EQ(lambert_w(LambertBranch::secondary, b), -1.0);
  EXPECT_THROW(lambert_w(LambertBranch::principal, -0.4), Error);
  EXPECT_THROW(lambert_w(LambertBranch::secondary, 0.1), Error);
  EXPECT_THROW(lambert_w(LambertBranch::secondary, 0.0), Error);
}

TEST(Critical, ClosedFormMatchesBisection) {
  for (const auto& g : families())
    for (double chi : kChis) {
      const auto num = critical_exponents(g, chi);
      const auto cf = closed_form_critical_exponents(g, chi);
      ASSERT_TRUE(cf.has_value());
      EXPECT_NEAR(cf->p_plus, num.p_plus, 1e-10) << g.describe() << " chi=" << chi;
      EXPECT_NEAR(cf->p_minus, num.p_minus, 1e-10) << g.describe() << " chi=" << chi;
      EXPECT_NEAR(cf->h_plus, num.h_plus, 1e-10);
      EXPECT_NEAR(cf->h_minus, num.h_minus, 1e-10);
      // Both are roots of p tau'(p) - tau(p) + chi.
      EXPECT_NEAR(criticality(g, chi, num.p_plus), 0.0, 1e-10);
      EXPECT_NEAR(criticality(g, chi, num.p_minus), 0.0, 1e-10);
      EXPECT_GT(num.p_plus, 1.0);
      EXPECT_LT(num.p_minus, 0.0);
    }
}

TEST(Critical, LogNormalValues) {
  const auto g = make_log_normal(0.2);
  EXPECT_NEAR(critical_exponents(g, 0.0).p_plus, std::sqrt(10.0), 1e-12);
  EXPECT_NEAR(critical_exponents(g, 1.0).p_plus, std::sqrt(20.0), 1e-12);
  EXPECT_NEAR(critical_exponents(g, 1.0).p_minus, -std::sqrt(20.0), 1e-12);
  // h+ = tau'(p+) = 1 + lambda2/2 - lambda2 p+
  EXPECT_NEAR(critical_exponents(g, 0.0).h_plus, 1.1 - 0.2 * std::sqrt(10.0), 1e-12);
  EXPECT_NEAR(theoretical_tau_chi(g, 0.0, 5.0), 5 * (1.1 - 0.2 * std::sqrt(10.0)), 1e-12);
  EXPECT_NEAR(theoretical_tau_chi(g, 0.0, 5.0), 2.33772, 5e-6);
  EXPECT_NEAR(theoretical_tau_chi(g, 1.0, 3.0), g.tau(3.0) - 1.0, 1e-15);
  EXPECT_NEAR(theoretical_tau_chi(g, 0.5, 0.0), -1.5, 1e-15);
}

TEST(Critical, LogPoissonSmallJumpExpansion) {
  // p+- = +-p_n - 2 (1 + chi) delta / (3 lambda2) + O(delta^2), p_n = sqrt(2 (1 + chi) / lambda2)
  for (double chi : {0.0, 1.0})
    for (double delta : {-0.02, -0.01, 0.01}) {
      const auto c = critical_exponents(make_log_poisson(0.2, delta), chi);
      const double pn = std::sqrt(2 * (1 + chi) / 0.2);
      const double shift = -2 * (1 + chi) * delta / (3 * 0.2);
      EXPECT_NEAR(c.p_plus, pn + shift, 40 * delta * delta) << chi << " " << delta;
      EXPECT_NEAR(c.p_minus, -pn + shift, 40 * delta * delta) << chi << " " << delta;
    }
  const auto tiny = critical_exponents(make_log_poisson(0.2, 1e-3), 0.0);
  EXPECT_NEAR(tiny.p_plus, std::sqrt(10.0), 1e-2);
}

TEST(Legendre, IdentityAlongTauPrime) {
  for (const auto& g : families())
    for (double p : {-4.0, -2.0, -0.5, 0.5, 1.0, 2.0, 3.0}) {
      if (!g.in_domain(p)) continue;
      const double h = g.tau_prime(p);
      EXPECT_NEAR(legendre(g, h), p * h - g.tau(p), 1e-10) << g.describe() << " p=" << p;
    }
}

TEST(Legendre, CriticalLevelsGiveMinusChi) {
  for (const auto& g : families())
    for (double chi : kChis) {
      const auto c = critical_exponents(g, chi);
      EXPECT_NEAR(legendre(g, c.h_plus), -chi, 1e-10) << g.describe() << " chi=" << chi;
      EXPECT_NEAR(legendre(g, c.h_minus), -chi, 1e-10) << g.describe() << " chi=" << chi;
    }
}

TEST(Legendre, GridMinimization) {
  const auto g = make_log_normal(0.2);
  EXPECT_NEAR(legendre(g, 0.9), 0.9, 1e-14);
  EXPECT_NEAR(legendre(g, 1.1), 1.0, 1e-14);
  for (const auto& gen : families())
    for (double h : {0.5, 0.9, 1.3}) {
      double best = std::numeric_limits<double>::infinity();
      for (double p = -30.0; p < std::min(30.0, gen.domain_upper()); p += 1e-4)
        best = std::min(best, p * h - gen.tau(p));
      EXPECT_NEAR(legendre(gen, h), best, 1e-6) << gen.describe() << " h=" << h;
    }
}

TEST(Legendre, OutsideRangeIsUnattainable) {
  // log-Gamma: tau' decreases to 1 - m0 as p -> -inf is unbounded, but is bounded below near beta.
  const auto g = make_log_poisson(0.2, -0.1);
  // For delta < 0, tau'(p) > 1 - m0 for every p.
  EXPECT_EQ(legendre(g, 1.0 - g.m0() - 0.01), kUnattainable);
}

TEST(Besov, FrontierContinuousIncreasingConcave) {
  for (const auto& g : families())
    for (double chi : kChis) {
      const auto c = critical_exponents(g, chi);
      const double x0 = 1.0 / c.p_plus;
      const double left = besov_frontier(g, c, x0 * (1 + 1e-12));
      const double right = besov_frontier(g, c, x0 * (1 - 1e-12));
      EXPECT_NEAR(left, right, 1e-8) << g.describe() << " chi=" << chi;
      const double step = 1e-3;
      double prev_slope = std::numeric_limits<double>::infinity();
      for (double x = std::max(step, 1.0 / (g.domain_upper() - 1e-6)) + step; x < 1.5; x += step) {
        const double slope = (besov_frontier(g, c, x + step) - besov_frontier(g, c, x)) / step;
        EXPECT_GT(slope, 0.0);
        EXPECT_LE(slope, 1.0 + chi + 1e-9);
        EXPECT_LE(slope, prev_slope + 1e-6);
        prev_slope = slope;
      }
    }
}

TEST(Spectrum, ReportGrids) {
  const auto g = make_log_gamma(0.2, 10.0);
  const std::vector<double> ps{-2.0, 0.0, 2.0, 9.5, 10.0, 11.0};
  const std::vector<double> hs{0.5, 1.0};
  const std::vector<double> xs{0.05, 0.5, 1.0};
  const auto r = spectrum_report(g, 1.0, ps, hs, xs);
  EXPECT_EQ(r.p.size(), 4u);  // p >= beta dropped
  EXPECT_EQ(r.D.size(), 2u);
  EXPECT_EQ(r.frontier.size(), 3u);
  EXPECT_THROW(critical_exponents(g, -0.1), Error);
}
