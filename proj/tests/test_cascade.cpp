#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "mixcascade/cascade.hpp"

using namespace mixcascade;

namespace {

double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, k = 0;
  double d = 0.0;
  while (i < a.size() && k < b.size()) {
    const double x = std::min(a[i], b[k]);
    while (i < a.size() && a[i] <= x) ++i;
    while (k < b.size() && b[k] <= x) ++k;
    d = std::max(d, std::abs(double(i) / a.size() - double(k) / b.size()));
  }
  return d;
}

}  // namespace

TEST(Cascade, LevelZeroAndOne) {
  const auto g = make_log_normal(0.2);
  const RngStream s(1);
  const auto c0 = build_cascade(g, 3, 0, s);
  ASSERT_EQ(c0.masses.size(), 1u);
  EXPECT_EQ(c0.masses[0], 8.0);
  const auto c1 = build_cascade(g, 3, 1, s);
  ASSERT_EQ(c1.masses.size(), 2u);
  // Heap ids 2 and 3 hold the children of the root.
  auto left = s.engine(2), right = s.engine(3);
  EXPECT_EQ(c1.masses[0], 4.0 * g.sample(left));
  EXPECT_EQ(c1.masses[1], 4.0 * g.sample(right));
}

TEST(Cascade, NodeWeightsAreSharedAcrossDepths) {
  // A deeper cascade on the same stream extends the shallower one: every
  // cell splits with the weights drawn from the next level's node ids.
  const auto g = make_log_gamma(0.2, 10.0);
  const RngStream s(42);
  const auto shallow = build_cascade(g, 0, 6, s);
  const auto deep = build_cascade(g, 0, 7, s);
  for (std::size_t k = 0; k < shallow.masses.size(); ++k) {
    auto left = s.engine(128 + 2 * k), right = s.engine(128 + 2 * k + 1);
    EXPECT_EQ(deep.masses[2 * k], 0.5 * shallow.masses[k] * g.sample(left));
    EXPECT_EQ(deep.masses[2 * k + 1], 0.5 * shallow.masses[k] * g.sample(right));
  }
}

TEST(Cascade, CoarseGrainConservesMass) {
  for (const auto& g : {make_log_normal(0.2), make_log_poisson(0.2, -0.1), make_log_gamma(0.2, 10.0)}) {
    const auto c = build_cascade(g, 10, 14, RngStream(7));
    const double finest = std::accumulate(c.masses.begin(), c.masses.end(), 0.0);
    for (int j = 0; j <= c.level; ++j) {
      const auto m = coarse_grain(c, j);
      ASSERT_EQ(m.size(), std::size_t{1} << j);
      EXPECT_LT(rel_diff(std::accumulate(m.begin(), m.end(), 0.0), finest), 1e-12) << j;
    }
  }
}

TEST(Cascade, EnsembleMeanTotalMassIsT) {
  const auto g = make_log_normal(0.2);
  const int n = 200;
  std::vector<double> totals;
  for (int i = 0; i < n; ++i) totals.push_back(total_mass(build_cascade(g, 10, 12, RngStream(99).child(i))));
  const double mean = std::accumulate(totals.begin(), totals.end(), 0.0) / n;
  double ss = 0;
  for (double t : totals) ss += (t - mean) * (t - mean);
  const double se = std::sqrt(ss / (n - 1) / n);
  EXPECT_NEAR(mean, 1024.0, 3 * se);
}

TEST(Cascade, StarEquationKolmogorovSmirnov) {
  // Z_L =d (W_1 Z'_{L-1} + W_2 Z''_{L-1}) / 2 with all factors independent.
  const auto g = make_log_normal(0.2);
  const int n = 10000, L = 10;
  std::vector<double> lhs, rhs;
  const RngStream a(1001), b(2002), c(3003);
  auto wgen = RngStream(4004).engine();
  for (int i = 0; i < n; ++i) {
    lhs.push_back(total_mass(build_cascade(g, 0, L, a.child(i))));
    const double z1 = total_mass(build_cascade(g, 0, L - 1, b.child(i)));
    const double z2 = total_mass(build_cascade(g, 0, L - 1, c.child(i)));
    rhs.push_back(0.5 * (g.sample(wgen) * z1 + g.sample(wgen) * z2));
  }
  EXPECT_LT(ks_statistic(lhs, rhs), 1.628 * std::sqrt(2.0 / n));
}

TEST(Cascade, IntegralScalesAndPoolSizes) {
  EXPECT_EQ(integral_scales(6, 0.0), 1u);
  EXPECT_EQ(integral_scales(6, 1.0), 64u);
  EXPECT_EQ(integral_scales(6, 0.5), 8u);
  EXPECT_EQ(integral_scales(5, 0.5), 5u);  // floor(2^2.5)
  EXPECT_EQ(integral_scales(0, 1.0), 1u);
  const auto g = make_log_normal(0.2);
  EXPECT_EQ(build_mixed(g, 4, 6, 0.0, 2, RngStream(1)).pool_size(), 1u);
  EXPECT_EQ(build_mixed(g, 4, 6, 1.0, 2, RngStream(1)).pool_size(), 64u);
  EXPECT_EQ(build_mixed(g, 4, 6, 0.5, 2, RngStream(1)).pool_size(), 8u);
}

TEST(Cascade, WindowSizesAndErrors) {
  const auto g = make_log_normal(0.2);
  const auto m = build_mixed(g, 4, 4, 1.0, 3, RngStream(5));
  EXPECT_EQ(m.level(), 7);
  for (int j = 0; j <= 4; ++j) EXPECT_EQ(window(m, j).size(), (std::size_t{1} << j) * integral_scales(j, 1.0));
  auto code = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::io_error;
  };
  EXPECT_EQ(code([&] { window(m, 5); }), Errc::insufficient_pool);
  EXPECT_EQ(code([&] { window(m, 8); }), Errc::index_error);
  EXPECT_EQ(code([&] { window(m, -1); }), Errc::index_error);
  EXPECT_EQ(code([&] { build_mixed(g, 0, 20, 1.0, 5, RngStream(1)); }), Errc::resource_limit);
  EXPECT_EQ(code([&] { build_cascade(g, 0, 30, RngStream(1), 1 << 20); }), Errc::resource_limit);
  EXPECT_EQ(code([&] { coarse_grain(m.pool[0], 9); }), Errc::index_error);
}

TEST(Cascade, WorkerCountDoesNotChangeMasses) {
  const auto g = make_log_poisson(0.2, -0.1);
  const auto a = build_mixed(g, 10, 6, 1.0, 4, RngStream(77), 1);
  const auto b = build_mixed(g, 10, 6, 1.0, 4, RngStream(77), 5);
  ASSERT_EQ(a.pool_size(), b.pool_size());
  for (std::size_t m = 0; m < a.pool_size(); ++m) EXPECT_EQ(a.pool[m].masses, b.pool[m].masses);
}

TEST(Cascade, DumpRoundTrip) {
  const auto g = make_log_gamma(0.2, 10.0);
  const auto m = build_mixed(g, 10, 3, 0.5, 2, RngStream(3));
  std::stringstream buf;
  write_measure(buf, m);
  const std::string bytes = buf.str();
  EXPECT_EQ(bytes.substr(0, 8), std::string("MIXCASC\0", 8));
  EXPECT_EQ(bytes.size(), 8 + 4 + 4 + 4 + 8 + 8 + 4 + 8 * m.pool_size() * (1u << m.level()));
  const auto back = read_measure(buf);
  EXPECT_EQ(back.chi, m.chi);
  EXPECT_EQ(back.delta_levels, m.delta_levels);
  EXPECT_EQ(back.j_max, m.j_max);
  EXPECT_EQ(back.T_log2(), m.T_log2());
  ASSERT_EQ(back.pool_size(), m.pool_size());
  for (std::size_t k = 0; k < m.pool_size(); ++k) EXPECT_EQ(back.pool[k].masses, m.pool[k].masses);

  std::stringstream bad("NOTAMEAS and more bytes");
  EXPECT_THROW(read_measure(bad), Error);
  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(read_measure(truncated), Error);
}
