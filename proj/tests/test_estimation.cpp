#include <cmath>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "mixcascade/estimation.hpp"

using namespace mixcascade;

namespace {

EnsembleConfig small_ensemble(double chi, unsigned workers) {
  EnsembleConfig e{.spec = make_log_normal(0.2)};
  e.T_log2 = 8;
  e.chi = chi;
  e.j_range = {0, 5};
  e.delta_levels = 3;
  e.p_list = {0.0, 1.0, 2.0, 4.0};
  e.trials = 6;
  e.seed = 2024;
  e.workers = workers;
  return e;
}

}  // namespace

TEST(FitLine, ExactOnLinesAndConstants) {
  const std::vector<double> x{0, 1, 2, 3, 4, 5, 6};
  std::vector<double> y, c(7, 3.25);
  for (double v : x) y.push_back(2.5 - 0.8 * v);
  const auto f = fit_line(x, y);
  EXPECT_NEAR(f.slope, -0.8, 1e-14);
  EXPECT_NEAR(f.intercept, 2.5, 1e-14);
  EXPECT_NEAR(f.slope_stderr, 0.0, 1e-14);
  EXPECT_EQ(fit_line(x, c).slope, 0.0);
  EXPECT_THROW(fit_line(std::vector<double>{1.0}, std::vector<double>{1.0}), Error);
  EXPECT_THROW(fit_line(std::vector<double>{1.0, 1.0}, std::vector<double>{1.0, 2.0}), Error);
}

TEST(FitTau, RecoversSyntheticExponents) {
  PartitionTable t;
  t.p_list = {0.0, 2.0, 3.0};
  const std::vector<double> tau{-1.5, 0.3, 0.9};
  for (int j = 0; j <= 8; ++j) {
    t.j_list.push_back(j);
    std::vector<PartitionEntry> row;
    for (double tv : tau) {
      PartitionEntry e;
      e.log2S = 1.7 - tv * j;
      e.S = std::exp2(e.log2S);
      row.push_back(e);
    }
    t.entries.push_back(row);
  }
  const auto f = fit_tau(t, {2, 7});
  for (std::size_t i = 0; i < tau.size(); ++i) EXPECT_NEAR(f.tau_hat[i], tau[i], 1e-12);
  EXPECT_THROW(fit_tau(t, {3, 3}), Error);
}

TEST(Ensemble, ExactAnchors) {
  for (double chi : {0.0, 0.5, 1.0}) {
    const auto cfg = small_ensemble(chi, 1);
    const auto r = run_ensemble(cfg);
    // S(j,0) = N_T(j) 2^j: slope 1 + chi up to the floor in N_T.
    const double tol = std::log2(1.0 + std::exp2(-cfg.j_range.j_min * chi));
    for (const auto& trial : r.tau_hat_trials) {
      EXPECT_NEAR(-trial[0], 1.0 + chi, tol + 1e-12);
      if (chi == 0.0) {
        EXPECT_EQ(trial[0], -1.0);
        EXPECT_EQ(trial[1], 0.0);
      }
    }
  }
}

TEST(Ensemble, SingleTrialIsFlagged) {
  auto e = small_ensemble(0.0, 1);
  e.trials = 1;
  const auto r = run_ensemble(e);
  EXPECT_TRUE(r.degenerate_ensemble);
  EXPECT_EQ(r.tau_hat[2].rms, 0.0);
  EXPECT_FALSE(run_ensemble(small_ensemble(0.0, 1)).degenerate_ensemble);
}

TEST(Ensemble, WorkerCountDoesNotChangeResults) {
  const auto a = run_ensemble(small_ensemble(1.0, 1));
  const auto b = run_ensemble(small_ensemble(1.0, 4));
  EXPECT_EQ(a.tau_hat_trials, b.tau_hat_trials);
  EXPECT_EQ(a.sup_inf->sup_slope_trials, b.sup_inf->sup_slope_trials);
  for (std::size_t i = 0; i < a.tau_hat.size(); ++i) EXPECT_EQ(a.tau_hat[i].mean, b.tau_hat[i].mean);
}

TEST(Ensemble, CsvSchema) {
  std::ostringstream os;
  write_csv(os, run_ensemble(small_ensemble(0.0, 1)));
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')),
            "p,tau_hat_mean,tau_hat_rms,stderr,trials,j_min,j_max,chi,family");
}

TEST(MeanSpread, Values) {
  const std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
  const auto m = mean_spread(xs);
  EXPECT_DOUBLE_EQ(m.mean, 2.5);
  EXPECT_DOUBLE_EQ(m.rms, std::sqrt(5.0 / 3.0));
  EXPECT_DOUBLE_EQ(m.std_error, std::sqrt(5.0 / 3.0) / 2.0);
}

TEST(BoxDimension, FitsAndExclusions) {
  std::vector<BoxCountHistogram> hs;
  for (int j = 4; j <= 8; ++j) {
    BoxCountHistogram h;
    h.j = j;
    h.epsilon = 0.01;
    h.h_bins = {0.5, 1.0};
    h.counts = {j == 6 ? 0LL : (1LL << j), 0};
    h.N = 1u << (j + 1);
    hs.push_back(h);
  }
  const auto f = fit_box_dimension(hs, 0);
  EXPECT_NEAR(f.slope, 1.0, 1e-12);
  EXPECT_EQ(f.j_excluded, std::vector<int>{6});
  EXPECT_EQ(f.j_used.size(), 4u);
  try {
    fit_box_dimension(hs, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::insufficient_data);
  }
  const auto merged = merge_histograms(std::vector<BoxCountHistogram>{hs[0], hs[0]});
  EXPECT_EQ(merged.counts[0], 2 * hs[0].counts[0]);
  EXPECT_EQ(merged.N, 2 * hs[0].N);
}

TEST(Clt, RefusesTooFewTrials) {
  CltConfig c{.spec = make_log_normal(0.2)};
  c.trials = 4;
  try {
    clt_diagnostic(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::insufficient_trials);
  }
}

TEST(Clt, RegimeBoundary) {
  // tau(2p) - 2 tau(p) = 1 - lambda2 p^2 for the log-normal law.
  const auto g = make_log_normal(0.2);
  const double pc = 1.0 / std::sqrt(0.2);
  double gap = 0;
  EXPECT_EQ(predicted_regime(g, pc, &gap), CltRegime::logarithmic_correction);
  EXPECT_NEAR(gap, 0.0, 1e-12);
  EXPECT_EQ(predicted_regime(g, pc - 0.01), CltRegime::integral_scales);
  EXPECT_EQ(predicted_regime(g, pc + 0.01, &gap), CltRegime::resolution_limited);
  EXPECT_NEAR(gap, 1.0 - 0.2 * (pc + 0.01) * (pc + 0.01), 1e-12);
}

TEST(Clt, DeterministicAcrossWorkers) {
  CltConfig c{.spec = make_log_normal(0.2)};
  c.T_log2 = 8;
  c.j_list = {2, 3, 4, 5};
  c.delta_levels = 3;
  c.trials = 16;
  c.seed = 5;
  const auto a = clt_diagnostic(c);
  c.workers = 3;
  const auto b = clt_diagnostic(c);
  EXPECT_EQ(a.variance, b.variance);
  EXPECT_EQ(a.N_T, (std::vector<std::size_t>{4, 8, 16, 32}));
  EXPECT_EQ(a.regime, CltRegime::integral_scales);
  EXPECT_NEAR(a.predicted_slope_vs_log2_NT, -1.0, 1e-15);
}
