#pragma once

// Monte Carlo estimation of scaling exponents from cascade ensembles.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "mixcascade/analysis.hpp"
#include "mixcascade/cascade.hpp"
#include "mixcascade/error.hpp"
#include "mixcascade/generators.hpp"
#include "mixcascade/parallel.hpp"
#include "mixcascade/rng.hpp"
#include "mixcascade/spectrum.hpp"

namespace mixcascade {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  std::size_t n = 0;
};

/// Ordinary unweighted least squares y = intercept + slope x.
inline LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(Errc::invalid_parameter, "fit_line: size mismatch");
  const std::size_t n = x.size();
  if (n < 2) throw Error(Errc::degenerate_fit, "need at least two points");
  // Means are taken relative to the first point so that constant data give an
  // exactly zero slope.
  double dx = 0.0, dy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dx += x[i] - x[0];
    dy += y[i] - y[0];
  }
  const double xm = x[0] + dx / static_cast<double>(n);
  const double ym = y[0] + dy / static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - xm) * (x[i] - xm);
    sxy += (x[i] - xm) * (y[i] - ym);
  }
  if (!(sxx > 0.0)) throw Error(Errc::degenerate_fit, "all abscissae are equal");
  LinearFit fit;
  fit.n = n;
  fit.slope = sxy / sxx;
  fit.intercept = ym - fit.slope * xm;
  if (n > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - fit.intercept - fit.slope * x[i];
      rss += r * r;
    }
    fit.slope_stderr = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
  }
  return fit;
}

struct JRange {
  int j_min = 0;
  int j_max = 6;

  bool contains(int j) const noexcept { return j >= j_min && j <= j_max; }
  std::vector<int> levels() const {
    std::vector<int> out;
    for (int j = j_min; j <= j_max; ++j) out.push_back(j);
    return out;
  }
};

struct TauFit {
  std::vector<double> p_list;
  std::vector<double> slope;    // d log2 S / dj
  std::vector<double> tau_hat;  // -slope, estimates tau_chi(p)
};

/// Least-squares slope of log2 S(j,p) against j over the table's levels in `range`.
inline TauFit fit_tau(const PartitionTable& table, JRange range) {
  std::vector<std::size_t> rows;
  for (std::size_t ji = 0; ji < table.j_list.size(); ++ji)
    if (range.contains(table.j_list[ji])) rows.push_back(ji);
  std::vector<double> x;
  for (auto ji : rows) x.push_back(table.j_list[ji]);
  TauFit out;
  out.p_list = table.p_list;
  std::vector<double> y(rows.size());
  for (std::size_t pi = 0; pi < table.p_list.size(); ++pi) {
    for (std::size_t r = 0; r < rows.size(); ++r) y[r] = table.entries[rows[r]][pi].log2S;
    const auto fit = fit_line(x, y);
    out.slope.push_back(fit.slope);
    out.tau_hat.push_back(-fit.slope);
  }
  return out;
}

/// Slopes of log2 sup and log2 inf against -j for one measure; these estimate h^+ and h^-.
struct SupInfSlopes {
  double sup_slope = 0.0;
  double inf_slope = 0.0;
};

inline SupInfSlopes sup_inf_slopes(const MixedMeasure& measure, JRange range) {
  std::vector<double> x, ys, yi;
  for (int j = range.j_min; j <= range.j_max; ++j) {
    const auto [sup, inf] = sup_inf(measure, j);
    x.push_back(-static_cast<double>(j));
    ys.push_back(std::log2(sup));
    yi.push_back(std::log2(inf));
  }
  return {fit_line(x, ys).slope, fit_line(x, yi).slope};
}

struct MeanSpread {
  double mean = 0.0;
  double rms = 0.0;        // sample standard deviation across trials
  double std_error = 0.0;  // rms / sqrt(trials)
};

inline MeanSpread mean_spread(std::span<const double> xs) {
  MeanSpread out;
  const std::size_t n = xs.size();
  if (n == 0) return out;
  out.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(n);
  if (n > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.rms = std::sqrt(ss / static_cast<double>(n - 1));
    out.std_error = out.rms / std::sqrt(static_cast<double>(n));
  }
  return out;
}

struct SupInfFit {
  std::vector<double> sup_slope_trials, inf_slope_trials;
  MeanSpread sup, inf;
};

/// Sup/inf slopes averaged over an ensemble of measures.
inline SupInfFit fit_sup_inf(std::span<const MixedMeasure> measures, JRange range) {
  if (range.j_max <= range.j_min) throw Error(Errc::degenerate_fit, "j range has a single level");
  SupInfFit out;
  for (const auto& m : measures) {
    const auto s = sup_inf_slopes(m, range);
    out.sup_slope_trials.push_back(s.sup_slope);
    out.inf_slope_trials.push_back(s.inf_slope);
  }
  out.sup = mean_spread(out.sup_slope_trials);
  out.inf = mean_spread(out.inf_slope_trials);
  return out;
}

struct EnsembleConfig {
  GeneratorSpec spec;
  int T_log2 = 10;
  double chi = 0.0;
  JRange j_range{0, 6};
  int delta_levels = 5;
  std::vector<double> p_list{0, 1, 2, 3, 4, 5, 6};
  int trials = 30;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  bool with_sup_inf = true;
  std::size_t max_cells = kDefaultMaxCells;
  /// When set, the generalized partition function with this window replaces
  /// the dyadic one.
  std::optional<BoxWindowFunction> window{};
};

struct EstimateReport {
  std::string family;
  double chi = 0.0;
  JRange j_range;
  int trials = 0;
  bool degenerate_ensemble = false;  // a single trial: no spread available
  std::vector<double> p_list;
  std::vector<MeanSpread> tau_hat;                // per p
  std::vector<std::vector<double>> tau_hat_trials;  // [trial][p]
  std::optional<SupInfFit> sup_inf;
};

/// Independent trials, each on a fresh pool drawn from stream(seed).child(trial).
/// Per-p estimates are reduced in trial order.
inline EstimateReport run_ensemble(const EnsembleConfig& cfg) {
  if (cfg.trials < 1) throw Error(Errc::invalid_parameter, "trials must be >= 1");
  if (cfg.j_range.j_max <= cfg.j_range.j_min || cfg.j_range.j_min < 0)
    throw Error(Errc::degenerate_fit, "j range needs at least two levels");
  if (cfg.p_list.empty()) throw Error(Errc::invalid_parameter, "p list is empty");
  const auto levels = cfg.j_range.levels();
  const std::size_t n = static_cast<std::size_t>(cfg.trials);
  std::vector<std::vector<double>> taus(n);
  std::vector<SupInfSlopes> extremes(n);
  const RngStream master(cfg.seed);
  parallel_for(n, cfg.workers, [&](std::size_t t) {
    const auto measure = build_mixed(cfg.spec, cfg.T_log2, cfg.j_range.j_max, cfg.chi,
                                     cfg.delta_levels, master.child(t), 1, cfg.max_cells);
    const auto table = cfg.window ? wavelet_partition(measure, levels, cfg.p_list, *cfg.window)
                                  : partition(measure, levels, cfg.p_list);
    taus[t] = fit_tau(table, cfg.j_range).tau_hat;
    if (cfg.with_sup_inf) extremes[t] = sup_inf_slopes(measure, cfg.j_range);
  });

  EstimateReport r;
  r.family = family_name(cfg.spec.family());
  r.chi = cfg.chi;
  r.j_range = cfg.j_range;
  r.trials = cfg.trials;
  r.degenerate_ensemble = cfg.trials == 1;
  r.p_list = cfg.p_list;
  r.tau_hat_trials = taus;
  std::vector<double> column(n);
  for (std::size_t pi = 0; pi < cfg.p_list.size(); ++pi) {
    for (std::size_t t = 0; t < n; ++t) column[t] = taus[t][pi];
    r.tau_hat.push_back(mean_spread(column));
  }
  if (cfg.with_sup_inf) {
    SupInfFit s;
    for (const auto& e : extremes) {
      s.sup_slope_trials.push_back(e.sup_slope);
      s.inf_slope_trials.push_back(e.inf_slope);
    }
    s.sup = mean_spread(s.sup_slope_trials);
    s.inf = mean_spread(s.inf_slope_trials);
    r.sup_inf = s;
  }
  return r;
}

/// Columns: p,tau_hat_mean,tau_hat_rms,stderr,trials,j_min,j_max,chi,family
inline void write_csv(std::ostream& os, const EstimateReport& r) {
  const auto old = os.precision(17);
  os << "p,tau_hat_mean,tau_hat_rms,stderr,trials,j_min,j_max,chi,family\n";
  for (std::size_t pi = 0; pi < r.p_list.size(); ++pi) {
    const auto& e = r.tau_hat[pi];
    os << r.p_list[pi] << ',' << e.mean << ',' << e.rms << ',' << e.std_error << ',' << r.trials
       << ',' << r.j_range.j_min << ',' << r.j_range.j_max << ',' << r.chi << ',' << r.family
       << '\n';
  }
  os.precision(old);
}

// Box counting -----------------------------------------------------------------

/// Adds the counts of histograms taken at the same level (e.g. across trials).
inline BoxCountHistogram merge_histograms(std::span<const BoxCountHistogram> parts) {
  if (parts.empty()) throw Error(Errc::insufficient_data, "no histograms to merge");
  BoxCountHistogram out = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const auto& h = parts[i];
    if (h.j != out.j || h.h_bins != out.h_bins || h.epsilon != out.epsilon)
      throw Error(Errc::invalid_parameter, "histograms to merge must share level and bins");
    for (std::size_t b = 0; b < h.counts.size(); ++b) out.counts[b] += h.counts[b];
    out.N += h.N;
  }
  return out;
}

struct BoxDimensionFit {
  double h = 0.0;
  double slope = 0.0;  // estimates chi + D(h)
  double intercept = 0.0;
  std::vector<int> j_used;
  std::vector<int> j_excluded;  // levels with a zero count
};

/// Least-squares slope of log2 count against j for bin `bin`, one histogram per level.
inline BoxDimensionFit fit_box_dimension(std::span<const BoxCountHistogram> per_level,
                                         std::size_t bin) {
  BoxDimensionFit out;
  std::vector<double> x, y;
  for (const auto& h : per_level) {
    if (bin >= h.counts.size()) throw Error(Errc::index_error, "histogram bin out of range");
    out.h = h.h_bins[bin];
    if (h.counts[bin] > 0) {
      out.j_used.push_back(h.j);
      x.push_back(h.j);
      y.push_back(std::log2(static_cast<double>(h.counts[bin])));
    } else {
      out.j_excluded.push_back(h.j);
    }
  }
  if (x.size() < 2)
    throw Error(Errc::insufficient_data, "fewer than two levels with a positive count");
  const auto fit = fit_line(x, y);
  out.slope = fit.slope;
  out.intercept = fit.intercept;
  return out;
}

struct BoxCountConfig {
  GeneratorSpec spec;
  int T_log2 = 10;
  double chi = 0.0;
  std::vector<int> j_list{4, 5, 6, 7, 8, 9};
  int delta_levels = 5;
  std::vector<double> h_bins{};
  double epsilon = 0.02;
  int trials = 10;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::size_t max_cells = kDefaultMaxCells;
};

/// Histograms per level, summed over trials (one pool per trial, built at the
/// deepest requested level).
inline std::vector<BoxCountHistogram> run_box_counting(const BoxCountConfig& cfg) {
  if (cfg.trials < 1) throw Error(Errc::invalid_parameter, "trials must be >= 1");
  if (cfg.j_list.empty()) throw Error(Errc::invalid_parameter, "j list is empty");
  const int j_top = *std::max_element(cfg.j_list.begin(), cfg.j_list.end());
  const std::size_t n = static_cast<std::size_t>(cfg.trials);
  std::vector<std::vector<BoxCountHistogram>> per_trial(n);
  const RngStream master(cfg.seed);
  parallel_for(n, cfg.workers, [&](std::size_t t) {
    const auto measure = build_mixed(cfg.spec, cfg.T_log2, j_top, cfg.chi, cfg.delta_levels,
                                     master.child(t), 1, cfg.max_cells);
    for (int j : cfg.j_list) per_trial[t].push_back(box_count(measure, j, cfg.h_bins, cfg.epsilon));
  });
  std::vector<BoxCountHistogram> merged;
  for (std::size_t ji = 0; ji < cfg.j_list.size(); ++ji) {
    std::vector<BoxCountHistogram> parts;
    for (std::size_t t = 0; t < n; ++t) parts.push_back(per_trial[t][ji]);
    merged.push_back(merge_histograms(parts));
  }
  return merged;
}

// CLT variance-rate diagnostic -----------------------------------------------

struct CltConfig {
  GeneratorSpec spec;
  int T_log2 = 10;
  double chi = 1.0;
  double p = 1.0;
  std::vector<int> j_list{3, 4, 5, 6, 7, 8};
  int delta_levels = 5;
  int trials = 64;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::size_t max_cells = kDefaultMaxCells;
};

enum class CltRegime {
  integral_scales,         // tau(2p) - 2 tau(p) > 0: variance ~ 1 / N_T
  logarithmic_correction,  // tau(2p) - 2 tau(p) = 0
  resolution_limited,      // tau(2p) - 2 tau(p) < 0: slower than 1 / N_T
};

inline const char* regime_name(CltRegime r) {
  switch (r) {
    case CltRegime::integral_scales: return "integral-scales";
    case CltRegime::logarithmic_correction: return "logarithmic-correction";
    case CltRegime::resolution_limited: return "resolution-limited";
  }
  return "unknown";
}

/// Regime predicted by the sign of tau(2p) - 2 tau(p); |gap| < 1e-9 counts as zero.
inline CltRegime predicted_regime(const GeneratorSpec& spec, double p, double* gap_out = nullptr) {
  const double gap = spec.tau(2.0 * p) - 2.0 * spec.tau(p);
  if (gap_out) *gap_out = gap;
  if (std::abs(gap) < 1e-9) return CltRegime::logarithmic_correction;
  return gap > 0.0 ? CltRegime::integral_scales : CltRegime::resolution_limited;
}

struct CltReport {
  double p = 0.0;
  double chi = 0.0;
  int trials = 0;
  std::vector<int> j_list;
  std::vector<std::size_t> N_T;
  std::vector<double> mean;      // ensemble mean of 2^(j (tau(p) - chi)) S(j,p)
  std::vector<double> variance;  // ensemble variance of the same
  double slope_vs_j = 0.0;
  double slope_vs_log2_NT = std::numeric_limits<double>::quiet_NaN();  // NaN when N_T is constant
  double tau_gap = 0.0;  // tau(2p) - 2 tau(p)
  CltRegime regime = CltRegime::integral_scales;
  double predicted_slope_vs_j = 0.0;
  double predicted_slope_vs_log2_NT = std::numeric_limits<double>::quiet_NaN();
  bool fluctuation_clt_applies = false;  // p_chi^- / 2 < p < p_chi^+ / 2
};

/// Ensemble variance of the rescaled partition function 2^(j (tau(p) - chi)) S(j,p),
/// regressed against j and against log2 N_T. The rescaling uses the analytic
/// tau of the generator.
inline CltReport clt_diagnostic(const CltConfig& cfg) {
  if (cfg.trials < 8)
    throw Error(Errc::insufficient_trials,
                "variance-rate diagnostic needs at least 8 trials, got " + std::to_string(cfg.trials));
  if (cfg.j_list.size() < 2) throw Error(Errc::degenerate_fit, "need at least two levels");
  const int j_top = *std::max_element(cfg.j_list.begin(), cfg.j_list.end());
  const std::size_t n = static_cast<std::size_t>(cfg.trials);
  const double tau_p = cfg.spec.tau(cfg.p);
  const std::vector<double> p_one{cfg.p};
  std::vector<std::vector<double>> rescaled(n);
  const RngStream master(cfg.seed);
  parallel_for(n, cfg.workers, [&](std::size_t t) {
    const auto measure = build_mixed(cfg.spec, cfg.T_log2, j_top, cfg.chi, cfg.delta_levels,
                                     master.child(t), 1, cfg.max_cells);
    const auto table = partition(measure, cfg.j_list, p_one);
    for (std::size_t ji = 0; ji < cfg.j_list.size(); ++ji)
      rescaled[t].push_back(std::exp2(cfg.j_list[ji] * (tau_p - cfg.chi)) * table.entries[ji][0].S);
  });

  CltReport r;
  r.p = cfg.p;
  r.chi = cfg.chi;
  r.trials = cfg.trials;
  r.j_list = cfg.j_list;
  std::vector<double> xj, xn, y, column(n);
  for (std::size_t ji = 0; ji < cfg.j_list.size(); ++ji) {
    for (std::size_t t = 0; t < n; ++t) column[t] = rescaled[t][ji];
    const auto ms = mean_spread(column);
    const std::size_t n_t = integral_scales(cfg.j_list[ji], cfg.chi);
    r.N_T.push_back(n_t);
    r.mean.push_back(ms.mean);
    r.variance.push_back(ms.rms * ms.rms);
    xj.push_back(cfg.j_list[ji]);
    xn.push_back(std::log2(static_cast<double>(n_t)));
    y.push_back(std::log2(r.variance.back()));
  }
  r.slope_vs_j = fit_line(xj, y).slope;
  if (std::adjacent_find(xn.begin(), xn.end(), std::not_equal_to<>()) != xn.end())
    r.slope_vs_log2_NT = fit_line(xn, y).slope;

  r.regime = predicted_regime(cfg.spec, cfg.p, &r.tau_gap);
  // Var ~ 2^(-j chi) when the integral-scale term dominates, times
  // 2^(j (2 tau(p) - tau(2p))) otherwise.
  r.predicted_slope_vs_j = -cfg.chi + std::max(0.0, -r.tau_gap);
  if (cfg.chi > 0.0) r.predicted_slope_vs_log2_NT = r.predicted_slope_vs_j / cfg.chi;
  const auto crit = critical_exponents(cfg.spec, cfg.chi);
  r.fluctuation_clt_applies = cfg.p > 0.5 * crit.p_minus && cfg.p < 0.5 * crit.p_plus;
  return r;
}

/// Columns: j,N_T,mean,variance,log2_variance  (a trailing comment block holds the fits)
inline void write_csv(std::ostream& os, const CltReport& r) {
  const auto old = os.precision(17);
  os << "j,N_T,mean,variance,log2_variance\n";
  for (std::size_t i = 0; i < r.j_list.size(); ++i)
    os << r.j_list[i] << ',' << r.N_T[i] << ',' << r.mean[i] << ',' << r.variance[i] << ','
       << std::log2(r.variance[i]) << '\n';
  os << "# p=" << r.p << " chi=" << r.chi << " trials=" << r.trials
     << " slope_vs_j=" << r.slope_vs_j << " slope_vs_log2_NT=" << r.slope_vs_log2_NT
     << " tau_gap=" << r.tau_gap << " regime=" << regime_name(r.regime)
     << " predicted_slope_vs_j=" << r.predicted_slope_vs_j
     << " predicted_slope_vs_log2_NT=" << r.predicted_slope_vs_log2_NT << '\n';
  os.precision(old);
}

}  // namespace mixcascade
