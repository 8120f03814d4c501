#pragma once

// Batch commands behind the command-line tool. Each command reads a validated
// ExperimentConfig, checks its memory budget before allocating anything, and
// writes CSV tables (plus SVG figures where relevant) into cfg.out_dir.
//
// Every CSV begins with one provenance comment line followed by its header row.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "mixcascade/analysis.hpp"
#include "mixcascade/cascade.hpp"
#include "mixcascade/config.hpp"
#include "mixcascade/error.hpp"
#include "mixcascade/estimation.hpp"
#include "mixcascade/generators.hpp"
#include "mixcascade/rng.hpp"
#include "mixcascade/spectrum.hpp"
#include "mixcascade/svg.hpp"

namespace mixcascade {

inline constexpr const char* kToolkitVersion = "0.1.0";

struct RunContext {
  ExperimentConfig cfg;
  std::string command;
  bool reproducible = false;
  std::ostream* log = nullptr;  // progress messages; null for silence
};

namespace detail {

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string number_tag(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

inline std::string provenance(const RunContext& ctx) {
  return "# mixcascade " + std::string(kToolkitVersion) + " command=" + ctx.command +
         " seed=" + std::to_string(ctx.cfg.master_seed.value_or(0)) +
         " config_hash=" + hex64(fnv1a64(canonical_text(ctx.cfg))) +
         " generator=" + ctx.cfg.generator().describe();
}

inline std::string utc_stamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::filesystem::path out_path(const RunContext& ctx, const std::string& name) {
  std::error_code ec;
  std::filesystem::create_directories(ctx.cfg.out_dir, ec);
  if (ec) throw Error(Errc::io_error, "cannot create '" + ctx.cfg.out_dir + "': " + ec.message());
  return std::filesystem::path(ctx.cfg.out_dir) / name;
}

inline void write_text(const RunContext& ctx, const std::string& name,
                       const std::function<void(std::ostream&)>& body) {
  const auto path = out_path(ctx, name);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(Errc::io_error, "cannot write '" + path.string() + "'");
  body(os);
  if (!os) throw Error(Errc::io_error, "write failed for '" + path.string() + "'");
  if (ctx.log) *ctx.log << "wrote " << path.string() << '\n';
}

inline void write_table(const RunContext& ctx, const std::string& name,
                        const std::function<void(std::ostream&)>& body) {
  write_text(ctx, name, [&](std::ostream& os) {
    os << provenance(ctx) << '\n';
    body(os);
  });
}

inline void write_plot(const RunContext& ctx, const std::string& name, const svg::Plot& plot) {
  const std::string stamp = ctx.reproducible ? std::string{} : utc_stamp();
  write_text(ctx, name, [&](std::ostream& os) { svg::write_svg(os, plot, stamp); });
}

inline std::vector<double> grid(double lo, double hi, double step) {
  std::vector<double> out;
  const auto n = static_cast<long long>(std::floor((hi - lo) / step + 1e-9));
  for (long long i = 0; i <= n; ++i) out.push_back(lo + static_cast<double>(i) * step);
  return out;
}

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  return colors[i % 6];
}

inline JRange fit_range(const ExperimentConfig& cfg) { return {cfg.j_min, cfg.j_max}; }

inline std::optional<BoxWindowFunction> wavelet_window(const ExperimentConfig& cfg) {
  if (cfg.wavelet_g == "indicator") return BoxWindowFunction::indicator();
  if (cfg.wavelet_g == "haar") return BoxWindowFunction::haar();
  return std::nullopt;
}

inline std::vector<double> histogram_bins(const ExperimentConfig& cfg) {
  if (!cfg.histogram_h_bins.empty()) return cfg.histogram_h_bins;
  const double eps = cfg.histogram_epsilon;
  std::vector<double> out;
  for (int k = 0;; ++k) {
    const double h = cfg.histogram_h_min + (2 * k + 1) * eps;
    if (h > cfg.histogram_h_max + 1e-12) break;
    out.push_back(h);
  }
  if (out.empty()) throw Error(Errc::config_error, "histogram h range holds no bin");
  return out;
}

template <class T>
std::string join(const std::vector<T>& xs, char sep = ';') {
  std::ostringstream os;
  for (std::size_t i = 0; i < xs.size(); ++i) os << (i ? std::string(1, sep) : "") << xs[i];
  return os.str();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Budget checks, run before any output is produced.

inline void preflight(const RunContext& ctx) {
  const auto& c = ctx.cfg;
  validate(c);
  const std::string& cmd = ctx.command;
  const bool all = cmd == "report";
  if (cmd == "simulate" || cmd == "fit" || all)
    for (double chi : c.chi_list) check_mixed_budget(c.j_max, chi, c.delta_levels, c.max_cells);
  if (cmd == "fit" || all) {
    if (c.wavelet_g != "none") {
      if (c.wavelet_j_max <= c.wavelet_j_min || c.wavelet_j_min < 0)
        throw Error(Errc::config_error, "need 0 <= wavelet.j_min < wavelet.j_max");
      for (double chi : c.chi_list)
        check_mixed_budget(c.wavelet_j_max, chi, c.delta_levels, c.max_cells);
    }
  }
  if (cmd == "histogram" || all) {
    if (c.histogram_j_list.size() < 2) throw Error(Errc::config_error, "histogram.j_list needs two levels");
    const int top = *std::max_element(c.histogram_j_list.begin(), c.histogram_j_list.end());
    for (double chi : c.chi_list) check_mixed_budget(top, chi, c.delta_levels, c.max_cells);
    (void)detail::histogram_bins(c);
  }
  if (cmd == "clt" || all) {
    if (c.clt_trials < 8) throw Error(Errc::config_error, "clt.trials must be >= 8");
    if (c.clt_j_list.size() < 2) throw Error(Errc::config_error, "clt.j_list needs two levels");
    const int top = *std::max_element(c.clt_j_list.begin(), c.clt_j_list.end());
    check_mixed_budget(top, c.clt_chi, c.delta_levels, c.max_cells);
  }
}

// ---------------------------------------------------------------------------

/// Dumps simulate.trials measures per chi. Trial t uses the same random stream
/// as trial t of `fit`, so the dumps are the measures that command analyses.
inline void cmd_simulate(const RunContext& ctx) {
  const auto& c = ctx.cfg;
  const auto spec = c.generator();
  const RngStream master(*c.master_seed);
  std::vector<std::string> rows;
  for (double chi : c.chi_list) {
    for (int t = 0; t < c.simulate_trials; ++t) {
      const auto measure = build_mixed(spec, c.T_log2, c.j_max, chi, c.delta_levels,
                                       master.child(static_cast<std::uint64_t>(t)), c.workers,
                                       c.max_cells);
      const std::string name =
          "measure_chi" + detail::number_tag(chi) + "_trial" + std::to_string(t) + ".bin";
      detail::write_text(ctx, name, [&](std::ostream& os) { write_measure(os, measure); });
      std::ostringstream row;
      row.precision(17);
      row << chi << ',' << t << ',' << name << ',' << measure.pool_size() << ',' << measure.level()
          << ',' << measure.T_log2() << ',' << measure.delta_levels;
      rows.push_back(row.str());
    }
  }
  detail::write_table(ctx, "simulate.csv", [&](std::ostream& os) {
    os << "chi,trial,file,pool_size,level,T_log2,delta_levels\n";
    for (const auto& r : rows) os << r << '\n';
  });
}

/// Ensemble estimates of tau_chi per chi, sup/inf slopes, optional wavelet
/// estimates, and the overlay figure of tau_hat + chi against tau.
inline std::vector<EstimateReport> cmd_fit(const RunContext& ctx) {
  const auto& c = ctx.cfg;
  const auto spec = c.generator();
  std::vector<EstimateReport> reports;
  for (double chi : c.chi_list) {
    EnsembleConfig e{.spec = spec};
    e.T_log2 = c.T_log2;
    e.chi = chi;
    e.j_range = detail::fit_range(c);
    e.delta_levels = c.delta_levels;
    e.p_list = c.p_list;
    e.trials = c.trials;
    e.seed = *c.master_seed;
    e.workers = c.workers;
    e.max_cells = c.max_cells;
    if (ctx.log) *ctx.log << "fit: chi=" << chi << " (" << c.trials << " trials)\n";
    reports.push_back(run_ensemble(e));
    detail::write_table(ctx, "fit_chi" + detail::number_tag(chi) + ".csv",
                        [&](std::ostream& os) { write_csv(os, reports.back()); });

    if (const auto g = detail::wavelet_window(c)) {
      e.window = *g;
      e.with_sup_inf = false;
      e.j_range = {c.wavelet_j_min, c.wavelet_j_max};
      e.p_list.clear();
      for (double p : c.p_list)
        if (p > 0.0) e.p_list.push_back(p);
      if (e.p_list.empty()) throw Error(Errc::config_error, "wavelet fit needs some p > 0");
      const auto w = run_ensemble(e);
      detail::write_table(ctx, "wavelet_" + c.wavelet_g + "_chi" + detail::number_tag(chi) + ".csv",
                          [&](std::ostream& os) { write_csv(os, w); });
    }
  }

  detail::write_table(ctx, "sup_inf.csv", [&](std::ostream& os) {
    os.precision(17);
    os << "chi,sup_slope_mean,sup_slope_rms,h_plus,inf_slope_mean,inf_slope_rms,h_minus\n";
    for (const auto& r : reports) {
      const auto crit = critical_exponents(spec, r.chi);
      os << r.chi << ',' << r.sup_inf->sup.mean << ',' << r.sup_inf->sup.rms << ',' << crit.h_plus
         << ',' << r.sup_inf->inf.mean << ',' << r.sup_inf->inf.rms << ',' << crit.h_minus << '\n';
    }
  });

  svg::Plot plot{"tau_hat + chi and analytic curves (" + spec.describe() + ")", "p",
                 "tau_hat(p) + chi", {}};
  const double p_lo = *std::min_element(c.p_list.begin(), c.p_list.end());
  const double p_hi = *std::max_element(c.p_list.begin(), c.p_list.end());
  const auto dense = detail::grid(p_lo, p_hi, std::max(1e-3, (p_hi - p_lo) / 200.0));
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    svg::Series pts{"chi=" + detail::number_tag(r.chi), svg::Style::points, detail::palette(i),
                    r.p_list, {}, {}};
    for (const auto& e : r.tau_hat) {
      pts.y.push_back(e.mean + r.chi);
      pts.err.push_back(e.rms);
    }
    plot.series.push_back(std::move(pts));
    const auto crit = critical_exponents(spec, r.chi);
    svg::Series theory{"tau_chi + chi", svg::Style::dashed, detail::palette(i), {}, {}, {}};
    for (double p : dense) {
      if (!spec.in_domain(p)) continue;
      theory.x.push_back(p);
      theory.y.push_back(theoretical_tau_chi(spec, crit, p) + r.chi);
    }
    plot.series.push_back(std::move(theory));
  }
  svg::Series tau{"tau(p)", svg::Style::solid, "#000000", {}, {}, {}};
  for (double p : dense)
    if (spec.in_domain(p)) {
      tau.x.push_back(p);
      tau.y.push_back(spec.tau(p));
    }
  plot.series.push_back(std::move(tau));
  detail::write_plot(ctx, "fit.svg", plot);
  return reports;
}

/// Critical exponents, tau / tau_chi, D(h) and the Besov frontier per chi.
inline void cmd_spectrum(const RunContext& ctx) {
  const auto& c = ctx.cfg;
  const auto spec = c.generator();
  const auto p_grid = detail::grid(c.spectrum_p_min, c.spectrum_p_max, c.spectrum_p_step);
  const auto h_grid = detail::grid(c.spectrum_h_min, c.spectrum_h_max, c.spectrum_h_step);
  const auto x_grid = detail::grid(c.besov_inv_p_min, c.besov_inv_p_max, c.besov_inv_p_step);
  std::vector<SpectrumReport> reports;
  std::vector<CriticalExponents> crits;
  for (double chi : c.chi_list) {
    reports.push_back(spectrum_report(spec, chi, p_grid, h_grid, x_grid));
    crits.push_back(reports.back().critical);
    const std::string tag = detail::number_tag(chi);
    detail::write_table(ctx, "tau_chi" + tag + ".csv",
                        [&](std::ostream& os) { write_tau_csv(os, reports.back()); });
    detail::write_table(ctx, "frontier_chi" + tag + ".csv",
                        [&](std::ostream& os) { write_frontier_csv(os, reports.back()); });
  }
  detail::write_table(ctx, "critical.csv", [&](std::ostream& os) { write_critical_csv(os, crits); });
  detail::write_table(ctx, "legendre.csv",
                      [&](std::ostream& os) { write_legendre_csv(os, reports.front()); });

  svg::Plot dplot{"Legendre spectrum D(h)", "h", "D(h)", {}};
  svg::Series d{"D(h)", svg::Style::solid, "#000000", {}, {}, {}};
  for (std::size_t i = 0; i < reports.front().h.size(); ++i)
    if (std::isfinite(reports.front().D[i]) && reports.front().D[i] > -3.0) {
      d.x.push_back(reports.front().h[i]);
      d.y.push_back(reports.front().D[i]);
    }
  dplot.series.push_back(d);
  for (std::size_t i = 0; i < crits.size(); ++i) {
    svg::Series level{"-chi=" + detail::number_tag(-crits[i].chi), svg::Style::dashed,
                      detail::palette(i), {}, {}, {}};
    if (!d.x.empty()) {
      level.x = {d.x.front(), d.x.back()};
      level.y = {-crits[i].chi, -crits[i].chi};
    }
    dplot.series.push_back(std::move(level));
  }
  detail::write_plot(ctx, "legendre.svg", dplot);

  svg::Plot fplot{"Besov frontier", "1/p", "s(1/p)", {}};
  for (std::size_t i = 0; i < reports.size(); ++i)
    fplot.series.push_back({"chi=" + detail::number_tag(reports[i].critical.chi), svg::Style::solid,
                            detail::palette(i), reports[i].inv_p, reports[i].frontier, {}});
  detail::write_plot(ctx, "frontier.svg", fplot);

  svg::Plot tplot{"tau_chi(p) + chi", "p", "tau_chi(p) + chi", {}};
  for (std::size_t i = 0; i < reports.size(); ++i) {
    svg::Series s{"chi=" + detail::number_tag(reports[i].critical.chi), svg::Style::dashed,
                  detail::palette(i), reports[i].p, {}, {}};
    for (double v : reports[i].tau_chi) s.y.push_back(v + reports[i].critical.chi);
    tplot.series.push_back(std::move(s));
  }
  detail::write_plot(ctx, "tau.svg", tplot);
}

/// Box-counting histograms per level (summed over trials) and, per bin, the
/// fitted growth rate of log2 count against j next to chi + D(h).
inline void cmd_histogram(const RunContext& ctx) {
  const auto& c = ctx.cfg;
  const auto spec = c.generator();
  const auto bins = detail::histogram_bins(c);
  for (double chi : c.chi_list) {
    BoxCountConfig b{.spec = spec};
    b.T_log2 = c.T_log2;
    b.chi = chi;
    b.j_list = c.histogram_j_list;
    b.delta_levels = c.delta_levels;
    b.h_bins = bins;
    b.epsilon = c.histogram_epsilon;
    b.trials = c.histogram_trials;
    b.seed = *c.master_seed;
    b.workers = c.workers;
    b.max_cells = c.max_cells;
    if (ctx.log) *ctx.log << "histogram: chi=" << chi << '\n';
    const auto hists = run_box_counting(b);
    const std::string tag = detail::number_tag(chi);
    for (const auto& h : hists)
      detail::write_table(ctx, "hist_chi" + tag + "_j" + std::to_string(h.j) + ".csv",
                          [&](std::ostream& os) { write_csv(os, h); });
    detail::write_table(ctx, "dimension_chi" + tag + ".csv", [&](std::ostream& os) {
      os.precision(17);
      os << "chi,h,slope,theory,j_used,j_excluded\n";
      for (std::size_t k = 0; k < bins.size(); ++k) {
        const double theory = chi + legendre(spec, bins[k]);
        try {
          const auto fit = fit_box_dimension(hists, k);
          os << chi << ',' << bins[k] << ',' << fit.slope << ',' << theory << ','
             << detail::join(fit.j_used) << ',' << detail::join(fit.j_excluded) << '\n';
        } catch (const Error& e) {
          if (e.code() != Errc::insufficient_data) throw;
          os << chi << ',' << bins[k] << ",nan," << theory << ",,\n";
        }
      }
    });
  }
}

/// Variance-rate diagnostic at (clt.p, clt.chi).
inline CltReport cmd_clt(const RunContext& ctx) {
  const auto& c = ctx.cfg;
  CltConfig k{.spec = c.generator()};
  k.T_log2 = c.T_log2;
  k.chi = c.clt_chi;
  k.p = c.clt_p;
  k.j_list = c.clt_j_list;
  k.delta_levels = c.delta_levels;
  k.trials = c.clt_trials;
  k.seed = *c.master_seed;
  k.workers = c.workers;
  k.max_cells = c.max_cells;
  if (ctx.log) *ctx.log << "clt: p=" << k.p << " chi=" << k.chi << '\n';
  const auto r = clt_diagnostic(k);
  detail::write_table(ctx, "clt.csv", [&](std::ostream& os) { write_csv(os, r); });
  return r;
}

/// Runs every command and writes report.csv comparing estimates with theory.
inline void cmd_report(const RunContext& ctx) {
  const auto spec = ctx.cfg.generator();
  cmd_spectrum(ctx);
  const auto fits = cmd_fit(ctx);
  cmd_histogram(ctx);
  const auto clt = cmd_clt(ctx);
  detail::write_table(ctx, "report.csv", [&](std::ostream& os) {
    os.precision(17);
    os << "chi,p,tau_hat_mean,tau_hat_rms,tau_chi_theory,abs_error\n";
    for (const auto& r : fits) {
      const auto crit = critical_exponents(spec, r.chi);
      for (std::size_t i = 0; i < r.p_list.size(); ++i) {
        const double theory = theoretical_tau_chi(spec, crit, r.p_list[i]);
        os << r.chi << ',' << r.p_list[i] << ',' << r.tau_hat[i].mean << ',' << r.tau_hat[i].rms
           << ',' << theory << ',' << std::abs(r.tau_hat[i].mean - theory) << '\n';
      }
    }
    os << "# clt slope_vs_log2_NT=" << clt.slope_vs_log2_NT
       << " predicted=" << clt.predicted_slope_vs_log2_NT << " regime=" << regime_name(clt.regime)
       << '\n';
  });
}

/// Dispatches by ctx.command after the budget checks.
inline void run_command(const RunContext& ctx) {
  preflight(ctx);
  const std::string& cmd = ctx.command;
  if (cmd == "simulate") cmd_simulate(ctx);
  else if (cmd == "fit") (void)cmd_fit(ctx);
  else if (cmd == "spectrum") cmd_spectrum(ctx);
  else if (cmd == "histogram") cmd_histogram(ctx);
  else if (cmd == "clt") (void)cmd_clt(ctx);
  else if (cmd == "report") cmd_report(ctx);
  else throw Error(Errc::config_error, "unknown command '" + cmd + "'");
}

}  // namespace mixcascade
