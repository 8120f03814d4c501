#pragma once

// Partition functions, extreme cell masses and box counts of a MixedMeasure.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mixcascade/cascade.hpp"
#include "mixcascade/error.hpp"
#include "mixcascade/summation.hpp"

namespace mixcascade {

struct PartitionEntry {
  double S = 0.0;
  double log2S = 0.0;
  std::size_t N_T = 0;  // integral scales (cascades) contributing
  std::size_t N = 0;    // number of terms summed
};

struct PartitionTable {
  double chi = 0.0;
  std::vector<double> p_list;
  std::vector<int> j_list;
  std::vector<std::vector<PartitionEntry>> entries;  // [j index][p index]
  std::vector<std::string> warnings;

  const PartitionEntry& at(int j, double p) const {
    const auto jt = std::find(j_list.begin(), j_list.end(), j);
    const auto pt = std::find(p_list.begin(), p_list.end(), p);
    if (jt == j_list.end() || pt == p_list.end())
      throw Error(Errc::index_error, "no partition entry for j=" + std::to_string(j) +
                                         ", p=" + std::to_string(p));
    return entries[jt - j_list.begin()][pt - p_list.begin()];
  }
};

namespace detail {

inline double power_term(double x, double p) {
  if (p == 0.0) return 1.0;
  if (p == 1.0) return x;
  if (p == 2.0) return x * x;
  return std::pow(x, p);
}

inline double sum_of_powers(std::span<const double> xs, double p, std::vector<double>& scratch) {
  scratch.resize(xs.size());
  for (std::size_t k = 0; k < xs.size(); ++k) scratch[k] = power_term(xs[k], p);
  return pairwise_sum(scratch);
}

inline PartitionTable empty_table(const MixedMeasure& measure, std::span<const int> j_list,
                                  std::span<const double> p_list) {
  if (j_list.empty() || p_list.empty())
    throw Error(Errc::invalid_parameter, "partition needs non-empty j and p lists");
  PartitionTable t;
  t.chi = measure.chi;
  t.j_list.assign(j_list.begin(), j_list.end());
  t.p_list.assign(p_list.begin(), p_list.end());
  t.entries.assign(j_list.size(), std::vector<PartitionEntry>(p_list.size()));
  return t;
}

inline std::size_t checked_scales(const MixedMeasure& measure, int j) {
  if (j < 0 || j > measure.level())
    throw Error(Errc::index_error, "analysis level " + std::to_string(j) + " outside [0, " +
                                       std::to_string(measure.level()) + "]");
  const std::size_t n_t = measure.scales_at(j);
  if (n_t > measure.pool_size())
    throw Error(Errc::insufficient_pool, "level " + std::to_string(j) + " needs " +
                                             std::to_string(n_t) + " cascades, pool has " +
                                             std::to_string(measure.pool_size()));
  return n_t;
}

}  // namespace detail

/// S(j,p) = sum over the N_T(j) 2^j cells of the window of mass^p.
/// Each cascade contributes a pairwise sum over its cells; cascades are then
/// added in index order. `drop_border` removes the last cells of every
/// cascade (used to line up with generalized partition functions).
inline PartitionTable partition(const MixedMeasure& measure, std::span<const int> j_list,
                                std::span<const double> p_list, std::size_t drop_border = 0) {
  auto table = detail::empty_table(measure, j_list, p_list);
  if (std::any_of(p_list.begin(), p_list.end(), [](double p) { return p < 0.0; }))
    table.warnings.emplace_back(
        "negative p: partition values are finite but scaling estimates are unreliable");
  std::vector<double> scratch;
  for (std::size_t ji = 0; ji < j_list.size(); ++ji) {
    const int j = j_list[ji];
    const std::size_t n_t = detail::checked_scales(measure, j);
    const std::size_t cells = std::size_t{1} << j;
    if (drop_border >= cells)
      throw Error(Errc::index_error, "border removes every cell at level " + std::to_string(j));
    const std::size_t kept = cells - drop_border;
    std::vector<double> sums(p_list.size(), 0.0);
    for (std::size_t m = 0; m < n_t; ++m) {
      const auto masses = coarse_grain(measure.pool[m], j);
      const std::span<const double> view(masses.data(), kept);
      for (std::size_t pi = 0; pi < p_list.size(); ++pi)
        sums[pi] += detail::sum_of_powers(view, p_list[pi], scratch);
    }
    for (std::size_t pi = 0; pi < p_list.size(); ++pi) {
      auto& e = table.entries[ji][pi];
      e.S = sums[pi];
      e.log2S = std::log2(e.S);
      e.N_T = n_t;
      e.N = n_t * kept;
    }
  }
  return table;
}

inline PartitionTable partition(const MixedMeasure& measure, const std::vector<int>& j_list,
                                const std::vector<double>& p_list, std::size_t drop_border = 0) {
  return partition(measure, std::span<const int>(j_list), std::span<const double>(p_list),
                   drop_border);
}

/// Largest and smallest level-j cell mass of the window.
inline std::pair<double, double> sup_inf(const MixedMeasure& measure, int j) {
  const auto w = window(measure, j);
  const auto [lo, hi] = std::minmax_element(w.begin(), w.end());
  return {*hi, *lo};
}

/// Analyzing function g, piecewise constant on the 2^G-th subdivision of the
/// unit grid over its support [0, 2^J].
class BoxWindowFunction {
 public:
  BoxWindowFunction(int support_log2, int granularity, std::vector<double> values)
      : support_log2_(support_log2), granularity_(granularity), values_(std::move(values)) {
    if (support_log2 < 0 || granularity < 0 || support_log2 + granularity > 30)
      throw Error(Errc::invalid_parameter, "window support/granularity out of range");
    if (values_.size() != (std::size_t{1} << (support_log2 + granularity)))
      throw Error(Errc::invalid_parameter, "window needs 2^(J+G) piece values");
    if (std::none_of(values_.begin(), values_.end(), [](double v) { return v != 0.0; }))
      throw Error(Errc::invalid_parameter, "window function is identically zero");
    if (std::any_of(values_.begin(), values_.end(), [](double v) { return !std::isfinite(v); }))
      throw Error(Errc::invalid_parameter, "window function values must be finite");
  }

  /// Indicator of [0, 1]; recovers the dyadic box partition function.
  static BoxWindowFunction indicator() { return BoxWindowFunction(0, 0, {1.0}); }

  /// +1 on [0, 1), -1 on [1, 2).
  static BoxWindowFunction haar() { return BoxWindowFunction(1, 0, {1.0, -1.0}); }

  /// Midpoint sampling of an arbitrary g on [0, 2^J] at granularity 2^-G.
  static BoxWindowFunction sampled(const std::function<double(double)>& g, int support_log2,
                                   int granularity) {
    const std::size_t pieces = std::size_t{1} << (support_log2 + granularity);
    const double width = std::ldexp(1.0, -granularity);
    std::vector<double> v(pieces);
    for (std::size_t s = 0; s < pieces; ++s) v[s] = g((static_cast<double>(s) + 0.5) * width);
    return BoxWindowFunction(support_log2, granularity, std::move(v));
  }

  int support_log2() const noexcept { return support_log2_; }
  int granularity() const noexcept { return granularity_; }
  std::span<const double> values() const noexcept { return values_; }

 private:
  int support_log2_;
  int granularity_;
  std::vector<double> values_;
};

/// Generalized partition function: per cascade, sum over k < 2^j - 2^J of
/// |integral g(2^j t / T - k) dmu(t)|^p, then summed over the N_T(j) pool
/// prefix. Integrals are exact sums over level j+G cells.
inline PartitionTable wavelet_partition(const MixedMeasure& measure, std::span<const int> j_list,
                                        std::span<const double> p_list,
                                        const BoxWindowFunction& g) {
  auto table = detail::empty_table(measure, j_list, p_list);
  for (double p : p_list)
    if (!(p > 0.0))
      throw Error(Errc::unsupported_exponent, "generalized partition functions need p > 0");
  const int J = g.support_log2();
  const int G = g.granularity();
  const auto gv = g.values();
  const std::size_t span_cells = gv.size();  // 2^(J+G) fine cells under one translate
  const std::size_t stride = std::size_t{1} << G;
  std::vector<double> coeffs, scratch;
  for (std::size_t ji = 0; ji < j_list.size(); ++ji) {
    const int j = j_list[ji];
    if (j < 0 || j + G > measure.level())
      throw Error(Errc::granularity_too_fine,
                  "level " + std::to_string(j) + " with granularity " + std::to_string(G) +
                      " needs " + std::to_string(j + G) + " cascade levels, measure has " +
                      std::to_string(measure.level()));
    if (j <= J)
      throw Error(Errc::index_error, "level " + std::to_string(j) +
                                         " leaves no interior translates for support 2^" +
                                         std::to_string(J));
    const std::size_t n_t = detail::checked_scales(measure, j);
    const std::size_t kept = (std::size_t{1} << j) - (std::size_t{1} << J);
    std::vector<double> sums(p_list.size(), 0.0);
    for (std::size_t m = 0; m < n_t; ++m) {
      const auto fine = coarse_grain(measure.pool[m], j + G);
      coeffs.resize(kept);
      for (std::size_t k = 0; k < kept; ++k) {
        const double* cell = fine.data() + k * stride;
        double acc = gv[0] * cell[0];
        for (std::size_t s = 1; s < span_cells; ++s) acc += gv[s] * cell[s];
        coeffs[k] = std::abs(acc);
      }
      for (std::size_t pi = 0; pi < p_list.size(); ++pi)
        sums[pi] += detail::sum_of_powers(coeffs, p_list[pi], scratch);
    }
    for (std::size_t pi = 0; pi < p_list.size(); ++pi) {
      auto& e = table.entries[ji][pi];
      e.S = sums[pi];
      e.log2S = std::log2(e.S);
      e.N_T = n_t;
      e.N = n_t * kept;
    }
  }
  return table;
}

inline PartitionTable wavelet_partition(const MixedMeasure& measure,
                                        const std::vector<int>& j_list,
                                        const std::vector<double>& p_list,
                                        const BoxWindowFunction& g) {
  return wavelet_partition(measure, std::span<const int>(j_list),
                           std::span<const double>(p_list), g);
}

struct BoxCountHistogram {
  int j = 0;
  double epsilon = 0.0;
  std::vector<double> h_bins;  // bin centers
  std::vector<long long> counts;
  std::size_t N = 0;  // cells in the window
};

/// For each center h, the number of window cells with
/// 2^(-j(h+eps)) <= mass/T <= 2^(-j(h-eps)).
inline BoxCountHistogram box_count(const MixedMeasure& measure, int j,
                                   std::span<const double> h_bins, double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw Error(Errc::invalid_parameter, "box_count epsilon must be > 0");
  if (h_bins.empty()) throw Error(Errc::invalid_parameter, "box_count needs at least one bin");
  for (std::size_t b = 1; b < h_bins.size(); ++b)
    if (!(h_bins[b] - h_bins[b - 1] >= 2.0 * epsilon * (1.0 - 1e-12)))
      throw Error(Errc::invalid_parameter, "box_count bins must be increasing and disjoint");
  const auto w = window(measure, j);
  const double inv_T = 1.0 / measure.T();
  BoxCountHistogram hist;
  hist.j = j;
  hist.epsilon = epsilon;
  hist.h_bins.assign(h_bins.begin(), h_bins.end());
  hist.counts.assign(h_bins.size(), 0);
  hist.N = w.size();
  std::vector<std::pair<double, double>> bounds;
  bounds.reserve(h_bins.size());
  for (double h : h_bins)
    bounds.emplace_back(std::exp2(-j * (h + epsilon)), std::exp2(-j * (h - epsilon)));
  for (double mass : w) {
    const double x = mass * inv_T;
    for (std::size_t b = 0; b < bounds.size(); ++b)
      if (bounds[b].first <= x && x <= bounds[b].second) ++hist.counts[b];
  }
  return hist;
}

inline BoxCountHistogram box_count(const MixedMeasure& measure, int j,
                                   const std::vector<double>& h_bins, double epsilon) {
  return box_count(measure, j, std::span<const double>(h_bins), epsilon);
}

// CSV export -----------------------------------------------------------------

/// Columns: chi,j,p,N_T,N,S,log2S
inline void write_csv(std::ostream& os, const PartitionTable& t) {
  const auto old = os.precision(17);
  os << "chi,j,p,N_T,N,S,log2S\n";
  for (std::size_t ji = 0; ji < t.j_list.size(); ++ji)
    for (std::size_t pi = 0; pi < t.p_list.size(); ++pi) {
      const auto& e = t.entries[ji][pi];
      os << t.chi << ',' << t.j_list[ji] << ',' << t.p_list[pi] << ',' << e.N_T << ',' << e.N
         << ',' << e.S << ',' << e.log2S << '\n';
    }
  os.precision(old);
}

/// Columns: j,epsilon,h,count,N
inline void write_csv(std::ostream& os, const BoxCountHistogram& h) {
  const auto old = os.precision(17);
  os << "j,epsilon,h,count,N\n";
  for (std::size_t b = 0; b < h.h_bins.size(); ++b)
    os << h.j << ',' << h.epsilon << ',' << h.h_bins[b] << ',' << h.counts[b] << ',' << h.N
       << '\n';
  os.precision(old);
}

}  // namespace mixcascade
