#pragma once

// Dyadic cascade realizations on [0, T] and their concatenation into a
// mixed-asymptotic measure (N_T(j) = floor(2^(j chi)) integral scales).

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "mixcascade/error.hpp"
#include "mixcascade/generators.hpp"
#include "mixcascade/parallel.hpp"
#include "mixcascade/rng.hpp"

namespace mixcascade {

/// Upper bound on the number of finest cells held by one measure (8 bytes each).
inline constexpr std::size_t kDefaultMaxCells = std::size_t{1} << 27;

/// One cascade realization: masses of the 2^level finest dyadic cells of [0, T].
struct CascadeSample {
  int T_log2 = 0;
  int level = 0;
  std::vector<double> masses;

  double T() const noexcept { return std::ldexp(1.0, T_log2); }
  std::size_t cell_count() const noexcept { return masses.size(); }
};

inline void check_level(int level, std::size_t max_cells) {
  if (level < 0) throw Error(Errc::invalid_parameter, "cascade level must be >= 0");
  if (level > 62 || (std::size_t{1} << level) > max_cells)
    throw Error(Errc::resource_limit,
                "2^" + std::to_string(level) + " cells exceed the configured memory cap");
}

/// masses[k] = T 2^-level prod_{i=1..level} W_{r|i}, r the binary expansion of k.
/// Node r|i has heap id 2^i + (k >> (level - i)); its weight is drawn from
/// stream.engine(id), so the realization is independent of traversal order.
inline CascadeSample build_cascade(const GeneratorSpec& spec, int T_log2, int level,
                                   const RngStream& stream,
                                   std::size_t max_cells = kDefaultMaxCells) {
  check_level(level, max_cells);
  CascadeSample out;
  out.T_log2 = T_log2;
  out.level = level;
  out.masses.assign(std::size_t{1} << level, 0.0);
  auto& m = out.masses;
  m[0] = out.T();
  for (int i = 1; i <= level; ++i) {
    const std::uint64_t parents = std::uint64_t{1} << (i - 1);
    const std::uint64_t base = std::uint64_t{1} << i;
    // Expand in place from the back so parents are read before being overwritten.
    for (std::uint64_t k = parents; k-- > 0;) {
      const double half = 0.5 * m[k];
      auto left = stream.engine(base + 2 * k);
      auto right = stream.engine(base + 2 * k + 1);
      m[2 * k + 1] = half * spec.sample(right);
      m[2 * k] = half * spec.sample(left);
    }
  }
  return out;
}

/// Sums finest cells into the 2^j cells of level j, halving one level at a time.
inline std::vector<double> coarse_grain(const CascadeSample& sample, int j) {
  if (j < 0 || j > sample.level)
    throw Error(Errc::index_error, "coarse_grain level " + std::to_string(j) +
                                       " outside [0, " + std::to_string(sample.level) + "]");
  std::vector<double> buf = sample.masses;
  for (int lv = sample.level; lv > j; --lv) {
    const std::size_t half = std::size_t{1} << (lv - 1);
    for (std::size_t k = 0; k < half; ++k) buf[k] = buf[2 * k] + buf[2 * k + 1];
    buf.resize(half);
  }
  return buf;
}

inline double total_mass(const CascadeSample& sample) { return coarse_grain(sample, 0)[0]; }

/// N_T(j) = max(1, floor(2^(j chi))). A relative slack of 1e-12 absorbs the
/// rounding of j*chi when the exact power is an integer.
inline std::size_t integral_scales(int j, double chi) {
  const double x = std::exp2(static_cast<double>(j) * chi) * (1.0 + 1e-12);
  if (!(x < 9.0e15)) throw Error(Errc::resource_limit, "2^(j chi) is too large");
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(x)));
}

/// Pool of i.i.d. cascades; the first N_T(j) members realize the measure
/// observed at analysis level j.
struct MixedMeasure {
  double chi = 0.0;
  int delta_levels = 0;
  int j_max = 0;
  std::vector<CascadeSample> pool;

  int level() const noexcept { return pool.empty() ? 0 : pool.front().level; }
  int T_log2() const noexcept { return pool.empty() ? 0 : pool.front().T_log2; }
  double T() const noexcept { return std::ldexp(1.0, T_log2()); }
  std::size_t pool_size() const noexcept { return pool.size(); }
  std::size_t scales_at(int j) const { return integral_scales(j, chi); }
};

/// Throws resource_limit when a pool for (j_max, chi, delta_levels) would
/// hold more than max_cells finest cells. Nothing is allocated.
inline void check_mixed_budget(int j_max, double chi, int delta_levels, std::size_t max_cells) {
  const int level = j_max + delta_levels;
  check_level(level, max_cells);
  const std::size_t pool_size = integral_scales(j_max, chi);
  const std::size_t per_cascade = std::size_t{1} << level;
  if (pool_size > max_cells / per_cascade)
    throw Error(Errc::resource_limit, std::to_string(pool_size) + " cascades of 2^" +
                                          std::to_string(level) +
                                          " cells exceed the configured memory cap");
}

/// Builds floor(2^(j_max chi)) (at least one) cascades at level j_max + delta_levels.
/// Cascade m draws from stream.child(m).
inline MixedMeasure build_mixed(const GeneratorSpec& spec, int T_log2, int j_max, double chi,
                                int delta_levels, const RngStream& stream, unsigned workers = 1,
                                std::size_t max_cells = kDefaultMaxCells) {
  if (j_max < 0) throw Error(Errc::invalid_parameter, "j_max must be >= 0");
  if (!(chi >= 0.0) || !std::isfinite(chi)) throw Error(Errc::invalid_parameter, "chi must be >= 0");
  if (delta_levels < 0) throw Error(Errc::invalid_parameter, "delta_levels must be >= 0");
  check_mixed_budget(j_max, chi, delta_levels, max_cells);
  const int level = j_max + delta_levels;
  const std::size_t pool_size = integral_scales(j_max, chi);
  MixedMeasure out;
  out.chi = chi;
  out.delta_levels = delta_levels;
  out.j_max = j_max;
  out.pool.resize(pool_size);
  parallel_for(pool_size, workers, [&](std::size_t m) {
    out.pool[m] = build_cascade(spec, T_log2, level, stream.child(m), max_cells);
  });
  return out;
}

/// Concatenated level-j masses of the first N_T(j) pool members.
inline std::vector<double> window(const MixedMeasure& measure, int j) {
  if (j < 0 || j > measure.level())
    throw Error(Errc::index_error, "analysis level " + std::to_string(j) + " outside [0, " +
                                       std::to_string(measure.level()) + "]");
  const std::size_t n_t = measure.scales_at(j);
  if (n_t > measure.pool_size())
    throw Error(Errc::insufficient_pool, "level " + std::to_string(j) + " needs " +
                                             std::to_string(n_t) + " cascades, pool has " +
                                             std::to_string(measure.pool_size()));
  std::vector<double> out;
  out.reserve(n_t << j);
  for (std::size_t m = 0; m < n_t; ++m) {
    const auto cells = coarse_grain(measure.pool[m], j);
    out.insert(out.end(), cells.begin(), cells.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Binary dump. Layout, all little-endian:
//   char[8]  magic "MIXCASC\0"
//   u32      version (1)
//   i32      T_log2
//   i32      level
//   f64      chi
//   u64      pool_size
//   i32      delta_levels
//   f64[pool_size * 2^level] masses, cascade-major
// ---------------------------------------------------------------------------

inline constexpr char kMeasureMagic[8] = {'M', 'I', 'X', 'C', 'A', 'S', 'C', '\0'};
inline constexpr std::uint32_t kMeasureVersion = 1;

namespace detail {

template <class U>
void put_le(std::ostream& os, U value) {
  unsigned char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i)
    bytes[i] = static_cast<unsigned char>((value >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(bytes), sizeof(U));
}

template <class U>
U get_le(std::istream& is) {
  unsigned char bytes[sizeof(U)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(U)))
    throw Error(Errc::io_error, "truncated measure file");
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(bytes[i]) << (8 * i);
  return value;
}

inline void put_f64(std::ostream& os, double x) { put_le(os, std::bit_cast<std::uint64_t>(x)); }
inline double get_f64(std::istream& is) { return std::bit_cast<double>(get_le<std::uint64_t>(is)); }

}  // namespace detail

inline void write_measure(std::ostream& os, const MixedMeasure& measure) {
  os.write(kMeasureMagic, sizeof kMeasureMagic);
  detail::put_le<std::uint32_t>(os, kMeasureVersion);
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(measure.T_log2()));
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(measure.level()));
  detail::put_f64(os, measure.chi);
  detail::put_le<std::uint64_t>(os, measure.pool_size());
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(measure.delta_levels));
  for (const auto& c : measure.pool)
    for (double x : c.masses) detail::put_f64(os, x);
  if (!os) throw Error(Errc::io_error, "failed writing measure");
}

inline MixedMeasure read_measure(std::istream& is, std::size_t max_cells = kDefaultMaxCells) {
  char magic[8];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMeasureMagic, sizeof magic) != 0)
    throw Error(Errc::io_error, "not a measure file (bad magic)");
  const auto version = detail::get_le<std::uint32_t>(is);
  if (version != kMeasureVersion)
    throw Error(Errc::io_error, "unsupported measure file version " + std::to_string(version));
  const auto T_log2 = static_cast<std::int32_t>(detail::get_le<std::uint32_t>(is));
  const auto level = static_cast<std::int32_t>(detail::get_le<std::uint32_t>(is));
  const double chi = detail::get_f64(is);
  const auto pool_size = detail::get_le<std::uint64_t>(is);
  const auto delta_levels = static_cast<std::int32_t>(detail::get_le<std::uint32_t>(is));
  check_level(level, max_cells);
  if (delta_levels < 0 || delta_levels > level || pool_size == 0 ||
      pool_size > max_cells / (std::size_t{1} << level))
    throw Error(Errc::io_error, "corrupt measure header");
  MixedMeasure out;
  out.chi = chi;
  out.delta_levels = delta_levels;
  out.j_max = level - delta_levels;
  out.pool.resize(pool_size);
  for (auto& c : out.pool) {
    c.T_log2 = T_log2;
    c.level = level;
    c.masses.resize(std::size_t{1} << level);
    for (double& x : c.masses) x = detail::get_f64(is);
  }
  return out;
}

inline void save_measure(const std::string& path, const MixedMeasure& measure) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(Errc::io_error, "cannot open '" + path + "' for writing");
  write_measure(os, measure);
}

inline MixedMeasure load_measure(const std::string& path,
                                 std::size_t max_cells = kDefaultMaxCells) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(Errc::io_error, "cannot open '" + path + "'");
  return read_measure(is, max_cells);
}

}  // namespace mixcascade
