#pragma once

// Experiment configuration: flat `key = value` lines, optional `[section]`
// headers (keys inside become `section.key`), `#` comments. Lists are
// comma-separated; integer lists also accept `lo..hi`.

#include <charconv>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mixcascade/cascade.hpp"
#include "mixcascade/error.hpp"
#include "mixcascade/generators.hpp"

namespace mixcascade {

struct ExperimentConfig {
  Family family = Family::LogNormal;
  double lambda2 = 0.2;
  std::optional<double> delta;
  std::optional<double> beta;
  int T_log2 = 10;
  std::vector<double> chi_list{0.0, 0.5, 1.0};
  int j_min = 0;
  int j_max = 6;
  int delta_levels = 5;
  std::vector<double> p_list{0, 1, 2, 3, 4, 5, 6};
  int trials = 30;
  std::optional<std::uint64_t> master_seed;
  unsigned workers = 1;
  std::string out_dir = "out";
  std::size_t max_cells = kDefaultMaxCells;

  // [simulate]
  int simulate_trials = 1;

  // [histogram]
  std::vector<int> histogram_j_list{4, 5, 6, 7, 8, 9};
  std::vector<double> histogram_h_bins;  // empty: contiguous bins over [h_min, h_max]
  double histogram_h_min = 0.0;
  double histogram_h_max = 2.2;
  double histogram_epsilon = 0.01;
  int histogram_trials = 10;

  // [wavelet]
  std::string wavelet_g = "none";  // none | indicator | haar
  int wavelet_j_min = 4;
  int wavelet_j_max = 10;

  // [spectrum]
  double spectrum_p_min = -8.0;
  double spectrum_p_max = 8.0;
  double spectrum_p_step = 0.1;
  double spectrum_h_min = 0.0;
  double spectrum_h_max = 2.2;
  double spectrum_h_step = 0.01;
  double besov_inv_p_min = 0.02;
  double besov_inv_p_max = 1.5;
  double besov_inv_p_step = 0.01;

  // [clt]
  double clt_p = 1.0;
  double clt_chi = 1.0;
  std::vector<int> clt_j_list{3, 4, 5, 6, 7, 8};
  int clt_trials = 64;

  GeneratorSpec generator() const {
    switch (family) {
      case Family::LogPoisson:
        if (!delta) throw Error(Errc::config_error, "log-Poisson generator needs 'delta'");
        return make_log_poisson(lambda2, *delta);
      case Family::LogGamma:
        if (!beta) throw Error(Errc::config_error, "log-Gamma generator needs 'beta'");
        return make_log_gamma(lambda2, *beta);
      default:
        return make_log_normal(lambda2);
    }
  }
};

/// Desk (T = 2^10, 30 trials) and paper (T = 2^13, 130 trials) presets.
inline ExperimentConfig profile_config(const std::string& name) {
  ExperimentConfig cfg;
  if (name == "desk") return cfg;
  if (name == "paper") {
    cfg.T_log2 = 13;
    cfg.trials = 130;
    return cfg;
  }
  throw Error(Errc::config_error, "unknown profile '" + name + "' (expected desk or paper)");
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
T parse_number(const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) throw std::invalid_argument("not a number: '" + text + "'");
  return value;
}

inline std::vector<double> parse_doubles(const std::string& v) {
  std::vector<double> out;
  for (const auto& item : split_list(v)) out.push_back(parse_number<double>(item));
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

inline std::vector<int> parse_ints(const std::string& v) {
  std::vector<int> out;
  for (const auto& item : split_list(v)) {
    const auto dots = item.find("..");
    if (dots != std::string::npos) {
      const int lo = parse_number<int>(trim(item.substr(0, dots)));
      const int hi = parse_number<int>(trim(item.substr(dots + 2)));
      if (hi < lo) throw std::invalid_argument("empty range '" + item + "'");
      for (int j = lo; j <= hi; ++j) out.push_back(j);
    } else {
      out.push_back(parse_number<int>(item));
    }
  }
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

inline bool positive_trials(int n) { return n >= 1; }

}  // namespace detail

/// Applies `key = value` (already section-qualified) to cfg. Throws
/// std::invalid_argument for malformed values and Error(config_error) for unknown keys.
inline void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& v) {
  using detail::parse_doubles;
  using detail::parse_ints;
  using detail::parse_number;
  if (key == "family") cfg.family = parse_family(v);
  else if (key == "lambda2") cfg.lambda2 = parse_number<double>(v);
  else if (key == "delta") cfg.delta = parse_number<double>(v);
  else if (key == "beta") cfg.beta = parse_number<double>(v);
  else if (key == "T_log2") cfg.T_log2 = parse_number<int>(v);
  else if (key == "chi_list") cfg.chi_list = parse_doubles(v);
  else if (key == "j_min") cfg.j_min = parse_number<int>(v);
  else if (key == "j_max") cfg.j_max = parse_number<int>(v);
  else if (key == "delta_levels") cfg.delta_levels = parse_number<int>(v);
  else if (key == "p_list") cfg.p_list = parse_doubles(v);
  else if (key == "trials") cfg.trials = parse_number<int>(v);
  else if (key == "master_seed" || key == "seed") cfg.master_seed = parse_number<std::uint64_t>(v);
  else if (key == "workers") cfg.workers = parse_number<unsigned>(v);
  else if (key == "out_dir") cfg.out_dir = v;
  else if (key == "max_cells") cfg.max_cells = parse_number<std::size_t>(v);
  else if (key == "simulate.trials") cfg.simulate_trials = parse_number<int>(v);
  else if (key == "histogram.j_list") cfg.histogram_j_list = parse_ints(v);
  else if (key == "histogram.h_bins") cfg.histogram_h_bins = parse_doubles(v);
  else if (key == "histogram.h_min") cfg.histogram_h_min = parse_number<double>(v);
  else if (key == "histogram.h_max") cfg.histogram_h_max = parse_number<double>(v);
  else if (key == "histogram.epsilon") cfg.histogram_epsilon = parse_number<double>(v);
  else if (key == "histogram.trials") cfg.histogram_trials = parse_number<int>(v);
  else if (key == "wavelet.g") cfg.wavelet_g = v;
  else if (key == "wavelet.j_min") cfg.wavelet_j_min = parse_number<int>(v);
  else if (key == "wavelet.j_max") cfg.wavelet_j_max = parse_number<int>(v);
  else if (key == "spectrum.p_min") cfg.spectrum_p_min = parse_number<double>(v);
  else if (key == "spectrum.p_max") cfg.spectrum_p_max = parse_number<double>(v);
  else if (key == "spectrum.p_step") cfg.spectrum_p_step = parse_number<double>(v);
  else if (key == "spectrum.h_min") cfg.spectrum_h_min = parse_number<double>(v);
  else if (key == "spectrum.h_max") cfg.spectrum_h_max = parse_number<double>(v);
  else if (key == "spectrum.h_step") cfg.spectrum_h_step = parse_number<double>(v);
  else if (key == "besov.inv_p_min") cfg.besov_inv_p_min = parse_number<double>(v);
  else if (key == "besov.inv_p_max") cfg.besov_inv_p_max = parse_number<double>(v);
  else if (key == "besov.inv_p_step") cfg.besov_inv_p_step = parse_number<double>(v);
  else if (key == "clt.p") cfg.clt_p = parse_number<double>(v);
  else if (key == "clt.chi") cfg.clt_chi = parse_number<double>(v);
  else if (key == "clt.j_list") cfg.clt_j_list = parse_ints(v);
  else if (key == "clt.trials") cfg.clt_trials = parse_number<int>(v);
  else throw Error(Errc::config_error, "unknown key '" + key + "'");
}

/// Checks cross-field invariants. Resource limits are enforced separately.
inline void validate(const ExperimentConfig& cfg) {
  auto fail = [](const std::string& msg) { throw Error(Errc::config_error, msg); };
  if (!cfg.master_seed) fail("no seed given: set 'master_seed' or pass --seed");
  if (cfg.chi_list.empty() || cfg.p_list.empty()) fail("chi_list and p_list must be non-empty");
  for (double chi : cfg.chi_list)
    if (!(chi >= 0.0)) fail("chi values must be >= 0");
  if (cfg.j_min < 0 || cfg.j_max <= cfg.j_min) fail("need 0 <= j_min < j_max");
  if (cfg.delta_levels < 0) fail("delta_levels must be >= 0");
  if (!detail::positive_trials(cfg.trials) || !detail::positive_trials(cfg.simulate_trials) ||
      !detail::positive_trials(cfg.histogram_trials) || !detail::positive_trials(cfg.clt_trials))
    fail("trial counts must be >= 1");
  if (cfg.workers < 1) fail("workers must be >= 1");
  if (!(cfg.histogram_epsilon > 0.0)) fail("histogram.epsilon must be > 0");
  if (cfg.wavelet_g != "none" && cfg.wavelet_g != "indicator" && cfg.wavelet_g != "haar")
    fail("wavelet.g must be none, indicator or haar");
  if (!(cfg.spectrum_p_step > 0.0) || !(cfg.spectrum_h_step > 0.0) || !(cfg.besov_inv_p_step > 0.0))
    fail("grid steps must be > 0");
  if (!(cfg.besov_inv_p_min > 0.0)) fail("besov.inv_p_min must be > 0");
  try {
    (void)cfg.generator();
  } catch (const Error& e) {
    if (e.code() == Errc::config_error) throw;
    fail("generator: " + e.message());
  }
}

/// Reads config text on top of `base`. Errors name the source, line and key.
inline ExperimentConfig parse_config(std::istream& in, const std::string& source,
                                     ExperimentConfig base = {}) {
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw Error(Errc::config_error, where + ": malformed section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(Errc::config_error, where + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    const std::string full = section.empty() ? key : section + "." + key;
    try {
      set_config_value(base, full, value);
    } catch (const Error& e) {
      throw Error(Errc::config_error, where + ": " + e.message());
    } catch (const std::exception& e) {
      throw Error(Errc::config_error, where + ": key '" + full + "': " + e.what());
    }
  }
  return base;
}

/// Stable text form of every field that affects numeric output (excludes
/// workers and out_dir). Used for the provenance hash.
inline std::string canonical_text(const ExperimentConfig& c) {
  std::ostringstream os;
  os.precision(17);
  auto list = [&](const auto& xs) {
    for (std::size_t i = 0; i < xs.size(); ++i) os << (i ? "," : "") << xs[i];
  };
  os << "family=" << family_name(c.family) << "\nlambda2=" << c.lambda2;
  if (c.delta) os << "\ndelta=" << *c.delta;
  if (c.beta) os << "\nbeta=" << *c.beta;
  os << "\nT_log2=" << c.T_log2 << "\nchi_list=";
  list(c.chi_list);
  os << "\nj_min=" << c.j_min << "\nj_max=" << c.j_max << "\ndelta_levels=" << c.delta_levels
     << "\np_list=";
  list(c.p_list);
  os << "\ntrials=" << c.trials << "\nmaster_seed=" << c.master_seed.value_or(0)
     << "\nmax_cells=" << c.max_cells << "\nsimulate.trials=" << c.simulate_trials
     << "\nhistogram.j_list=";
  list(c.histogram_j_list);
  os << "\nhistogram.h_bins=";
  list(c.histogram_h_bins);
  os << "\nhistogram.h_min=" << c.histogram_h_min << "\nhistogram.h_max=" << c.histogram_h_max
     << "\nhistogram.epsilon=" << c.histogram_epsilon << "\nhistogram.trials=" << c.histogram_trials
     << "\nwavelet.g=" << c.wavelet_g << "\nwavelet.j_min=" << c.wavelet_j_min
     << "\nwavelet.j_max=" << c.wavelet_j_max << "\nspectrum.p=" << c.spectrum_p_min << ":"
     << c.spectrum_p_step << ":" << c.spectrum_p_max << "\nspectrum.h=" << c.spectrum_h_min << ":"
     << c.spectrum_h_step << ":" << c.spectrum_h_max << "\nbesov.inv_p=" << c.besov_inv_p_min
     << ":" << c.besov_inv_p_step << ":" << c.besov_inv_p_max << "\nclt.p=" << c.clt_p
     << "\nclt.chi=" << c.clt_chi << "\nclt.j_list=";
  list(c.clt_j_list);
  os << "\nclt.trials=" << c.clt_trials << "\n";
  return os.str();
}

/// FNV-1a, 64 bit.
inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace mixcascade
