#pragma once

// Cascade weight laws W = exp(omega) with E[W] = 1, and their cumulant
// functions tau(p) = p - log2 E[W^p] - 1.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mixcascade/error.hpp"
#include "mixcascade/rng.hpp"

namespace mixcascade {

enum class Family { LogNormal, LogPoisson, LogGamma, Empirical };

inline const char* family_name(Family f) {
  switch (f) {
    case Family::LogNormal: return "lognormal";
    case Family::LogPoisson: return "logpoisson";
    case Family::LogGamma: return "loggamma";
    case Family::Empirical: return "empirical";
  }
  return "unknown";
}

inline Family parse_family(const std::string& name) {
  if (name == "lognormal" || name == "log-normal" || name == "LogNormal") return Family::LogNormal;
  if (name == "logpoisson" || name == "log-poisson" || name == "LogPoisson") return Family::LogPoisson;
  if (name == "loggamma" || name == "log-gamma" || name == "LogGamma") return Family::LogGamma;
  throw Error(Errc::invalid_parameter, "unknown generator family '" + name + "'");
}

/// Draws of log W for a user-defined law. Consumed by make_empirical_generator.
using LogWeightSampler = std::function<double(SplitMix64&)>;

class GeneratorSpec;
GeneratorSpec make_generator(Family family, double lambda2, double shape_param = 0.0);
GeneratorSpec make_empirical_generator(const LogWeightSampler& sampler, std::size_t draws,
                                       std::uint64_t seed);

/// Law of the cascade generator W. Immutable; share freely between threads.
///
/// Parameterization (ln2 = natural log of 2):
///   LogNormal : omega ~ Normal(-lambda2 ln2 / 2, lambda2 ln2)
///   LogPoisson: omega = m0 ln2 + delta n,  n ~ Poisson(gamma ln2),  gamma = lambda2 / delta^2
///   LogGamma  : omega = x + m0 ln2,  x ~ Gamma(shape alpha ln2, rate beta),  alpha = lambda2 beta^2
/// with m0 fixed by E[W] = 1. The Gamma density is taken in the rate
/// convention beta^a x^(a-1) e^(-beta x) / Gamma(a).
class GeneratorSpec {
 public:
  Family family() const noexcept { return family_; }
  double lambda2() const noexcept { return lambda2_; }
  double delta() const noexcept { return delta_; }
  double beta() const noexcept { return beta_; }
  double m0() const noexcept { return m0_; }
  double gamma_poisson() const noexcept { return gamma_; }
  double alpha_gamma() const noexcept { return alpha_; }

  /// Supremum of the tau domain (beta for LogGamma, +inf otherwise).
  double domain_upper() const noexcept {
    return family_ == Family::LogGamma ? beta_ : std::numeric_limits<double>::infinity();
  }
  bool in_domain(double p) const noexcept { return std::isfinite(p) && p < domain_upper(); }

  /// log2 E[W^p].
  double log2_moment(double p) const {
    check_domain(p);
    switch (family_) {
      case Family::LogNormal:
        return 0.5 * lambda2_ * p * (p - 1.0);
      case Family::LogPoisson:
        return p * m0_ + gamma_ * std::expm1(p * delta_);
      case Family::LogGamma:
        return p * m0_ - alpha_ * std::log1p(-p / beta_);
      case Family::Empirical:
        return empirical_moments(p).log2_mean;
    }
    return 0.0;
  }

  double tau(double p) const {
    if (p == 0.0) return -1.0;
    if (p == 1.0) return 0.0;
    return p - log2_moment(p) - 1.0;
  }

  double tau_prime(double p) const {
    check_domain(p);
    switch (family_) {
      case Family::LogNormal:
        return 1.0 + 0.5 * lambda2_ - lambda2_ * p;
      case Family::LogPoisson:
        return 1.0 - m0_ - gamma_ * delta_ * std::exp(p * delta_);
      case Family::LogGamma:
        return 1.0 - m0_ - alpha_ / (beta_ - p);
      case Family::Empirical:
        return 1.0 - empirical_moments(p).d1;
    }
    return 0.0;
  }

  double tau_second(double p) const {
    check_domain(p);
    switch (family_) {
      case Family::LogNormal:
        return -lambda2_;
      case Family::LogPoisson:
        return -gamma_ * delta_ * delta_ * std::exp(p * delta_);
      case Family::LogGamma:
        return -alpha_ / ((beta_ - p) * (beta_ - p));
      case Family::Empirical:
        return -empirical_moments(p).d2;
    }
    return 0.0;
  }

  /// E[W log2 W] = 1 - tau'(1). Must stay below 1 for a non-degenerate limit.
  double mean_w_log2_w() const { return 1.0 - tau_prime(1.0); }

  /// One draw of W (strictly positive).
  double sample(SplitMix64& gen) const { return std::exp(sample_log(gen)); }

  /// One draw of omega = ln W.
  double sample_log(SplitMix64& gen) const {
    constexpr double ln2 = std::numbers::ln2;
    switch (family_) {
      case Family::LogNormal: {
        std::normal_distribution<double> normal(-0.5 * lambda2_ * ln2, std::sqrt(lambda2_ * ln2));
        return normal(gen);
      }
      case Family::LogPoisson: {
        std::poisson_distribution<long long> poisson(gamma_ * ln2);
        return m0_ * ln2 + delta_ * static_cast<double>(poisson(gen));
      }
      case Family::LogGamma: {
        std::gamma_distribution<double> gamma(alpha_ * ln2, 1.0 / beta_);
        return gamma(gen) + m0_ * ln2;
      }
      case Family::Empirical:
        return empirical_->sampler(gen) + empirical_->shift;
    }
    return 0.0;
  }

  std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    os << family_name(family_) << "(lambda2=" << lambda2_;
    if (family_ == Family::LogPoisson) os << ", delta=" << delta_;
    if (family_ == Family::LogGamma) os << ", beta=" << beta_;
    os << ")";
    return os.str();
  }

 private:
  friend GeneratorSpec make_generator(Family, double, double);
  friend GeneratorSpec make_empirical_generator(const LogWeightSampler&, std::size_t, std::uint64_t);

  struct EmpiricalLaw {
    LogWeightSampler sampler;
    double shift = 0.0;          // added to sampler output so that the sample mean of W is 1
    std::vector<double> omegas;  // shifted Monte Carlo draws backing tau
  };

  struct Moments {
    double log2_mean;  // log2 of mean W^p
    double d1;         // d/dp log2 mean W^p
    double d2;         // d2/dp2 log2 mean W^p
  };

  GeneratorSpec() = default;

  void check_domain(double p) const {
    if (!in_domain(p)) {
      std::ostringstream os;
      os << "tau evaluated at p=" << p << " outside its domain for " << describe();
      throw Error(Errc::domain_error, os.str());
    }
  }

  Moments empirical_moments(double p) const {
    const auto& om = empirical_->omegas;
    double peak = -std::numeric_limits<double>::infinity();
    for (double w : om) peak = std::max(peak, p * w);
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    for (double w : om) {
      const double e = std::exp(p * w - peak);
      s0 += e;
      s1 += e * w;
      s2 += e * w * w;
    }
    const double n = static_cast<double>(om.size());
    const double m1 = s1 / s0;
    const double var = s2 / s0 - m1 * m1;
    return {(peak + std::log(s0 / n)) / std::numbers::ln2, m1 / std::numbers::ln2,
            var / std::numbers::ln2};
  }

  Family family_ = Family::LogNormal;
  double lambda2_ = 0.0;
  double delta_ = 0.0;
  double beta_ = 0.0;
  double m0_ = 0.0;
  double gamma_ = 0.0;
  double alpha_ = 0.0;
  std::shared_ptr<const EmpiricalLaw> empirical_;
};

/// Builds a generator with intermittency coefficient lambda2 = -tau''(0).
/// `shape_param` is delta for LogPoisson and beta for LogGamma; ignored for LogNormal.
inline GeneratorSpec make_generator(Family family, double lambda2, double shape_param) {
  if (!(lambda2 > 0.0) || !std::isfinite(lambda2))
    throw Error(Errc::invalid_parameter, "lambda2 must be a positive finite number");
  GeneratorSpec spec;
  spec.family_ = family;
  spec.lambda2_ = lambda2;
  switch (family) {
    case Family::LogNormal:
      break;
    case Family::LogPoisson: {
      const double delta = shape_param;
      if (delta == 0.0 || !std::isfinite(delta))
        throw Error(Errc::invalid_parameter, "log-Poisson jump size delta must be finite and non-zero");
      spec.delta_ = delta;
      spec.gamma_ = lambda2 / (delta * delta);
      // tau(1) = 0  <=>  m0 = gamma (1 - e^delta)
      spec.m0_ = -spec.gamma_ * std::expm1(delta);
      break;
    }
    case Family::LogGamma: {
      const double beta = shape_param;
      if (!(beta > 1.0) || !std::isfinite(beta))
        throw Error(Errc::invalid_parameter, "log-Gamma rate beta must be finite and > 1");
      spec.beta_ = beta;
      spec.alpha_ = lambda2 * beta * beta;
      // tau(1) = 0  <=>  m0 = alpha ln((beta - 1) / beta)
      spec.m0_ = spec.alpha_ * std::log1p(-1.0 / beta);
      break;
    }
    case Family::Empirical:
      throw Error(Errc::invalid_parameter, "use make_empirical_generator for user-defined laws");
  }
  if (!(spec.mean_w_log2_w() < 1.0))
    throw Error(Errc::non_degenerate_condition_failed,
                "E[W log2 W] >= 1 for " + spec.describe());
  return spec;
}

inline GeneratorSpec make_log_normal(double lambda2) {
  return make_generator(Family::LogNormal, lambda2);
}
inline GeneratorSpec make_log_poisson(double lambda2, double delta) {
  return make_generator(Family::LogPoisson, lambda2, delta);
}
inline GeneratorSpec make_log_gamma(double lambda2, double beta) {
  return make_generator(Family::LogGamma, lambda2, beta);
}

/// User-defined law: `sampler` draws ln W up to an additive constant. The
/// constant is fixed from `draws` Monte Carlo samples so that the sample mean
/// of W is 1; tau and its derivatives are evaluated on the same draws.
inline GeneratorSpec make_empirical_generator(const LogWeightSampler& sampler, std::size_t draws,
                                              std::uint64_t seed) {
  if (!sampler) throw Error(Errc::invalid_parameter, "empirical generator needs a sampler");
  if (draws < 2) throw Error(Errc::invalid_parameter, "empirical generator needs at least 2 draws");
  auto law = std::make_shared<GeneratorSpec::EmpiricalLaw>();
  law->sampler = sampler;
  law->omegas.reserve(draws);
  auto gen = RngStream(seed).engine();
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < draws; ++i) {
    law->omegas.push_back(sampler(gen));
    peak = std::max(peak, law->omegas.back());
  }
  double acc = 0.0;
  for (double w : law->omegas) acc += std::exp(w - peak);
  law->shift = -(peak + std::log(acc / static_cast<double>(draws)));
  for (double& w : law->omegas) w += law->shift;

  GeneratorSpec spec;
  spec.family_ = Family::Empirical;
  spec.empirical_ = law;
  spec.lambda2_ = -spec.tau_second(0.0);
  if (!(spec.lambda2_ > 0.0))
    throw Error(Errc::invalid_parameter, "empirical law is degenerate (zero variance)");
  if (!(spec.mean_w_log2_w() < 1.0))
    throw Error(Errc::non_degenerate_condition_failed, "E[W log2 W] >= 1 for empirical law");
  return spec;
}

/// i.i.d. draws of W from a single engine.
inline std::vector<double> sample_weights(const GeneratorSpec& spec, std::size_t count,
                                          SplitMix64& gen) {
  std::vector<double> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(spec.sample(gen));
  return out;
}

}  // namespace mixcascade
