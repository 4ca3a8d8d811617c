#pragma once

#include <cmath>
#include <random>
#include <string>

#include "errors.hpp"

namespace sleepq {

/// Service-time law. Time unit is the frame.
///
/// Parameters by kind:
///   Deterministic  value
///   Exponential    mean
///   ErlangK        k (shape), mean
///   HyperExp2      p (branch-1 probability), mean (branch 1), mean2 (branch 2)
class ServiceDistribution {
public:
  enum class Kind { Deterministic, Exponential, ErlangK, HyperExp2 };

  static ServiceDistribution deterministic(double value) {
    return ServiceDistribution(Kind::Deterministic, value, 1, 1.0, 0.0);
  }
  static ServiceDistribution exponential(double mean) {
    return ServiceDistribution(Kind::Exponential, mean, 1, 1.0, 0.0);
  }
  static ServiceDistribution erlang(int k, double mean) {
    return ServiceDistribution(Kind::ErlangK, mean, k, 1.0, 0.0);
  }
  static ServiceDistribution hyperexp2(double p, double mean1, double mean2) {
    return ServiceDistribution(Kind::HyperExp2, mean1, 1, p, mean2);
  }

  Kind kind() const noexcept { return kind_; }
  double mean_param() const noexcept { return mean_; }
  int shape() const noexcept { return k_; }
  double branch_probability() const noexcept { return p_; }
  double second_mean() const noexcept { return mean2_; }

  double m1() const { return moment(1); }
  double m2() const { return moment(2); }
  double m3() const { return moment(3); }

  /// Exact raw moment E[sigma^k], k in {1, 2, 3}.
  double moment(int k) const {
    if (k < 1 || k > 3) throw UnsupportedOrder(k);
    switch (kind_) {
      case Kind::Deterministic:
        return std::pow(mean_, k);
      case Kind::Exponential:
        return factorial(k) * std::pow(mean_, k);
      case Kind::ErlangK: {
        // k(k+1)...(k+n-1) / theta^n with theta = k/mean
        const double theta = k_ / mean_;
        double rising = 1.0;
        for (int j = 0; j < k; ++j) rising *= (k_ + j);
        return rising / std::pow(theta, k);
      }
      case Kind::HyperExp2:
        return factorial(k) * (p_ * std::pow(mean_, k) + (1.0 - p_) * std::pow(mean2_, k));
    }
    return 0.0;
  }

  /// Laplace-Stieltjes transform E[exp(-s sigma)], s >= 0.
  double lst(double s) const {
    if (!(s >= 0.0)) throw DomainError("service lst: s must be >= 0");
    switch (kind_) {
      case Kind::Deterministic:
        return std::exp(-s * mean_);
      case Kind::Exponential:
        return 1.0 / (1.0 + mean_ * s);
      case Kind::ErlangK: {
        const double theta = k_ / mean_;
        return std::pow(theta / (theta + s), k_);
      }
      case Kind::HyperExp2:
        return p_ / (1.0 + mean_ * s) + (1.0 - p_) / (1.0 + mean2_ * s);
    }
    return 0.0;
  }

  template <class Rng>
  double sample(Rng& rng) const {
    switch (kind_) {
      case Kind::Deterministic:
        return mean_;
      case Kind::Exponential:
        return std::exponential_distribution<double>(1.0 / mean_)(rng);
      case Kind::ErlangK: {
        std::exponential_distribution<double> phase(k_ / mean_);
        double x = 0.0;
        for (int j = 0; j < k_; ++j) x += phase(rng);
        return x;
      }
      case Kind::HyperExp2: {
        const bool first = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p_;
        return std::exponential_distribution<double>(1.0 / (first ? mean_ : mean2_))(rng);
      }
    }
    return 0.0;
  }

  std::string describe() const {
    switch (kind_) {
      case Kind::Deterministic: return "deterministic(" + std::to_string(mean_) + ")";
      case Kind::Exponential: return "exponential(mean=" + std::to_string(mean_) + ")";
      case Kind::ErlangK:
        return "erlang(k=" + std::to_string(k_) + ", mean=" + std::to_string(mean_) + ")";
      case Kind::HyperExp2:
        return "hyperexp2(p=" + std::to_string(p_) + ", means=" + std::to_string(mean_) + "," +
               std::to_string(mean2_) + ")";
    }
    return {};
  }

private:
  ServiceDistribution(Kind kind, double mean, int k, double p, double mean2)
      : kind_(kind), mean_(mean), k_(k), p_(p), mean2_(mean2) {
    if (!(mean_ > 0.0) || !std::isfinite(mean_))
      throw DomainError("service distribution: mean/value must be finite and > 0");
    if (kind_ == Kind::ErlangK && k_ < 1) throw DomainError("erlang: shape k must be >= 1");
    if (kind_ == Kind::HyperExp2) {
      if (!(p_ >= 0.0 && p_ <= 1.0)) throw DomainError("hyperexp2: p must be in [0,1]");
      if (!(mean2_ > 0.0) || !std::isfinite(mean2_))
        throw DomainError("hyperexp2: second mean must be finite and > 0");
    }
  }

  static double factorial(int k) { return k == 1 ? 1.0 : (k == 2 ? 2.0 : 6.0); }

  Kind kind_;
  double mean_;
  int k_;
  double p_;
  double mean2_;
};

}  // namespace sleepq
