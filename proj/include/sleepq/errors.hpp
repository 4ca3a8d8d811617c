#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace sleepq {

// Argument outside the mathematical domain of an operation (s < 0, z > 1, w <= 0, ...).
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

// Moment order other than 1, 2 or 3.
class UnsupportedOrder : public std::invalid_argument {
public:
  explicit UnsupportedOrder(int k)
      : std::invalid_argument("unsupported moment order " + std::to_string(k) +
                              " (expected 1, 2 or 3)") {}
};

// rho = lambda * E[sigma] too close to (or above) 1.
class InstabilityError : public std::runtime_error {
public:
  explicit InstabilityError(double rho)
      : std::runtime_error("unstable system: rho = " + std::to_string(rho) +
                           " (need rho <= 1 - 1e-9)"),
        rho_(rho) {}
  double rho() const noexcept { return rho_; }

private:
  double rho_;
};

// Invalid or incomplete configuration. `field` names the offending key.
class ConfigError : public std::runtime_error {
public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

// Sweep or optimization grid above the point limit.
class GridTooLarge : public std::length_error {
public:
  GridTooLarge(double points, double limit)
      : std::length_error("grid has " + std::to_string(static_cast<long long>(points)) +
                          " points, limit is " + std::to_string(static_cast<long long>(limit))) {}
};

}  // namespace sleepq
