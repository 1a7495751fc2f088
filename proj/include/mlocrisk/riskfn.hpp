#pragma once

#include <limits>
#include <string>
#include <string_view>

namespace mlocrisk {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class SigmaMode {
  Median,       // sigma == 0, dev_sigma(u) = |u|
  Interpolate,  // 0 < sigma < inf, dev_sigma(u) = dev(u / sigma)
  Mean,         // sigma == inf, dev_sigma(u) = u^2
};

/**
 * Scale/weight pair indexing the risk family.
 *
 * Valid pairs satisfy: sigma == 0 requires eta > 1, finite positive sigma
 * requires eta > 2 sigma / pi, and sigma == inf accepts any eta > 0. Only
 * valid pairs can be constructed; make() throws InvalidParams otherwise.
 */
class RiskParams {
 public:
  static RiskParams make(double sigma, double eta);
  /// Uses default_eta(sigma).
  static RiskParams with_default_eta(double sigma);

  double sigma() const noexcept { return sigma_; }
  double eta() const noexcept { return eta_; }
  SigmaMode mode() const noexcept { return mode_; }

  /// True when (sigma, eta) satisfies the strict finiteness conditions.
  static bool is_valid(double sigma, double eta) noexcept;

 private:
  RiskParams(double sigma, double eta, SigmaMode mode) : sigma_(sigma), eta_(eta), mode_(mode) {}

  double sigma_;
  double eta_;
  SigmaMode mode_;
};

SigmaMode sigma_mode(double sigma);

/// u * atan(u) - log(1 + u^2) / 2. Even, convex, pi/2-Lipschitz.
double dev(double u) noexcept;

/// atan(u).
double dev_prime(double u) noexcept;

double dev_sigma(double u, const RiskParams& params) noexcept;

/**
 * Derivative of dev_sigma in u, including the 1/sigma factor of the chain
 * rule in the interpolating mode. At sigma == 0 returns sign(u) with
 * sign(0) = 0.
 */
double dev_sigma_prime(double u, const RiskParams& params) noexcept;

/// Largest |dev_sigma_prime| over the reals; infinite for sigma == inf.
double dev_sigma_lipschitz(const RiskParams& params) noexcept;

double default_eta(double sigma);

/// Parses "inf", "infinity" (any case, optional '+') or a decimal number.
double parse_sigma(std::string_view text);

/// Inverse of parse_sigma: "inf" or the shortest round-trip decimal.
std::string format_sigma(double sigma);

}  // namespace mlocrisk
