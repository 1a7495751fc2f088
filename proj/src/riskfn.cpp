#include "mlocrisk/riskfn.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

#include "mlocrisk/errors.hpp"
#include "mlocrisk/csv_writer.hpp"

namespace mlocrisk {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;

// Above this magnitude u^2 is never formed.
constexpr double kLargeArg = 1e8;
// Below this magnitude the Taylor series is more accurate than the closed form.
constexpr double kSmallArg = 1e-2;

}  // namespace

SigmaMode sigma_mode(double sigma) {
  if (std::isnan(sigma) || sigma < 0.0) {
    throw InvalidParams("sigma must be >= 0 or inf");
  }
  if (sigma == 0.0) return SigmaMode::Median;
  if (std::isinf(sigma)) return SigmaMode::Mean;
  return SigmaMode::Interpolate;
}

bool RiskParams::is_valid(double sigma, double eta) noexcept {
  if (std::isnan(sigma) || sigma < 0.0) return false;
  if (!std::isfinite(eta) || eta <= 0.0) return false;
  if (sigma == 0.0) return eta > 1.0;
  if (std::isinf(sigma)) return true;
  return eta > sigma / kHalfPi;
}

RiskParams RiskParams::make(double sigma, double eta) {
  if (!is_valid(sigma, eta)) {
    std::ostringstream msg;
    msg << "invalid risk parameters sigma=" << format_sigma(sigma) << " eta=" << eta;
    if (sigma == 0.0) {
      msg << " (need eta > 1)";
    } else if (sigma > 0.0 && std::isfinite(sigma)) {
      msg << " (need eta > 2*sigma/pi = " << sigma / kHalfPi << ")";
    } else {
      msg << " (need eta > 0)";
    }
    throw InvalidParams(msg.str());
  }
  return RiskParams(sigma, eta, sigma_mode(sigma));
}

RiskParams RiskParams::with_default_eta(double sigma) { return make(sigma, default_eta(sigma)); }

double dev(double u) noexcept {
  const double a = std::abs(u);
  if (a < kSmallArg) {
    // sum_k (-1)^(k+1) a^(2k) / ((2k-1)(2k))
    const double a2 = a * a;
    return a2 * (0.5 - a2 * (1.0 / 12.0 - a2 * (1.0 / 30.0 - a2 / 56.0)));
  }
  if (a > kLargeArg) {
    // a*atan(a) = a*pi/2 - a*atan(1/a);  log(1+a^2)/2 = log(a) + log1p(1/a^2)/2
    const double inv = 1.0 / a;
    return a * kHalfPi - a * std::atan(inv) - std::log(a) - 0.5 * std::log1p(inv * inv);
  }
  return a * std::atan(a) - 0.5 * std::log1p(a * a);
}

double dev_prime(double u) noexcept { return std::atan(u); }

double dev_sigma(double u, const RiskParams& params) noexcept {
  switch (params.mode()) {
    case SigmaMode::Median:
      return std::abs(u);
    case SigmaMode::Mean:
      return u * u;
    case SigmaMode::Interpolate:
      break;
  }
  return dev(u / params.sigma());
}

double dev_sigma_prime(double u, const RiskParams& params) noexcept {
  switch (params.mode()) {
    case SigmaMode::Median:
      return static_cast<double>((u > 0.0) - (u < 0.0));
    case SigmaMode::Mean:
      return 2.0 * u;
    case SigmaMode::Interpolate:
      break;
  }
  return std::atan(u / params.sigma()) / params.sigma();
}

double dev_sigma_lipschitz(const RiskParams& params) noexcept {
  switch (params.mode()) {
    case SigmaMode::Median:
      return 1.0;
    case SigmaMode::Mean:
      return kInf;
    case SigmaMode::Interpolate:
      break;
  }
  return kHalfPi / params.sigma();
}

double default_eta(double sigma) {
  switch (sigma_mode(sigma)) {
    case SigmaMode::Median:
      return 1.05;
    case SigmaMode::Mean:
      return 1.0;
    case SigmaMode::Interpolate:
      break;
  }
  if (sigma < 1.0) {
    // 2 sigma / pi sits exactly on the boundary of the valid region.
    return 1.0001 * sigma / kHalfPi;
  }
  return 2.0 * sigma * sigma;
}

double parse_sigma(std::string_view text) {
  std::string lowered;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) {
      lowered.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (!lowered.empty() && lowered.front() == '+') lowered.erase(0, 1);
  if (lowered == "inf" || lowered == "infinity") return kInf;
  double value = 0.0;
  const auto* first = lowered.data();
  const auto* last = lowered.data() + lowered.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (lowered.empty() || ec != std::errc() || ptr != last || !std::isfinite(value) || value < 0.0) {
    throw InvalidParams("cannot parse sigma value '" + std::string(text) + "'");
  }
  return value;
}

std::string format_sigma(double sigma) {
  if (std::isinf(sigma) && sigma > 0.0) return "inf";
  return format_double(sigma);
}

}  // namespace mlocrisk
