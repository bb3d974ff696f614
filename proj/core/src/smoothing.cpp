#include "dcrr/smoothing.hpp"

#include <numbers>
#include <string>

#include "dcrr/errors.hpp"

namespace dcrr {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

void require_finite(double u, const char* what) {
  if (!std::isfinite(u)) throw DomainError(std::string(what) + ": argument must be finite");
}

}  // namespace

double GaussianKernel::density(double t) noexcept { return kInvSqrt2Pi * std::exp(-0.5 * t * t); }

double GaussianKernel::cdf(double t) noexcept { return 0.5 * std::erfc(-t * kInvSqrt2); }

double GaussianKernel::centered_cdf(double t) noexcept {
  return std::copysign(std::erf(std::fabs(t) * kInvSqrt2), t);
}

double GaussianKernel::smoothed_abs(double t) noexcept {
  // E|t - Z| = t(2Phi(t) - 1) + 2phi(t), written via erfc so the tail
  // |t| - E|t - Z| keeps relative accuracy.
  const double a = std::fabs(t);
  return a - a * std::erfc(a * kInvSqrt2) + 2.0 * density(a);
}

Kernel kernel_from_name(std::string_view name) {
  if (name == GaussianKernel::name) return GaussianKernel{};
  if (name == EpanechnikovKernel::name) return EpanechnikovKernel{};
  throw ConfigError("unknown kernel '" + std::string(name) + "' (expected gaussian or epanechnikov)");
}

std::string_view kernel_name(const Kernel& kernel) noexcept {
  return std::visit([](auto k) { return decltype(k)::name; }, kernel);
}

double kernel_density(const Kernel& kernel, double t) noexcept {
  return std::visit([t](auto k) { return decltype(k)::density(t); }, kernel);
}

double kernel_cdf(const Kernel& kernel, double t) noexcept {
  return std::visit([t](auto k) { return decltype(k)::cdf(t); }, kernel);
}

SmoothedLoss::SmoothedLoss(Kernel kernel, double bandwidth) : kernel_(kernel), h_(bandwidth) {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth))
    throw ConfigError("bandwidth h must be positive and finite");
}

double SmoothedLoss::loss(double u) const {
  require_finite(u, "loss");
  return visit([&](auto k) { return loss_at<decltype(k)>(u, h_); });
}

double SmoothedLoss::dloss(double u) const {
  require_finite(u, "dloss");
  return visit([&](auto k) { return dloss_at<decltype(k)>(u, h_); });
}

double SmoothedLoss::ddloss(double u) const {
  require_finite(u, "ddloss");
  return visit([&](auto k) { return ddloss_at<decltype(k)>(u, h_); });
}

}  // namespace dcrr
