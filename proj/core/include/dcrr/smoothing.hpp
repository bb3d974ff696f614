#pragma once

#include <cmath>
#include <string_view>
#include <variant>

namespace dcrr {

// Kernels provide the density K, its CDF F_K and the smoothed absolute value
// E|t - Z| for Z ~ K, all at unit bandwidth. Closed forms are written in terms
// of |t| so that evenness/oddness hold exactly in floating point.

struct GaussianKernel {
  static constexpr std::string_view name = "gaussian";
  static constexpr double support_radius = INFINITY;

  static double density(double t) noexcept;
  static double cdf(double t) noexcept;
  /// 2F(t) - 1, odd in t.
  static double centered_cdf(double t) noexcept;
  /// E|t - Z|.
  static double smoothed_abs(double t) noexcept;
};

struct EpanechnikovKernel {
  static constexpr std::string_view name = "epanechnikov";
  static constexpr double support_radius = 1.0;

  static double density(double t) noexcept {
    const double t2 = t * t;
    return t2 <= 1.0 ? 0.75 * (1.0 - t2) : 0.0;
  }
  static double cdf(double t) noexcept { return 0.5 * (1.0 + centered_cdf(t)); }
  static double centered_cdf(double t) noexcept {
    const double a = std::fabs(t);
    const double v = a >= 1.0 ? 1.0 : 0.5 * a * (3.0 - a * a);
    return std::copysign(v, t);
  }
  static double smoothed_abs(double t) noexcept {
    const double t2 = t * t;
    if (t2 >= 1.0) return std::fabs(t);
    return 0.375 + 0.75 * t2 - 0.125 * t2 * t2;
  }
};

/// Closed set of kernels. New kernels add a struct with the members above.
using Kernel = std::variant<GaussianKernel, EpanechnikovKernel>;

Kernel kernel_from_name(std::string_view name);
std::string_view kernel_name(const Kernel& kernel) noexcept;
double kernel_density(const Kernel& kernel, double t) noexcept;
double kernel_cdf(const Kernel& kernel, double t) noexcept;

/// Convolution of |u| with K_h(v) = K(v/h)/h. Convex and smooth, with
/// L_h'(u) = 2F_K(u/h) - 1 and L_h''(u) = 2K(u/h)/h.
class SmoothedLoss {
 public:
  SmoothedLoss(Kernel kernel, double bandwidth);

  const Kernel& kernel() const noexcept { return kernel_; }
  double bandwidth() const noexcept { return h_; }

  // Checked entry points: throw DomainError on non-finite u.
  double loss(double u) const;
  double dloss(double u) const;
  double ddloss(double u) const;

  /// Calls f(kernel_struct) with the concrete kernel type so hot loops can be
  /// instantiated per kernel without per-pair dispatch.
  template <typename F>
  decltype(auto) visit(F&& f) const {
    return std::visit(std::forward<F>(f), kernel_);
  }

  // Unchecked forms for inner loops, parameterized by concrete kernel.
  template <typename K>
  static double loss_at(double u, double h) noexcept {
    return h * K::smoothed_abs(u / h);
  }
  template <typename K>
  static double dloss_at(double u, double h) noexcept {
    return K::centered_cdf(u / h);
  }
  template <typename K>
  static double ddloss_at(double u, double h) noexcept {
    return 2.0 * K::density(u / h) / h;
  }

 private:
  Kernel kernel_;
  double h_;
};

}  // namespace dcrr
