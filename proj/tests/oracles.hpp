#pragma once

// Independent reference computations used by the tests: direct quadrature,
// finite differences and brute-force pair loops. Nothing here calls into the
// library's fast paths.

#include <cmath>
#include <functional>
#include <numbers>

#include "dcrr/datagen.hpp"
#include "dcrr/smoothing.hpp"

namespace oracle {

/// Composite Simpson rule on [a, b] with an even number of panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int panels) {
  if (panels % 2) ++panels;
  const double h = (b - a) / panels;
  double sum = f(a) + f(b);
  for (int i = 1; i < panels; ++i) sum += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

inline double epanechnikov(double t) { return std::abs(t) <= 1.0 ? 0.75 * (1.0 - t * t) : 0.0; }
inline double gaussian(double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi); }

/// L_h(u) = integral of |u - v| K(v / h) / h dv, split at the kink v = u.
inline double convolved_abs(double u, double h, bool gaussian_kernel) {
  const auto K = [&](double v) { return (gaussian_kernel ? gaussian(v / h) : epanechnikov(v / h)) / h; };
  const double R = gaussian_kernel ? 12.0 * h : h;
  const auto f = [&](double v) { return std::abs(u - v) * K(v); };
  if (u <= -R || u >= R) return simpson(f, -R, R, 20000);
  return simpson(f, -R, u, 20000) + simpson(f, u, R, 20000);
}

inline double central_difference(const std::function<double(double)>& f, double x, double step) {
  return (f(x + step) - f(x - step)) / (2.0 * step);
}

struct PairSums {
  double loss = 0.0;
  dcrr::Vector gradient;
};

/// Average over ordered pairs i != j of L_h(r_ij) and its gradient in beta,
/// with r_ij = (y_i - x_i'beta) - (y_j - x_j'beta), one pair at a time.
inline PairSums brute_force_pairs(const dcrr::Matrix& X, const dcrr::Vector& y, const dcrr::SmoothedLoss& sl,
                                  const dcrr::Vector& beta) {
  const auto n = X.rows();
  PairSums out;
  out.gradient = dcrr::Vector::Zero(X.cols());
  long double loss = 0.0L;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const double r = (y[i] - X.row(i).dot(beta)) - (y[j] - X.row(j).dot(beta));
      loss += sl.loss(r);
      out.gradient -= sl.dloss(r) * (X.row(i) - X.row(j)).transpose();
    }
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1);
  out.loss = static_cast<double>(loss / pairs);
  out.gradient /= pairs;
  return out;
}

}  // namespace oracle
