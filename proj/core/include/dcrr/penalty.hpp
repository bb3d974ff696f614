#pragma once

#include <string_view>

#include "dcrr/datagen.hpp"

namespace dcrr {

enum class PenaltyKind { L1, SCAD, MCP };

PenaltyKind penalty_kind_from_name(std::string_view name);
std::string_view penalty_kind_name(PenaltyKind kind) noexcept;

/// Penalty family with level lambda and concavity a (ignored for L1).
/// Only the derivative p'_lambda is represented: the algorithms use weighted
/// l1 subproblems and the information criteria use the loss alone.
struct PenaltySpec {
  PenaltyKind kind = PenaltyKind::L1;
  double lambda = 0.0;
  double a = 0.0;

  static PenaltySpec l1(double lambda);
  static PenaltySpec scad(double lambda, double a = 3.7);
  static PenaltySpec mcp(double lambda, double a = 3.0);

  PenaltySpec with_lambda(double new_lambda) const;
  /// Throws ConfigError unless lambda >= 0, SCAD a > 2, MCP a > 1.
  void validate() const;
};

/// p'_lambda(v) for v >= 0. Throws DomainError for negative or non-finite v.
double derivative(const PenaltySpec& spec, double v);

/// LLA weights w_j = p'_lambda(|beta_ref_j|).
Vector lla_weights(const PenaltySpec& spec, const Vector& beta_ref);

}  // namespace dcrr
