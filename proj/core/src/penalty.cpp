#include "dcrr/penalty.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dcrr/errors.hpp"

namespace dcrr {

PenaltyKind penalty_kind_from_name(std::string_view name) {
  if (name == "l1" || name == "lasso") return PenaltyKind::L1;
  if (name == "scad") return PenaltyKind::SCAD;
  if (name == "mcp") return PenaltyKind::MCP;
  throw ConfigError("unknown penalty '" + std::string(name) + "' (expected l1, scad or mcp)");
}

std::string_view penalty_kind_name(PenaltyKind kind) noexcept {
  switch (kind) {
    case PenaltyKind::L1: return "l1";
    case PenaltyKind::SCAD: return "scad";
    case PenaltyKind::MCP: return "mcp";
  }
  return "unknown";
}

PenaltySpec PenaltySpec::l1(double lambda) {
  PenaltySpec spec{PenaltyKind::L1, lambda, 0.0};
  spec.validate();
  return spec;
}

PenaltySpec PenaltySpec::scad(double lambda, double a) {
  PenaltySpec spec{PenaltyKind::SCAD, lambda, a};
  spec.validate();
  return spec;
}

PenaltySpec PenaltySpec::mcp(double lambda, double a) {
  PenaltySpec spec{PenaltyKind::MCP, lambda, a};
  spec.validate();
  return spec;
}

PenaltySpec PenaltySpec::with_lambda(double new_lambda) const {
  PenaltySpec spec = *this;
  spec.lambda = new_lambda;
  spec.validate();
  return spec;
}

void PenaltySpec::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("penalty lambda must be finite and >= 0");
  if (kind == PenaltyKind::SCAD && !(a > 2.0)) throw ConfigError("SCAD requires a > 2");
  if (kind == PenaltyKind::MCP && !(a > 1.0)) throw ConfigError("MCP requires a > 1");
}

double derivative(const PenaltySpec& spec, double v) {
  if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("penalty derivative needs a finite v >= 0");
  const double lambda = spec.lambda;
  switch (spec.kind) {
    case PenaltyKind::L1:
      return lambda;
    case PenaltyKind::SCAD:
      if (v <= lambda) return lambda;
      return std::max(spec.a * lambda - v, 0.0) / (spec.a - 1.0);
    case PenaltyKind::MCP:
      return std::max(lambda - v / spec.a, 0.0);
  }
  return lambda;
}

Vector lla_weights(const PenaltySpec& spec, const Vector& beta_ref) {
  Vector w(beta_ref.size());
  for (Eigen::Index j = 0; j < beta_ref.size(); ++j) w[j] = derivative(spec, std::fabs(beta_ref[j]));
  return w;
}

}  // namespace dcrr
