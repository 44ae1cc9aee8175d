#pragma once

#include <optional>
#include <string>
#include <vector>

#include "psvf/system.hpp"

namespace psvf {

/// Below this argument the bump value underflows double precision
/// (e^-745 ~ 5e-324), so the plateau is returned bit-exactly.
inline constexpr double kBumpUnderflowThreshold = 1.0 / 745.0;

/// C-infinity bump: 0 for w <= 0, e^{-1/w} for w > 0.
double bump(double w);
double bump_derivative(double w);

/// Finite perturbation profile
///   F(x, y) = -eps h(x) h(-y) (eps - x)(2 eps - x)...(k eps - x),
/// with the empty product convention for k = 0. For eps > 0 it has exactly k
/// roots x = j eps on (0, inf) at fixed y < 0, with the x-partial alternating
/// +,-,+,... over j = 1..k.
double F_finite(double x, double y, double eps, int k);
double F_finite_dx(double x, double y, double eps, int k);
double F_finite_dy(double x, double y, double eps, int k);

/// Oscillatory perturbation profile F(x, y) = h(x) h(-y) sin(pi eps^2 / x),
/// vanishing for x <= 0; roots accumulate at 0 along x = eps^2 / j.
double F_infinite(double x, double y, double eps);
double F_infinite_dx(double x, double y, double eps);
double F_infinite_dy(double x, double y, double eps);

/// Selector for the perturbation family applied to the lower field.
struct PerturbationSpec {
  enum class Family { Finite, Infinite };
  Family family = Family::Finite;
  int k = 0;          // number of cycles, Finite only
  double epsilon = 0.0;

  static PerturbationSpec finite(int k, double epsilon) {
    return {Family::Finite, k, epsilon};
  }
  static PerturbationSpec infinite(double epsilon) {
    return {Family::Infinite, 0, epsilon};
  }
};

std::string to_string(const PerturbationSpec& spec);

double perturbation_value(const PerturbationSpec& spec, double x, double y);
double perturbation_dx(const PerturbationSpec& spec, double x, double y);
double perturbation_dy(const PerturbationSpec& spec, double x, double y);

/// Derivative of F along the straight lower-flow direction (1, -1).
double perturbation_along_flow(const PerturbationSpec& spec, double x, double y);

/// The unperturbed two-fold model: upper field
/// X = (-1-(x+y), 1-(x+y), -y), lower field Y0 = (1, -1, x), switching
/// function f = z. Both sides carry exact flow maps and analytic second Lie
/// derivatives.
PiecewiseSystem model_z0();

/// The perturbed family: upper field as in model_z0, lower field
/// (1, -1, x - dF) where dF is the flow-directional derivative of the
/// profile, so that the registered flow
///   z(t) = z0 + x0 t + t^2/2 - [F(x0+t, y0-t) - F(x0, y0)]
/// is exact and the plane {x + y = 0} stays invariant.
PiecewiseSystem model_z_eps(const PerturbationSpec& spec);

/// Registry ids: "z0", "z-eps-finite", "z-eps-infinite".
std::vector<std::string> model_ids();
PiecewiseSystem model_from_id(const std::string& id,
                              const std::optional<PerturbationSpec>& spec = std::nullopt);

}  // namespace psvf
