#pragma once

#include <array>
#include <complex>
#include <string>

#include "psvf/sigma.hpp"

namespace psvf {

inline constexpr double kTolDenominator = 1e-9;
inline constexpr double kTolEquilibrium = 1e-9;

/// One evaluation of the sliding vector field. `opposite_orientation` is set
/// on escaping-region points, where the normalized form runs against the
/// Filippov (non-normalized) flow direction.
struct SlidingEval {
  Vec3 value;
  bool opposite_orientation;
};

/// Filippov sliding field on Sigma^s u Sigma^e.
///
/// normalized=true evaluates (X1 Y3 - Y1 X3, X2 Y3 - Y2 X3, 0); with
/// normalized=false the result is additionally divided by (Y3 - X3), which
/// must stay away from zero (DenominatorNearZeroError otherwise; for the
/// built-in model that line is r0 = {x + y = 0}).
SlidingEval sliding_field(const PiecewiseSystem& sys, const Vec3& q, bool normalized);

/// The (u, v) = (x + y, x - y) chart; z passes through. Inverse is
/// x = (u+v)/2, y = (u-v)/2.
struct UVPoint {
  double u;
  double v;
  double z;
};

UVPoint uv_transform(const Vec3& p);
Vec3 uv_inverse(const UVPoint& q);

enum class EquilibriumClass { SaddleNode, HyperbolicSaddle, Node, Focus, Degenerate, LineOfEquilibria };

std::string to_string(EquilibriumClass c);

/// Linearization of the planar normalized sliding field at an equilibrium.
struct EquilibriumReport {
  Vec3 location;
  std::array<std::array<double, 2>, 2> jacobian;  // in Sigma coordinates (x, y)
  std::array<std::complex<double>, 2> eigenvalues;
  std::array<std::array<double, 2>, 2> eigenvectors;  // rows, valid for real spectra
  EquilibriumClass classification;
};

/// Requires |Z^s(q)| <= kTolEquilibrium (NotEquilibriumError otherwise).
/// The 2x2 Jacobian comes from central differences of the normalized field
/// and is eigen-decomposed in closed form.
EquilibriumReport analyze_equilibrium(const PiecewiseSystem& sys, const Vec3& q);

}  // namespace psvf
