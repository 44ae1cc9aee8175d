#pragma once

#include <array>
#include <string>

#include "psvf/system.hpp"

namespace psvf {

/// Tolerances for the switching-manifold analysis. The built-in models are
/// analytic and O(1)-scaled near the origin, so these sit well above double
/// rounding noise and well below model scales.
inline constexpr double kTolOnSigma = 1e-10;
inline constexpr double kTolTangency = 1e-9;
inline constexpr double kTolTransversal = 1e-6;

enum class SigmaRegion {
  CrossingPlus,   // X.f > 0, Y.f > 0 (both fields cross upward)
  CrossingMinus,  // X.f < 0, Y.f < 0
  Sliding,        // X.f < 0, Y.f > 0 (both point at Sigma)
  Escaping,       // X.f > 0, Y.f < 0
  TangencyUpper,  // X.f = 0 only
  TangencyLower,  // Y.f = 0 only
  TwoFold,        // X.f = Y.f = 0
};

std::string to_string(SigmaRegion r);

/// A point on the switching manifold together with its region label.
struct SigmaPoint {
  Vec3 p;
  SigmaRegion region;
};

/// First or second Lie derivative of the switching function along one field.
/// Order 1 is <grad f, F>; order 2 differentiates the order-1 scalar along F,
/// by central differences (step 1e-5 * max(1, |p|)) unless the field
/// registers an analytic form.
double lie_derivative(const PiecewiseSystem& sys, Side side, const Vec3& p, int order);

SigmaRegion classify_sigma_point(const PiecewiseSystem& sys, const Vec3& p);

SigmaPoint sigma_point(const PiecewiseSystem& sys, const Vec3& p);

enum class TangencyKind { NotTangent, VisibleFold, InvisibleFold, DegenerateTangency };

std::string to_string(TangencyKind k);

/// Fold classification of one field at a Sigma point.
///
/// Visibility follows the geometric convention: a fold is visible when the
/// tangent arc stays on the side the field governs. For the upper field that
/// is second_lie > 0; for the lower field the sign flips (visible iff
/// second_lie < 0).
struct FoldReport {
  Side side;
  double first_lie;
  double second_lie;
  TangencyKind kind;
};

FoldReport fold_report(const PiecewiseSystem& sys, Side side, const Vec3& p);

/// Transversality certificate for a candidate two-fold: the in-plane
/// gradients of X.f and Y.f restricted to Sigma and their determinant.
struct TwoFoldCertificate {
  bool is_t_singularity;
  std::array<double, 2> tangent_dir_upper;
  std::array<double, 2> tangent_dir_lower;
  double determinant;
};

/// True iff both folds at p are invisible and the tangency curves S_X, S_Y
/// cross transversally (|det| > kTolTransversal). Throws NotTwoFoldError if
/// either first Lie derivative exceeds kTolTangency.
TwoFoldCertificate detect_t_singularity(const PiecewiseSystem& sys, const Vec3& p);

}  // namespace psvf
