#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "psvf/models.hpp"
#include "psvf/sigma.hpp"

namespace psvf {

/// Fly-time solver knobs (bracket scan then bisection with Newton polish).
inline constexpr double kTExclusion = 1e-8;
inline constexpr double kFlyScanStep = 0.05;
inline constexpr double kFlyScanMax = 50.0;
inline constexpr double kTolHyperbolic = 1e-7;
inline constexpr double kCycleDedupRadius = 1e-8;

struct FlyTimeResult {
  double t = 0.0;
  double residual = 0.0;
  int iterations = 0;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
};

/// Smallest root t > kTExclusion of the upper-flow arrival equation
///   -t^2/2 + ((x0+y0)/4) e^{-2t} + ((x0-y0)/2) t - (x0+y0)/4 = 0
/// for a point of Sigma^{c+} (X.f > 0). Throws NoReturnError when no sign
/// change appears before kFlyScanMax.
FlyTimeResult x_fly_time(const Vec3& p);

/// Half-return map of the upper field X. Fixes S_X = {y = 0}; on the
/// arrival side (X.f < 0) the orbit is followed backward in time, which
/// makes the map an involution.
Vec3 half_return_x(const Vec3& p);

/// Half-return map of the lower field. Without a perturbation (or eps = 0)
/// this is the exact involution (x0, y0) -> (-x0, y0 + 2 x0). With a
/// perturbation the fly time solves
///   t^2/2 + x0 t - [F(x0+t, y0-t) - F(x0, y0)] = 0.
Vec3 half_return_y(const Vec3& p, const std::optional<PerturbationSpec>& spec = std::nullopt);

/// First return phi_Y o phi_X from a CrossingPlus point. Throws NoReturnError
/// when the mid point leaves the lower half-return domain.
Vec3 first_return(const Vec3& p, const std::optional<PerturbationSpec>& spec = std::nullopt);

struct IterateResult {
  std::vector<Vec3> points;        // starting point first
  std::vector<double> dist_r0;     // (sqrt 2 / 2) |x + y| per point
  bool completed = true;
  int exit_index = -1;             // 1-based index of the first failing iterate
  std::string exit_reason;
};

IterateResult iterate_return(const Vec3& p, int n,
                             const std::optional<PerturbationSpec>& spec = std::nullopt);

struct ReturnLinearization {
  std::array<std::array<double, 2>, 2> jacobian;  // in Sigma coordinates (x, y)
  std::array<double, 2> eigenvalues;
  std::array<std::array<double, 2>, 2> eigenvectors;
};

/// Central-difference Jacobian of the first return at (x0, -x0, 0),
/// step 1e-6 * max(1, x0); closed-form 2x2 eigensolve.
ReturnLinearization linearized_return(double x0,
                                      const std::optional<PerturbationSpec>& spec = std::nullopt);

enum class Stability { Attractor, Repeller, NonHyperbolic };

std::string to_string(Stability s);

struct LimitCycle {
  double x0 = 0.0;        // fixed point of the restricted map: the Sigma point (x0, -x0, 0)
  double period = 0.0;    // 4 x0
  double multiplier = 1.0;
  Stability stability = Stability::NonHyperbolic;
  std::optional<int> j;   // root index when it matches the family's law
};

/// Displacement of the pi0-restricted return map, x -> first_return x-coord
/// minus x, evaluated in a cancellation-free form (exact relative precision
/// even deep in the bump tails, where |D| underflows absolute tolerances).
double restricted_displacement(double x0, const std::optional<PerturbationSpec>& spec);

/// Multiplier of the restricted map at x0 by central differences of the
/// displacement, step 1e-6 * max(1, x0).
double restricted_multiplier(double x0, const std::optional<PerturbationSpec>& spec);

/// Scans the restricted displacement on [a, b] (grid_n samples), brackets
/// sign changes, bisects to 1e-12, deduplicates, and classifies stability by
/// the multiplier. Empty result is valid.
std::vector<LimitCycle> find_cycles(const PerturbationSpec& spec, double a, double b, int grid_n);

/// Roots of x -> F(x, -x) on (a, b): the independent fixed-point condition
/// used to cross-check find_cycles.
std::vector<double> profile_roots(const PerturbationSpec& spec, double a, double b, int grid_n);

}  // namespace psvf
