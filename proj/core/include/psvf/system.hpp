#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

#include "psvf/geometry.hpp"

namespace psvf {

enum class Side { Upper, Lower };

/// One smooth vector field of a piecewise-smooth pair.
///
/// `lie2`, when set, supplies the analytic second Lie derivative of the
/// system's switching function along this field; classification code falls
/// back to central differences otherwise. `flow`, when set, is the exact
/// flow map (t, p0) -> p(t), valid for the whole of R^3.
struct SmoothField {
  std::string name;
  std::function<Vec3(const Vec3&)> eval;
  std::function<double(const Vec3&)> lie2;
  std::function<Vec3(double, const Vec3&)> flow;

  Vec3 operator()(const Vec3& p) const { return eval(p); }
};

/// A pair of smooth fields separated by the zero set of a scalar switching
/// function. `upper` governs f >= 0, `lower` governs f <= 0.
struct PiecewiseSystem {
  std::string id;
  SmoothField upper;
  SmoothField lower;
  std::function<double(const Vec3&)> switching;
  std::function<Vec3(const Vec3&)> switching_gradient;

  const SmoothField& field(Side s) const { return s == Side::Upper ? upper : lower; }
};

struct NotOnSigmaError : std::domain_error {
  explicit NotOnSigmaError(const std::string& what) : std::domain_error(what) {}
};

struct NonRegularSwitchingError : std::domain_error {
  explicit NonRegularSwitchingError(const std::string& what) : std::domain_error(what) {}
};

struct NotTwoFoldError : std::domain_error {
  explicit NotTwoFoldError(const std::string& what) : std::domain_error(what) {}
};

struct OutsideSlidingSetError : std::domain_error {
  explicit OutsideSlidingSetError(const std::string& what) : std::domain_error(what) {}
};

struct DenominatorNearZeroError : std::domain_error {
  explicit DenominatorNearZeroError(const std::string& what) : std::domain_error(what) {}
};

struct NotEquilibriumError : std::domain_error {
  explicit NotEquilibriumError(const std::string& what) : std::domain_error(what) {}
};

struct NoReturnError : std::runtime_error {
  explicit NoReturnError(const std::string& what) : std::runtime_error(what) {}
};

struct NonFinitePointError : std::domain_error {
  explicit NonFinitePointError(const std::string& what) : std::domain_error(what) {}
};

inline void require_finite(const Vec3& p, const char* where) {
  if (!is_finite(p)) throw NonFinitePointError(std::string(where) + ": non-finite point");
}

}  // namespace psvf
