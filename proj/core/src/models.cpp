#include "psvf/models.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace psvf {

namespace {
constexpr double kPi = std::numbers::pi;
}

double bump(double w) {
  if (w < kBumpUnderflowThreshold) return 0.0;
  return std::exp(-1.0 / w);
}

double bump_derivative(double w) {
  if (w < kBumpUnderflowThreshold) return 0.0;
  return std::exp(-1.0 / w) / (w * w);
}

namespace {

// Value and x-derivative of the product (eps - x)(2 eps - x)...(k eps - x).
struct ProductEval {
  double value = 1.0;
  double dx = 0.0;
};

ProductEval factor_product(double x, double eps, int k) {
  ProductEval p;
  for (int i = 1; i <= k; ++i) {
    const double f = i * eps - x;
    p.dx = p.dx * f - p.value;
    p.value *= f;
  }
  return p;
}

}  // namespace

double F_finite(double x, double y, double eps, int k) {
  const double hx = bump(x);
  if (hx == 0.0) return 0.0;
  const double hy = bump(-y);
  if (hy == 0.0) return 0.0;
  return -eps * hx * hy * factor_product(x, eps, k).value;
}

double F_finite_dx(double x, double y, double eps, int k) {
  const double hx = bump(x);
  if (hx == 0.0) return 0.0;
  const double hy = bump(-y);
  if (hy == 0.0) return 0.0;
  const ProductEval p = factor_product(x, eps, k);
  return -eps * hy * (bump_derivative(x) * p.value + hx * p.dx);
}

double F_finite_dy(double x, double y, double eps, int k) {
  const double hx = bump(x);
  if (hx == 0.0) return 0.0;
  const double hpy = bump_derivative(-y);
  if (hpy == 0.0) return 0.0;
  return eps * hx * hpy * factor_product(x, eps, k).value;
}

double F_infinite(double x, double y, double eps) {
  const double hx = bump(x);
  if (hx == 0.0) return 0.0;
  const double hy = bump(-y);
  if (hy == 0.0) return 0.0;
  return hx * hy * std::sin(kPi * eps * eps / x);
}

double F_infinite_dx(double x, double y, double eps) {
  const double hx = bump(x);
  if (hx == 0.0) return 0.0;
  const double hy = bump(-y);
  if (hy == 0.0) return 0.0;
  const double arg = kPi * eps * eps / x;
  return hy * (bump_derivative(x) * std::sin(arg) + hx * std::cos(arg) * (-arg / x));
}

double F_infinite_dy(double x, double y, double eps) {
  const double hx = bump(x);
  if (hx == 0.0) return 0.0;
  const double hpy = bump_derivative(-y);
  if (hpy == 0.0) return 0.0;
  return -hx * hpy * std::sin(kPi * eps * eps / x);
}

std::string to_string(const PerturbationSpec& spec) {
  if (spec.family == PerturbationSpec::Family::Finite) {
    return "finite(k=" + std::to_string(spec.k) + ", eps=" + std::to_string(spec.epsilon) + ")";
  }
  return "infinite(eps=" + std::to_string(spec.epsilon) + ")";
}

double perturbation_value(const PerturbationSpec& spec, double x, double y) {
  return spec.family == PerturbationSpec::Family::Finite
             ? F_finite(x, y, spec.epsilon, spec.k)
             : F_infinite(x, y, spec.epsilon);
}

double perturbation_dx(const PerturbationSpec& spec, double x, double y) {
  return spec.family == PerturbationSpec::Family::Finite
             ? F_finite_dx(x, y, spec.epsilon, spec.k)
             : F_infinite_dx(x, y, spec.epsilon);
}

double perturbation_dy(const PerturbationSpec& spec, double x, double y) {
  return spec.family == PerturbationSpec::Family::Finite
             ? F_finite_dy(x, y, spec.epsilon, spec.k)
             : F_infinite_dy(x, y, spec.epsilon);
}

double perturbation_along_flow(const PerturbationSpec& spec, double x, double y) {
  return perturbation_dx(spec, x, y) - perturbation_dy(spec, x, y);
}

namespace {

SmoothField upper_field() {
  SmoothField f;
  f.name = "X";
  f.eval = [](const Vec3& p) -> Vec3 {
    const double u = p.x + p.y;
    return {-1.0 - u, 1.0 - u, -p.y};
  };
  f.lie2 = [](const Vec3& p) { return -(1.0 - (p.x + p.y)); };
  f.flow = [](double t, const Vec3& p0) -> Vec3 {
    if (t == 0.0) return p0;  // the (u, w) recombination is not bit-exact
    const double u0 = p0.x + p0.y;
    const double w0 = p0.x - p0.y;
    const double e = std::exp(-2.0 * t);
    const double u = u0 * e;
    const double w = w0 - 2.0 * t;
    const double z = p0.z + (u0 / 4.0) * (e - 1.0) + (w0 / 2.0) * t - t * t / 2.0;
    return {(u + w) / 2.0, (u - w) / 2.0, z};
  };
  return f;
}

SmoothField lower_field_z0() {
  SmoothField f;
  f.name = "Y0";
  f.eval = [](const Vec3& p) -> Vec3 { return {1.0, -1.0, p.x}; };
  f.lie2 = [](const Vec3&) { return 1.0; };
  f.flow = [](double t, const Vec3& p0) -> Vec3 {
    return {p0.x + t, p0.y - t, p0.z + p0.x * t + t * t / 2.0};
  };
  return f;
}

SmoothField lower_field_eps(const PerturbationSpec& spec) {
  SmoothField f;
  f.name = "Y_eps";
  f.eval = [spec](const Vec3& p) -> Vec3 {
    return {1.0, -1.0, p.x - perturbation_along_flow(spec, p.x, p.y)};
  };
  f.flow = [spec](double t, const Vec3& p0) -> Vec3 {
    const double x = p0.x + t;
    const double y = p0.y - t;
    const double z = p0.z + p0.x * t + t * t / 2.0 -
                     (perturbation_value(spec, x, y) - perturbation_value(spec, p0.x, p0.y));
    return {x, y, z};
  };
  return f;
}

void attach_switching(PiecewiseSystem& sys) {
  sys.switching = [](const Vec3& p) { return p.z; };
  sys.switching_gradient = [](const Vec3&) -> Vec3 { return {0.0, 0.0, 1.0}; };
}

}  // namespace

PiecewiseSystem model_z0() {
  PiecewiseSystem sys;
  sys.id = "z0";
  sys.upper = upper_field();
  sys.lower = lower_field_z0();
  attach_switching(sys);
  return sys;
}

PiecewiseSystem model_z_eps(const PerturbationSpec& spec) {
  PiecewiseSystem sys;
  sys.id = spec.family == PerturbationSpec::Family::Finite ? "z-eps-finite" : "z-eps-infinite";
  sys.upper = upper_field();
  sys.lower = lower_field_eps(spec);
  attach_switching(sys);
  return sys;
}

std::vector<std::string> model_ids() { return {"z0", "z-eps-finite", "z-eps-infinite"}; }

PiecewiseSystem model_from_id(const std::string& id, const std::optional<PerturbationSpec>& spec) {
  if (id == "z0") return model_z0();
  if (id == "z-eps-finite") {
    if (!spec || spec->family != PerturbationSpec::Family::Finite) {
      throw std::invalid_argument("model_from_id: z-eps-finite needs a finite PerturbationSpec");
    }
    return model_z_eps(*spec);
  }
  if (id == "z-eps-infinite") {
    if (!spec || spec->family != PerturbationSpec::Family::Infinite) {
      throw std::invalid_argument("model_from_id: z-eps-infinite needs an infinite PerturbationSpec");
    }
    return model_z_eps(*spec);
  }
  throw std::invalid_argument("model_from_id: unknown model id '" + id + "'");
}

}  // namespace psvf
