#include "psvf/sliding.hpp"

#include <cmath>

namespace psvf {

std::string to_string(EquilibriumClass c) {
  switch (c) {
    case EquilibriumClass::SaddleNode: return "saddle-node";
    case EquilibriumClass::HyperbolicSaddle: return "saddle";
    case EquilibriumClass::Node: return "node";
    case EquilibriumClass::Focus: return "focus";
    case EquilibriumClass::Degenerate: return "degenerate";
    case EquilibriumClass::LineOfEquilibria: return "line-of-equilibria";
  }
  return "?";
}

namespace {

Vec3 normalized_sliding(const PiecewiseSystem& sys, const Vec3& q) {
  const Vec3 xv = sys.upper.eval(q);
  const Vec3 yv = sys.lower.eval(q);
  const Vec3 grad = sys.switching_gradient(q);
  const double x3 = grad.dot(xv);
  const double y3 = grad.dot(yv);
  // For f = z this is the paper's planar normalized form; written through the
  // Lie derivatives it stays tangent to Sigma for any scalar f with grad
  // along z. Built-ins always use f = z.
  return {xv.x * y3 - yv.x * x3, xv.y * y3 - yv.y * x3, 0.0};
}

}  // namespace

SlidingEval sliding_field(const PiecewiseSystem& sys, const Vec3& q, bool normalized) {
  require_finite(q, "sliding_field");
  double denom = 0.0;
  if (!normalized) {
    denom = lie_derivative(sys, Side::Lower, q, 1) - lie_derivative(sys, Side::Upper, q, 1);
    if (std::abs(denom) <= kTolDenominator) {
      throw DenominatorNearZeroError("sliding_field: Y.f - X.f vanishes");
    }
  }
  const SigmaRegion region = classify_sigma_point(sys, q);
  if (region != SigmaRegion::Sliding && region != SigmaRegion::Escaping) {
    throw OutsideSlidingSetError("sliding_field: point is not in Sigma^s u Sigma^e");
  }
  SlidingEval out;
  out.opposite_orientation = region == SigmaRegion::Escaping;
  out.value = normalized_sliding(sys, q);
  if (!normalized) out.value = out.value / denom;
  return out;
}

UVPoint uv_transform(const Vec3& p) { return {p.x + p.y, p.x - p.y, p.z}; }

Vec3 uv_inverse(const UVPoint& q) { return {(q.u + q.v) / 2, (q.u - q.v) / 2, q.z}; }

EquilibriumReport analyze_equilibrium(const PiecewiseSystem& sys, const Vec3& q) {
  require_finite(q, "analyze_equilibrium");
  const Vec3 f0 = normalized_sliding(sys, q);
  if (f0.norm() > kTolEquilibrium) {
    throw NotEquilibriumError("analyze_equilibrium: normalized sliding field does not vanish");
  }

  EquilibriumReport rep;
  rep.location = q;

  const double h = 1e-6 * std::max(1.0, q.norm());
  const Vec3 fx_p = normalized_sliding(sys, {q.x + h, q.y, q.z});
  const Vec3 fx_m = normalized_sliding(sys, {q.x - h, q.y, q.z});
  const Vec3 fy_p = normalized_sliding(sys, {q.x, q.y + h, q.z});
  const Vec3 fy_m = normalized_sliding(sys, {q.x, q.y - h, q.z});
  const double a = (fx_p.x - fx_m.x) / (2 * h);
  const double b = (fy_p.x - fy_m.x) / (2 * h);
  const double c = (fx_p.y - fx_m.y) / (2 * h);
  const double d = (fy_p.y - fy_m.y) / (2 * h);
  rep.jacobian = {{{a, b}, {c, d}}};

  // Closed-form 2x2 eigensolve via trace/determinant.
  const double tr = a + d;
  const double det = a * d - b * c;
  const double disc = tr * tr / 4 - det;
  if (disc >= 0) {
    const double root = std::sqrt(disc);
    rep.eigenvalues = {std::complex<double>(tr / 2 - root, 0), std::complex<double>(tr / 2 + root, 0)};
    for (int i = 0; i < 2; ++i) {
      const double lam = rep.eigenvalues[i].real();
      // Eigenvector of [[a,b],[c,d]] for eigenvalue lam.
      double vx, vy;
      if (std::abs(b) > std::abs(c)) {
        vx = b;
        vy = lam - a;
      } else if (std::abs(c) > 0) {
        vx = lam - d;
        vy = c;
      } else {
        vx = std::abs(a - lam) <= std::abs(d - lam) ? 1.0 : 0.0;
        vy = 1.0 - vx;
      }
      const double n = std::hypot(vx, vy);
      rep.eigenvectors[i] = {vx / n, vy / n};
    }
  } else {
    const double imag = std::sqrt(-disc);
    rep.eigenvalues = {std::complex<double>(tr / 2, -imag), std::complex<double>(tr / 2, imag)};
    rep.eigenvectors = {{{0, 0}, {0, 0}}};
  }

  const double m0 = std::abs(rep.eigenvalues[0]);
  const double m1 = std::abs(rep.eigenvalues[1]);
  const double zero_tol0 = 1e-6 * std::max(1.0, m1);
  const double zero_tol1 = 1e-6 * std::max(1.0, m0);
  const bool z0 = m0 < zero_tol0;
  const bool z1 = m1 < zero_tol1;
  if (disc < 0) {
    rep.classification = EquilibriumClass::Focus;
  } else if (z0 && z1) {
    rep.classification = EquilibriumClass::Degenerate;
  } else if (z0 || z1) {
    // One zero eigenvalue: a saddle-node, unless the field also vanishes
    // along the null direction nearby (a genuine line of equilibria).
    const auto& null_dir = rep.eigenvectors[z0 ? 0 : 1];
    const Vec3 probe{q.x + 1e-3 * null_dir[0], q.y + 1e-3 * null_dir[1], q.z};
    rep.classification = normalized_sliding(sys, probe).norm() < kTolEquilibrium
                             ? EquilibriumClass::LineOfEquilibria
                             : EquilibriumClass::SaddleNode;
  } else if (rep.eigenvalues[0].real() * rep.eigenvalues[1].real() < 0) {
    rep.classification = EquilibriumClass::HyperbolicSaddle;
  } else {
    rep.classification = EquilibriumClass::Node;
  }
  return rep;
}

}  // namespace psvf
