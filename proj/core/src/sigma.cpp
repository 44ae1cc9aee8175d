#include "psvf/sigma.hpp"

#include <cmath>
#include <ostream>

namespace psvf {

std::ostream& operator<<(std::ostream& os, const Vec3& v) {
  return os << "(" << v.x << ", " << v.y << ", " << v.z << ")";
}

std::string to_string(SigmaRegion r) {
  switch (r) {
    case SigmaRegion::CrossingPlus: return "crossing+";
    case SigmaRegion::CrossingMinus: return "crossing-";
    case SigmaRegion::Sliding: return "sliding";
    case SigmaRegion::Escaping: return "escaping";
    case SigmaRegion::TangencyUpper: return "tangency-upper";
    case SigmaRegion::TangencyLower: return "tangency-lower";
    case SigmaRegion::TwoFold: return "two-fold";
  }
  return "?";
}

std::string to_string(TangencyKind k) {
  switch (k) {
    case TangencyKind::NotTangent: return "not-tangent";
    case TangencyKind::VisibleFold: return "visible-fold";
    case TangencyKind::InvisibleFold: return "invisible-fold";
    case TangencyKind::DegenerateTangency: return "degenerate-tangency";
  }
  return "?";
}

namespace {

void require_regular(const PiecewiseSystem& sys, const Vec3& p) {
  if (std::abs(sys.switching(p)) <= kTolOnSigma && sys.switching_gradient(p).norm() == 0.0) {
    throw NonRegularSwitchingError("switching gradient vanishes on Sigma");
  }
}

double first_lie(const PiecewiseSystem& sys, Side side, const Vec3& p) {
  return sys.switching_gradient(p).dot(sys.field(side).eval(p));
}

double second_lie(const PiecewiseSystem& sys, Side side, const Vec3& p) {
  const SmoothField& field = sys.field(side);
  if (field.lie2) return field.lie2(p);
  // Central differences of the order-1 scalar along the field direction.
  const double h = 1e-5 * std::max(1.0, p.norm());
  const Vec3 v = field.eval(p);
  Vec3 grad;
  grad.x = (first_lie(sys, side, {p.x + h, p.y, p.z}) - first_lie(sys, side, {p.x - h, p.y, p.z})) / (2 * h);
  grad.y = (first_lie(sys, side, {p.x, p.y + h, p.z}) - first_lie(sys, side, {p.x, p.y - h, p.z})) / (2 * h);
  grad.z = (first_lie(sys, side, {p.x, p.y, p.z + h}) - first_lie(sys, side, {p.x, p.y, p.z - h})) / (2 * h);
  return grad.dot(v);
}

void require_on_sigma(const PiecewiseSystem& sys, const Vec3& p, const char* where) {
  if (std::abs(sys.switching(p)) > kTolOnSigma) {
    throw NotOnSigmaError(std::string(where) + ": |f(p)| exceeds on-Sigma tolerance");
  }
  require_regular(sys, p);
}

// Orthonormal basis of the tangent plane of Sigma at p.
std::array<Vec3, 2> tangent_basis(const PiecewiseSystem& sys, const Vec3& p) {
  Vec3 n = sys.switching_gradient(p);
  n = n / n.norm();
  Vec3 a = std::abs(n.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  Vec3 t1 = a - n * a.dot(n);
  t1 = t1 / t1.norm();
  Vec3 t2{n.y * t1.z - n.z * t1.y, n.z * t1.x - n.x * t1.z, n.x * t1.y - n.y * t1.x};
  return {t1, t2};
}

}  // namespace

double lie_derivative(const PiecewiseSystem& sys, Side side, const Vec3& p, int order) {
  require_finite(p, "lie_derivative");
  require_regular(sys, p);
  if (order == 1) return first_lie(sys, side, p);
  if (order == 2) return second_lie(sys, side, p);
  throw std::invalid_argument("lie_derivative: order must be 1 or 2");
}

SigmaRegion classify_sigma_point(const PiecewiseSystem& sys, const Vec3& p) {
  require_finite(p, "classify_sigma_point");
  require_on_sigma(sys, p, "classify_sigma_point");
  const double lx = first_lie(sys, Side::Upper, p);
  const double ly = first_lie(sys, Side::Lower, p);
  const bool tx = std::abs(lx) <= kTolTangency;
  const bool ty = std::abs(ly) <= kTolTangency;
  if (tx && ty) return SigmaRegion::TwoFold;
  if (tx) return SigmaRegion::TangencyUpper;
  if (ty) return SigmaRegion::TangencyLower;
  if (lx > 0 && ly > 0) return SigmaRegion::CrossingPlus;
  if (lx < 0 && ly < 0) return SigmaRegion::CrossingMinus;
  if (lx < 0 && ly > 0) return SigmaRegion::Sliding;
  return SigmaRegion::Escaping;
}

SigmaPoint sigma_point(const PiecewiseSystem& sys, const Vec3& p) {
  return {p, classify_sigma_point(sys, p)};
}

FoldReport fold_report(const PiecewiseSystem& sys, Side side, const Vec3& p) {
  require_finite(p, "fold_report");
  require_on_sigma(sys, p, "fold_report");
  FoldReport rep;
  rep.side = side;
  rep.first_lie = first_lie(sys, side, p);
  rep.second_lie = second_lie(sys, side, p);
  if (std::abs(rep.first_lie) > kTolTangency) {
    rep.kind = TangencyKind::NotTangent;
  } else if (std::abs(rep.second_lie) <= kTolTangency) {
    rep.kind = TangencyKind::DegenerateTangency;
  } else {
    // Invisible: the tangent arc leaves the side this field governs.
    const bool invisible = side == Side::Upper ? rep.second_lie < 0 : rep.second_lie > 0;
    rep.kind = invisible ? TangencyKind::InvisibleFold : TangencyKind::VisibleFold;
  }
  return rep;
}

TwoFoldCertificate detect_t_singularity(const PiecewiseSystem& sys, const Vec3& p) {
  require_finite(p, "detect_t_singularity");
  require_on_sigma(sys, p, "detect_t_singularity");
  const FoldReport up = fold_report(sys, Side::Upper, p);
  const FoldReport lo = fold_report(sys, Side::Lower, p);
  if (std::abs(up.first_lie) > kTolTangency || std::abs(lo.first_lie) > kTolTangency) {
    throw NotTwoFoldError("detect_t_singularity: a first Lie derivative is nonzero");
  }

  // In-plane gradients of X.f and Y.f span the tangency-curve normals; their
  // independence is the transversality of S_X and S_Y.
  const auto basis = tangent_basis(sys, p);
  const double h = 1e-6 * std::max(1.0, p.norm());
  TwoFoldCertificate cert{};
  for (int side_idx = 0; side_idx < 2; ++side_idx) {
    const Side side = side_idx == 0 ? Side::Upper : Side::Lower;
    std::array<double, 2> g{};
    for (int i = 0; i < 2; ++i) {
      const Vec3 dp = basis[i] * h;
      g[i] = (first_lie(sys, side, p + dp) - first_lie(sys, side, p - dp)) / (2 * h);
    }
    (side == Side::Upper ? cert.tangent_dir_upper : cert.tangent_dir_lower) = g;
  }
  cert.determinant = cert.tangent_dir_upper[0] * cert.tangent_dir_lower[1] -
                     cert.tangent_dir_upper[1] * cert.tangent_dir_lower[0];
  cert.is_t_singularity = up.kind == TangencyKind::InvisibleFold &&
                          lo.kind == TangencyKind::InvisibleFold &&
                          std::abs(cert.determinant) > kTolTransversal;
  return cert;
}

}  // namespace psvf
