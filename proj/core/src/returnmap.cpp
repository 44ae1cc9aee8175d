#include "psvf/returnmap.hpp"

#include <cmath>
#include <stdexcept>

namespace psvf {

std::string to_string(Stability s) {
  switch (s) {
    case Stability::Attractor: return "attractor";
    case Stability::Repeller: return "repeller";
    case Stability::NonHyperbolic: return "non-hyperbolic";
  }
  return "?";
}

namespace {

constexpr double kSqrtHalf = 0.70710678118654752440;

double upper_arrival_g(double t, double A, double B) {
  return -t * t / 2 + A * std::exp(-2 * t) + B * t - A;
}

double upper_arrival_gdot(double t, double A, double B) {
  return -t - 2 * A * std::exp(-2 * t) + B;
}

// Scans for the first sign change of g starting at from (sign taken there),
// stepping by `step` (signed), then bisects and Newton-polishes.
template <typename G, typename Gdot>
FlyTimeResult solve_fly_time(G g, Gdot gdot, double from, double step, double scan_max) {
  FlyTimeResult res;
  double t_prev = from;
  double g_prev = g(t_prev);
  while (g_prev == 0.0 && std::abs(t_prev) < scan_max) {
    t_prev += step;  // the trivial on-Sigma root is not an arrival
    g_prev = g(t_prev);
  }
  double t = t_prev;
  bool bracketed = false;
  while (std::abs(t) < scan_max) {
    t += step;
    const double gt = g(t);
    if (g_prev * gt <= 0.0) {
      bracketed = true;
      break;
    }
    t_prev = t;
    g_prev = gt;
  }
  if (!bracketed) {
    throw NoReturnError("fly time: no Sigma return before the scan horizon");
  }
  double lo = std::min(t_prev, t);
  double hi = std::max(t_prev, t);
  res.bracket_lo = lo;
  res.bracket_hi = hi;
  double glo = g(lo);
  int it = 0;
  while (hi - lo > 1e-13 && it < 200) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if ((glo <= 0) == (gm <= 0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
    ++it;
  }
  double root = 0.5 * (lo + hi);
  const double d = gdot(root);
  if (std::abs(d) > 1e-300) {
    const double corrected = root - g(root) / d;
    if (corrected > lo - (hi - lo) && corrected < hi + (hi - lo)) root = corrected;
  }
  res.t = root;
  res.residual = std::abs(g(root));
  res.iterations = it;
  return res;
}

bool unperturbed(const std::optional<PerturbationSpec>& spec) {
  return !spec.has_value() || spec->epsilon == 0.0;
}

// z-component of the perturbed lower flow from (x0, y0, 0).
double lower_arrival_g(double t, double x0, double y0, const PerturbationSpec& spec) {
  const double f0 = perturbation_value(spec, x0, y0);
  return t * t / 2 + x0 * t - (perturbation_value(spec, x0 + t, y0 - t) - f0);
}

double lower_arrival_gdot(double t, double x0, double y0, const PerturbationSpec& spec) {
  return t + x0 - perturbation_along_flow(spec, x0 + t, y0 - t);
}

}  // namespace

FlyTimeResult x_fly_time(const Vec3& p) {
  require_finite(p, "x_fly_time");
  if (-p.y <= kTolTangency) {
    throw NoReturnError("x_fly_time: point is not in Sigma^{c+} (X.f <= 0)");
  }
  const double A = (p.x + p.y) / 4;
  const double B = (p.x - p.y) / 2;
  return solve_fly_time([&](double t) { return upper_arrival_g(t, A, B); },
                        [&](double t) { return upper_arrival_gdot(t, A, B); }, kTExclusion,
                        kFlyScanStep, kFlyScanMax);
}

Vec3 half_return_x(const Vec3& p) {
  require_finite(p, "half_return_x");
  const double x3 = -p.y;  // X.f for the built-in upper field
  if (std::abs(x3) <= kTolTangency) return {p.x, p.y, 0.0};  // on S_X

  const double A = (p.x + p.y) / 4;
  const double B = (p.x - p.y) / 2;
  const double step = x3 > 0 ? kFlyScanStep : -kFlyScanStep;
  const FlyTimeResult fly =
      solve_fly_time([&](double t) { return upper_arrival_g(t, A, B); },
                     [&](double t) { return upper_arrival_gdot(t, A, B); },
                     x3 > 0 ? kTExclusion : -kTExclusion, step, kFlyScanMax);
  const double u1 = (p.x + p.y) * std::exp(-2 * fly.t);
  const double w1 = (p.x - p.y) - 2 * fly.t;
  return {(u1 + w1) / 2, (u1 - w1) / 2, 0.0};
}

Vec3 half_return_y(const Vec3& p, const std::optional<PerturbationSpec>& spec) {
  require_finite(p, "half_return_y");
  if (unperturbed(spec)) {
    return {-p.x, p.y + 2 * p.x, 0.0};  // exact involution, t1 = -2 x0
  }
  if (std::abs(p.x) <= kTolTangency) return {p.x, p.y, 0.0};  // on S_Y

  const PerturbationSpec& s = *spec;
  const bool forward = p.x < 0;  // positive fly time on Sigma^{c-}
  const double target = -2 * p.x;
  // Fine enough scan to not skip the root near the unperturbed fly time.
  const double step_mag = std::max(std::min(kFlyScanStep, std::abs(target) / 8), 1e-6);
  const FlyTimeResult fly = solve_fly_time(
      [&](double t) { return lower_arrival_g(t, p.x, p.y, s); },
      [&](double t) { return lower_arrival_gdot(t, p.x, p.y, s); },
      forward ? kTExclusion : -kTExclusion, forward ? step_mag : -step_mag, kFlyScanMax);
  return {p.x + fly.t, p.y - fly.t, 0.0};
}

Vec3 first_return(const Vec3& p, const std::optional<PerturbationSpec>& spec) {
  require_finite(p, "first_return");
  if (-p.y <= kTolTangency) {
    throw NoReturnError("first_return: point is not in the phi_X forward domain");
  }
  const Vec3 mid = half_return_x(p);
  if (mid.x > kTolTangency) {
    throw NoReturnError("first_return: phi_X image left the phi_Y domain (sliding side)");
  }
  return half_return_y(mid, spec);
}

IterateResult iterate_return(const Vec3& p, int n, const std::optional<PerturbationSpec>& spec) {
  require_finite(p, "iterate_return");
  IterateResult out;
  auto push = [&out](const Vec3& q) {
    out.points.push_back(q);
    out.dist_r0.push_back(kSqrtHalf * std::abs(q.x + q.y));
  };
  push(p);
  Vec3 q = p;
  for (int i = 1; i <= n; ++i) {
    try {
      q = first_return(q, spec);
    } catch (const NoReturnError& err) {
      out.completed = false;
      out.exit_index = i;
      out.exit_reason = err.what();
      return out;
    }
    push(q);
  }
  return out;
}

ReturnLinearization linearized_return(double x0, const std::optional<PerturbationSpec>& spec) {
  if (x0 <= 0) throw std::invalid_argument("linearized_return: x0 must be positive");
  const double d = 1e-6 * std::max(1.0, x0);
  const Vec3 base{x0, -x0, 0.0};

  ReturnLinearization lin;
  for (int c = 0; c < 2; ++c) {
    Vec3 dp{c == 0 ? d : 0.0, c == 1 ? d : 0.0, 0.0};
    const Vec3 fp = first_return(base + dp, spec);
    const Vec3 fm = first_return(base - dp, spec);
    lin.jacobian[0][c] = (fp.x - fm.x) / (2 * d);
    lin.jacobian[1][c] = (fp.y - fm.y) / (2 * d);
  }

  const double a = lin.jacobian[0][0], b = lin.jacobian[0][1];
  const double c = lin.jacobian[1][0], dd = lin.jacobian[1][1];
  const double tr = a + dd;
  const double det = a * dd - b * c;
  const double disc = std::max(tr * tr / 4 - det, 0.0);
  const double root = std::sqrt(disc);
  lin.eigenvalues = {tr / 2 + root, tr / 2 - root};
  for (int i = 0; i < 2; ++i) {
    const double lam = lin.eigenvalues[i];
    double vx, vy;
    if (std::abs(b) > std::abs(c)) {
      vx = b;
      vy = lam - a;
    } else if (c != 0.0) {
      vx = lam - dd;
      vy = c;
    } else {
      vx = std::abs(a - lam) <= std::abs(dd - lam) ? 1.0 : 0.0;
      vy = 1.0 - vx;
    }
    const double nrm = std::hypot(vx, vy);
    lin.eigenvectors[i] = {vx / nrm, vy / nrm};
  }
  return lin;
}

double restricted_displacement(double x0, const std::optional<PerturbationSpec>& spec) {
  if (x0 <= 0) throw std::invalid_argument("restricted_displacement: x0 must be positive");
  if (unperturbed(spec)) return 0.0;  // the unperturbed restriction is a center
  const PerturbationSpec& sp = *spec;
  // phi_X on pi0 is exact: (x0,-x0) -> (-x0,x0). The lower fly time solves
  // t^2/2 - x0 t - G(t - x0) = 0 with G(s) = F(s, -s); writing s = t - x0
  // gives s^2 = x0^2 + 2 G(s), and the rearrangement
  //   s - x0 = 2 G(s) / (s + x0)
  // evaluates the displacement to full relative precision.
  auto G = [&sp](double s) { return perturbation_value(sp, s, -s); };
  double s = x0;
  double disp = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double next = 2 * G(s) / (s + x0);
    if (next == disp) break;
    disp = next;
    s = x0 + disp;
  }
  return disp;
}

double restricted_multiplier(double x0, const std::optional<PerturbationSpec>& spec) {
  const double d = 1e-6 * std::max(1.0, x0);
  const double dp = restricted_displacement(x0 + d, spec);
  const double dm = restricted_displacement(x0 - d, spec);
  return 1.0 + (dp - dm) / (2 * d);
}

std::vector<LimitCycle> find_cycles(const PerturbationSpec& spec, double a, double b, int grid_n) {
  if (!(0 < a && a < b)) throw std::invalid_argument("find_cycles: need 0 < a < b");
  if (grid_n < 2) throw std::invalid_argument("find_cycles: grid_n must be at least 2");

  std::optional<PerturbationSpec> sp = spec;
  auto D = [&sp](double x) { return restricted_displacement(x, sp); };

  std::vector<double> roots;
  double x_prev = a;
  double d_prev = D(x_prev);
  for (int i = 1; i < grid_n; ++i) {
    double xi = a + (b - a) * i / (grid_n - 1);
    double di = D(xi);
    if (di == 0.0 && i < grid_n - 1) {
      xi += (b - a) * 1e-12;  // nudge off an exact grid hit
      di = D(xi);
    }
    if (d_prev != 0.0 && di != 0.0 && (d_prev < 0) != (di < 0)) {
      double lo = x_prev, hi = xi, dlo = d_prev;
      while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        const double dm = D(mid);
        if (dm == 0.0) {
          lo = hi = mid;
          break;
        }
        if ((dlo < 0) == (dm < 0)) {
          lo = mid;
          dlo = dm;
        } else {
          hi = mid;
        }
      }
      roots.push_back(0.5 * (lo + hi));
    }
    x_prev = xi;
    d_prev = di;
  }

  std::vector<LimitCycle> cycles;
  for (double r : roots) {
    if (!cycles.empty() && std::abs(r - cycles.back().x0) < kCycleDedupRadius) continue;
    LimitCycle c;
    c.x0 = r;
    c.period = 4 * r;
    c.multiplier = restricted_multiplier(r, sp);
    if (c.multiplier > 1.0) {
      c.stability = Stability::Repeller;
    } else if (c.multiplier < 1.0) {
      c.stability = Stability::Attractor;
    } else {
      c.stability = Stability::NonHyperbolic;
    }
    if (spec.family == PerturbationSpec::Family::Finite && spec.epsilon != 0.0) {
      const int j = static_cast<int>(std::lround(r / spec.epsilon));
      if (j >= 1 && j <= spec.k && std::abs(r - j * spec.epsilon) < 1e-6) c.j = j;
    } else if (spec.family == PerturbationSpec::Family::Infinite && spec.epsilon != 0.0) {
      const double e2 = spec.epsilon * spec.epsilon;
      const int j = static_cast<int>(std::lround(e2 / r));
      if (j >= 1 && std::abs(r - e2 / j) < 1e-6) c.j = j;
    }
    cycles.push_back(c);
  }
  return cycles;
}

std::vector<double> profile_roots(const PerturbationSpec& spec, double a, double b, int grid_n) {
  if (!(0 < a && a < b)) throw std::invalid_argument("profile_roots: need 0 < a < b");
  auto G = [&spec](double x) { return perturbation_value(spec, x, -x); };
  std::vector<double> roots;
  double x_prev = a;
  double g_prev = G(x_prev);
  for (int i = 1; i < grid_n; ++i) {
    double xi = a + (b - a) * i / (grid_n - 1);
    double gi = G(xi);
    if (gi == 0.0 && i < grid_n - 1) {
      xi += (b - a) * 1e-12;
      gi = G(xi);
    }
    if (g_prev != 0.0 && gi != 0.0 && (g_prev < 0) != (gi < 0)) {
      double lo = x_prev, hi = xi, glo = g_prev;
      while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        const double gm = G(mid);
        if (gm == 0.0) {
          lo = hi = mid;
          break;
        }
        if ((glo < 0) == (gm < 0)) {
          lo = mid;
          glo = gm;
        } else {
          hi = mid;
        }
      }
      const double r = 0.5 * (lo + hi);
      if (roots.empty() || std::abs(r - roots.back()) > kCycleDedupRadius) roots.push_back(r);
    }
    x_prev = xi;
    g_prev = gi;
  }
  return roots;
}

}  // namespace psvf
