#include "psvf/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "psvf/sliding.hpp"

namespace psvf {

std::string to_string(ArcMode m) {
  switch (m) {
    case ArcMode::UpperFlow: return "upper";
    case ArcMode::LowerFlow: return "lower";
    case ArcMode::SlidingFlow: return "sliding";
    case ArcMode::Stationary: return "stationary";
  }
  return "?";
}

std::string to_string(EscapingPolicy p) {
  switch (p) {
    case EscapingPolicy::FollowUpper: return "upper";
    case EscapingPolicy::FollowLower: return "lower";
    case EscapingPolicy::FollowSliding: return "sliding";
  }
  return "?";
}

EscapingPolicy escaping_policy_from_string(const std::string& s) {
  if (s == "upper") return EscapingPolicy::FollowUpper;
  if (s == "lower") return EscapingPolicy::FollowLower;
  if (s == "sliding") return EscapingPolicy::FollowSliding;
  throw std::invalid_argument("unknown escaping policy '" + s + "'");
}

std::string to_string(EventKind k) {
  switch (k) {
    case EventKind::Crossing: return "crossing";
    case EventKind::SlideStart: return "slide-start";
    case EventKind::SlideExit: return "slide-exit";
    case EventKind::Tangency: return "tangency";
    case EventKind::TwoFoldStop: return "two-fold-stop";
    case EventKind::DenominatorStop: return "denominator-stop";
    case EventKind::AmbiguousStop: return "ambiguous-stop";
    case EventKind::Escape: return "escape";
    case EventKind::EventBudget: return "event-budget";
    case EventKind::StepUnderflow: return "step-underflow";
  }
  return "?";
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::ReachedTMax: return "reached-t-max";
    case Termination::Escaped: return "escaped";
    case Termination::EventBudgetExceeded: return "event-budget-exceeded";
    case Termination::StepUnderflow: return "step-underflow";
    case Termination::Ambiguous: return "ambiguous-continuation";
    case Termination::Stalled: return "stalled";
  }
  return "?";
}

void StepperConfig::validate() const {
  if (rel_tol <= 0 || abs_tol <= 0 || max_step <= 0 || init_step <= 0 || event_tol <= 0) {
    throw std::invalid_argument("StepperConfig: tolerances and steps must be positive");
  }
  if (event_tol > kTolOnSigma) {
    throw std::invalid_argument("StepperConfig: event_tol must not exceed the on-Sigma tolerance");
  }
  if (escape_radius <= 0 || max_events <= 0) {
    throw std::invalid_argument("StepperConfig: escape_radius and max_events must be positive");
  }
}

const Vec3& Trajectory::final_state() const {
  static const Vec3 zero{};
  if (arcs.empty() || arcs.back().states.empty()) return zero;
  return arcs.back().states.back();
}

long Trajectory::crossing_count() const {
  long n = 0;
  for (const auto& e : events) {
    if (e.kind == EventKind::Crossing) ++n;
  }
  return n;
}

namespace {

using FieldFn = std::function<Vec3(const Vec3&)>;

constexpr double kMinStepFactor = 1e-14;

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4) with the quartic dense-output interpolant.

struct DenseStep {
  double t0 = 0.0;
  double h = 0.0;
  Vec3 r1, r2, r3, r4, r5;

  Vec3 eval_theta(double theta) const {
    const double s = 1.0 - theta;
    return r1 + theta * (r2 + s * (r3 + theta * (r4 + s * r5)));
  }
  Vec3 at_time(double t) const { return eval_theta((t - t0) / h); }
  double t_end() const { return t0 + h; }
};

struct AttemptResult {
  double err = 0.0;  // scaled; <= 1 accepted
  Vec3 y_new;
  Vec3 k_last;
  DenseStep dense;
};

class Dopri5 {
 public:
  explicit Dopri5(FieldFn f) : f_(std::move(f)) {}

  void prime(const Vec3& y) {
    k1_ = f_(y);
  }

  AttemptResult attempt(const Vec3& y, double t, double h, double atol, double rtol) const {
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
    static constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                            d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                            d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

    const Vec3 k1 = k1_;
    const Vec3 k2 = f_(y + h * (a21 * k1));
    const Vec3 k3 = f_(y + h * (a31 * k1 + a32 * k2));
    const Vec3 k4 = f_(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const Vec3 k5 = f_(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Vec3 k6 = f_(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const Vec3 y1 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const Vec3 k7 = f_(y1);

    const Vec3 errv = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    auto scaled = [&](double e, double y0c, double y1c) {
      return e / (atol + rtol * std::max(std::abs(y0c), std::abs(y1c)));
    };
    const double ex = scaled(errv.x, y.x, y1.x);
    const double ey = scaled(errv.y, y.y, y1.y);
    const double ez = scaled(errv.z, y.z, y1.z);
    AttemptResult res;
    res.err = std::sqrt((ex * ex + ey * ey + ez * ez) / 3.0);
    res.y_new = y1;
    res.k_last = k7;

    const Vec3 ydiff = y1 - y;
    const Vec3 bspl = h * k1 - ydiff;
    res.dense.t0 = t;
    res.dense.h = h;
    res.dense.r1 = y;
    res.dense.r2 = ydiff;
    res.dense.r3 = bspl;
    res.dense.r4 = ydiff - h * k7 - bspl;
    res.dense.r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
    return res;
  }

  void accept(const Vec3& k_last) { k1_ = k_last; }

 private:
  FieldFn f_;
  Vec3 k1_;
};

// Generic adaptive driver over one smooth leg. The callback sees every
// accepted step's dense segment; returning a time inside the step truncates
// the leg there (event).
enum class LegStop { ReachedEnd, CutByCallback, Underflow };

struct LegResult {
  LegStop stop;
  double t;
  Vec3 y;
};

template <typename OnStep>
LegResult run_leg(const FieldFn& f, Vec3 y, double t, double t_end, const StepperConfig& cfg,
                  OnStep&& on_step) {
  Dopri5 stepper(f);
  stepper.prime(y);
  double h = std::min({cfg.init_step, cfg.max_step, t_end - t});
  while (t < t_end) {
    h = std::min({h, cfg.max_step, t_end - t});
    if (h < kMinStepFactor * std::max(1.0, std::abs(t))) {
      return {LegStop::Underflow, t, y};
    }
    const AttemptResult res = stepper.attempt(y, t, h, cfg.abs_tol, cfg.rel_tol);
    if (res.err <= 1.0) {
      double cut_t = -1.0;
      const bool keep_going = on_step(res.dense, cut_t);
      if (!keep_going) {
        if (cut_t >= 0.0) {
          return {LegStop::CutByCallback, cut_t, res.dense.at_time(cut_t)};
        }
        return {LegStop::CutByCallback, res.dense.t_end(), res.y_new};
      }
      stepper.accept(res.k_last);
      t = res.dense.t_end();
      y = res.y_new;
      const double grow = 0.9 * std::pow(std::max(res.err, 1e-10), -0.2);
      h *= std::clamp(grow, 0.2, 5.0);
    } else {
      h *= std::isfinite(res.err) ? std::clamp(0.9 * std::pow(res.err, -0.2), 0.1, 0.9) : 0.1;
    }
  }
  return {LegStop::ReachedEnd, t_end, y};
}

// Bisection for a scalar event function along a dense segment: g changes
// sign on [ta, tb]; refine to a bracket of width kTimeBracket, then take the
// side closest to zero and polish once with the field-derivative Newton step.
constexpr double kTimeBracket = 1e-13;

double bisect_on_dense(const DenseStep& seg, const std::function<double(const Vec3&)>& g, double ta,
                       double tb) {
  double ga = g(seg.at_time(ta));
  for (int i = 0; i < 200 && (tb - ta) > kTimeBracket * std::max(1.0, std::abs(tb)); ++i) {
    const double tm = 0.5 * (ta + tb);
    const double gm = g(seg.at_time(tm));
    if ((ga <= 0 && gm <= 0) || (ga > 0 && gm > 0)) {
      ta = tm;
      ga = gm;
    } else {
      tb = tm;
    }
  }
  return 0.5 * (ta + tb);
}

// ---------------------------------------------------------------------------
// advance(): the event-driven Filippov driver.

struct Driver {
  const PiecewiseSystem& sys;
  const StepperConfig& cfg;
  double t_max;
  Trajectory traj;
  long events_seen = 0;

  Driver(const PiecewiseSystem& s, const StepperConfig& c, double tm)
      : sys(s), cfg(c), t_max(tm) {}

  double f(const Vec3& p) const { return sys.switching(p); }
  double lie1(Side s, const Vec3& p) const {
    return sys.switching_gradient(p).dot(sys.field(s).eval(p));
  }

  TrajectoryArc& new_arc(ArcMode mode) {
    traj.arcs.push_back(TrajectoryArc{mode, {}, {}});
    return traj.arcs.back();
  }

  void sample(TrajectoryArc& arc, double t, const Vec3& p) {
    if (!arc.times.empty() && t <= arc.times.back()) {
      arc.states.back() = p;  // refine the last sample in place
      return;
    }
    arc.times.push_back(t);
    arc.states.push_back(p);
  }

  void record_event(double t, const Vec3& p, SigmaRegion region, EventKind kind, ArcMode next) {
    traj.events.push_back(TrajectoryEvent{t, p, region, kind, next});
  }

  // Projects a near-Sigma point onto Sigma (one Newton step along grad f).
  Vec3 snap_to_sigma(const Vec3& p) const {
    const Vec3 g = sys.switching_gradient(p);
    return p - g * (f(p) / g.dot(g));
  }

  // Nudges off Sigma along `side`'s field until |f| ~ 10 * event_tol with the
  // correct sign; advances time accordingly. Returns false if no strictly
  // one-sided departure could be produced (degenerate contact).
  bool depart(Side side, double& t, Vec3& p) const {
    const double want = 10.0 * cfg.event_tol;
    const double sgn = side == Side::Upper ? 1.0 : -1.0;
    const auto& field = sys.field(side);
    const double l1 = lie1(side, p);
    double tau;
    if (std::abs(l1) > 1e-6) {
      tau = want / std::abs(l1);
    } else {
      const double l2 = std::abs(lie_derivative(sys, side, p, 2));
      tau = l2 > 1e-12 ? std::sqrt(2.0 * want / l2) : 1e-6;
    }
    tau = std::clamp(tau, 1e-13, 1e-6);
    for (int i = 0; i < 60; ++i) {
      // One classical RK4 ministep.
      const Vec3 k1 = field.eval(p);
      const Vec3 k2 = field.eval(p + (tau / 2) * k1);
      const Vec3 k3 = field.eval(p + (tau / 2) * k2);
      const Vec3 k4 = field.eval(p + tau * k3);
      const Vec3 q = p + (tau / 6) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      const double fq = f(q);
      if (sgn * fq >= cfg.event_tol) {
        p = q;
        t += tau;
        return true;
      }
      if (sgn * fq < 0 && i > 20) return false;
      tau *= 2.0;
      if (t + tau > t_max) return false;
    }
    return false;
  }

  // Continuation decision at a regular tangency point.
  // Valid candidates move off Sigma into their own side.
  struct TangencyChoice {
    int n_valid;
    ArcMode mode;
  };

  TangencyChoice tangency_continuation(const Vec3& p) const {
    const double lx = lie1(Side::Upper, p);
    const double ly = lie1(Side::Lower, p);
    const bool upper_ok =
        lx > kTolTangency ||
        (std::abs(lx) <= kTolTangency && lie_derivative(sys, Side::Upper, p, 2) > kTolTangency);
    const bool lower_ok =
        ly < -kTolTangency ||
        (std::abs(ly) <= kTolTangency && lie_derivative(sys, Side::Lower, p, 2) < -kTolTangency);
    if (upper_ok && lower_ok) return {2, ArcMode::UpperFlow};
    if (upper_ok) return {1, ArcMode::UpperFlow};
    if (lower_ok) return {1, ArcMode::LowerFlow};
    return {0, ArcMode::SlidingFlow};
  }
};

}  // namespace

Trajectory advance(const PiecewiseSystem& sys, const Vec3& p0, double t_max,
                   const StepperConfig& cfg) {
  cfg.validate();
  require_finite(p0, "advance");
  if (t_max <= 0) throw std::invalid_argument("advance: t_max must be positive");

  Driver drv(sys, cfg, t_max);
  drv.traj.policy_used = cfg.escaping_policy;

  double t = 0.0;
  Vec3 p = p0;

  // Pending mode; decided from the starting point, then re-decided at events.
  ArcMode mode;
  bool terminal = false;

  auto decide_from_sigma = [&](const Vec3& q, bool arrival, EventKind kind) -> ArcMode {
    const SigmaRegion region = classify_sigma_point(sys, q);
    ArcMode next = ArcMode::Stationary;
    switch (region) {
      case SigmaRegion::CrossingPlus: next = ArcMode::UpperFlow; break;
      case SigmaRegion::CrossingMinus: next = ArcMode::LowerFlow; break;
      case SigmaRegion::Sliding: next = ArcMode::SlidingFlow; break;
      case SigmaRegion::Escaping:
        switch (cfg.escaping_policy) {
          case EscapingPolicy::FollowUpper: next = ArcMode::UpperFlow; break;
          case EscapingPolicy::FollowLower: next = ArcMode::LowerFlow; break;
          case EscapingPolicy::FollowSliding: next = ArcMode::SlidingFlow; break;
        }
        break;
      case SigmaRegion::TwoFold: next = ArcMode::Stationary; break;
      case SigmaRegion::TangencyUpper:
      case SigmaRegion::TangencyLower: {
        const auto choice = drv.tangency_continuation(q);
        if (choice.n_valid == 2) {
          drv.record_event(t, q, region, EventKind::AmbiguousStop, ArcMode::Stationary);
          drv.traj.termination = Termination::Ambiguous;
          drv.traj.truncated = true;
          terminal = true;
          return ArcMode::Stationary;
        }
        next = choice.mode;
        break;
      }
    }
    if (arrival) {
      EventKind k = kind;
      if (k == EventKind::Crossing) {
        if (next == ArcMode::SlidingFlow) k = EventKind::SlideStart;
        if (region == SigmaRegion::TwoFold) k = EventKind::TwoFoldStop;
        if (region == SigmaRegion::TangencyUpper || region == SigmaRegion::TangencyLower) {
          k = EventKind::Tangency;
        }
      }
      drv.record_event(t, q, region, k, next);
      ++drv.events_seen;
    }
    return next;
  };

  // Initial mode.
  {
    const double fz = drv.f(p);
    if (fz > kTolOnSigma) {
      mode = ArcMode::UpperFlow;
    } else if (fz < -kTolOnSigma) {
      mode = ArcMode::LowerFlow;
    } else {
      p = drv.snap_to_sigma(p);
      mode = decide_from_sigma(p, /*arrival=*/false, EventKind::Crossing);
    }
  }

  while (!terminal && t < t_max - 1e-12 * std::max(1.0, t_max)) {
    if (drv.events_seen > cfg.max_events) {
      drv.record_event(t, p, SigmaRegion::CrossingPlus, EventKind::EventBudget, mode);
      drv.traj.termination = Termination::EventBudgetExceeded;
      drv.traj.truncated = true;
      break;
    }

    if (mode == ArcMode::Stationary) {
      auto& arc = drv.new_arc(ArcMode::Stationary);
      drv.sample(arc, t, p);
      drv.sample(arc, t_max, p);
      t = t_max;
      break;
    }

    if (mode == ArcMode::SlidingFlow) {
      p = drv.snap_to_sigma(p);
      auto& arc = drv.new_arc(ArcMode::SlidingFlow);
      drv.sample(arc, t, p);

      FieldFn filippov = [&sys](const Vec3& q) -> Vec3 {
        const Vec3 xv = sys.upper.eval(q);
        const Vec3 yv = sys.lower.eval(q);
        const Vec3 grad = sys.switching_gradient(q);
        const double x3 = grad.dot(xv);
        const double y3 = grad.dot(yv);
        double denom = y3 - x3;
        if (denom == 0.0) denom = std::numeric_limits<double>::min();
        return Vec3{(xv.x * y3 - yv.x * x3) / denom, (xv.y * y3 - yv.y * x3) / denom, 0.0};
      };

      // Event scalars monitored along the sliding arc.
      auto lie_up = [&](const Vec3& q) { return drv.lie1(Side::Upper, q); };
      auto lie_lo = [&](const Vec3& q) { return drv.lie1(Side::Lower, q); };
      auto denom_margin = [&](const Vec3& q) {
        return std::abs(lie_lo(q) - lie_up(q)) - kTolDenominator;
      };

      enum class SlideEventType { None, BoundaryUpper, BoundaryLower, Denominator };
      SlideEventType hit = SlideEventType::None;

      const double s_up0 = lie_up(p) >= 0 ? 1.0 : -1.0;
      const double s_lo0 = lie_lo(p) >= 0 ? 1.0 : -1.0;

      auto on_step = [&](const DenseStep& seg, double& cut_t) -> bool {
        const Vec3 y1 = seg.at_time(seg.t_end());
        if (y1.norm() > cfg.escape_radius) {
          cut_t = seg.t_end();
          hit = SlideEventType::None;
          drv.record_event(seg.t_end(), y1, SigmaRegion::Sliding, EventKind::Escape,
                           ArcMode::SlidingFlow);
          drv.traj.termination = Termination::Escaped;
          drv.traj.truncated = true;
          terminal = true;
          return false;
        }
        constexpr int kScan = 16;
        double prev_t = seg.t0;
        for (int i = 1; i <= kScan; ++i) {
          const double ti = seg.t0 + seg.h * i / kScan;
          const Vec3 q = seg.at_time(ti);
          if (s_up0 * lie_up(q) < 0) {
            cut_t = bisect_on_dense(seg, [&](const Vec3& v) { return s_up0 * lie_up(v); }, prev_t, ti);
            hit = SlideEventType::BoundaryUpper;
            return false;
          }
          if (s_lo0 * lie_lo(q) < 0) {
            cut_t = bisect_on_dense(seg, [&](const Vec3& v) { return s_lo0 * lie_lo(v); }, prev_t, ti);
            hit = SlideEventType::BoundaryLower;
            return false;
          }
          if (denom_margin(q) < 0) {
            cut_t = bisect_on_dense(seg, denom_margin, prev_t, ti);
            hit = SlideEventType::Denominator;
            return false;
          }
          prev_t = ti;
        }
        drv.sample(arc, seg.t_end(), y1);
        return true;
      };

      const LegResult leg = run_leg(filippov, p, t, t_max, cfg, on_step);
      t = leg.t;
      p = drv.snap_to_sigma(leg.y);
      drv.sample(arc, t, p);

      if (terminal) break;
      if (leg.stop == LegStop::Underflow) {
        drv.record_event(t, p, SigmaRegion::Sliding, EventKind::StepUnderflow, mode);
        drv.traj.termination = Termination::StepUnderflow;
        drv.traj.truncated = true;
        break;
      }
      if (leg.stop == LegStop::ReachedEnd) break;

      ++drv.events_seen;
      if (hit == SlideEventType::Denominator) {
        const SigmaRegion reg = classify_sigma_point(sys, p);
        if (reg == SigmaRegion::TwoFold) {
          drv.record_event(t, p, reg, EventKind::TwoFoldStop, ArcMode::Stationary);
          mode = ArcMode::Stationary;
        } else {
          drv.record_event(t, p, reg, EventKind::DenominatorStop, ArcMode::Stationary);
          drv.traj.termination = Termination::Stalled;
          drv.traj.truncated = true;
          break;
        }
      } else {
        // Fold-boundary exit: continue per the tangency rule.
        const SigmaRegion reg = classify_sigma_point(sys, p);
        if (reg == SigmaRegion::TwoFold) {
          drv.record_event(t, p, reg, EventKind::TwoFoldStop, ArcMode::Stationary);
          mode = ArcMode::Stationary;
        } else {
          const auto choice = drv.tangency_continuation(p);
          if (choice.n_valid == 2) {
            drv.record_event(t, p, reg, EventKind::AmbiguousStop, mode);
            drv.traj.termination = Termination::Ambiguous;
            drv.traj.truncated = true;
            break;
          }
          drv.record_event(t, p, reg, EventKind::SlideExit, choice.mode);
          mode = choice.mode;
          if (mode == ArcMode::UpperFlow || mode == ArcMode::LowerFlow) {
            const Side side = mode == ArcMode::UpperFlow ? Side::Upper : Side::Lower;
            if (!drv.depart(side, t, p)) {
              drv.traj.termination = Termination::Stalled;
              drv.traj.truncated = true;
              break;
            }
          }
        }
      }
      continue;
    }

    // Smooth arc (upper or lower).
    const Side side = mode == ArcMode::UpperFlow ? Side::Upper : Side::Lower;
    const double side_sign = side == Side::Upper ? 1.0 : -1.0;

    if (std::abs(drv.f(p)) <= kTolOnSigma) {
      if (!drv.depart(side, t, p)) {
        drv.record_event(t, p, classify_sigma_point(sys, drv.snap_to_sigma(p)),
                         EventKind::AmbiguousStop, mode);
        drv.traj.termination = Termination::Stalled;
        drv.traj.truncated = true;
        break;
      }
    }

    auto& arc = drv.new_arc(mode);
    drv.sample(arc, t, p);

    const auto& field = sys.field(side);
    FieldFn fn = field.eval;

    bool got_graze = false;

    auto on_step = [&](const DenseStep& seg, double& cut_t) -> bool {
      const Vec3 y1 = seg.at_time(seg.t_end());
      if (y1.norm() > cfg.escape_radius) {
        cut_t = seg.t_end();
        drv.record_event(seg.t_end(), y1, SigmaRegion::CrossingPlus, EventKind::Escape, mode);
        drv.traj.termination = Termination::Escaped;
        drv.traj.truncated = true;
        terminal = true;
        return false;
      }
      // Scan f along the segment; side_sign * f should stay positive.
      constexpr int kScan = 16;
      auto g = [&](const Vec3& q) { return side_sign * drv.f(q); };
      double prev_t = seg.t0;
      double prev_g = g(seg.at_time(seg.t0));
      for (int i = 1; i <= kScan; ++i) {
        const double ti = seg.t0 + seg.h * i / kScan;
        const double gi = g(seg.at_time(ti));
        if (prev_g > 0 && gi <= 0) {
          cut_t = bisect_on_dense(seg, g, prev_t, ti);
          return false;
        }
        // Interior extremum dipping to (or through) Sigma between samples:
        // detected via a sign change of df/dt.
        if (i >= 2 && prev_g > 0 && gi > 0) {
          auto gdot = [&](const Vec3& q) {
            return side_sign * sys.switching_gradient(q).dot(fn(q));
          };
          if (gdot(seg.at_time(prev_t)) < 0 && gdot(seg.at_time(ti)) >= 0) {
            const double te = bisect_on_dense(seg, gdot, prev_t, ti);
            const double ge = g(seg.at_time(te));
            if (ge <= 0) {
              cut_t = bisect_on_dense(seg, g, prev_t, te);
              return false;
            }
            if (ge <= cfg.event_tol) {
              cut_t = te;
              got_graze = true;
              return false;
            }
          }
        }
        prev_t = ti;
        prev_g = gi;
      }
      drv.sample(arc, seg.t_end(), y1);
      return true;
    };

    const LegResult leg = run_leg(fn, p, t, t_max, cfg, on_step);
    t = leg.t;
    p = leg.y;

    if (terminal) {
      drv.sample(arc, t, p);
      break;
    }
    if (leg.stop == LegStop::Underflow) {
      drv.sample(arc, t, p);
      drv.record_event(t, p, SigmaRegion::CrossingPlus, EventKind::StepUnderflow, mode);
      drv.traj.termination = Termination::StepUnderflow;
      drv.traj.truncated = true;
      break;
    }
    if (leg.stop == LegStop::ReachedEnd) {
      drv.sample(arc, t, p);
      break;
    }

    // Refined Sigma hit. One Newton polish with the field derivative, then
    // snap onto Sigma.
    {
      const Vec3 g = sys.switching_gradient(p);
      const double fdot = g.dot(fn(p));
      if (std::abs(fdot) > 1e-12) {
        const double dt_fix = -drv.f(p) / fdot;
        if (std::abs(dt_fix) < 1e-8) {
          t += dt_fix;
          p = p + fn(p) * dt_fix;
        }
      }
      p = drv.snap_to_sigma(p);
    }
    drv.sample(arc, t, p);

    mode = decide_from_sigma(p, /*arrival=*/true,
                             got_graze ? EventKind::Tangency : EventKind::Crossing);
    if (terminal) break;
    if (mode == ArcMode::UpperFlow || mode == ArcMode::LowerFlow) {
      const Side next_side = mode == ArcMode::UpperFlow ? Side::Upper : Side::Lower;
      if (!drv.depart(next_side, t, p)) {
        drv.traj.termination = Termination::Stalled;
        drv.traj.truncated = true;
        break;
      }
    }
  }

  drv.traj.t_end = t;
  return drv.traj;
}

Vec3 flow_smooth(const SmoothField& field, const Vec3& p0, double t, const StepperConfig& cfg) {
  cfg.validate();
  require_finite(p0, "flow_smooth");
  if (t == 0.0) return p0;
  // Negative times integrate the reversed field.
  FieldFn fn = t > 0 ? FieldFn(field.eval) : FieldFn([&field](const Vec3& q) { return -field.eval(q); });
  const double span = std::abs(t);
  Vec3 y = p0;
  const LegResult leg =
      run_leg(fn, y, 0.0, span, cfg, [](const DenseStep&, double&) { return true; });
  if (leg.stop != LegStop::ReachedEnd) {
    throw std::runtime_error("flow_smooth: step size underflow");
  }
  return leg.y;
}

std::vector<Vec3> flow_smooth_times(const SmoothField& field, const Vec3& p0,
                                    std::span<const double> times, const StepperConfig& cfg) {
  cfg.validate();
  require_finite(p0, "flow_smooth_times");
  std::vector<Vec3> out(times.size());
  if (times.empty()) return out;
  const double t_final = times.back();
  std::size_t next = 0;
  while (next < times.size() && times[next] == 0.0) out[next++] = p0;
  if (next == times.size()) return out;

  auto on_step = [&](const DenseStep& seg, double&) -> bool {
    while (next < times.size() && times[next] <= seg.t_end() + 1e-300) {
      out[next] = seg.at_time(times[next]);
      ++next;
    }
    return true;
  };
  const LegResult leg = run_leg(field.eval, p0, 0.0, t_final, cfg, on_step);
  if (leg.stop != LegStop::ReachedEnd) {
    throw std::runtime_error("flow_smooth_times: step size underflow");
  }
  while (next < times.size()) out[next++] = leg.y;
  return out;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << "t,x,y,z,mode,event_flag\n";
  char buf[160];
  for (const auto& arc : traj.arcs) {
    for (std::size_t i = 0; i < arc.times.size(); ++i) {
      const bool boundary = i == 0 || i + 1 == arc.times.size();
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%s,%d\n", arc.times[i],
                    arc.states[i].x, arc.states[i].y, arc.states[i].z,
                    to_string(arc.mode).c_str(), boundary ? 1 : 0);
      os << buf;
    }
  }
}

}  // namespace psvf
