#include "psvf/fate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace psvf {

std::string to_string(PartitionCell c) {
  switch (c) {
    case PartitionCell::Origin: return "origin";
    case PartitionCell::R0Plus: return "r0+";
    case PartitionCell::R0Minus: return "r0-";
    case PartitionCell::SigmaS: return "sigma-s";
    case PartitionCell::SigmaE: return "sigma-e";
    case PartitionCell::SigmaCPlusS: return "sigma-c+s";
    case PartitionCell::SigmaCPlusE: return "sigma-c+e";
    case PartitionCell::SigmaCMinusS: return "sigma-c-s";
    case PartitionCell::SigmaCMinusE: return "sigma-c-e";
    case PartitionCell::SXPlus: return "SX+";
    case PartitionCell::SXMinus: return "SX-";
    case PartitionCell::SYPlus: return "SY+";
    case PartitionCell::SYMinus: return "SY-";
  }
  return "?";
}

std::string to_string(Fate f) {
  switch (f) {
    case Fate::Stationary: return "stationary";
    case Fate::Periodic: return "periodic";
    case Fate::ToOrigin: return "to-origin";
    case Fate::ToCycle: return "to-cycle";
    case Fate::Escapes: return "escapes";
    case Fate::Unresolved: return "unresolved";
  }
  return "?";
}

PartitionCell classify_partition_cell(const Vec3& p, double boundary_tol) {
  const double x = p.x, y = p.y, u = p.x + p.y;
  const bool x0 = std::abs(x) <= boundary_tol;
  const bool y0 = std::abs(y) <= boundary_tol;
  const bool u0 = std::abs(u) <= boundary_tol;
  if (x0 && y0) return PartitionCell::Origin;
  if (u0) return x > 0 ? PartitionCell::R0Plus : PartitionCell::R0Minus;
  if (y0) return x > 0 ? PartitionCell::SXPlus : PartitionCell::SXMinus;
  if (x0) return y > 0 ? PartitionCell::SYPlus : PartitionCell::SYMinus;
  if (x > 0 && y > 0) return PartitionCell::SigmaS;
  if (x < 0 && y < 0) return PartitionCell::SigmaE;
  if (x > 0) return u > 0 ? PartitionCell::SigmaCPlusS : PartitionCell::SigmaCPlusE;
  return u > 0 ? PartitionCell::SigmaCMinusS : PartitionCell::SigmaCMinusE;
}

Fate predicted_fate_z0(PartitionCell cell) {
  switch (cell) {
    case PartitionCell::Origin:
      return Fate::Stationary;
    case PartitionCell::R0Plus:
    case PartitionCell::R0Minus:
      return Fate::Periodic;
    case PartitionCell::SigmaS:
    case PartitionCell::SXPlus:
    case PartitionCell::SYPlus:
    case PartitionCell::SigmaCPlusS:
    case PartitionCell::SigmaCMinusS:
      return Fate::ToOrigin;
    case PartitionCell::SigmaE:
    case PartitionCell::SigmaCPlusE:
    case PartitionCell::SigmaCMinusE:
    case PartitionCell::SXMinus:
    case PartitionCell::SYMinus:
      return Fate::Periodic;
  }
  return Fate::Unresolved;
}

namespace {

// Earliest time from which the trajectory stays inside the origin ball
// through its end; +inf when it never settles.
double settled_since(const Trajectory& traj, double ball) {
  double since = std::numeric_limits<double>::infinity();
  bool inside = false;
  for (const auto& arc : traj.arcs) {
    for (std::size_t i = 0; i < arc.states.size(); ++i) {
      if (arc.states[i].norm() < ball) {
        if (!inside) {
          inside = true;
          since = arc.times[i];
        }
      } else {
        inside = false;
      }
    }
  }
  return inside ? since : std::numeric_limits<double>::infinity();
}

std::vector<Vec3> upward_crossings(const Trajectory& traj) {
  std::vector<Vec3> pts;
  for (const auto& e : traj.events) {
    if (e.kind == EventKind::Crossing && e.region == SigmaRegion::CrossingPlus) {
      pts.push_back(e.p);
    }
  }
  return pts;
}

}  // namespace

FateObservation observe_fate(const PiecewiseSystem& sys, const Vec3& p0,
                             const std::optional<PerturbationSpec>& spec, const FateOptions& opt,
                             const StepperConfig& cfg, const std::vector<LimitCycle>& known_cycles) {
  FateObservation obs;
  const Trajectory traj = advance(sys, p0, opt.t_max, cfg);

  // Capture by Sigma^s is informative for the convergence analysis.
  long crossings_before_slide = -1;
  long crossing_counter = 0;
  for (const auto& e : traj.events) {
    if (e.kind == EventKind::Crossing) ++crossing_counter;
    if ((e.kind == EventKind::SlideStart || e.kind == EventKind::Tangency) &&
        e.continued_as == ArcMode::SlidingFlow && crossings_before_slide < 0) {
      crossings_before_slide = crossing_counter;
    }
  }
  obs.sigma_s_entry_crossing = static_cast<int>(crossings_before_slide);

  if (traj.termination == Termination::Escaped) {
    obs.fate = Fate::Escapes;
    obs.resolve_time = traj.t_end;
    obs.method = "threshold";
    return obs;
  }

  if (!traj.arcs.empty() && traj.arcs.front().mode == ArcMode::Stationary) {
    obs.fate = Fate::Stationary;
    obs.method = "threshold";
    return obs;
  }

  const double since = settled_since(traj, opt.origin_ball);
  if (traj.t_end - since >= opt.sustain_time) {
    obs.fate = Fate::ToOrigin;
    obs.resolve_time = since;
    obs.method = "threshold";
    return obs;
  }

  const std::vector<Vec3> crossings = upward_crossings(traj);
  if (crossings.size() >= 3) {
    const Vec3& q1 = crossings[crossings.size() - 2];
    const Vec3& q2 = crossings.back();
    if ((q2 - q1).norm() < opt.iterate_fix) {
      for (const auto& c : known_cycles) {
        if (std::abs(q2.x - c.x0) < opt.cycle_lock && std::abs(q2.x + q2.y) < opt.cycle_lock) {
          obs.fate = Fate::ToCycle;
          obs.cycle_x0 = c.x0;
          obs.resolve_time = traj.t_end;
          obs.method = "iterates";
          return obs;
        }
      }
      // A genuine fixed point, not a slow drift: require the restricted
      // displacement to vanish when a perturbation is active.
      const bool genuine =
          !spec || spec->epsilon == 0.0 || q2.x <= 0.0 ||
          std::abs(restricted_displacement(q2.x, spec)) <= 1e-12 * std::max(1.0, q2.x);
      if (genuine) {
        obs.fate = Fate::Periodic;
        obs.resolve_time = traj.t_end;
        obs.method = "iterates";
        return obs;
      }
    }
  }

  // Monotone-decay certificate on the restricted map: if the last iterates
  // drift down and the displacement is nonpositive with no root below them,
  // the omega-limit is the origin (the orbit has nothing else to stop at).
  if (spec && spec->epsilon != 0.0 && !crossings.empty()) {
    const double x_now = crossings.back().x;
    if (x_now > 0) {
      const double d_now = restricted_displacement(x_now, spec);
      if (d_now < 0) {
        // Drifting inward. Nearest fixed point below, if any, is the limit.
        const LimitCycle* below = nullptr;
        for (const auto& c : known_cycles) {
          if (c.x0 < x_now && (!below || c.x0 > below->x0)) below = &c;
        }
        if (below) {
          if (below->stability == Stability::Attractor) {
            obs.fate = Fate::ToCycle;
            obs.cycle_x0 = below->x0;
            obs.resolve_time = traj.t_end;
            obs.method = "certificate";
            return obs;
          }
        } else {
          // No fixed point below: certify the displacement stays nonpositive
          // all the way down, so the omega-limit is the origin.
          bool all_down = true;
          const int n_scan = opt.max_certificate_iters;
          const double lo = 1e-3;
          for (int i = 0; i <= n_scan && all_down; ++i) {
            const double x = lo * std::pow(x_now * 1.05 / lo, static_cast<double>(i) / n_scan);
            if (restricted_displacement(x, spec) > 0) all_down = false;
          }
          if (all_down) {
            obs.fate = Fate::ToOrigin;
            obs.resolve_time = traj.t_end;
            obs.method = "certificate";
            return obs;
          }
        }
      } else if (d_now > 0) {
        // Drifting outward: the first fixed point above, if it attracts,
        // is the limit cycle the orbit locks onto.
        const LimitCycle* above = nullptr;
        for (const auto& c : known_cycles) {
          if (c.x0 > x_now && (!above || c.x0 < above->x0)) above = &c;
        }
        if (above && above->stability == Stability::Attractor) {
          obs.fate = Fate::ToCycle;
          obs.cycle_x0 = above->x0;
          obs.resolve_time = traj.t_end;
          obs.method = "certificate";
          return obs;
        }
      }
    }
  }

  obs.fate = Fate::Unresolved;
  obs.resolve_time = traj.t_end;
  obs.method = "budget-exhausted";
  return obs;
}

}  // namespace psvf
