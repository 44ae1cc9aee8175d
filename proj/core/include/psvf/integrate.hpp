#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "psvf/sigma.hpp"

namespace psvf {

enum class ArcMode { UpperFlow, LowerFlow, SlidingFlow, Stationary };

std::string to_string(ArcMode m);

enum class EscapingPolicy { FollowUpper, FollowLower, FollowSliding };

std::string to_string(EscapingPolicy p);
EscapingPolicy escaping_policy_from_string(const std::string& s);

/// Adaptive-stepper and event-handling knobs. Defaults are tuned so smooth
/// arcs track the built-in analytic flows to ~1e-9 over unit times.
struct StepperConfig {
  double rel_tol = 1e-11;
  double abs_tol = 1e-13;
  double max_step = 0.1;
  double init_step = 1e-3;
  double event_tol = 1e-12;       // |f| at a refined event
  double escape_radius = 10.0;
  long max_events = 100000;       // Zeno guard
  EscapingPolicy escaping_policy = EscapingPolicy::FollowUpper;

  void validate() const;
};

enum class EventKind {
  Crossing,
  SlideStart,
  SlideExit,
  Tangency,
  TwoFoldStop,
  DenominatorStop,
  AmbiguousStop,
  Escape,
  EventBudget,
  StepUnderflow,
};

std::string to_string(EventKind k);

/// A Sigma hit (or terminal condition) with the refined time, the region
/// label at the hit, and the continuation that was applied.
struct TrajectoryEvent {
  double t;
  Vec3 p;
  SigmaRegion region;
  EventKind kind;
  ArcMode continued_as;  // meaningful when the trajectory continues
};

struct TrajectoryArc {
  ArcMode mode;
  std::vector<double> times;
  std::vector<Vec3> states;
};

enum class Termination { ReachedTMax, Escaped, EventBudgetExceeded, StepUnderflow, Ambiguous, Stalled };

std::string to_string(Termination t);

struct Trajectory {
  std::vector<TrajectoryArc> arcs;
  std::vector<TrajectoryEvent> events;
  Termination termination = Termination::ReachedTMax;
  EscapingPolicy policy_used = EscapingPolicy::FollowUpper;
  bool truncated = false;
  double t_end = 0.0;

  const Vec3& final_state() const;
  long crossing_count() const;
};

/// Event-driven forward integration of a piecewise-smooth system: smooth arcs
/// off Sigma, crossing concatenation, Filippov sliding on Sigma^s u Sigma^e,
/// the configured branch in the escaping region, and a stationary arc at
/// singular (two-fold) tangencies.
Trajectory advance(const PiecewiseSystem& sys, const Vec3& p0, double t_max,
                   const StepperConfig& cfg = {});

/// Plain smooth-field integration (no switching logic); endpoint of the flow
/// after time t. t may be negative.
Vec3 flow_smooth(const SmoothField& field, const Vec3& p0, double t,
                 const StepperConfig& cfg = {});

/// States of the smooth flow at the requested times (nonnegative, ascending).
std::vector<Vec3> flow_smooth_times(const SmoothField& field, const Vec3& p0,
                                    std::span<const double> times,
                                    const StepperConfig& cfg = {});

/// CSV with header "t,x,y,z,mode,event_flag"; 17 significant digits.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

}  // namespace psvf
