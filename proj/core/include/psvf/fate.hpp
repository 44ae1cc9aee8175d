#pragma once

#include <optional>
#include <string>
#include <vector>

#include "psvf/integrate.hpp"
#include "psvf/returnmap.hpp"

namespace psvf {

/// The thirteen cells of the Sigma partition around the two-fold of the
/// built-in model, cut by the lines x = 0, y = 0 and r0 = {x + y = 0}.
enum class PartitionCell {
  Origin,
  R0Plus,        // r0, x > 0 (inside crossing+)
  R0Minus,       // r0, x < 0
  SigmaS,        // x > 0, y > 0
  SigmaE,        // x < 0, y < 0
  SigmaCPlusS,   // x > 0, y < 0, x + y > 0
  SigmaCPlusE,   // x > 0, y < 0, x + y < 0
  SigmaCMinusS,  // x < 0, y > 0, x + y > 0
  SigmaCMinusE,  // x < 0, y > 0, x + y < 0
  SXPlus,        // y = 0, x > 0
  SXMinus,       // y = 0, x < 0
  SYPlus,        // x = 0, y > 0
  SYMinus,       // x = 0, y < 0
};

std::string to_string(PartitionCell c);

/// Closed-form cell membership for the built-in model (sign tests on x, y,
/// x + y; values within `boundary_tol` of a dividing line count as being on
/// it).
PartitionCell classify_partition_cell(const Vec3& p, double boundary_tol = 1e-12);

enum class Fate { Stationary, Periodic, ToOrigin, ToCycle, Escapes, Unresolved };

std::string to_string(Fate f);

/// Predicted asymptotic fate per partition cell for the unperturbed model.
/// Crossing cells converge to periodic orbits of the invariant plane
/// (the x+y contraction makes every crossing orbit bounded); the sliding
/// side wins in V+ and pulls to the origin.
Fate predicted_fate_z0(PartitionCell cell);

struct FateOptions {
  double origin_ball = 1e-3;    // ToOrigin when ||p|| stays below this ...
  double sustain_time = 5.0;    // ... for this long
  double cycle_lock = 1e-5;     // iterates within this of a known cycle
  double iterate_fix = 1e-6;    // successive crossings within this: periodic
  double t_max = 80.0;
  int max_certificate_iters = 2000;
};

struct FateObservation {
  Fate fate = Fate::Unresolved;
  double resolve_time = 0.0;
  double cycle_x0 = 0.0;             // for ToCycle
  std::string method;                // "threshold", "iterates", "certificate"
  int sigma_s_entry_crossing = -1;   // crossing count at Sigma^s capture
};

/// Observed fate: simulate with `advance`, then settle the verdict from the
/// trajectory (origin-ball dwell, escape, crossing-iterate convergence).
/// When the simulation alone cannot settle it and a perturbation spec is
/// given, the pi0-restricted displacement supplies a monotone-decay
/// certificate (no fixed point below the iterates, displacement negative):
/// that resolves the bump-tail drifts whose origin approach is far slower
/// than any simulation budget.
FateObservation observe_fate(const PiecewiseSystem& sys, const Vec3& p0,
                             const std::optional<PerturbationSpec>& spec = std::nullopt,
                             const FateOptions& opt = {}, const StepperConfig& cfg = {},
                             const std::vector<LimitCycle>& known_cycles = {});

struct FateReportRow {
  Vec3 p;
  PartitionCell cell;
  Fate predicted;
  Fate observed;
  bool agree;
  std::string method;
};

}  // namespace psvf
