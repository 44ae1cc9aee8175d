#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "psvf/fate.hpp"
#include "psvf/models.hpp"

using namespace psvf;
using Catch::Approx;

TEST_CASE("Sigma partition cells") {
  CHECK(classify_partition_cell({0, 0, 0}) == PartitionCell::Origin);
  CHECK(classify_partition_cell({0.2, -0.2, 0}) == PartitionCell::R0Plus);
  CHECK(classify_partition_cell({-0.3, 0.3, 0}) == PartitionCell::R0Minus);
  CHECK(classify_partition_cell({0.1, 0.1, 0}) == PartitionCell::SigmaS);
  CHECK(classify_partition_cell({-0.1, -0.1, 0}) == PartitionCell::SigmaE);
  CHECK(classify_partition_cell({0.2, -0.1, 0}) == PartitionCell::SigmaCPlusS);
  CHECK(classify_partition_cell({0.1, -0.3, 0}) == PartitionCell::SigmaCPlusE);
  CHECK(classify_partition_cell({-0.1, 0.3, 0}) == PartitionCell::SigmaCMinusS);
  CHECK(classify_partition_cell({-0.3, 0.1, 0}) == PartitionCell::SigmaCMinusE);
  CHECK(classify_partition_cell({0.4, 0, 0}) == PartitionCell::SXPlus);
  CHECK(classify_partition_cell({-0.4, 0, 0}) == PartitionCell::SXMinus);
  CHECK(classify_partition_cell({0, 0.4, 0}) == PartitionCell::SYPlus);
  CHECK(classify_partition_cell({0, -0.4, 0}) == PartitionCell::SYMinus);

  SECTION("cells cover and do not overlap on a grid") {
    for (int i = -10; i <= 10; ++i) {
      for (int k = -10; k <= 10; ++k) {
        const Vec3 p{0.04 * i, 0.04 * k, 0};
        // classify always returns exactly one value; smoke the full grid.
        (void)classify_partition_cell(p);
      }
    }
  }
}

TEST_CASE("predicted fates for the unperturbed model") {
  CHECK(predicted_fate_z0(PartitionCell::Origin) == Fate::Stationary);
  CHECK(predicted_fate_z0(PartitionCell::R0Plus) == Fate::Periodic);
  CHECK(predicted_fate_z0(PartitionCell::SigmaS) == Fate::ToOrigin);
  CHECK(predicted_fate_z0(PartitionCell::SigmaCPlusS) == Fate::ToOrigin);
  CHECK(predicted_fate_z0(PartitionCell::SigmaCMinusS) == Fate::ToOrigin);
  CHECK(predicted_fate_z0(PartitionCell::SXPlus) == Fate::ToOrigin);
  CHECK(predicted_fate_z0(PartitionCell::SYPlus) == Fate::ToOrigin);
  CHECK(predicted_fate_z0(PartitionCell::SigmaCPlusE) == Fate::Periodic);
  CHECK(predicted_fate_z0(PartitionCell::SigmaCMinusE) == Fate::Periodic);
  CHECK(predicted_fate_z0(PartitionCell::SigmaE) == Fate::Periodic);
  CHECK(predicted_fate_z0(PartitionCell::SXMinus) == Fate::Periodic);
  CHECK(predicted_fate_z0(PartitionCell::SYMinus) == Fate::Periodic);
}

TEST_CASE("observed fates for the unperturbed model") {
  const PiecewiseSystem sys = model_z0();

  SECTION("sliding region pulls to the origin") {
    const FateObservation obs = observe_fate(sys, {0.1, 0.1, 0});
    CHECK(obs.fate == Fate::ToOrigin);
    CHECK(obs.method == "threshold");
  }

  SECTION("r0 points run periodic orbits") {
    const FateObservation obs = observe_fate(sys, {0.2, -0.2, 0});
    CHECK(obs.fate == Fate::Periodic);
  }

  SECTION("the origin is stationary") {
    CHECK(observe_fate(sys, {0, 0, 0}).fate == Fate::Stationary);
  }

  SECTION("V- crossing points settle onto invariant-plane orbits") {
    // The x+y contraction bounds every crossing orbit; from (0.1,-0.3,0) the
    // iterates converge to the orbit through about (0.452, -0.452, 0).
    const FateObservation obs = observe_fate(sys, {0.1, -0.3, 0});
    CHECK(obs.fate == Fate::Periodic);
  }

  SECTION("V+ crossing points are captured by the sliding region first") {
    const FateObservation obs = observe_fate(sys, {0.2, -0.1, 0});
    CHECK(obs.fate == Fate::ToOrigin);
    CHECK(obs.sigma_s_entry_crossing >= 1);
  }

  SECTION("3D starts inherit the Sigma analysis") {
    CHECK(observe_fate(sys, {0.05, 0.08, 0.2}).fate == Fate::ToOrigin);
  }
}

TEST_CASE("predicted vs observed on a coarse grid") {
  const PiecewiseSystem sys = model_z0();
  int resolved = 0, agree = 0;
  const int n = 9;
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      const double x = -0.4 + 0.8 * i / (n - 1);
      const double y = -0.4 + 0.8 * k / (n - 1);
      // Exclusion band around the partition boundaries.
      if (std::abs(x) < 1e-2 || std::abs(y) < 1e-2 || std::abs(x + y) < 1e-2) continue;
      const PartitionCell cell = classify_partition_cell({x, y, 0});
      const Fate predicted = predicted_fate_z0(cell);
      const FateObservation obs = observe_fate(sys, {x, y, 0});
      ++resolved;
      if (obs.fate == predicted) ++agree;
    }
  }
  CHECK(resolved > 40);
  CHECK(agree == resolved);
}

TEST_CASE("perturbed-system fates") {
  SECTION("k = 0 drifts into the origin (monotone-decay certificate)") {
    const auto sp = PerturbationSpec::finite(0, 0.1);
    const PiecewiseSystem sys = model_z_eps(sp);
    for (const Vec3 p : {Vec3{0.25, -0.25, 0}, Vec3{0.15, -0.18, 0}, Vec3{0.1, -0.05, 0.1}}) {
      const FateObservation obs = observe_fate(sys, p, sp);
      INFO("from " << p.x << "," << p.y << "," << p.z);
      CHECK(obs.fate == Fate::ToOrigin);
    }
  }

  SECTION("locking onto the attracting cycle of the k = 2 family") {
    const auto sp = PerturbationSpec::finite(2, 0.1);
    const PiecewiseSystem sys = model_z_eps(sp);
    const auto cycles = find_cycles(sp, 0.01, 0.8, 512);
    REQUIRE(cycles.size() == 2);
    const FateObservation above = observe_fate(sys, {0.25, -0.25, 0}, sp, {}, {}, cycles);
    CHECK(above.fate == Fate::ToCycle);
    CHECK(above.cycle_x0 == Approx(0.2).margin(1e-6));
    const FateObservation inside = observe_fate(sys, {0.15, -0.15, 0}, sp, {}, {}, cycles);
    CHECK(inside.fate == Fate::ToCycle);
    CHECK(inside.cycle_x0 == Approx(0.2).margin(1e-6));
  }
}
