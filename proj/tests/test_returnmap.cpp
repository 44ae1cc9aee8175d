#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "psvf/models.hpp"
#include "psvf/returnmap.hpp"

using namespace psvf;
using Catch::Approx;

namespace {

// Independent bisection oracle for the upper-arrival equation.
double oracle_upper_root(double x0, double y0, double lo, double hi) {
  const double A = (x0 + y0) / 4, B = (x0 - y0) / 2;
  auto g = [&](double t) { return -t * t / 2 + A * std::exp(-2 * t) + B * t - A; };
  double glo = g(lo);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if ((g(mid) <= 0) == (glo <= 0)) {
      lo = mid;
      glo = g(mid);
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

Vec3 random_sigma_cplus(std::mt19937& rng) {
  std::uniform_real_distribution<double> dx(0.05, 0.9);
  std::uniform_real_distribution<double> dy(-0.9, -0.05);
  return {dx(rng), dy(rng), 0.0};
}

}  // namespace

TEST_CASE("upper fly time") {
  SECTION("closed form on the invariant plane: t = 2 x0") {
    for (double x0 : {0.5, 0.25, 0.125, 0.8}) {
      const FlyTimeResult fly = x_fly_time({x0, -x0, 0});
      CHECK(fly.t == Approx(2 * x0).margin(1e-10));
      CHECK(fly.residual <= 1e-12);
      CHECK(fly.t > 1e-8);
    }
  }

  SECTION("off-plane root against the bisection oracle") {
    const FlyTimeResult fly = x_fly_time({1.0, -0.5, 0});
    const double expect = oracle_upper_root(1.0, -0.5, 1.0, 1.5);
    CHECK(fly.t == Approx(expect).margin(1e-12));
    CHECK(fly.t == Approx(1.3246).margin(1e-3));
    CHECK(fly.bracket_lo < expect);
    CHECK(fly.bracket_hi > expect);
  }

  SECTION("no return outside the crossing+ domain") {
    CHECK_THROWS_AS(x_fly_time({0.1, 0.3, 0}), NoReturnError);
  }
}

TEST_CASE("upper half-return map") {
  SECTION("worked values") {
    const Vec3 a = half_return_x({0.5, -0.5, 0});
    CHECK(a.x == Approx(-0.5).margin(1e-12));
    CHECK(a.y == Approx(0.5).margin(1e-12));

    const Vec3 fixed = half_return_x({0.3, 0, 0});
    CHECK(fixed.x == 0.3);
    CHECK(fixed.y == 0.0);
  }

  SECTION("involution on 100 crossing points") {
    std::mt19937 rng(21);
    for (int i = 0; i < 100; ++i) {
      const Vec3 p = random_sigma_cplus(rng);
      const Vec3 q = half_return_x(p);
      const Vec3 r = half_return_x(q);
      CHECK((r - p).max_abs() < 1e-9);
    }
  }

  SECTION("fixed set is S_X") {
    std::mt19937 rng(22);
    for (int i = 0; i < 50; ++i) {
      const Vec3 p = random_sigma_cplus(rng);
      CHECK((half_return_x(p) - p).max_abs() > 1e-9);  // off S_X it moves
    }
    for (double x : {-0.7, -0.2, 0.4, 0.9}) {
      CHECK((half_return_x({x, 0, 0}) - Vec3{x, 0, 0}).max_abs() < 1e-9);
    }
  }
}

TEST_CASE("lower half-return map") {
  SECTION("unperturbed closed form is exact") {
    const Vec3 a = half_return_y({-0.5, 0.5, 0});
    CHECK(a.x == 0.5);
    CHECK(a.y == Approx(-0.5).margin(1e-15));

    const Vec3 b = half_return_y({-1.0, 0.0, 0});
    CHECK(b.x == 1.0);
    CHECK(b.y == -2.0);
  }

  SECTION("unperturbed involution is exact on 100 points") {
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> d(-0.9, 0.9);
    for (int i = 0; i < 100; ++i) {
      const Vec3 p{d(rng), d(rng), 0};
      const Vec3 r = half_return_y(half_return_y(p));
      CHECK((r - p).max_abs() < 1e-15);
    }
  }

  SECTION("perturbed fly time at a profile root") {
    const auto sp = PerturbationSpec::finite(3, 0.1);
    const Vec3 a = half_return_y({-0.1, 0.1, 0}, sp);
    CHECK(a.x == Approx(0.1).margin(1e-12));
    CHECK(a.y == Approx(-0.1).margin(1e-12));
  }

  SECTION("perturbed involution on crossing- points") {
    const auto sp = PerturbationSpec::infinite(0.5);
    std::mt19937 rng(24);
    std::uniform_real_distribution<double> dx(-0.9, -0.05);
    std::uniform_real_distribution<double> dy(0.05, 0.9);
    for (int i = 0; i < 100; ++i) {
      const Vec3 p{dx(rng), dy(rng), 0};
      const Vec3 q = half_return_y(p, sp);
      const Vec3 r = half_return_y(q, sp);
      CHECK((r - p).max_abs() < 1e-9);
    }
  }
}

TEST_CASE("first return map") {
  SECTION("center on the invariant plane") {
    for (int i = 1; i <= 20; ++i) {
      const double x0 = i * 0.05;
      const Vec3 r = first_return({x0, -x0, 0});
      CHECK((r - Vec3{x0, -x0, 0}).max_abs() < 1e-10);
    }
  }

  SECTION("contraction toward r0 with the documented factor") {
    const Vec3 r = first_return({1.0, -0.5, 0});
    const double t2 = x_fly_time({1.0, -0.5, 0}).t;
    CHECK(r.x + r.y == Approx(0.5 * std::exp(-2 * t2)).margin(1e-12));
    CHECK(r.x + r.y == Approx(0.0354).margin(1e-4));
  }

  SECTION("perturbed fixed point at the j = 1 root") {
    const auto sp = PerturbationSpec::finite(3, 0.1);
    const Vec3 r = first_return({0.1, -0.1, 0}, sp);
    CHECK((r - Vec3{0.1, -0.1, 0}).max_abs() < 1e-10);
  }

  SECTION("contraction law on random crossing+ points") {
    std::mt19937 rng(31);
    int tested = 0;
    while (tested < 50) {
      const Vec3 p = random_sigma_cplus(rng);
      if (std::abs(p.x + p.y) < 0.05) continue;
      Vec3 r;
      double t2;
      try {
        t2 = x_fly_time(p).t;
        r = first_return(p);
      } catch (const NoReturnError&) {
        continue;
      }
      const double ratio = (r.x + r.y) / (p.x + p.y);
      CHECK(ratio == Approx(std::exp(-2 * t2)).margin(1e-9));
      ++tested;
    }
  }
}

TEST_CASE("return-map iteration") {
  SECTION("distance to r0 strictly decreases with the per-step factor") {
    const IterateResult res = iterate_return({1.0, -0.5, 0}, 3);
    REQUIRE(res.completed);
    REQUIRE(res.points.size() == 4);
    for (std::size_t i = 0; i + 1 < res.points.size(); ++i) {
      CHECK(res.dist_r0[i + 1] < res.dist_r0[i]);
      const double t2 = x_fly_time(res.points[i]).t;
      CHECK(res.dist_r0[i + 1] / res.dist_r0[i] == Approx(std::exp(-2 * t2)).margin(1e-9));
    }
  }

  SECTION("constant on the invariant plane") {
    const IterateResult res = iterate_return({0.5, -0.5, 0}, 5);
    REQUIRE(res.completed);
    for (const Vec3& q : res.points) {
      CHECK((q - Vec3{0.5, -0.5, 0}).max_abs() < 1e-9);
    }
  }

  SECTION("sliding capture exits the domain after one return (M = 0.5)") {
    const IterateResult res = iterate_return({0.2, -0.1, 0}, 5);
    CHECK_FALSE(res.completed);
    CHECK(res.exit_index == 2);  // the first return landed in Sigma^s
    REQUIRE(res.points.size() == 2);
    CHECK(res.points[1].x > 0);
    CHECK(res.points[1].y > 0);  // second coordinate turned positive at N = 1
  }
}

TEST_CASE("return-map linearization") {
  SECTION("unit eigenvalue along r0 and contracting transverse eigenvalue") {
    for (double x0 : {0.025, 0.05, 0.1}) {
      const ReturnLinearization lin = linearized_return(x0);
      const double big = std::max(lin.eigenvalues[0], lin.eigenvalues[1]);
      const double small = std::min(lin.eigenvalues[0], lin.eigenvalues[1]);
      CHECK(big == Approx(1.0).margin(1e-7));
      CHECK(small == Approx(std::exp(-4 * x0)).margin(1e-6));

      // Eigenvector of the unit eigenvalue within 1e-4 radians of (-1, 1).
      const int unit_idx = lin.eigenvalues[0] > lin.eigenvalues[1] ? 0 : 1;
      const auto& v = lin.eigenvectors[unit_idx];
      const double cosang = std::abs((-v[0] + v[1]) / std::sqrt(2.0));
      CHECK(std::acos(std::min(cosang, 1.0)) < 1e-4);

      // Eigen residual.
      for (int i = 0; i < 2; ++i) {
        const auto& w = lin.eigenvectors[i];
        const double lam = lin.eigenvalues[i];
        const double rx = lin.jacobian[0][0] * w[0] + lin.jacobian[0][1] * w[1] - lam * w[0];
        const double ry = lin.jacobian[1][0] * w[0] + lin.jacobian[1][1] * w[1] - lam * w[1];
        CHECK(std::hypot(rx, ry) < 1e-7);
      }
    }
  }

  SECTION("Richardson-extrapolated slope of the transverse eigenvalue is -4") {
    auto mu2 = [](double x0) {
      const ReturnLinearization lin = linearized_return(x0);
      return std::min(lin.eigenvalues[0], lin.eigenvalues[1]);
    };
    auto slope = [&](double x0) { return (mu2(x0) - 1.0) / x0; };
    const double r = 2 * slope(0.025) - slope(0.05);
    CHECK(r == Approx(-4.0).margin(0.05));
  }
}

TEST_CASE("restricted displacement and cycles") {
  SECTION("the unperturbed restriction is a center") {
    for (double x : {0.05, 0.3, 0.7}) {
      CHECK(restricted_displacement(x, std::nullopt) == 0.0);
    }
  }

  SECTION("three cycles with alternating stability (finite k = 3)") {
    const auto sp = PerturbationSpec::finite(3, 0.1);
    const auto cycles = find_cycles(sp, 0.01, 0.5, 256);
    REQUIRE(cycles.size() == 3);
    const Stability want[] = {Stability::Repeller, Stability::Attractor, Stability::Repeller};
    for (int i = 0; i < 3; ++i) {
      CHECK(cycles[i].x0 == Approx(0.1 * (i + 1)).margin(1e-9));
      CHECK(cycles[i].period == Approx(4 * cycles[i].x0).margin(1e-12));
      CHECK(cycles[i].stability == want[i]);
      REQUIRE(cycles[i].j.has_value());
      CHECK(*cycles[i].j == i + 1);
      // The first return composed through the half-maps really fixes them.
      const Vec3 r = first_return({cycles[i].x0, -cycles[i].x0, 0}, sp);
      CHECK((r - Vec3{cycles[i].x0, -cycles[i].x0, 0}).max_abs() < 1e-10);
    }
  }

  SECTION("k = 0 has no cycles") {
    const auto cycles = find_cycles(PerturbationSpec::finite(0, 0.1), 0.01, 0.5, 256);
    CHECK(cycles.empty());
    // ... and the displacement is inward everywhere on the scan.
    for (double x : {0.05, 0.2, 0.45}) {
      CHECK(restricted_displacement(x, PerturbationSpec::finite(0, 0.1)) < 0);
    }
  }

  SECTION("oscillatory family: the accumulating prefix") {
    const auto sp = PerturbationSpec::infinite(0.5);
    const auto cycles = find_cycles(sp, 0.03, 0.3, 512);
    REQUIRE(cycles.size() == 7);
    for (int i = 0; i < 7; ++i) {
      const int j = 7 - i;  // ascending x0 means descending j
      CHECK(cycles[i].x0 == Approx(0.25 / j).margin(1e-9));
      REQUIRE(cycles[i].j.has_value());
      CHECK(*cycles[i].j == j);
      CHECK(cycles[i].stability ==
            (j % 2 == 1 ? Stability::Repeller : Stability::Attractor));
    }
  }

  SECTION("cycle-count law across k") {
    const double eps = 0.08;
    for (int k = 1; k <= 6; ++k) {
      const auto sp = PerturbationSpec::finite(k, eps);
      const auto cycles = find_cycles(sp, eps / 2, (k + 1) * eps, 512);
      REQUIRE(static_cast<int>(cycles.size()) == k);
      for (int j = 1; j <= k; ++j) {
        CHECK(cycles[j - 1].x0 == Approx(j * eps).margin(1e-9));
        CHECK(cycles[j - 1].stability ==
              (j % 2 == 1 ? Stability::Repeller : Stability::Attractor));
      }
    }
  }

  SECTION("multiplier sign matches the profile derivative sign") {
    const auto sp = PerturbationSpec::finite(4, 0.1);
    for (const auto& c : find_cycles(sp, 0.05, 0.45, 512)) {
      const double dfdx = F_finite_dx(c.x0, -c.x0, 0.1, 4);
      CHECK((c.multiplier > 1) == (dfdx > 0));
    }
  }

  SECTION("profile roots cross-check the displacement roots") {
    const auto sp = PerturbationSpec::finite(3, 0.1);
    const auto roots = profile_roots(sp, 0.01, 0.5, 256);
    const auto cycles = find_cycles(sp, 0.01, 0.5, 256);
    REQUIRE(roots.size() == cycles.size());
    for (std::size_t i = 0; i < roots.size(); ++i) {
      CHECK(roots[i] == Approx(cycles[i].x0).margin(1e-9));
    }
  }

  SECTION("argument validation") {
    CHECK_THROWS_AS(find_cycles(PerturbationSpec::finite(1, 0.1), -0.1, 0.5, 64),
                    std::invalid_argument);
    CHECK_THROWS_AS(find_cycles(PerturbationSpec::finite(1, 0.1), 0.2, 0.1, 64),
                    std::invalid_argument);
    CHECK_THROWS_AS(find_cycles(PerturbationSpec::finite(1, 0.1), 0.1, 0.5, 1),
                    std::invalid_argument);
  }
}
