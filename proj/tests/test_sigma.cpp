#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "psvf/models.hpp"
#include "psvf/sigma.hpp"

using namespace psvf;
using Catch::Approx;

TEST_CASE("lie derivatives of the built-in model") {
  const PiecewiseSystem sys = model_z0();

  SECTION("hand values at the two-fold") {
    CHECK(lie_derivative(sys, Side::Upper, {0, 0, 0}, 1) == Approx(0.0).margin(1e-15));
    CHECK(lie_derivative(sys, Side::Upper, {0, 0, 0}, 2) == Approx(-1.0).epsilon(1e-8));
    CHECK(lie_derivative(sys, Side::Lower, {0, 0, 0}, 1) == Approx(0.0).margin(1e-15));
    CHECK(lie_derivative(sys, Side::Lower, {0, 0, 0}, 2) == Approx(1.0).epsilon(1e-8));
  }

  SECTION("first-order value is the third field component") {
    CHECK(lie_derivative(sys, Side::Upper, {0, 0.3, 0}, 1) == Approx(-0.3));
  }

  SECTION("first order agrees with finite differences of f along the flow") {
    for (int i = 0; i < 10; ++i) {
      for (int k = 0; k < 10; ++k) {
        const Vec3 p{-0.9 + 0.2 * i, -0.9 + 0.2 * k, 0.0};
        for (Side side : {Side::Upper, Side::Lower}) {
          const Vec3 v = sys.field(side).eval(p);
          const double h = 1e-6;
          const double fd =
              (sys.switching(p + h * v) - sys.switching(p - h * v)) / (2 * h);
          CHECK(lie_derivative(sys, side, p, 1) == Approx(fd).margin(1e-8));
        }
      }
    }
  }

  SECTION("second order by finite differences matches the registered form") {
    PiecewiseSystem fd_sys = sys;
    fd_sys.upper.lie2 = nullptr;
    fd_sys.lower.lie2 = nullptr;
    for (const Vec3 p : {Vec3{0.2, -0.4, 0}, Vec3{-0.3, 0.1, 0}, Vec3{0.5, 0.5, 0}}) {
      CHECK(lie_derivative(fd_sys, Side::Upper, p, 2) ==
            Approx(lie_derivative(sys, Side::Upper, p, 2)).margin(1e-8));
      CHECK(lie_derivative(fd_sys, Side::Lower, p, 2) ==
            Approx(lie_derivative(sys, Side::Lower, p, 2)).margin(1e-8));
    }
  }

  SECTION("order is validated") {
    CHECK_THROWS_AS(lie_derivative(sys, Side::Upper, {0, 0, 0}, 3), std::invalid_argument);
  }

  SECTION("non-finite points are rejected") {
    CHECK_THROWS_AS(lie_derivative(sys, Side::Upper, {std::nan(""), 0, 0}, 1),
                    NonFinitePointError);
  }
}

TEST_CASE("Sigma region classification") {
  const PiecewiseSystem sys = model_z0();

  SECTION("spec examples") {
    CHECK(classify_sigma_point(sys, {0.1, 0.1, 0}) == SigmaRegion::Sliding);
    CHECK(classify_sigma_point(sys, {-0.1, -0.1, 0}) == SigmaRegion::Escaping);
    CHECK(classify_sigma_point(sys, {0.1, -0.3, 0}) == SigmaRegion::CrossingPlus);
    CHECK(classify_sigma_point(sys, {0, 0, 0}) == SigmaRegion::TwoFold);
  }

  SECTION("off-Sigma points are rejected") {
    CHECK_THROWS_AS(classify_sigma_point(sys, {0.1, 0.1, 0.5}), NotOnSigmaError);
  }

  SECTION("partition matches the closed-form sets over a grid") {
    const int n = 41;
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < n; ++k) {
        const double x = -1.0 + 2.0 * i / (n - 1);
        const double y = -1.0 + 2.0 * k / (n - 1);
        const SigmaRegion r = classify_sigma_point(sys, {x, y, 0});
        if (std::abs(x) < 1e-12 || std::abs(y) < 1e-12) {
          CHECK((r == SigmaRegion::TangencyUpper || r == SigmaRegion::TangencyLower ||
                 r == SigmaRegion::TwoFold));
        } else if (x > 0 && y > 0) {
          CHECK(r == SigmaRegion::Sliding);
        } else if (x < 0 && y < 0) {
          CHECK(r == SigmaRegion::Escaping);
        } else {
          CHECK((-x * y > 0));
          CHECK((r == SigmaRegion::CrossingPlus || r == SigmaRegion::CrossingMinus));
          CHECK(r == (x > 0 ? SigmaRegion::CrossingPlus : SigmaRegion::CrossingMinus));
        }
      }
    }
  }

  SECTION("tangency band wins over crossing") {
    CHECK(classify_sigma_point(sys, {0.3, 1e-10, 0}) == SigmaRegion::TangencyUpper);
    CHECK(classify_sigma_point(sys, {1e-10, 0.3, 0}) == SigmaRegion::TangencyLower);
  }
}

TEST_CASE("fold reports") {
  const PiecewiseSystem sys = model_z0();

  SECTION("spec examples") {
    const FoldReport up = fold_report(sys, Side::Upper, {0.5, 0, 0});
    CHECK(up.kind == TangencyKind::InvisibleFold);
    CHECK(up.first_lie == Approx(0.0).margin(1e-15));
    CHECK(up.second_lie == Approx(-0.5));

    const FoldReport lo = fold_report(sys, Side::Lower, {0, 0.5, 0});
    CHECK(lo.kind == TangencyKind::InvisibleFold);
    CHECK(lo.second_lie == Approx(1.0));

    CHECK(fold_report(sys, Side::Upper, {0.1, 0.2, 0}).kind == TangencyKind::NotTangent);
  }

  SECTION("S_X and S_Y are invisible fold lines near the origin") {
    for (int i = 0; i <= 18; ++i) {
      const double x = -0.95 + 1.9 * i / 18.0;
      if (std::abs(x) < 0.05) continue;
      CHECK(fold_report(sys, Side::Upper, {x, 0, 0}).kind == TangencyKind::InvisibleFold);
      CHECK(fold_report(sys, Side::Lower, {0, x, 0}).kind == TangencyKind::InvisibleFold);
    }
  }

  SECTION("degenerate tangency at the vanishing curvature point") {
    // X.f = 0 and X^2.f = -(1 - (x+y)) = 0 at (1, 0, 0).
    CHECK(fold_report(sys, Side::Upper, {1.0, 0, 0}).kind == TangencyKind::DegenerateTangency);
  }

  SECTION("off-Sigma points are rejected") {
    CHECK_THROWS_AS(fold_report(sys, Side::Upper, {0.5, 0, 0.2}), NotOnSigmaError);
  }
}

TEST_CASE("T-singularity detection") {
  SECTION("the built-in model's origin") {
    const PiecewiseSystem sys = model_z0();
    const TwoFoldCertificate cert = detect_t_singularity(sys, {0, 0, 0});
    CHECK(cert.is_t_singularity);
    CHECK(std::abs(cert.determinant) == Approx(1.0).epsilon(1e-6));
    // S_X = {y = 0}: grad of X.f is (0,-1); S_Y = {x = 0}: grad of Y.f is (1,0).
    CHECK(cert.tangent_dir_upper[0] == Approx(0.0).margin(1e-8));
    CHECK(cert.tangent_dir_upper[1] == Approx(-1.0).epsilon(1e-6));
    CHECK(cert.tangent_dir_lower[0] == Approx(1.0).epsilon(1e-6));
    CHECK(cert.tangent_dir_lower[1] == Approx(0.0).margin(1e-8));
  }

  SECTION("the perturbed model keeps the T-singularity") {
    const PiecewiseSystem sys = model_z_eps(PerturbationSpec::finite(3, 0.1));
    const TwoFoldCertificate cert = detect_t_singularity(sys, {0, 0, 0});
    CHECK(cert.is_t_singularity);
    CHECK(std::abs(cert.determinant) == Approx(1.0).epsilon(1e-6));
  }

  SECTION("a visible fold disqualifies") {
    PiecewiseSystem sys = model_z0();
    sys.upper.eval = [](const Vec3& p) -> Vec3 {
      const double u = p.x + p.y;
      return {-1.0 - u, 1.0 - u, p.y};
    };
    sys.upper.lie2 = nullptr;
    sys.upper.flow = nullptr;
    CHECK_FALSE(detect_t_singularity(sys, {0, 0, 0}).is_t_singularity);
  }

  SECTION("non-two-fold points are rejected") {
    const PiecewiseSystem sys = model_z0();
    CHECK_THROWS_AS(detect_t_singularity(sys, {0.2, 0.1, 0}), NotTwoFoldError);
  }
}
