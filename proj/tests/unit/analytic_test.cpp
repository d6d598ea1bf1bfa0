#include <cmath>
#include <initializer_list>
#include <stdexcept>

#include "doctest.h"
#include "emstress/analytic.hpp"
#include "emstress/physics.hpp"

using namespace emstress;

namespace {
const double L = 100e-6;
const double G = 1.5e12;
const double kappa = 4.3e-14;
}  // namespace

TEST_CASE("series at t = 0 is the initial stress") {
  for (double x : {0.0, 13e-6, 50e-6, 77e-6, 100e-6}) {
    CHECK(analytic_single_segment(L, G, kappa, 2e7, x, 0.0) == 2e7);
  }
}

TEST_CASE("series shortly after t = 0 is still near the initial stress") {
  // one second: diffusion length sqrt(kappa t) ~ 0.2 um, the ends have barely moved
  const double early = analytic_single_segment(L, G, kappa, 0.0, 0.0, 1.0, {1e-9});
  const double rise = 2.0 * G * std::sqrt(kappa * 1.0 / 3.141592653589793);  // semi-infinite blocked end
  CHECK(early == doctest::Approx(rise).epsilon(0.02));
  CHECK(std::abs(analytic_single_segment(L, G, kappa, 0.0, 30e-6, 1.0, {1e-9})) < 1e-6 * G * L);
}

TEST_CASE("series at late time is the steady line") {
  for (double x : {0.0, 25e-6, 90e-6}) {
    CHECK(analytic_single_segment(L, G, kappa, -1e7, x, 1e12) == doctest::Approx(-1e7 + G * (L / 2 - x)).epsilon(1e-12));
  }
}

TEST_CASE("midpoint stays at the initial stress") {
  for (double t : {0.0, 1e2, 3e3, 1e5, 3.15e8}) CHECK(analytic_single_segment(L, G, kappa, 5e7, L / 2, t) == 5e7);
}

TEST_CASE("antisymmetry about the midpoint") {
  const double a = analytic_single_segment(L, G, kappa, 0.0, 20e-6, 4e3, {1e-12});
  const double b = analytic_single_segment(L, G, kappa, 0.0, 80e-6, 4e3, {1e-12});
  CHECK(a == doctest::Approx(-b).epsilon(1e-10));
}

TEST_CASE("non-convergence guard") {
  CHECK_THROWS_AS(analytic_single_segment(L, G, kappa, 0.0, 1e-6, 1e-3, {1e-16, 10}), std::runtime_error);
}
