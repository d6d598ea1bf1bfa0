#include <boost/multiprecision/cpp_bin_float.hpp>

#include <cmath>

#include "doctest.h"
#include "emstress/physics.hpp"
#include "emstress/rng.hpp"

using namespace emstress;
using big = boost::multiprecision::cpp_bin_float_50;

namespace {

big kappa_big(const PhysicalParams& p) {
  const big kT = big(kBoltzmannJPerK) * big(p.T);
  const big da = big(p.D0) * exp(-big(p.Ea) / (big(kBoltzmannEvPerK) * big(p.T)));
  return da * big(p.B) * big(p.Omega) / kT;
}

big g_big(double j, const PhysicalParams& p) {
  return big(p.rho) * big(j) * big(p.Zstar) * big(p.e_charge) / big(p.Omega);
}

double rel(double a, const big& b) { return static_cast<double>(abs((big(a) - b) / b)); }

}  // namespace

TEST_CASE("kappa from a given atomic diffusivity") {
  PhysicalParams p;
  const double k = stress_diffusivity(1e-16, p);
  // 1e-16 * 1e11 * 1.18e-29 / (1.380649e-23 * 373)
  CHECK(k == doctest::Approx(2.2913e-14).epsilon(1e-4));
  PhysicalParams p2 = p;
  p2.B = 2 * p.B;
  CHECK(stress_diffusivity(1e-16, p2) == doctest::Approx(2 * k).epsilon(1e-15));
}

TEST_CASE("zero activation energy leaves D0") {
  PhysicalParams p;
  p.Ea = 0.0;
  CHECK(atomic_diffusivity(p) == p.D0);
}

TEST_CASE("driving force hand value and symmetry") {
  PhysicalParams p;
  p.e_charge = 1.602e-19;
  CHECK(driving_force(1e9, p) == doctest::Approx(3.0547e12).epsilon(1e-4));
  CHECK(driving_force(0.0, p) == 0.0);
  CHECK(driving_force(-4e8, p) == -driving_force(4e8, p));
}

TEST_CASE("default kappa magnitude") {
  // exp(-0.86 / (8.617e-5 * 373)) ~ 2.35e-12 -> D_a ~ 1.83e-16
  CHECK(diffusivity(PhysicalParams{}) == doctest::Approx(4.2e-14).epsilon(0.05));
}

TEST_CASE("double evaluation agrees with 50-digit arithmetic") {
  Rng rng(2024);
  for (int i = 0; i < 100; ++i) {
    PhysicalParams p;
    p.D0 = rng.uniform(1e-6, 1e-3);
    p.Ea = rng.uniform(0.5, 1.2);
    p.B = rng.uniform(1e10, 2e11);
    p.Omega = rng.uniform(1e-29, 2e-29);
    p.T = rng.uniform(300, 600);
    p.Zstar = rng.uniform(1, 20);
    p.rho = rng.uniform(1e-8, 5e-8);
    const double j = rng.uniform(-1e9, 1e9);
    CHECK(rel(diffusivity(p), kappa_big(p)) < 1e-12);
    CHECK(rel(driving_force(j, p), g_big(j, p)) < 1e-12);
  }
}

TEST_CASE("parameter validation") {
  PhysicalParams p;
  CHECK_NOTHROW(validate_params(p));
  p.sigma_T = -5e7;
  CHECK_NOTHROW(validate_params(p));
  p.T = 0.0;
  CHECK_THROWS_AS(validate_params(p), std::invalid_argument);
  p = {};
  p.t_metal_um = -1;
  CHECK_THROWS_AS(validate_params(p), std::invalid_argument);
}
