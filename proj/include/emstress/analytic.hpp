#pragma once

namespace emstress {

struct SeriesOptions {
  // Stop once the next term bound falls below rel_tol times the running value
  // (floored at the profile scale |sigma_T| + |G| L / 2).
  double rel_tol = 1e-6;
  long max_terms = 100000;
};

// Stress in a single segment with both ends blocked and constant driving
// force, sigma(x, 0) = sigma_T:
//   sigma = sigma_T + G (L/2 - x) - sum_{k odd} 4 G L / (k pi)^2 cos(k pi x / L) exp(-kappa (k pi / L)^2 t)
// SI units throughout. Throws std::runtime_error when the series does not
// converge within max_terms.
double analytic_single_segment(double length_m, double driving_force, double kappa, double sigma_T,
                               double x_m, double t_s, const SeriesOptions& opts = {});

}  // namespace emstress
