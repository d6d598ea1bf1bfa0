#include "emstress/analytic.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace emstress {

namespace {

// cos(pi a) with the argument reduced so that odd multiples of 1/2 give an exact zero.
double cos_pi(double a) {
  a = std::fmod(std::abs(a), 2.0);
  if (a > 1.0) a = 2.0 - a;
  return std::sin(std::numbers::pi * (0.5 - a));
}

}  // namespace

double analytic_single_segment(double length_m, double driving_force, double kappa, double sigma_T,
                               double x_m, double t_s, const SeriesOptions& opts) {
  if (!(length_m > 0.0)) throw std::invalid_argument("segment length must be > 0");
  const double steady = sigma_T + driving_force * (0.5 * length_m - x_m);
  if (driving_force == 0.0) return steady;
  if (std::isinf(t_s)) return steady;
  // the cosine coefficients sum to the steady line exactly; at t = 0 the
  // truncated series would only approach that slowly near the ends
  if (t_s == 0.0) return sigma_T;

  const double r = x_m / length_m;
  const double scale = std::abs(sigma_T) + 0.5 * std::abs(driving_force) * length_m;
  const double pi2 = std::numbers::pi * std::numbers::pi;
  const double rate = kappa * pi2 / (length_m * length_m);
  double sum = 0.0;
  for (long k = 1; k <= opts.max_terms; k += 2) {
    const double kk = static_cast<double>(k) * static_cast<double>(k);
    const double bound = 4.0 * driving_force * length_m / (kk * pi2) * std::exp(-rate * kk * t_s);
    const double running = steady - sum;
    if (std::abs(bound) < opts.rel_tol * std::max(std::abs(running), scale)) return running;
    sum += bound * cos_pi(static_cast<double>(k) * r);
  }
  throw std::runtime_error("analytic series did not converge within the term limit");
}

}  // namespace emstress
