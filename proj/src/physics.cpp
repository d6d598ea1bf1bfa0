#include "emstress/physics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace emstress {

void validate_params(const PhysicalParams& p) {
  auto require_positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument(std::string("physical parameter ") + name +
                                  " must be finite and > 0");
    }
  };
  require_positive(p.D0, "D0");
  require_positive(p.Ea, "Ea");
  require_positive(p.B, "B");
  require_positive(p.Omega, "Omega");
  require_positive(p.T, "T");
  require_positive(p.Zstar, "Zstar");
  require_positive(p.e_charge, "e_charge");
  require_positive(p.rho, "rho");
  require_positive(p.t_metal_um, "t_metal");
  if (!std::isfinite(p.sigma_T)) {
    throw std::invalid_argument("physical parameter sigma_T must be finite");
  }
}

double atomic_diffusivity(const PhysicalParams& p) {
  return p.D0 * std::exp(-p.Ea / (kBoltzmannEvPerK * p.T));
}

double stress_diffusivity(double atomic_diffusivity_m2s, const PhysicalParams& p) {
  return atomic_diffusivity_m2s * p.B * p.Omega / (kBoltzmannJPerK * p.T);
}

double diffusivity(const PhysicalParams& p) {
  return stress_diffusivity(atomic_diffusivity(p), p);
}

double driving_force(double current_density, const PhysicalParams& p) {
  const double field = p.rho * current_density;
  return field * (p.Zstar * p.e_charge) / p.Omega;
}

}  // namespace emstress
