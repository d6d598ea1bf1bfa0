#pragma once

namespace emstress {

inline constexpr double kBoltzmannJPerK = 1.380649e-23;
inline constexpr double kBoltzmannEvPerK = 8.617333262e-5;
inline constexpr double kElementaryCharge = 1.602176634e-19;
inline constexpr double kSecondsPerYear = 365.25 * 86400.0;

// Material and operating-point parameters of the stress evolution model.
// Lengths in SI unless the field name says otherwise.
struct PhysicalParams {
  double D0 = 7.8e-5;          // m^2/s, pre-exponential diffusion factor
  double Ea = 0.86;            // eV, activation energy
  double B = 1e11;             // Pa, effective bulk modulus
  double Omega = 1.18e-29;     // m^3, atomic volume
  double T = 373.0;            // K
  double Zstar = 10.0;         // effective valence
  double e_charge = kElementaryCharge;
  double rho = 2.25e-8;        // Ohm*m
  double sigma_T = 0.0;        // Pa, initial residual stress
  double t_metal_um = 0.2;     // um, metal thickness
};

// Throws std::invalid_argument naming the first non-positive field.
void validate_params(const PhysicalParams& p);

// D_a = D0 * exp(-Ea / (k_B T)), m^2/s.
double atomic_diffusivity(const PhysicalParams& p);

// kappa = D_a B Omega / (k_B T), m^2/s, for an explicitly given D_a.
double stress_diffusivity(double atomic_diffusivity_m2s, const PhysicalParams& p);

// kappa with D_a derived from D0 and Ea.
double diffusivity(const PhysicalParams& p);

// G = E q* / Omega with E = rho j and q* = Zstar e. Pa/m, odd in j.
double driving_force(double current_density, const PhysicalParams& p);

}  // namespace emstress
