#pragma once

#include <optional>

#include "phasefid/numerics.hpp"

// Stoner-Hubbard itinerant magnetism in rescaled units: energies and k_B T
// in eps_F units, u = D_F U, m = M/N in [-1/2, 1/2], size n = V D_F eps_F
// = (3/4) N. The self-consistent pair becomes
//   1 = (3/4) Int sqrt(e) [f(E_up) + f(E_dn)] de
//   m = (3/8) Int sqrt(e) [f(E_up) - f(E_dn)] de
// with E_sigma(e) = e + (4/3) u (1/2 -+ m) -+ h_ext/2 - mu.

namespace phasefid::stoner {

struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A point of the generalized parameter plane, plus an optional explicit
// symmetry-breaking field (energy units) used by susceptibility probes.
struct Point {
    double t = 0.0;
    double u = 0.0;
    double h_ext = 0.0;
};

enum class Branch { paramagnetic, magnetic };

struct State {
    Point q;
    double m = 0.0;
    double mu = 0.0;
    bool converged = false;
    Branch branch = Branch::paramagnetic;
};

// Parameter point plus the offset to its neighbor and the dimensionless
// system size n = (3/4) N.
struct Params {
    double t = 0.0;
    double u = 0.0;
    double size = 750.0;
    double dt = 0.0;
    double du = 0.0;
};

struct FermiMomenta {
    double x = 1.0;  // k_F_up / k_F
    double y = 1.0;  // k_F_dn / k_F
};

// Onset of full polarization, u = 3 / (2 * 2^(1/3)).
inline constexpr double full_polarization_u = 1.1905507889761495;

// T = 0 Fermi momenta: trivial root for u <= 1, the magnetic branch of
// {x^3 + y^3 = 2, x + y = (2u/3)(x^2 + xy + y^2)} with x > y for u > 1,
// fully polarized (2^(1/3), 0) beyond full_polarization_u.
FermiMomenta zero_t_solve(double u);

// d(x, y)/du on the magnetic branch; diverges as u -> 1+.
std::pair<double, double> zero_t_derivatives(double u);

// Ground state energy per electron in eps_F units,
// (3/10)[(1+2m)^(5/3) + (1-2m)^(5/3)] + (u/3)(1 - 4 m^2).
double ground_energy(double u, double m);

// 1 when the discretized occupation sets of the two T=0 ground states
// coincide at the one-state granularity implied by size, else 0.
double ground_state_overlap(const FermiMomenta& a, const FermiMomenta& b, double size);

// Fermi integral Int_0^inf sqrt(e) f((e - a)/t) de.
double fermi_integral(double a, double t);

// Self-consistent equilibrium at q; requires t > 0. The magnetic branch is
// returned when it exists and has lower free energy; m >= 0 by convention.
State solve_equilibrium(const Point& q, std::optional<State> seed = {});

// Grand-canonical free energy per size unit, used for branch selection.
double free_energy(const State& s);

// ln of the per-mode fidelity factor at mode energy eps, the cosh form on
// the mean/difference exponents; <= 0, exactly 0 when the states coincide.
double mode_log_fidelity(const State& a, const State& b, double eps);

// ln of the per-mode partition-ratio factor evaluated through the product
// form (1 + e^(alpha + h/2))(1 + e^(alpha - h/2)); algebraically identical
// to mode_log_fidelity, numerically an independent route.
double mode_log_partition_ratio(const State& a, const State& b, double eps);

double log_total_fidelity(const State& a, const State& b, double size);
double log_total_partition_ratio(const State& a, const State& b, double size);

// Band integral of the per-mode difference between the product-form and
// cosh-form routes; ~0 for the commuting model, measured at full precision.
double log_route_difference(const State& a, const State& b, double size);

struct FidelityResult {
    double f = 1.0;
    double c = 1.0;
    State state_a;
    State state_b;
};

// Solves both parameter points (the neighbor seeded from the base) and
// integrates the per-mode factors over the band.
FidelityResult total_fidelity(const Params& p);

// Enhanced zero-field susceptibility dM/dh_ext by symmetric finite
// differences of the re-solved magnetization; paramagnetic side only.
double susceptibility_fd(const Params& p, double h_probe = 1e-4);

}  // namespace phasefid::stoner
