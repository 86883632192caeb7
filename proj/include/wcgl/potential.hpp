#pragma once
#include <string>
#include "wcgl/vec2.hpp"

namespace wcgl {

// Single-site pinning potential U(q) = Ubar(|q|^2) with Ubar smooth,
// increasing, Ubar(0) = 0, and 1/c <= Ubar' <= c.
enum class PinFamily { harmonic, softened };

// Pair coupling V, smooth and even with V(0) = 0 and |gradV(q)|^2 <= c U(q).
enum class CouplingFamily { harmonic_v, cosine_v };

struct PotentialPair {
    PinFamily pin = PinFamily::harmonic;
    double lambda = 0.0; // softened steepness, ignored for harmonic
    CouplingFamily coupling = CouplingFamily::harmonic_v;
    double k = 2.0;      // harmonic_v: V = (k/2)|q|^2; cosine_v: amplitude
    double c = 2.0;      // two-sided structural bound shared by Ubar' and gradV
};

// Validates the structural bounds on a dense grid, fixes c, and probes
// integrator stability at the default step; throws std::invalid_argument on
// any violation or unknown family name.
PotentialPair make_potential(PinFamily pin, double lambda, CouplingFamily coupling, double k);
PotentialPair make_potential(const std::string& pin_name, double lambda,
                             const std::string& coupling_name, double k);

const char* pin_family_name(PinFamily f);
const char* coupling_family_name(CouplingFamily f);

double ubar(const PotentialPair& pp, double r);       // r >= 0
double ubar_prime(const PotentialPair& pp, double r); // in [1/c, c]
double u_pin(const PotentialPair& pp, Vec2 q);        // Ubar(|q|^2)
Vec2 grad_u_pin(const PotentialPair& pp, Vec2 q);     // 2 Ubar'(|q|^2) q
double v_pair(const PotentialPair& pp, Vec2 q);
Vec2 grad_v_pair(const PotentialPair& pp, Vec2 q);

// Inverse of Ubar (safeguarded Newton in the bracket [z/c, c z], relative
// tolerance 1e-12) and the square-root ratio theta(z) = sqrt(rho(z)/z),
// continuous at 0 with theta(0) = sqrt(1/Ubar'(0)).
double rho(const PotentialPair& pp, double z);
double theta(const PotentialPair& pp, double z);

} // namespace wcgl
