#pragma once
#include <string>
#include <vector>

#include "wcgl/lattice.hpp"
#include "wcgl/potential.hpp"
#include "wcgl/vec2.hpp"

namespace wcgl {

// Microscopic state: (q_i, p_i) in R^2 x R^2 per site.
struct PhaseState {
    std::vector<Vec2> q, p;

    int n() const { return static_cast<int>(q.size()); }
    static PhaseState zeros(int n) { return {std::vector<Vec2>(n), std::vector<Vec2>(n)}; }
};

// Per-site energies; the state of the mesoscopic dynamics.
struct EnergyVector {
    std::vector<double> e;

    int n() const { return static_cast<int>(e.size()); }
};

// Throws std::invalid_argument when lengths mismatch or entries are not
// finite (EnergyVector additionally requires nonnegativity).
void check_state(const PhaseState& s, const Lattice& lat);
void check_energy(const EnergyVector& e);

// E_i = |p_i|^2/2 + U(q_i) + (eps/2) sum_{k~i} V(q_i - q_k).
double site_energy(const PhaseState& s, int i, double eps, const PotentialPair& pp,
                   const Lattice& lat);

// Power flowing into site i along the bond from k; antisymmetric in (i, k).
// The orientation makes d/dt E_i = eps * sum_k current(i, k) exact.
double current(const PhaseState& s, int i, int k, const PotentialPair& pp, const Lattice& lat);

// Equals the sum of site energies: each undirected bond contributes eps*V once.
double total_hamiltonian(const PhaseState& s, double eps, const PotentialPair& pp,
                         const Lattice& lat);

// Binary checkpoints: magic + version header, then N, d and the q, p arrays
// as little-endian 64-bit floats.
void save_checkpoint(const std::string& path, const PhaseState& s);
PhaseState load_checkpoint(const std::string& path);

} // namespace wcgl
