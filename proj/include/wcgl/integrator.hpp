#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "wcgl/lattice.hpp"
#include "wcgl/potential.hpp"
#include "wcgl/state.hpp"

namespace wcgl {

struct SimParams {
    double eps = 0.0;
    double sigma = 1.0; // sigma = 0 degenerates the noise step to the identity
    double h = 1e-3;
    double T = 1.0;
    std::uint64_t seed = 0;
    std::uint64_t trajectory_id = 0; // selects the noise streams of this trajectory
    int record_stride = 1;
};

struct ObservableSpec {
    enum class Kind {
        current,          // j along the bond (i, k)
        site_energy_bare, // E_i at eps = 0
        site_energy_full, // E_i including the interaction share
        hamiltonian,      // total H
    };
    Kind kind = Kind::hamiltonian;
    int i = 0, k = 0;
    std::string name; // CSV column header
};

struct ObservableSeries {
    std::string name;
    std::vector<double> t, value;
};

// One velocity-Verlet step of the Hamiltonian part (time-reversible,
// symplectic, O(h^3) local energy error).
void verlet_step(PhaseState& s, double h, double eps, const PotentialPair& pp,
                 const Lattice& lat);

// Rotates every p_i by an independent Gaussian angle of variance 2 sigma^2 h:
// exact sampling of the momentum diffusion over time h. |p_i| is preserved
// exactly; q is untouched. `substep` indexes the draw along the trajectory.
void noise_step(PhaseState& s, double h, double sigma, std::uint64_t seed,
                std::uint64_t trajectory_id, std::uint64_t substep);

// Strang composition (half noise, Verlet, half noise) over round(T/h) steps,
// recording the requested observables every record_stride steps (always
// including t = 0). Aborts with a diagnostic if the state turns non-finite.
// When final_state is non-null it receives the end state.
std::vector<ObservableSeries> simulate(const PhaseState& s0, const SimParams& params,
                                       const PotentialPair& pp, const Lattice& lat,
                                       const std::vector<ObservableSpec>& observers,
                                       PhaseState* final_state = nullptr);

// Site energy on the macroscopic clock: samples E_i at n_out+1 uniform times
// on [0, t_macro], i.e. microscopic horizon (t_macro / eps^2). Requires eps > 0.
ObservableSeries rescaled_energy_path(const PhaseState& s0, const SimParams& params,
                                      const PotentialPair& pp, const Lattice& lat, int site,
                                      double t_macro, int n_out);

} // namespace wcgl
