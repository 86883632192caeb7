#pragma once
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "wcgl/coefficients.hpp"
#include "wcgl/lattice.hpp"
#include "wcgl/potential.hpp"
#include "wcgl/state.hpp"

namespace wcgl {

// Exchange coefficients for the energy diffusion: either the closed form of
// the harmonic pair (gamma^2 = a b / sigma^2, alpha = -2 (a - b) / sigma^2)
// or bilinear interpolation in a measured table. Table queries outside the
// grid hull throw std::domain_error.
class CoefficientSource {
  public:
    static CoefficientSource harmonic(double sigma);
    static CoefficientSource from_table(CoefficientTable tbl);

    double gamma2(double a1, double a2) const;
    double alpha(double a1, double a2) const;

    bool closed_form() const { return closed_form_; }
    double sigma() const; // closed form only
    const CoefficientTable* table() const { return tbl_.get(); }

  private:
    CoefficientSource() = default;
    bool closed_form_ = true;
    double sigma_ = 1.0;
    std::shared_ptr<const CoefficientTable> tbl_;
};

struct MesoParams {
    double h = 1e-3;     // step
    double T = 1.0;      // horizon
    std::uint64_t seed = 0;
    std::uint64_t path_id = 0;
    int record_stride = 1;
    double beta = 1.0;   // labels stationarity output; the conditioned law is beta-free
    double total = 2.0;  // total energy for stationarity runs
};

struct MesoStats {
    std::int64_t increments = 0; // edge exchanges applied
    std::int64_t clamped = 0;    // exchanges truncated at a zero-energy boundary
    double clamp_frequency() const {
        return increments ? static_cast<double>(clamped) / static_cast<double>(increments) : 0.0;
    }
};

// One Euler-Maruyama step of the conservative energy exchange. noise(edge)
// must return a standard normal draw for this step. On edge (i, k), i < k,
//   delta = alpha(e_i, e_k) h + sqrt(2 gamma^2(e_i, e_k) h) Z
// is the energy moved into i; it is clamped to [-e_i, e_k] so both sites
// stay >= 0 exactly. Edges are updated in the lattice's canonical order and
// each exchange is applied immediately, so a later edge sees the energies the
// earlier ones left behind — that is what makes the clamp bound exact on
// sites with several edges. The total is conserved to rounding.
EnergyVector meso_step(const EnergyVector& e, double h, const CoefficientSource& coeffs,
                       const Lattice& lat, const std::function<double(std::size_t)>& noise,
                       MesoStats* stats = nullptr);

struct MesoPath {
    std::vector<double> t;
    std::vector<EnergyVector> e; // one row per record time
    MesoStats stats;
};

// Path on [0, T] recorded at t = 0 and every record_stride-th step. Noise is
// drawn per (path_id, edge, step) from the counter-based generator, so paths
// are reproducible and independent across path ids.
MesoPath meso_simulate(const EnergyVector& e0, const MesoParams& params,
                       const CoefficientSource& coeffs, const Lattice& lat);

struct StationarityReport {
    double ks = 0.0;               // KS distance to the conditioned law
    std::int64_t n = 0;            // post-burn-in samples
    double burn_in_time = 0.0;
    double sample_spacing = 0.0;
    double clamp_frequency = 0.0;
    double halves_ks = 0.0;        // two-sample KS between the run's halves
    double halves_threshold = 0.0;
    bool insufficient_burn_in = false;
    double beta = 1.0;
    double total = 0.0;
};

// Long-run marginal of e_1 at fixed total S on a two-site lattice against
// the conditioned density ~ Z(e) Z(S - e) on [0, S]. The closed-form source
// uses Z(a) ~ a exactly; a table source needs pp to rebuild Z by quadrature.
// Burn-in and sample spacing are derived from the drift's relaxation rate at
// the simplex center and echoed in the report. beta is metadata only.
StationarityReport stationarity_check(const Lattice& lat, const CoefficientSource& coeffs,
                                      double beta, const MesoParams& params,
                                      const PotentialPair* pp = nullptr);

} // namespace wcgl
