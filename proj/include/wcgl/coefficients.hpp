#pragma once
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "wcgl/potential.hpp"

namespace wcgl {

struct GkParams {
    std::int64_t n_traj = 10000;
    double T_max = 20.0;         // per-trajectory horizon
    double h = 1e-3;             // integrator step
    int record_stride = 10;      // current sampled every record_stride steps
    double lag_max = 0.0;        // ACF computed on [0, lag_max]; 0 -> T_max/2
    double origin_spacing = 0.0; // time-origin spacing; 0 -> 1/sigma^2
    bool diagnostic_zero = false; // run the estimator even on a zero shell
    bool tail_extrapolation = false; // add a fitted exponential tail beyond T*
    int threads = 1;
};

struct GkResult {
    double gamma2 = 0.0;
    double stderr_ = 0.0;
    double t_star = 0.0; // adaptive truncation lag actually used
    std::int64_t n_traj = 0;
    std::int64_t n_origins = 0;
    bool zero_shortcut = false;   // returned (0,0) without simulating
    bool warn_short_tmax = false; // T_max < 10 correlation times
    bool warn_truncation = false; // ACF never fell below the noise floor
    bool tail_extrapolated = false;
    std::vector<double> acf_t, acf_c; // pooled current ACF (diagnostics)
};

// Green-Kubo estimate of gamma^2(a1, a2): n_traj independent two-site systems
// drawn from the product of energy shells, evolved uncoupled (eps = 0); the
// bond current ACF is averaged over time origins and trajectories, then
// integrated up to the adaptive truncation lag T*. Stderr is the jackknife
// over trajectories. A zero shell returns (0, 0) immediately unless
// diagnostic_zero is set. traj_base offsets the RNG streams so independent
// cells never share randomness.
GkResult green_kubo_gamma2(double a1, double a2, double sigma, const PotentialPair& pp,
                           const GkParams& gkp, std::uint64_t seed, std::uint64_t traj_base = 0);

// Closed forms for the harmonic pair: gamma^2 = a1 a2 / sigma^2 and
// alpha = -2 (a1 - a2) / sigma^2.
std::pair<double, double> harmonic_coefficients(double a1, double a2, double sigma);

struct CoefficientTable {
    double sigma = 1.0;
    std::vector<double> grid; // sorted, starts at 0
    // Row-major over grid pairs; index (i, j) is grid[i] x grid[j].
    std::vector<double> gamma2, gamma2_err, G, G_err, alpha, alpha_err, t_star;
    std::vector<std::uint8_t> failed;
    // Provenance.
    std::uint64_t seed = 0;
    std::int64_t n_traj = 0;
    double T_max = 0.0, h = 0.0;
    std::string pin_name, coupling_name;
    double lambda = 0.0, k = 0.0;
    std::string sign_convention;

    int m() const { return static_cast<int>(grid.size()); }
    int idx(int i, int j) const { return i * m() + j; }
    double a_min() const { return grid.front(); }
    double a_max() const { return grid.back(); }
};

// Fills a full table on grid x grid: Green-Kubo on the cells with both
// energies positive (computed once per unordered pair and mirrored), exact
// zeros on the axes, G extrapolated onto the axes from the two nearest grid
// levels, then alpha on every pair via alpha_from_table. Deterministic for a
// fixed seed. Grid must be sorted, start at 0, and carry >= 2 positive levels.
CoefficientTable tabulate(const std::vector<double>& grid, double sigma, const PotentialPair& pp,
                          const GkParams& gkp, std::uint64_t seed);

// Bilinear interpolation in the G parameterization: gamma^2 = a1 a2 G keeps
// the axis degeneracy exact; alpha is interpolated with antisymmetrization.
// Queries outside the grid hull throw std::domain_error.
std::pair<double, double> interpolate(const CoefficientTable& tbl, double a1, double a2);

// Fluctuation-dissipation route to the drift:
//   alpha = (d/da1 - d/da2) gamma^2 + (Z'/Z(a1) - Z'/Z(a2)) gamma^2,
// evaluated on the G interpolant with central differences (relative step
// 1e-2, one-sided at the hull) plus the quadrature Z'/Z. On the axes the
// finite one-sided limit 2 a G(0, a) is used. The stderr propagates every
// cell's G error through the (linear) pipeline.
std::pair<double, double> alpha_from_table(double a1, double a2, const CoefficientTable& tbl,
                                           const PotentialPair& pp);

// Persistence: CSV of all pairs plus a JSON sidecar with provenance; the pair
// reloads bit-exactly.
std::string table_to_csv(const CoefficientTable& tbl);
std::string table_meta_to_json(const CoefficientTable& tbl);
CoefficientTable table_from_files(const std::string& csv_text, const std::string& json_text);

} // namespace wcgl
