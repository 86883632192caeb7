#pragma once
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "wcgl/lattice.hpp"
#include "wcgl/meso.hpp"
#include "wcgl/potential.hpp"

namespace wcgl {

struct Acf {
    std::vector<double> c;       // lags 0..max_lag, biased normalization
    std::vector<double> stderr_; // batch-means spread per lag
    int n_batches = 0;
};

// ACF of a stationary series with divide-by-n normalization, so c[0] is
// exactly the (biased) sample variance. Stderr is the spread across 2..32
// disjoint batches, each at least five lag windows long; requires
// max_lag < n/5.
Acf autocorrelation(const std::vector<double>& series, int max_lag);

struct DecayFit {
    std::string observable;
    double sigma = 0.0;  // noise strength label
    double lambda = 0.0; // fitted rate, -slope of log c
    double stderr_ = 0.0;
    double r2 = 0.0;
    double t_lo = 0.0, t_hi = 0.0;
    bool accepted = false; // r2 >= 0.9 and lambda > 0
};

// Least-squares line on log c(t) over the points with t in [t_lo, t_hi].
// Throws when the window holds fewer than three points or any nonpositive
// value (the log would be undefined).
DecayFit fit_decay_rate(const std::vector<double>& t, const std::vector<double>& c, double t_lo,
                        double t_hi, const std::string& observable = "", double sigma = 0.0);

// Strict local maxima of |c| with height > floor, as (times, heights). An
// oscillatory ACF with an exponential envelope has peak heights decaying at
// exactly the envelope rate, so feed these to fit_decay_rate. On estimated
// ACFs pass a floor of a few standard errors: near zero crossings the noise
// produces local maxima at the se scale whose logs are wild outliers.
std::pair<std::vector<double>, std::vector<double>> envelope_peaks(const std::vector<double>& t,
                                                                   const std::vector<double>& c,
                                                                   double floor = 0.0);

struct DistanceResult {
    double w1 = 0.0, ks = 0.0;
    double w1_err = 0.0, ks_err = 0.0; // bootstrap spread
    std::int64_t n_a = 0, n_b = 0;
};

// 1-Wasserstein (L1 gap of the empirical CDFs) and Kolmogorov-Smirnov
// distances between two samples, with stderr from n_boot paired bootstrap
// resamples. stream_tag separates the bootstrap randomness of independent
// calls under one seed.
DistanceResult empirical_distance(const std::vector<double>& a, const std::vector<double>& b,
                                  std::uint64_t seed, int n_boot = 200,
                                  std::uint64_t stream_tag = 0);

// Pooled ensemble ACF (over paths and spaced time origins) of the single-site
// flux observable q.p on one uncoupled site started from the energy-a shell.
// The observable is centered by symmetry, so raw lagged products are pooled.
struct PooledAcf {
    std::vector<double> t, c;
    std::vector<double> se; // per-lag spread of the per-path means / sqrt(n_paths)
    std::int64_t n_paths = 0, n_origins = 0;
};

PooledAcf single_site_flux_acf(double a, double sigma, const PotentialPair& pp, double T,
                               double h, int record_stride, double lag_max,
                               double origin_spacing, int n_paths, std::uint64_t seed,
                               int threads = 1);

// Significance floor for envelope_peaks on an estimated ACF: four median
// standard errors sits above the noise-bump maxima near zero crossings
// (~2-3 local se) while staying below peaks a sane fit window uses.
double peak_floor(const PooledAcf& acf);

struct ConvergeParams {
    std::vector<double> eps_list; // strictly decreasing, positive
    double t_macro = 1.0;
    int n_paths = 2000;
    std::vector<double> e0; // per-site initial shell energies
    double sigma = 1.0;
    double h_micro = 1e-3;
    double h_meso = 1e-3;
    std::uint64_t seed = 0;
    int n_boot = 200;
    int threads = 1;
};

struct DistanceReport {
    std::vector<double> eps;
    std::vector<std::int64_t> n_samples;
    std::vector<double> w1, w1_err, ks, ks_err;
    bool w1_monotone = false; // strictly decreasing along the (decreasing) eps list
    double t_macro = 0.0;
    std::vector<double> e0;
};

// Per eps: n_paths microscopic runs from the fixed product-shell start,
// horizon t_macro/eps^2, keeping site 0's energy at macro time t_macro; one
// matched mesoscopic ensemble on [0, t_macro]; distances between the two
// final-energy samples. A table coefficient source throws std::domain_error
// (with the offending energies) if the meso paths leave its hull.
DistanceReport convergence_study(const ConvergeParams& cp, const PotentialPair& pp,
                                 const Lattice& lat, const CoefficientSource& coeffs);

} // namespace wcgl
