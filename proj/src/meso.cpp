#include "wcgl/meso.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wcgl/rng.hpp"
#include "wcgl/shell.hpp"

namespace wcgl {

CoefficientSource CoefficientSource::harmonic(double sigma) {
    if (!(sigma > 0.0))
        throw std::invalid_argument("coefficient source: sigma must be positive");
    CoefficientSource s;
    s.closed_form_ = true;
    s.sigma_ = sigma;
    return s;
}

CoefficientSource CoefficientSource::from_table(CoefficientTable tbl) {
    if (tbl.grid.size() < 2)
        throw std::invalid_argument("coefficient source: table grid too small");
    CoefficientSource s;
    s.closed_form_ = false;
    s.tbl_ = std::make_shared<const CoefficientTable>(std::move(tbl));
    return s;
}

double CoefficientSource::gamma2(double a1, double a2) const {
    if (closed_form_) return a1 * a2 / (sigma_ * sigma_);
    return interpolate(*tbl_, a1, a2).first;
}

double CoefficientSource::alpha(double a1, double a2) const {
    if (closed_form_) return -2.0 * (a1 - a2) / (sigma_ * sigma_);
    return interpolate(*tbl_, a1, a2).second;
}

double CoefficientSource::sigma() const {
    if (!closed_form_)
        throw std::logic_error("coefficient source: sigma is defined for the closed form only");
    return sigma_;
}

EnergyVector meso_step(const EnergyVector& e, double h, const CoefficientSource& coeffs,
                       const Lattice& lat, const std::function<double(std::size_t)>& noise,
                       MesoStats* stats) {
    if (e.n() != lat.n_sites) throw std::invalid_argument("meso_step: size mismatch");
    if (!(h > 0.0)) throw std::invalid_argument("meso_step: step must be positive");
    EnergyVector out = e;
    for (double v : out.e) {
        if (!(v >= 0.0)) throw std::invalid_argument("meso_step: negative input energy");
    }
    const double sqh = std::sqrt(h);
    for (std::size_t ei = 0; ei < lat.edges.size(); ++ei) {
        const auto [a, b] = lat.edges[ei];
        double& ea = out.e[a];
        double& eb = out.e[b];
        const double g2 = std::max(0.0, coeffs.gamma2(ea, eb));
        double delta = coeffs.alpha(ea, eb) * h + std::sqrt(2.0 * g2) * sqh * noise(ei);
        if (delta < -ea || delta > eb) {
            delta = std::clamp(delta, -ea, eb);
            if (stats) ++stats->clamped;
        }
        ea += delta;
        eb -= delta;
        if (stats) ++stats->increments;
    }
    return out;
}

MesoPath meso_simulate(const EnergyVector& e0, const MesoParams& params,
                       const CoefficientSource& coeffs, const Lattice& lat) {
    if (!(params.h > 0.0) || !(params.T > 0.0) || params.h > params.T)
        throw std::invalid_argument("meso_simulate: need 0 < h <= T");
    if (params.record_stride < 1)
        throw std::invalid_argument("meso_simulate: record_stride must be >= 1");
    check_energy(e0);

    const std::int64_t n_steps = std::llround(params.T / params.h);
    MesoPath path;
    path.t.push_back(0.0);
    path.e.push_back(e0);
    EnergyVector cur = e0;
    for (std::int64_t step = 0; step < n_steps; ++step) {
        auto noise = [&](std::size_t edge) {
            return gaussian_at(params.seed,
                               make_stream(StreamPurpose::meso, params.path_id, edge),
                               static_cast<std::uint64_t>(step));
        };
        cur = meso_step(cur, params.h, coeffs, lat, noise, &path.stats);
        if ((step + 1) % params.record_stride == 0) {
            path.t.push_back(static_cast<double>(step + 1) * params.h);
            path.e.push_back(cur);
        }
    }
    return path;
}

namespace {

// Conditioned CDF of e_1 on [0, S] for two sites: F ~ integral of
// Z(e) Z(S - e). Closed form when Z ~ a; trapezoid on a fine grid otherwise.
struct ConditionedCdf {
    double S;
    std::vector<double> grid, cdf; // empty when the closed form applies

    double operator()(double x) const {
        if (x <= 0.0) return 0.0;
        if (x >= S) return 1.0;
        if (grid.empty()) {
            const double u = x / S;
            return u * u * (3.0 - 2.0 * u);
        }
        const auto it = std::upper_bound(grid.begin(), grid.end(), x);
        const std::size_t j = static_cast<std::size_t>(it - grid.begin());
        const double x0 = grid[j - 1], x1 = grid[j];
        const double f0 = cdf[j - 1], f1 = cdf[j];
        return f0 + (f1 - f0) * (x - x0) / (x1 - x0);
    }
};

ConditionedCdf make_conditioned_cdf(double S, const CoefficientSource& coeffs,
                                    const PotentialPair* pp) {
    ConditionedCdf F;
    F.S = S;
    if (coeffs.closed_form()) return F;
    if (!pp)
        throw std::invalid_argument(
            "stationarity_check: a table source needs the potential pair to rebuild Z");
    const int M = 2001;
    F.grid.resize(M);
    F.cdf.resize(M);
    std::vector<double> w(M);
    for (int i = 0; i < M; ++i) {
        const double x = S * static_cast<double>(i) / (M - 1);
        F.grid[i] = x;
        // Z(a) = 2 pi^2 a I(a); the constant cancels after normalization.
        const double za = x * shell_weight_integral(x, *pp);
        const double zb = (S - x) * shell_weight_integral(S - x, *pp);
        w[i] = za * zb;
    }
    F.cdf[0] = 0.0;
    for (int i = 1; i < M; ++i)
        F.cdf[i] = F.cdf[i - 1] + 0.5 * (w[i - 1] + w[i]) * (F.grid[i] - F.grid[i - 1]);
    const double norm = F.cdf[M - 1];
    if (!(norm > 0.0)) throw std::runtime_error("stationarity_check: degenerate reference law");
    for (double& v : F.cdf) v /= norm;
    return F;
}

double one_sample_ks(std::vector<double>& x, const ConditionedCdf& F) {
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = F(x[i]);
        d = std::max(d, std::max(f - static_cast<double>(i) / n,
                                 static_cast<double>(i + 1) / n - f));
    }
    return d;
}

double two_sample_ks(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j]) ++i; else ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / a.size() -
                                 static_cast<double>(j) / b.size()));
    }
    return d;
}

} // namespace

StationarityReport stationarity_check(const Lattice& lat, const CoefficientSource& coeffs,
                                      double beta, const MesoParams& params,
                                      const PotentialPair* pp) {
    if (lat.n_sites != 2)
        throw std::invalid_argument(
            "stationarity_check: the conditioned reference law is two-site; pass a 2-site "
            "lattice");
    if (!(beta > 0.0)) throw std::invalid_argument("stationarity_check: beta must be positive");
    if (!(params.total >= 0.0))
        throw std::invalid_argument("stationarity_check: total energy must be >= 0");
    if (!(params.h > 0.0) || !(params.T > 0.0) || params.h > params.T)
        throw std::invalid_argument("stationarity_check: need 0 < h <= T");

    StationarityReport rep;
    rep.beta = beta;
    rep.total = params.total;

    const double S = params.total;
    if (S == 0.0) {
        // Zero simplex is the single point (0, 0): the run is constant and
        // matches the point-mass reference exactly.
        rep.ks = 0.0;
        rep.n = 0;
        return rep;
    }

    // Relaxation rate of the energy difference, linearized at the simplex
    // center; drives the burn-in and decorrelation spacing.
    const double c = 0.5 * S, d = 0.05 * c;
    double rate = -coeffs.alpha(c + d, c - d) / d;
    if (!(rate > 0.0)) rate = 8.0 * std::max(coeffs.gamma2(c, c), 1e-12) / (S * S);
    const double tau = 1.0 / rate;
    rep.sample_spacing = std::clamp(3.0 * tau, 10.0 * params.h, params.T / 100.0);
    rep.burn_in_time = std::min(0.25 * params.T,
                                std::max(20.0 * tau, 10.0 * rep.sample_spacing));

    const ConditionedCdf F = make_conditioned_cdf(S, coeffs, pp);

    const std::int64_t n_steps = std::llround(params.T / params.h);
    const std::int64_t burn_steps = std::llround(rep.burn_in_time / params.h);
    const std::int64_t spacing_steps =
        std::max<std::int64_t>(1, std::llround(rep.sample_spacing / params.h));

    EnergyVector cur;
    cur.e.assign(2, c);
    MesoStats stats;
    std::vector<double> samples;
    samples.reserve(static_cast<std::size_t>((n_steps - burn_steps) / spacing_steps + 1));
    for (std::int64_t step = 0; step < n_steps; ++step) {
        auto noise = [&](std::size_t edge) {
            return gaussian_at(params.seed,
                               make_stream(StreamPurpose::meso, params.path_id, edge),
                               static_cast<std::uint64_t>(step));
        };
        cur = meso_step(cur, params.h, coeffs, lat, noise, &stats);
        if (step >= burn_steps && (step - burn_steps) % spacing_steps == 0)
            samples.push_back(cur.e[0]);
    }
    if (samples.size() < 100)
        throw std::invalid_argument("stationarity_check: horizon too short for 100 samples");

    rep.n = static_cast<std::int64_t>(samples.size());
    rep.clamp_frequency = stats.clamp_frequency();

    const std::size_t half = samples.size() / 2;
    std::vector<double> first(samples.begin(), samples.begin() + half);
    std::vector<double> second(samples.begin() + half, samples.end());
    rep.halves_ks = two_sample_ks(std::move(first), std::move(second));
    const double n1 = static_cast<double>(half);
    const double n2 = static_cast<double>(samples.size() - half);
    rep.halves_threshold = 1.95 * std::sqrt((n1 + n2) / (n1 * n2));
    rep.insufficient_burn_in = rep.halves_ks > rep.halves_threshold;

    rep.ks = one_sample_ks(samples, F);
    return rep;
}

} // namespace wcgl
