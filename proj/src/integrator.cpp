#include "wcgl/integrator.hpp"

#include <cmath>
#include <stdexcept>

#include "wcgl/rng.hpp"

namespace wcgl {

namespace {

void add_forces(const PhaseState& s, double eps, const PotentialPair& pp, const Lattice& lat,
                std::vector<Vec2>& f) {
    const int n = s.n();
    for (int i = 0; i < n; ++i) f[i] = -1.0 * grad_u_pin(pp, s.q[i]);
    if (eps != 0.0) {
        for (const auto& e : lat.edges) {
            const Vec2 g = grad_v_pair(pp, s.q[e.a] - s.q[e.b]);
            f[e.a] -= eps * g;
            f[e.b] += eps * g;
        }
    }
}

void validate_params(const SimParams& p) {
    if (!(p.h > 0.0)) throw std::invalid_argument("sim: h must be positive");
    if (!(p.h <= p.T)) throw std::invalid_argument("sim: h must not exceed T");
    if (!(p.sigma >= 0.0)) throw std::invalid_argument("sim: sigma must be >= 0");
    if (!(p.eps >= 0.0)) throw std::invalid_argument("sim: eps must be >= 0");
    if (p.record_stride < 1) throw std::invalid_argument("sim: record_stride must be >= 1");
}

double eval_observable(const ObservableSpec& ob, const PhaseState& s, double eps,
                       const PotentialPair& pp, const Lattice& lat) {
    switch (ob.kind) {
        case ObservableSpec::Kind::current: return current(s, ob.i, ob.k, pp, lat);
        case ObservableSpec::Kind::site_energy_bare: return site_energy(s, ob.i, 0.0, pp, lat);
        case ObservableSpec::Kind::site_energy_full: return site_energy(s, ob.i, eps, pp, lat);
        case ObservableSpec::Kind::hamiltonian: return total_hamiltonian(s, eps, pp, lat);
    }
    throw std::invalid_argument("sim: unknown observable kind");
}

void ensure_finite(const PhaseState& s, std::uint64_t step) {
    for (int i = 0; i < s.n(); ++i) {
        if (!std::isfinite(s.q[i].x) || !std::isfinite(s.q[i].y) || !std::isfinite(s.p[i].x) ||
            !std::isfinite(s.p[i].y))
            throw std::runtime_error("sim: state became non-finite at site " + std::to_string(i) +
                                     ", step " + std::to_string(step) +
                                     " (integration step too large?)");
    }
}

} // namespace

void verlet_step(PhaseState& s, double h, double eps, const PotentialPair& pp,
                 const Lattice& lat) {
    if (h == 0.0) return;
    const int n = s.n();
    static thread_local std::vector<Vec2> f;
    f.resize(n);
    add_forces(s, eps, pp, lat, f);
    for (int i = 0; i < n; ++i) {
        s.p[i] += (0.5 * h) * f[i];
        s.q[i] += h * s.p[i];
    }
    add_forces(s, eps, pp, lat, f);
    for (int i = 0; i < n; ++i) s.p[i] += (0.5 * h) * f[i];
}

void noise_step(PhaseState& s, double h, double sigma, std::uint64_t seed,
                std::uint64_t trajectory_id, std::uint64_t substep) {
    if (sigma == 0.0 || h == 0.0) return;
    const double amp = sigma * std::sqrt(2.0 * h);
    const int n = s.n();
    for (int i = 0; i < n; ++i) {
        const std::uint64_t stream =
            make_stream(StreamPurpose::noise, trajectory_id, static_cast<std::uint64_t>(i));
        s.p[i] = rotate(s.p[i], amp * gaussian_at(seed, stream, substep));
    }
}

std::vector<ObservableSeries> simulate(const PhaseState& s0, const SimParams& params,
                                       const PotentialPair& pp, const Lattice& lat,
                                       const std::vector<ObservableSpec>& observers,
                                       PhaseState* final_state) {
    validate_params(params);
    check_state(s0, lat);
    const std::uint64_t n_steps = static_cast<std::uint64_t>(std::llround(params.T / params.h));
    if (n_steps < 1) throw std::invalid_argument("sim: T shorter than one step");

    std::vector<ObservableSeries> out(observers.size());
    for (std::size_t j = 0; j < observers.size(); ++j) out[j].name = observers[j].name;

    PhaseState s = s0;
    auto record = [&](std::uint64_t step) {
        const double t = static_cast<double>(step) * params.h;
        for (std::size_t j = 0; j < observers.size(); ++j) {
            out[j].t.push_back(t);
            out[j].value.push_back(eval_observable(observers[j], s, params.eps, pp, lat));
        }
    };
    record(0);
    for (std::uint64_t step = 0; step < n_steps; ++step) {
        noise_step(s, 0.5 * params.h, params.sigma, params.seed, params.trajectory_id, 2 * step);
        verlet_step(s, params.h, params.eps, pp, lat);
        noise_step(s, 0.5 * params.h, params.sigma, params.seed, params.trajectory_id,
                   2 * step + 1);
        if ((step + 1) % static_cast<std::uint64_t>(params.record_stride) == 0) {
            ensure_finite(s, step + 1);
            record(step + 1);
        }
    }
    ensure_finite(s, n_steps);
    if (final_state) *final_state = s;
    return out;
}

ObservableSeries rescaled_energy_path(const PhaseState& s0, const SimParams& params,
                                      const PotentialPair& pp, const Lattice& lat, int site,
                                      double t_macro, int n_out) {
    if (!(params.eps > 0.0))
        throw std::invalid_argument("rescaled_energy_path: eps must be positive");
    if (n_out < 1) throw std::invalid_argument("rescaled_energy_path: n_out must be >= 1");
    if (site < 0 || site >= lat.n_sites)
        throw std::invalid_argument("rescaled_energy_path: site out of range");
    check_state(s0, lat);
    if (!(params.h > 0.0)) throw std::invalid_argument("rescaled_energy_path: h must be positive");

    const double micro_T = t_macro / (params.eps * params.eps);
    ObservableSeries series;
    series.name = "EE_" + std::to_string(site);

    // Map each macroscopic sample time onto the nearest step boundary.
    std::vector<std::uint64_t> record_steps(n_out + 1);
    for (int m = 0; m <= n_out; ++m) {
        const double micro_t = micro_T * m / n_out;
        record_steps[m] = static_cast<std::uint64_t>(std::llround(micro_t / params.h));
    }
    for (int m = 1; m <= n_out; ++m) {
        if (record_steps[m] <= record_steps[m - 1])
            throw std::invalid_argument("rescaled_energy_path: time grid finer than the step");
    }

    PhaseState s = s0;
    std::size_t next = 0;
    const std::uint64_t n_steps = record_steps.back();
    for (std::uint64_t step = 0; step <= n_steps; ++step) {
        if (next <= static_cast<std::size_t>(n_out) && step == record_steps[next]) {
            series.t.push_back(t_macro * static_cast<double>(next) / n_out);
            series.value.push_back(site_energy(s, site, params.eps, pp, lat));
            ++next;
        }
        if (step == n_steps) break;
        noise_step(s, 0.5 * params.h, params.sigma, params.seed, params.trajectory_id, 2 * step);
        verlet_step(s, params.h, params.eps, pp, lat);
        noise_step(s, 0.5 * params.h, params.sigma, params.seed, params.trajectory_id,
                   2 * step + 1);
        if ((step & 0x3FF) == 0x3FF) ensure_finite(s, step);
    }
    ensure_finite(s, n_steps);
    return series;
}

} // namespace wcgl
