#include "wcgl/potential.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace wcgl {

double ubar(const PotentialPair& pp, double r) {
    if (r < 0.0) throw std::invalid_argument("ubar: negative radial argument");
    switch (pp.pin) {
        case PinFamily::harmonic: return 0.5 * r;
        case PinFamily::softened: return 0.5 * r + pp.lambda * (r - std::log1p(r));
    }
    throw std::invalid_argument("ubar: unknown pin family");
}

double ubar_prime(const PotentialPair& pp, double r) {
    if (r < 0.0) throw std::invalid_argument("ubar_prime: negative radial argument");
    switch (pp.pin) {
        case PinFamily::harmonic: return 0.5;
        case PinFamily::softened: return 0.5 + pp.lambda * r / (1.0 + r);
    }
    throw std::invalid_argument("ubar_prime: unknown pin family");
}

double u_pin(const PotentialPair& pp, Vec2 q) { return ubar(pp, norm2(q)); }

Vec2 grad_u_pin(const PotentialPair& pp, Vec2 q) { return (2.0 * ubar_prime(pp, norm2(q))) * q; }

double v_pair(const PotentialPair& pp, Vec2 q) {
    switch (pp.coupling) {
        case CouplingFamily::harmonic_v: return 0.5 * pp.k * norm2(q);
        // Both built-in families already vanish at q = 0, which is the
        // normalization the rest of the toolkit assumes.
        case CouplingFamily::cosine_v: return pp.k * (1.0 - std::cos(q.x)) * (1.0 - std::cos(q.y));
    }
    throw std::invalid_argument("v_pair: unknown coupling family");
}

Vec2 grad_v_pair(const PotentialPair& pp, Vec2 q) {
    switch (pp.coupling) {
        case CouplingFamily::harmonic_v: return pp.k * q;
        case CouplingFamily::cosine_v:
            return {pp.k * std::sin(q.x) * (1.0 - std::cos(q.y)),
                    pp.k * (1.0 - std::cos(q.x)) * std::sin(q.y)};
    }
    throw std::invalid_argument("grad_v_pair: unknown coupling family");
}

double rho(const PotentialPair& pp, double z) {
    if (z < 0.0) throw std::invalid_argument("rho: negative argument");
    if (z == 0.0) return 0.0;
    if (pp.pin == PinFamily::harmonic) return 2.0 * z;
    // Safeguarded Newton: Ubar is increasing with Ubar' in [1/c, c], so the
    // root lies in [z/c, c z] and Newton steps that leave the bracket fall
    // back to bisection.
    double lo = z / pp.c, hi = pp.c * z;
    double r = z;
    // Relative residual target: terms in Ubar(r) - z are O(z), so the
    // attainable cancellation floor is ~eps*z and 1e-12*z stays safely above
    // it at every scale (an absolute floor would stall Newton for tiny z).
    const double tol = 1e-12 * z;
    for (int it = 0; it < 200; ++it) {
        const double f = ubar(pp, r) - z;
        if (std::abs(f) <= tol) return r;
        if (f > 0.0) hi = r; else lo = r;
        const double rn = r - f / ubar_prime(pp, r);
        r = (rn > lo && rn < hi) ? rn : 0.5 * (lo + hi);
    }
    throw std::runtime_error("rho: root finder failed to converge");
}

double theta(const PotentialPair& pp, double z) {
    if (z < 0.0) throw std::invalid_argument("theta: negative argument");
    if (z == 0.0) return std::sqrt(1.0 / ubar_prime(pp, 0.0));
    return std::sqrt(rho(pp, z) / z);
}

const char* pin_family_name(PinFamily f) {
    return f == PinFamily::harmonic ? "harmonic" : "softened";
}

const char* coupling_family_name(CouplingFamily f) {
    return f == CouplingFamily::harmonic_v ? "harmonic_v" : "cosine_v";
}

namespace {

// Construction-time checks of the structural assumptions, on dense grids.
void validate(const PotentialPair& pp) {
    if (ubar(pp, 0.0) != 0.0) throw std::invalid_argument("potential: Ubar(0) != 0");
    // c-bounds for Ubar' on a log grid spanning many decades plus 0.
    std::vector<double> rs{0.0};
    for (int i = -90; i <= 90; ++i) rs.push_back(std::pow(10.0, i / 10.0));
    for (double r : rs) {
        const double d = ubar_prime(pp, r);
        if (!(d >= 1.0 / pp.c - 1e-15 && d <= pp.c + 1e-15))
            throw std::invalid_argument("potential: Ubar' violates the c-bounds");
    }
    // V even, gradV(0) = 0, and |gradV|^2 <= c U on a polar grid.
    const Vec2 g0 = grad_v_pair(pp, {0.0, 0.0});
    if (norm(g0) != 0.0) throw std::invalid_argument("potential: gradV(0) != 0");
    for (int ir = 0; ir < 60; ++ir) {
        const double r = std::pow(10.0, -3.0 + ir * 0.1); // 1e-3 .. ~8e2
        for (int ia = 0; ia < 16; ++ia) {
            const double t = 6.283185307179586 * ia / 16.0;
            const Vec2 q{r * std::cos(t), r * std::sin(t)};
            const double dv = v_pair(pp, q) - v_pair(pp, -q);
            if (std::abs(dv) > 1e-12 * (1.0 + std::abs(v_pair(pp, q))))
                throw std::invalid_argument("potential: V is not even");
            if (norm2(grad_v_pair(pp, q)) > pp.c * u_pin(pp, q) * (1.0 + 1e-12))
                throw std::invalid_argument("potential: |gradV|^2 > c U on the test grid");
        }
    }
}

// Short single-site probe at the default integration step: rejects parameter
// combinations that the default step cannot integrate stably.
void probe_stability(const PotentialPair& pp) {
    const double h = 1e-3;
    Vec2 q{1.0, 0.3}, p{0.2, -1.0};
    const double e0 = 0.5 * norm2(p) + u_pin(pp, q);
    for (int s = 0; s < 200; ++s) {
        p -= (0.5 * h) * grad_u_pin(pp, q);
        q += h * p;
        p -= (0.5 * h) * grad_u_pin(pp, q);
    }
    const double e1 = 0.5 * norm2(p) + u_pin(pp, q);
    if (!std::isfinite(e1) || std::abs(e1 - e0) > 1e-4 * std::max(1.0, e0))
        throw std::invalid_argument("potential: unstable at the default step h = 1e-3");
}

} // namespace

PotentialPair make_potential(PinFamily pin, double lambda, CouplingFamily coupling, double k) {
    if (pin == PinFamily::softened && !(lambda >= 0.0 && std::isfinite(lambda)))
        throw std::invalid_argument("potential: softened family needs lambda >= 0");
    if (!(k > 0.0 && std::isfinite(k)))
        throw std::invalid_argument("potential: coupling amplitude must be positive");
    PotentialPair pp;
    pp.pin = pin;
    pp.lambda = (pin == PinFamily::softened) ? lambda : 0.0;
    pp.coupling = coupling;
    pp.k = k;
    // c serves both structural bounds: the Ubar' band and |gradV|^2 <= c U.
    double c = (pin == PinFamily::softened) ? std::max(2.0, 2.0 * lambda + 1.0) : 2.0;
    if (coupling == CouplingFamily::harmonic_v) {
        // sup |gradV|^2 / U = k^2 / inf Ubar' = 2 k^2 for both pin families.
        c = std::max(c, 2.0 * k * k);
    } else {
        double worst = 0.0;
        for (int ir = 1; ir <= 400; ++ir) {
            const double r = ir * 0.025; // up to |q| = 10
            for (int ia = 0; ia < 32; ++ia) {
                const double t = 6.283185307179586 * ia / 32.0;
                const Vec2 q{r * std::cos(t), r * std::sin(t)};
                worst = std::max(worst, norm2(grad_v_pair(pp, q)) / u_pin(pp, q));
            }
        }
        c = std::max(c, worst * 1.05);
    }
    pp.c = c;
    validate(pp);
    probe_stability(pp);
    return pp;
}

PotentialPair make_potential(const std::string& pin_name, double lambda,
                             const std::string& coupling_name, double k) {
    PinFamily pin;
    if (pin_name == "harmonic") pin = PinFamily::harmonic;
    else if (pin_name == "softened") pin = PinFamily::softened;
    else throw std::invalid_argument("potential: unknown pin family '" + pin_name + "'");
    CouplingFamily cf;
    if (coupling_name == "harmonic_v") cf = CouplingFamily::harmonic_v;
    else if (coupling_name == "cosine_v") cf = CouplingFamily::cosine_v;
    else throw std::invalid_argument("potential: unknown coupling family '" + coupling_name + "'");
    return make_potential(pin, lambda, cf, k);
}

} // namespace wcgl
