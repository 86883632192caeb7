#pragma once
#include <cstdint>
#include <functional>
#include <utility>

#include "wcgl/potential.hpp"
#include "wcgl/rng.hpp"
#include "wcgl/vec2.hpp"

namespace wcgl {

// Point of R x S^3: r is the square-root energy scale, (xi, eta) lies on the
// unit 3-sphere (|xi|^2 + |eta|^2 = 1).
struct SphereCoord {
    double r = 0.0;
    Vec2 xi{}, eta{};
};

// (q, p) -> (r, xi, eta). Rejects the zero phase point.
SphereCoord psi(Vec2 q, Vec2 p, const PotentialPair& pp);

// Inverse map: q = theta(r^2 |xi|^2) r xi, p = sqrt(2) r eta. Site energy of
// the result is r^2 up to the root-finder tolerance.
std::pair<Vec2, Vec2> psi_inv(const SphereCoord& sc, const PotentialPair& pp);

// Exact draw from the microcanonical law on the energy-a shell: uniform
// S^3 proposals accepted with probability 1/(c Ubar'(rho(a |xi|^2))), which
// lies in [1/c^2, 1]. a = 0 returns the origin. When accept_ratio is non-null
// it receives accepted/proposed of this call.
std::pair<Vec2, Vec2> sample_shell(double a, const PotentialPair& pp, CounterRng& rng,
                                   double* accept_ratio = nullptr);

enum class ZMethod { monte_carlo, quadrature };

struct ZEstimate {
    double z = 0.0;
    double stderr_ = 0.0;
};

// Density of states Z(a) = 2 pi^2 a * I(a) with I(a) the S^3 average of
// 1/Ubar'(rho(a |xi|^2)). Monte Carlo uses n proposals; the quadrature
// variant is deterministic (stderr 0) and exploits |xi|^2 ~ Uniform(0,1).
ZEstimate partition_z(double a, const PotentialPair& pp, std::int64_t n, ZMethod method,
                      CounterRng* rng);

// I(a) by fixed-order Gauss-Legendre; smooth integrand, near machine accuracy.
double shell_weight_integral(double a, const PotentialPair& pp);

// Z'(a)/Z(a) = 1/a + I'(a)/I(a), I' by central differences with step
// max(1e-3 a, 1e-6). Requires a > 0.
double log_z_derivative(double a, const PotentialPair& pp);

using PhaseFn = std::function<double(Vec2 q, Vec2 p)>;

struct IbpResult {
    double lhs = 0.0;      // mu_a(g df/dp1)
    double rhs = 0.0;      // d/da mu_a(g p1 f) + (Z'/Z) mu_a(g p1 f)
    double residual = 0.0; // lhs - rhs
    double stderr_ = 0.0;  // batch-means error of the residual
};

// Monte Carlo check of the shell integration-by-parts identity in the first
// momentum coordinate. g must not depend on p. Uses common random numbers
// across the shells a and a +/- delta so the finite difference is quiet;
// df/dp1 is taken numerically (the O(step^2) error is far below the Monte
// Carlo error at any realistic n).
IbpResult check_integration_by_parts(double a, const PhaseFn& f, const PhaseFn& g,
                                     std::int64_t n, int n_batches, const PotentialPair& pp,
                                     CounterRng& rng);

} // namespace wcgl
