#include "wcgl/shell.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace wcgl {

namespace {

double ubar_ratio(const PotentialPair& pp, double z) {
    // sqrt(Ubar(z)/z), continuous at 0 with value sqrt(Ubar'(0)).
    if (z == 0.0) return std::sqrt(ubar_prime(pp, 0.0));
    return std::sqrt(ubar(pp, z) / z);
}

// 64-point Gauss-Legendre rule on [0,1], built once by Newton iteration on
// the Legendre recurrence.
struct GaussLegendre {
    std::array<double, 64> x{}, w{};
    GaussLegendre() {
        constexpr int n = 64;
        for (int i = 0; i < n; ++i) {
            double t = std::cos(3.14159265358979323846 * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = t;
                for (int k = 2; k <= n; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (t * p1 - p0) / (t * t - 1.0);
                const double dt = p1 / dp;
                t -= dt;
                if (std::abs(dt) < 1e-15) break;
            }
            x[i] = 0.5 * (1.0 - t); // map [-1,1] -> [0,1], order irrelevant
            w[i] = 1.0 / ((1.0 - t * t) * dp * dp);
        }
    }
};

const GaussLegendre& gl64() {
    static const GaussLegendre rule;
    return rule;
}

// Uniform point of S^3 from two Box-Muller pairs.
std::pair<Vec2, Vec2> uniform_s3(CounterRng& rng) {
    for (;;) {
        const auto g1 = rng.gaussian_pair();
        const auto g2 = rng.gaussian_pair();
        const double n2 = g1[0] * g1[0] + g1[1] * g1[1] + g2[0] * g2[0] + g2[1] * g2[1];
        if (n2 < 1e-24) continue;
        const double inv = 1.0 / std::sqrt(n2);
        return {{g1[0] * inv, g1[1] * inv}, {g2[0] * inv, g2[1] * inv}};
    }
}

} // namespace

SphereCoord psi(Vec2 q, Vec2 p, const PotentialPair& pp) {
    const double r2 = 0.5 * norm2(p) + u_pin(pp, q);
    if (r2 <= 0.0) throw std::invalid_argument("psi: zero phase point has no sphere coordinates");
    const double r = std::sqrt(r2);
    SphereCoord sc;
    sc.r = r;
    sc.xi = (ubar_ratio(pp, norm2(q)) / r) * q;
    sc.eta = (1.0 / (std::sqrt(2.0) * r)) * p;
    return sc;
}

std::pair<Vec2, Vec2> psi_inv(const SphereCoord& sc, const PotentialPair& pp) {
    if (sc.r < 0.0) throw std::invalid_argument("psi_inv: r must be >= 0");
    if (sc.r == 0.0) return {Vec2{}, Vec2{}};
    const double z = sc.r * sc.r * norm2(sc.xi);
    const Vec2 q = (theta(pp, z) * sc.r) * sc.xi;
    const Vec2 p = (std::sqrt(2.0) * sc.r) * sc.eta;
    return {q, p};
}

std::pair<Vec2, Vec2> sample_shell(double a, const PotentialPair& pp, CounterRng& rng,
                                   double* accept_ratio) {
    if (a < 0.0) throw std::invalid_argument("sample_shell: a must be >= 0");
    if (a == 0.0) {
        if (accept_ratio) *accept_ratio = 1.0;
        return {Vec2{}, Vec2{}};
    }
    const double r = std::sqrt(a);
    const double floor_p = 1.0 / (pp.c * pp.c);
    for (std::int64_t attempt = 1; attempt <= 1000000; ++attempt) {
        const auto [xi, eta] = uniform_s3(rng);
        const double pa = 1.0 / (pp.c * ubar_prime(pp, rho(pp, a * norm2(xi))));
        if (!(pa >= floor_p - 1e-12 && pa <= 1.0 + 1e-12))
            throw std::logic_error("sample_shell: acceptance weight left [1/c^2, 1]");
        if (rng.uniform() <= pa) {
            if (accept_ratio) *accept_ratio = 1.0 / static_cast<double>(attempt);
            return psi_inv({r, xi, eta}, pp);
        }
    }
    throw std::runtime_error("sample_shell: rejection loop failed to accept");
}

double shell_weight_integral(double a, const PotentialPair& pp) {
    if (a < 0.0) throw std::invalid_argument("shell_weight_integral: a must be >= 0");
    const auto& rule = gl64();
    double acc = 0.0;
    for (int i = 0; i < 64; ++i) acc += rule.w[i] / ubar_prime(pp, rho(pp, a * rule.x[i]));
    return acc;
}

ZEstimate partition_z(double a, const PotentialPair& pp, std::int64_t n, ZMethod method,
                      CounterRng* rng) {
    if (a < 0.0) throw std::invalid_argument("partition_z: a must be >= 0");
    if (a == 0.0) return {0.0, 0.0};
    const double pref = 2.0 * 3.14159265358979323846 * 3.14159265358979323846 * a; // 4 w4 a
    if (method == ZMethod::quadrature) return {pref * shell_weight_integral(a, pp), 0.0};
    if (n < 1) throw std::invalid_argument("partition_z: need n >= 1 samples");
    if (!rng) throw std::invalid_argument("partition_z: Monte Carlo needs an RNG");
    double sum = 0.0, sum2 = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        const auto [xi, eta] = uniform_s3(*rng);
        const double w = 1.0 / ubar_prime(pp, rho(pp, a * norm2(xi)));
        sum += w;
        sum2 += w * w;
    }
    const double mean = sum / static_cast<double>(n);
    const double var = std::max(0.0, sum2 / static_cast<double>(n) - mean * mean);
    const double se = (n > 1) ? std::sqrt(var / static_cast<double>(n - 1)) : 0.0;
    return {pref * mean, pref * se};
}

double log_z_derivative(double a, const PotentialPair& pp) {
    if (!(a > 0.0)) throw std::invalid_argument("log_z_derivative: a must be positive");
    double d = std::max(1e-3 * a, 1e-6);
    if (d >= a) d = 0.5 * a;
    const double ip = shell_weight_integral(a + d, pp);
    const double im = shell_weight_integral(a - d, pp);
    const double i0 = shell_weight_integral(a, pp);
    return 1.0 / a + (ip - im) / (2.0 * d * i0);
}

IbpResult check_integration_by_parts(double a, const PhaseFn& f, const PhaseFn& g,
                                     std::int64_t n, int n_batches, const PotentialPair& pp,
                                     CounterRng& rng) {
    if (!(a > 0.0)) throw std::invalid_argument("ibp: a must be positive");
    if (n_batches < 2) throw std::invalid_argument("ibp: need at least 2 batches");
    if (n < n_batches) throw std::invalid_argument("ibp: need at least one sample per batch");
    double d = std::max(1e-3 * a, 1e-6);
    if (d >= a) d = 0.5 * a;
    const std::array<double, 3> shells{a - d, a, a + d};
    const double dlz = log_z_derivative(a, pp);

    const std::int64_t per_batch = n / n_batches;
    std::vector<double> res_b, lhs_b, rhs_b;
    res_b.reserve(n_batches);
    for (int b = 0; b < n_batches; ++b) {
        // Common random numbers: one proposal serves all three shells, so the
        // central difference subtracts strongly correlated estimates.
        std::array<double, 3> sw{}, swpf{};
        double swd = 0.0;
        for (std::int64_t i = 0; i < per_batch; ++i) {
            const auto [xi, eta] = uniform_s3(rng);
            const double s = norm2(xi);
            for (int j = 0; j < 3; ++j) {
                const double aj = shells[j];
                const double w = 1.0 / ubar_prime(pp, rho(pp, aj * s));
                const auto [q, p] = psi_inv({std::sqrt(aj), xi, eta}, pp);
                sw[j] += w;
                swpf[j] += w * g(q, p) * p.x * f(q, p);
                if (j == 1) {
                    const double dp = 1e-5 * (1.0 + std::abs(p.x));
                    const double df =
                        (f(q, {p.x + dp, p.y}) - f(q, {p.x - dp, p.y})) / (2.0 * dp);
                    swd += w * g(q, p) * df;
                }
            }
        }
        const double lhs = swd / sw[1];
        const double mu_m = swpf[0] / sw[0], mu_0 = swpf[1] / sw[1], mu_p = swpf[2] / sw[2];
        const double rhs = (mu_p - mu_m) / (2.0 * d) + dlz * mu_0;
        lhs_b.push_back(lhs);
        rhs_b.push_back(rhs);
        res_b.push_back(lhs - rhs);
    }
    IbpResult out;
    const double nb = static_cast<double>(n_batches);
    for (int b = 0; b < n_batches; ++b) {
        out.lhs += lhs_b[b] / nb;
        out.rhs += rhs_b[b] / nb;
        out.residual += res_b[b] / nb;
    }
    double var = 0.0;
    for (double r : res_b) var += (r - out.residual) * (r - out.residual);
    out.stderr_ = std::sqrt(var / (nb * (nb - 1.0)));
    return out;
}

} // namespace wcgl
