#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "wcgl/potential.hpp"
#include "wcgl/rng.hpp"
#include "wcgl/shell.hpp"

using namespace wcgl;

namespace {
const PotentialPair& hp() {
    static const auto pp =
        make_potential(PinFamily::harmonic, 0.0, CouplingFamily::harmonic_v, 2.0);
    return pp;
}
const PotentialPair& sp() {
    static const auto pp =
        make_potential(PinFamily::softened, 1.0, CouplingFamily::harmonic_v, 2.0);
    return pp;
}
constexpr double kZ1Harmonic = 39.47841760435743; // 4 pi^2
} // namespace

TEST_CASE("psi on a hand point and its edge cases") {
    const auto sc = psi({1.0, 0.0}, {0.0, 0.0}, hp());
    CHECK(sc.r == doctest::Approx(std::sqrt(0.5)).epsilon(1e-14));
    CHECK(sc.xi.x == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(sc.xi.y == 0.0);
    CHECK(sc.eta.x == 0.0);
    CHECK(sc.eta.y == 0.0);

    CHECK_THROWS_AS(psi({0.0, 0.0}, {0.0, 0.0}, hp()), std::invalid_argument);

    // r = 0 inverts to the origin; negative r is rejected.
    const auto [q0, p0] = psi_inv({0.0, {1.0, 0.0}, {0.0, 0.0}}, sp());
    CHECK(q0.x == 0.0);
    CHECK(p0.y == 0.0);
    CHECK_THROWS_AS(psi_inv({-1.0, {1.0, 0.0}, {0.0, 0.0}}, sp()), std::invalid_argument);
}

TEST_CASE("psi and psi_inv are mutually inverse; image lies on S^3") {
    for (int fam = 0; fam < 2; ++fam) {
        const auto& pp = fam == 0 ? hp() : sp();
        CounterRng rng(101 + fam, make_stream(StreamPurpose::misc, 20 + fam, 0));
        for (int trial = 0; trial < 10000; ++trial) {
            const Vec2 q{4 * rng.uniform() - 2, 4 * rng.uniform() - 2};
            const Vec2 p{4 * rng.uniform() - 2, 4 * rng.uniform() - 2};
            if (norm2(q) + norm2(p) < 1e-8) continue;
            const auto sc = psi(q, p, pp);
            CHECK(norm2(sc.xi) + norm2(sc.eta) == doctest::Approx(1.0).epsilon(1e-12));
            const auto [q2, p2] = psi_inv(sc, pp);
            CHECK(q2.x == doctest::Approx(q.x).epsilon(1e-10));
            CHECK(q2.y == doctest::Approx(q.y).epsilon(1e-10));
            CHECK(p2.x == doctest::Approx(p.x).epsilon(1e-10));
            CHECK(p2.y == doctest::Approx(p.y).epsilon(1e-10));
            // Site energy of the inverse is r^2 by construction.
            const double e = 0.5 * norm2(p2) + u_pin(pp, q2);
            CHECK(e == doctest::Approx(sc.r * sc.r).epsilon(1e-10));
        }
    }
}

TEST_CASE("shell sampler: exact moments on the harmonic shell") {
    CounterRng rng(7, make_stream(StreamPurpose::shell, 1, 0));
    const double a = 1.0;
    const std::int64_t n = 200000;
    double sp2 = 0.0, sp1 = 0.0, sq1 = 0.0, scross = 0.0, inv_ratio = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        double ratio = 0.0;
        const auto [q, p] = sample_shell(a, hp(), rng, &ratio);
        inv_ratio += 1.0 / ratio;
        sp2 += norm2(p);
        sp1 += p.x;
        // Harmonic: q = sqrt(2a) xi, p = sqrt(2a) eta, so these are S^3 moments.
        sq1 += q.x * q.x / (2 * a);
        scross += (q.x * q.x / (2 * a)) * (q.y * q.y / (2 * a));
        const double e = 0.5 * norm2(p) + u_pin(hp(), q);
        REQUIRE(e == doctest::Approx(a).epsilon(1e-10));
    }
    const double nn = static_cast<double>(n);
    // E|p|^2 = a (se from Var = a^2/3), E p1 = 0 (Var = a/2),
    // E xi1^2 = 1/4 (Var = 1/16), E xi1^2 xi2^2 = 1/24.
    CHECK(sp2 / nn == doctest::Approx(1.0).epsilon(3 * std::sqrt(1.0 / 3.0 / nn)));
    CHECK(sp1 / nn == doctest::Approx(0.0).epsilon(3 * std::sqrt(0.5 / nn)));
    CHECK(sq1 / nn == doctest::Approx(0.25).epsilon(3 * std::sqrt(1.0 / 16.0 / nn)));
    CHECK(scross / nn == doctest::Approx(1.0 / 24.0).epsilon(3 * std::sqrt(3e-3 / nn)));
    // Acceptance probability is exactly 1/(c Ubar') = 1/4 for this family.
    const double rate = nn / inv_ratio;
    CHECK(rate == doctest::Approx(0.25).epsilon(0.04));
    CHECK(rate >= 1.0 / (hp().c * hp().c));
}

TEST_CASE("shell sampler edge cases") {
    CounterRng rng(7, make_stream(StreamPurpose::shell, 2, 0));
    double ratio = 0.0;
    const auto [q, p] = sample_shell(0.0, hp(), rng, &ratio);
    CHECK(q.x == 0.0);
    CHECK(p.x == 0.0);
    CHECK(ratio == 1.0);
    CHECK_THROWS_AS(sample_shell(-0.5, hp(), rng), std::invalid_argument);

    // Softened draws land on the requested shell too.
    CounterRng rng2(7, make_stream(StreamPurpose::shell, 3, 0));
    for (int i = 0; i < 1000; ++i) {
        const auto [qs, ps] = sample_shell(0.7, sp(), rng2);
        const double e = 0.5 * norm2(ps) + u_pin(sp(), qs);
        REQUIRE(e == doctest::Approx(0.7).epsilon(1e-9));
    }
}

TEST_CASE("partition function: harmonic closed form") {
    // Constant weight 1/Ubar' = 2 makes the Monte Carlo estimator exact.
    CounterRng rng(5, make_stream(StreamPurpose::shell, 4, 0));
    const auto mc = partition_z(1.0, hp(), 200000, ZMethod::monte_carlo, &rng);
    CHECK(mc.z == doctest::Approx(kZ1Harmonic).epsilon(1e-12));
    CHECK(mc.stderr_ == 0.0);
    const auto quad = partition_z(1.0, hp(), 0, ZMethod::quadrature, nullptr);
    CHECK(quad.z == doctest::Approx(kZ1Harmonic).epsilon(1e-13));
    CHECK(quad.stderr_ == 0.0);
    // Z(a) = 4 pi^2 a: linear in a.
    const auto q2 = partition_z(2.5, hp(), 0, ZMethod::quadrature, nullptr);
    CHECK(q2.z == doctest::Approx(2.5 * kZ1Harmonic).epsilon(1e-13));

    const auto z0 = partition_z(0.0, hp(), 100, ZMethod::monte_carlo, &rng);
    CHECK(z0.z == 0.0);
    CHECK(z0.stderr_ == 0.0);
    CHECK_THROWS_AS(partition_z(-1.0, hp(), 10, ZMethod::quadrature, nullptr),
                    std::invalid_argument);
    CHECK_THROWS_AS(partition_z(1.0, hp(), 10, ZMethod::monte_carlo, nullptr),
                    std::invalid_argument);
}

TEST_CASE("partition function: softened MC, quadrature, and a brute-force check") {
    CounterRng rng(5, make_stream(StreamPurpose::shell, 5, 0));
    const std::int64_t n = 1000000;
    const auto mc = partition_z(1.0, sp(), n, ZMethod::monte_carlo, &rng);
    const auto quad = partition_z(1.0, sp(), 0, ZMethod::quadrature, nullptr);
    CHECK(mc.stderr_ > 0.0);
    CHECK(std::abs(mc.z - quad.z) <= 3.0 * mc.stderr_);

    // Independent estimate: volume of the thin slab |E - 1| <= delta/2 divided
    // by delta, sampled uniformly over a box that contains the shell
    // (|p|^2 <= 2 and Ubar(|q|^2) <= 1 both fit inside [-1.5, 1.5]^4).
    CounterRng brng(5, make_stream(StreamPurpose::misc, 21, 0));
    const double delta = 0.01, half = 1.5, vol = std::pow(2 * half, 4);
    const std::int64_t nb = 2000000;
    std::int64_t hits = 0;
    for (std::int64_t i = 0; i < nb; ++i) {
        const Vec2 q{half * (2 * brng.uniform() - 1), half * (2 * brng.uniform() - 1)};
        const Vec2 p{half * (2 * brng.uniform() - 1), half * (2 * brng.uniform() - 1)};
        const double e = 0.5 * norm2(p) + u_pin(sp(), q);
        if (std::abs(e - 1.0) <= 0.5 * delta) ++hits;
    }
    const double prob = static_cast<double>(hits) / static_cast<double>(nb);
    const double z_bf = vol * prob / delta;
    const double se_bf = vol * std::sqrt(prob * (1.0 - prob) / static_cast<double>(nb)) / delta;
    REQUIRE(hits > 1000);
    CHECK(std::abs(z_bf - mc.z) <= 3.0 * std::sqrt(se_bf * se_bf + mc.stderr_ * mc.stderr_));
}

TEST_CASE("log-derivative of the partition function") {
    // Harmonic: Z proportional to a, so the log-derivative is exactly 1/a.
    CHECK(log_z_derivative(2.0, hp()) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(log_z_derivative(0.5, hp()) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK_THROWS_AS(log_z_derivative(0.0, hp()), std::invalid_argument);

    // Softened: a * dlogZ -> 1 as a -> 0 (Z ~ const * a at the bottom).
    const double small = 1e-3;
    CHECK(small * log_z_derivative(small, sp()) == doctest::Approx(1.0).epsilon(0.01));

    // Consistency with a central difference of log Z from the quadrature.
    const double d = 1e-3;
    const double zp = partition_z(1.0 + d, sp(), 0, ZMethod::quadrature, nullptr).z;
    const double zm = partition_z(1.0 - d, sp(), 0, ZMethod::quadrature, nullptr).z;
    const double fd = (std::log(zp) - std::log(zm)) / (2 * d);
    CHECK(log_z_derivative(1.0, sp()) == doctest::Approx(fd).epsilon(2e-3));
}

TEST_CASE("integration by parts on the shell") {
    const PhaseFn f1 = [](Vec2, Vec2 p) { return p.x; };
    const PhaseFn g1 = [](Vec2, Vec2) { return 1.0; };
    const PhaseFn f2 = [](Vec2, Vec2 p) { return p.x * norm2(p); };
    const PhaseFn g2 = [](Vec2 q, Vec2) { return norm2(q); };
    const std::int64_t n = 200000;
    const int nb = 20;

    SUBCASE("harmonic shell with closed-form left sides") {
        CounterRng rng(9, make_stream(StreamPurpose::shell, 6, 0));
        const auto r1 = check_integration_by_parts(1.0, f1, g1, n, nb, hp(), rng);
        CHECK(r1.lhs == doctest::Approx(1.0).epsilon(0.02));
        CHECK(std::abs(r1.residual) <= 3.0 * r1.stderr_);

        const auto r2 = check_integration_by_parts(1.0, f2, g2, n, nb, hp(), rng);
        CHECK(r2.lhs == doctest::Approx(4.0 / 3.0).epsilon(0.04));
        CHECK(std::abs(r2.residual) <= 3.0 * r2.stderr_);

        const auto r3 = check_integration_by_parts(1.0, f1, g2, n, nb, hp(), rng);
        CHECK(std::abs(r3.residual) <= 3.0 * r3.stderr_);
    }
    SUBCASE("softened shell is pure Monte Carlo") {
        CounterRng rng(9, make_stream(StreamPurpose::shell, 7, 0));
        const auto r1 = check_integration_by_parts(1.0, f1, g1, n, nb, sp(), rng);
        CHECK(std::abs(r1.residual) <= 3.0 * r1.stderr_);
        const auto r2 = check_integration_by_parts(1.0, f2, g2, n, nb, sp(), rng);
        CHECK(std::abs(r2.residual) <= 3.0 * r2.stderr_);
        CHECK(r2.stderr_ > 0.0);
        const auto r3 = check_integration_by_parts(1.0, f1, g2, n, nb, sp(), rng);
        CHECK(std::abs(r3.residual) <= 3.0 * r3.stderr_);
    }
    SUBCASE("argument validation") {
        CounterRng rng(9, make_stream(StreamPurpose::shell, 8, 0));
        CHECK_THROWS_AS(check_integration_by_parts(0.0, f1, g1, 100, 2, hp(), rng),
                        std::invalid_argument);
        CHECK_THROWS_AS(check_integration_by_parts(1.0, f1, g1, 100, 1, hp(), rng),
                        std::invalid_argument);
        CHECK_THROWS_AS(check_integration_by_parts(1.0, f1, g1, 1, 2, hp(), rng),
                        std::invalid_argument);
    }
}
