#include "wcgl/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "wcgl/csv.hpp"
#include "wcgl/parallel.hpp"
#include "wcgl/rng.hpp"
#include "wcgl/shell.hpp"
#include "wcgl/version.hpp"

namespace wcgl {

namespace {

// Uncoupled two-site trajectory: independent single-site flows; only the
// recorded bond current sees the coupling. Stays allocation-free per step.
struct TwoSite {
    Vec2 q[2], p[2];
};

void record_current_series(double a1, double a2, double sigma, const PotentialPair& pp,
                           const GkParams& gkp, std::uint64_t seed, std::uint64_t traj,
                           std::int64_t n_steps, std::vector<double>& j_out) {
    TwoSite st;
    {
        CounterRng r0(seed, make_stream(StreamPurpose::shell, traj, 0));
        CounterRng r1(seed, make_stream(StreamPurpose::shell, traj, 1));
        auto [q0, p0] = sample_shell(a1, pp, r0);
        auto [q1, p1] = sample_shell(a2, pp, r1);
        st.q[0] = q0; st.p[0] = p0;
        st.q[1] = q1; st.p[1] = p1;
    }
    const std::uint64_t ns0 = make_stream(StreamPurpose::noise, traj, 0);
    const std::uint64_t ns1 = make_stream(StreamPurpose::noise, traj, 1);
    const double h = gkp.h;
    const double amp = sigma * std::sqrt(h); // rotation sd for a half step: sqrt(2 s^2 h/2)
    const int stride = gkp.record_stride;

    auto bond_current = [&]() {
        return -0.5 * dot(grad_v_pair(pp, st.q[0] - st.q[1]), st.p[0] + st.p[1]);
    };
    std::size_t w = 0;
    j_out[w++] = bond_current();
    for (std::int64_t step = 0; step < n_steps; ++step) {
        // One block per site per step yields both half-step rotation angles.
        const auto g0 = gaussian_pair_at(seed, ns0, static_cast<std::uint64_t>(step));
        const auto g1 = gaussian_pair_at(seed, ns1, static_cast<std::uint64_t>(step));
        st.p[0] = rotate(st.p[0], amp * g0[0]);
        st.p[1] = rotate(st.p[1], amp * g1[0]);
        for (int i = 0; i < 2; ++i) {
            st.p[i] -= (0.5 * h) * grad_u_pin(pp, st.q[i]);
            st.q[i] += h * st.p[i];
            st.p[i] -= (0.5 * h) * grad_u_pin(pp, st.q[i]);
        }
        st.p[0] = rotate(st.p[0], amp * g0[1]);
        st.p[1] = rotate(st.p[1], amp * g1[1]);
        if ((step + 1) % stride == 0) j_out[w++] = bond_current();
    }
}

double trapezoid(const double* c, std::int64_t k_max, double dt) {
    if (k_max <= 0) return 0.0;
    double acc = 0.5 * (c[0] + c[k_max]);
    for (std::int64_t k = 1; k < k_max; ++k) acc += c[k];
    return acc * dt;
}

} // namespace

GkResult green_kubo_gamma2(double a1, double a2, double sigma, const PotentialPair& pp,
                           const GkParams& gkp, std::uint64_t seed, std::uint64_t traj_base) {
    if (a1 < 0.0 || a2 < 0.0) throw std::invalid_argument("green_kubo: energies must be >= 0");
    if (!(sigma > 0.0)) throw std::invalid_argument("green_kubo: sigma must be positive");
    if (gkp.n_traj < 2) throw std::invalid_argument("green_kubo: need at least 2 trajectories");
    if (!(gkp.h > 0.0) || !(gkp.T_max > 0.0) || gkp.record_stride < 1)
        throw std::invalid_argument("green_kubo: invalid discretization parameters");

    GkResult res;
    if ((a1 == 0.0 || a2 == 0.0) && !gkp.diagnostic_zero) {
        res.zero_shortcut = true;
        return res;
    }

    const double tau_c = gkp.origin_spacing > 0.0 ? gkp.origin_spacing : 1.0 / (sigma * sigma);
    const double lag_max = gkp.lag_max > 0.0 ? gkp.lag_max : 0.5 * gkp.T_max;
    const double dt_rec = gkp.h * gkp.record_stride;
    const std::int64_t n_steps = std::llround(gkp.T_max / gkp.h);
    const std::int64_t n_rec = n_steps / gkp.record_stride; // samples after t = 0
    const std::int64_t K = std::min<std::int64_t>(n_rec, std::llround(lag_max / dt_rec));
    if (K < 2) throw std::invalid_argument("green_kubo: lag window shorter than two samples");
    const std::int64_t O = std::max<std::int64_t>(1, std::llround(tau_c / dt_rec));
    const std::int64_t n_orig = (n_rec - K) / O + 1;
    if (n_rec < K) throw std::invalid_argument("green_kubo: lag_max exceeds the horizon");

    res.warn_short_tmax = gkp.T_max < 10.0 * tau_c;
    res.n_traj = gkp.n_traj;
    res.n_origins = n_orig;

    const std::int64_t n = gkp.n_traj;
    // Per-trajectory lagged products; slot-per-index writes keep the result
    // independent of the worker count.
    std::vector<double> ct(static_cast<std::size_t>(n) * (K + 1));
    parallel_for(static_cast<std::size_t>(n), gkp.threads, [&](std::size_t ti) {
        std::vector<double> j(static_cast<std::size_t>(n_rec) + 1);
        record_current_series(a1, a2, sigma, pp, gkp, seed, traj_base + ti, n_steps, j);
        double* row = ct.data() + ti * (K + 1);
        for (std::int64_t k = 0; k <= K; ++k) {
            double acc = 0.0;
            for (std::int64_t o = 0; o < n_orig; ++o) {
                const std::int64_t s = o * O;
                acc += j[s] * j[s + k];
            }
            row[k] = acc / static_cast<double>(n_orig);
        }
    });

    std::vector<double> cbar(K + 1, 0.0);
    for (std::int64_t ti = 0; ti < n; ++ti) {
        const double* row = ct.data() + static_cast<std::size_t>(ti) * (K + 1);
        for (std::int64_t k = 0; k <= K; ++k) cbar[k] += row[k];
    }
    for (double& v : cbar) v /= static_cast<double>(n);

    // Noise floor from the tail fifth of the lag window.
    const std::int64_t tail_lo = K - std::max<std::int64_t>(2, K / 5);
    double tmean = 0.0;
    for (std::int64_t k = tail_lo; k <= K; ++k) tmean += cbar[k];
    tmean /= static_cast<double>(K - tail_lo + 1);
    double tvar = 0.0;
    for (std::int64_t k = tail_lo; k <= K; ++k) tvar += (cbar[k] - tmean) * (cbar[k] - tmean);
    const double floor_sd = std::sqrt(tvar / static_cast<double>(K - tail_lo)) + 1e-300;

    // T*: first lag from which |C| stays below twice the floor for five
    // consecutive correlation windows.
    const std::int64_t W = O;
    std::int64_t k_star = -1;
    for (std::int64_t k0 = 0; k0 + 5 * W <= K; ++k0) {
        bool quiet = true;
        for (std::int64_t k = k0; k < k0 + 5 * W; ++k) {
            if (std::abs(cbar[k]) >= 2.0 * floor_sd) { quiet = false; break; }
        }
        if (quiet) { k_star = k0; break; }
    }
    if (k_star < 0) {
        k_star = K;
        res.warn_truncation = true;
    }
    if (k_star == 0) k_star = 1; // C(0) > 0: integrate at least one interval
    res.t_star = k_star * dt_rec;

    res.gamma2 = trapezoid(cbar.data(), k_star, dt_rec);

    // Jackknife over trajectories. The integral is linear in the per-
    // trajectory rows, so leave-one-out means reduce to the classic form.
    std::vector<double> gi(n);
    for (std::int64_t ti = 0; ti < n; ++ti)
        gi[ti] = trapezoid(ct.data() + static_cast<std::size_t>(ti) * (K + 1), k_star, dt_rec);
    double gmean = 0.0;
    for (double v : gi) gmean += v;
    gmean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : gi) ss += (v - gmean) * (v - gmean);
    res.stderr_ = std::sqrt(ss / (static_cast<double>(n) * static_cast<double>(n - 1)));

    if (gkp.tail_extrapolation) {
        // Fit c e^{-lambda t} on the positive stretch just before T* and add
        // its tail mass. Skipped (flag stays false) when the window is not
        // usable; the default path never comes here.
        const std::int64_t lo = std::max<std::int64_t>(1, k_star / 2);
        bool pos = k_star > lo + 3;
        for (std::int64_t k = lo; pos && k <= k_star; ++k) pos = cbar[k] > 0.0;
        if (pos) {
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            const double m = static_cast<double>(k_star - lo + 1);
            for (std::int64_t k = lo; k <= k_star; ++k) {
                const double x = k * dt_rec, y = std::log(cbar[k]);
                sx += x; sy += y; sxx += x * x; sxy += x * y;
            }
            const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
            const double icept = (sy - slope * sx) / m;
            if (slope < 0.0) {
                res.gamma2 += std::exp(icept + slope * res.t_star) / (-slope);
                res.tail_extrapolated = true;
            }
        }
    }

    res.acf_t.resize(K + 1);
    res.acf_c = cbar;
    for (std::int64_t k = 0; k <= K; ++k) res.acf_t[k] = k * dt_rec;
    return res;
}

std::pair<double, double> harmonic_coefficients(double a1, double a2, double sigma) {
    if (a1 < 0.0 || a2 < 0.0)
        throw std::invalid_argument("harmonic_coefficients: energies must be >= 0");
    if (!(sigma > 0.0)) throw std::invalid_argument("harmonic_coefficients: sigma must be positive");
    const double is2 = 1.0 / (sigma * sigma);
    return {a1 * a2 * is2, -2.0 * (a1 - a2) * is2};
}

namespace {

int locate_cell(const std::vector<double>& g, double a) {
    // Interval index i with g[i] <= a <= g[i+1]; a == g.back() uses the last.
    const int m = static_cast<int>(g.size());
    if (a <= g.front()) return 0;
    if (a >= g.back()) return m - 2;
    const int j = static_cast<int>(std::upper_bound(g.begin(), g.end(), a) - g.begin());
    return j - 1;
}

void check_hull(const CoefficientTable& tbl, double a1, double a2) {
    const double lo = tbl.a_min(), hi = tbl.a_max();
    const double slack = 1e-12 * std::max(1.0, hi);
    if (a1 < lo - slack || a1 > hi + slack || a2 < lo - slack || a2 > hi + slack)
        throw std::domain_error("coefficient table: query (" + fmt_double(a1) + ", " +
                                fmt_double(a2) + ") outside grid hull [" + fmt_double(lo) + ", " +
                                fmt_double(hi) + "]");
}

double bilinear(const CoefficientTable& tbl, const std::vector<double>& field, double a1,
                double a2) {
    const auto& g = tbl.grid;
    const int i = locate_cell(g, a1), j = locate_cell(g, a2);
    const double x = (a1 - g[i]) / (g[i + 1] - g[i]);
    const double y = (a2 - g[j]) / (g[j + 1] - g[j]);
    const double f00 = field[tbl.idx(i, j)], f10 = field[tbl.idx(i + 1, j)];
    const double f01 = field[tbl.idx(i, j + 1)], f11 = field[tbl.idx(i + 1, j + 1)];
    return f00 * (1 - x) * (1 - y) + f10 * x * (1 - y) + f01 * (1 - x) * y + f11 * x * y;
}

double gamma2_of(const CoefficientTable& tbl, const std::vector<double>& gfield, double a1,
                 double a2) {
    return a1 * a2 * bilinear(tbl, gfield, a1, a2);
}

// alpha via the interpolant; linear in the G field, which the error
// propagation below exploits.
double alpha_value(const CoefficientTable& tbl, const std::vector<double>& gfield, double a1,
                   double a2, double dlz1, double dlz2) {
    if (a1 == 0.0 && a2 == 0.0) return 0.0;
    if (a1 == 0.0) return 2.0 * a2 * bilinear(tbl, gfield, 0.0, a2);
    if (a2 == 0.0) return -2.0 * a1 * bilinear(tbl, gfield, a1, 0.0);
    const double hi = tbl.a_max();
    auto d_axis = [&](double a) {
        double d = 1e-2 * a;
        return d;
    };
    const double d1 = d_axis(a1);
    const double u1 = std::min(a1 + d1, hi), l1 = std::max(a1 - d1, 0.0);
    const double dda1 =
        (gamma2_of(tbl, gfield, u1, a2) - gamma2_of(tbl, gfield, l1, a2)) / (u1 - l1);
    const double d2 = d_axis(a2);
    const double u2 = std::min(a2 + d2, hi), l2 = std::max(a2 - d2, 0.0);
    const double dda2 =
        (gamma2_of(tbl, gfield, a1, u2) - gamma2_of(tbl, gfield, a1, l2)) / (u2 - l2);
    return dda1 - dda2 + (dlz1 - dlz2) * gamma2_of(tbl, gfield, a1, a2);
}

// Continue a G field onto the zero-energy axis by linear extrapolation from
// the two nearest positive levels; keeps the interpolant's slope finite there.
void extend_axis_field(const CoefficientTable& tbl, std::vector<double>& field) {
    const int m = tbl.m();
    const double g1 = tbl.grid[1], g2 = tbl.grid[2];
    const double w1 = 1.0 + g1 / (g2 - g1), w2 = -g1 / (g2 - g1);
    for (int j = 1; j < m; ++j) {
        field[tbl.idx(0, j)] = field[tbl.idx(j, 0)] =
            w1 * field[tbl.idx(1, j)] + w2 * field[tbl.idx(2, j)];
    }
    field[tbl.idx(0, 0)] = w1 * field[tbl.idx(1, 1)] + w2 * field[tbl.idx(2, 2)];
}

} // namespace

std::pair<double, double> interpolate(const CoefficientTable& tbl, double a1, double a2) {
    check_hull(tbl, a1, a2);
    const double g = bilinear(tbl, tbl.G, a1, a2);
    const double gamma2 = a1 * a2 * g;
    const double al =
        0.5 * (bilinear(tbl, tbl.alpha, a1, a2) - bilinear(tbl, tbl.alpha, a2, a1));
    return {gamma2, al};
}

std::pair<double, double> alpha_from_table(double a1, double a2, const CoefficientTable& tbl,
                                           const PotentialPair& pp) {
    check_hull(tbl, a1, a2);
    const double dlz1 = a1 > 0.0 ? log_z_derivative(a1, pp) : 0.0;
    const double dlz2 = a2 > 0.0 ? log_z_derivative(a2, pp) : 0.0;
    const double al = alpha_value(tbl, tbl.G, a1, a2, dlz1, dlz2);
    // One independent estimate per unordered positive pair; its value reaches
    // the field three ways (node, mirror, axis extrapolation), so perturb all
    // routes together and add the responses in quadrature.
    double var = 0.0;
    const int m = tbl.m();
    if (m >= 3) {
        std::vector<double> gpert(tbl.G.size());
        for (int u = 1; u < m; ++u) {
            for (int v = u; v < m; ++v) {
                const double e = tbl.G_err[tbl.idx(u, v)];
                if (e <= 0.0) continue;
                gpert = tbl.G;
                gpert[tbl.idx(u, v)] += e;
                if (v != u) gpert[tbl.idx(v, u)] += e;
                extend_axis_field(tbl, gpert);
                const double d = alpha_value(tbl, gpert, a1, a2, dlz1, dlz2) - al;
                var += d * d;
            }
        }
    }
    return {al, std::sqrt(var)};
}

CoefficientTable tabulate(const std::vector<double>& grid, double sigma, const PotentialPair& pp,
                          const GkParams& gkp, std::uint64_t seed) {
    if (grid.size() < 3) throw std::invalid_argument("tabulate: need 0 plus two positive levels");
    if (grid.front() != 0.0) throw std::invalid_argument("tabulate: grid must start at 0");
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1])) throw std::invalid_argument("tabulate: grid must increase");
    }
    CoefficientTable tbl;
    tbl.sigma = sigma;
    tbl.grid = grid;
    const int m = tbl.m();
    tbl.gamma2.assign(m * m, 0.0);
    tbl.gamma2_err.assign(m * m, 0.0);
    tbl.G.assign(m * m, 0.0);
    tbl.G_err.assign(m * m, 0.0);
    tbl.alpha.assign(m * m, 0.0);
    tbl.alpha_err.assign(m * m, 0.0);
    tbl.t_star.assign(m * m, 0.0);
    tbl.failed.assign(m * m, 0);
    tbl.seed = seed;
    tbl.n_traj = gkp.n_traj;
    tbl.T_max = gkp.T_max;
    tbl.h = gkp.h;
    tbl.pin_name = pin_family_name(pp.pin);
    tbl.coupling_name = coupling_family_name(pp.coupling);
    tbl.lambda = pp.lambda;
    tbl.k = pp.k;
    tbl.sign_convention = kCurrentSignConvention;

    // Green-Kubo on the strictly positive cells, once per unordered pair.
    std::uint64_t cell_counter = 0;
    for (int i = 1; i < m; ++i) {
        for (int j = i; j < m; ++j) {
            const std::uint64_t base = cell_counter * static_cast<std::uint64_t>(gkp.n_traj);
            ++cell_counter;
            try {
                const GkResult r =
                    green_kubo_gamma2(grid[i], grid[j], sigma, pp, gkp, seed, base);
                tbl.gamma2[tbl.idx(i, j)] = tbl.gamma2[tbl.idx(j, i)] = r.gamma2;
                tbl.gamma2_err[tbl.idx(i, j)] = tbl.gamma2_err[tbl.idx(j, i)] = r.stderr_;
                tbl.t_star[tbl.idx(i, j)] = tbl.t_star[tbl.idx(j, i)] = r.t_star;
                const double denom = grid[i] * grid[j];
                tbl.G[tbl.idx(i, j)] = tbl.G[tbl.idx(j, i)] = r.gamma2 / denom;
                tbl.G_err[tbl.idx(i, j)] = tbl.G_err[tbl.idx(j, i)] = r.stderr_ / denom;
            } catch (const std::exception&) {
                tbl.failed[tbl.idx(i, j)] = tbl.failed[tbl.idx(j, i)] = 1;
                tbl.gamma2[tbl.idx(i, j)] = tbl.gamma2[tbl.idx(j, i)] =
                    std::numeric_limits<double>::quiet_NaN();
            }
        }
    }
    // Axis rows hold exact zeros for gamma^2; G continues onto the axis by
    // linear extrapolation from the two nearest positive levels so the
    // interpolant keeps a finite slope there.
    extend_axis_field(tbl, tbl.G);
    const double g1 = grid[1], g2 = grid[2];
    const double w1 = 1.0 + g1 / (g2 - g1), w2 = -g1 / (g2 - g1);
    for (int j = 1; j < m; ++j) {
        const double ge = std::abs(w1) * tbl.G_err[tbl.idx(1, j)] +
                          std::abs(w2) * tbl.G_err[tbl.idx(2, j)];
        tbl.G_err[tbl.idx(0, j)] = tbl.G_err[tbl.idx(j, 0)] = ge;
    }
    tbl.G_err[tbl.idx(0, 0)] = std::abs(w1) * tbl.G_err[tbl.idx(1, 1)] +
                               std::abs(w2) * tbl.G_err[tbl.idx(2, 2)];

    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            const auto [al, ae] = alpha_from_table(grid[i], grid[j], tbl, pp);
            tbl.alpha[tbl.idx(i, j)] = al;
            tbl.alpha_err[tbl.idx(i, j)] = ae;
        }
    }
    return tbl;
}

std::string table_to_csv(const CoefficientTable& tbl) {
    CsvWriter w;
    w.header({"a1", "a2", "gamma2", "gamma2_stderr", "G", "alpha", "alpha_stderr"});
    const int m = tbl.m();
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            const int id = tbl.idx(i, j);
            w.row({tbl.grid[i], tbl.grid[j], tbl.gamma2[id], tbl.gamma2_err[id], tbl.G[id],
                   tbl.alpha[id], tbl.alpha_err[id]});
        }
    }
    return w.text;
}

std::string table_meta_to_json(const CoefficientTable& tbl) {
    nlohmann::json j;
    j["schema_version"] = kManifestSchemaVersion;
    j["sigma"] = tbl.sigma;
    j["grid"] = tbl.grid;
    j["seed"] = tbl.seed;
    j["n_traj"] = tbl.n_traj;
    j["T_max"] = tbl.T_max;
    j["h"] = tbl.h;
    j["pin_family"] = tbl.pin_name;
    j["coupling_family"] = tbl.coupling_name;
    j["lambda"] = tbl.lambda;
    j["k"] = tbl.k;
    j["sign_convention"] = tbl.sign_convention;
    j["G_err"] = tbl.G_err;
    j["t_star"] = tbl.t_star;
    j["failed"] = tbl.failed;
    return j.dump(2) + "\n";
}

CoefficientTable table_from_files(const std::string& csv_text, const std::string& json_text) {
    CoefficientTable tbl;
    const nlohmann::json j = nlohmann::json::parse(json_text);
    tbl.sigma = j.at("sigma").get<double>();
    tbl.grid = j.at("grid").get<std::vector<double>>();
    tbl.seed = j.at("seed").get<std::uint64_t>();
    tbl.n_traj = j.at("n_traj").get<std::int64_t>();
    tbl.T_max = j.at("T_max").get<double>();
    tbl.h = j.at("h").get<double>();
    tbl.pin_name = j.at("pin_family").get<std::string>();
    tbl.coupling_name = j.at("coupling_family").get<std::string>();
    tbl.lambda = j.at("lambda").get<double>();
    tbl.k = j.at("k").get<double>();
    tbl.sign_convention = j.at("sign_convention").get<std::string>();
    tbl.G_err = j.at("G_err").get<std::vector<double>>();
    tbl.t_star = j.at("t_star").get<std::vector<double>>();
    tbl.failed = j.at("failed").get<std::vector<std::uint8_t>>();
    const int m = tbl.m();
    tbl.gamma2.assign(m * m, 0.0);
    tbl.gamma2_err.assign(m * m, 0.0);
    tbl.G.assign(m * m, 0.0);
    tbl.alpha.assign(m * m, 0.0);
    tbl.alpha_err.assign(m * m, 0.0);

    std::size_t pos = csv_text.find('\n');
    if (pos == std::string::npos) throw std::runtime_error("table csv: missing header");
    int row = 0;
    ++pos;
    while (pos < csv_text.size() && row < m * m) {
        const std::size_t eol = csv_text.find('\n', pos);
        const std::string line = csv_text.substr(pos, eol - pos);
        pos = (eol == std::string::npos) ? csv_text.size() : eol + 1;
        if (line.empty()) continue;
        double v[7];
        int field = 0;
        std::size_t start = 0;
        for (int f = 0; f < 7; ++f) {
            const std::size_t comma = line.find(',', start);
            const std::string tok =
                line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
            v[field++] = std::strtod(tok.c_str(), nullptr);
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (field != 7) throw std::runtime_error("table csv: short row");
        tbl.gamma2[row] = v[2];
        tbl.gamma2_err[row] = v[3];
        tbl.G[row] = v[4];
        tbl.alpha[row] = v[5];
        tbl.alpha_err[row] = v[6];
        ++row;
    }
    if (row != m * m) throw std::runtime_error("table csv: row count mismatch");
    return tbl;
}

} // namespace wcgl
