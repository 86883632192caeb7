#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>
#include <vector>

#include "wcgl/config.hpp"
#include "wcgl/rng.hpp"

using namespace wcgl;

namespace {

// Expect a ConfigError whose message mentions `what` and points at `line`.
void expect_error(const std::string& text, const std::string& what, int line) {
    try {
        parse_config(text);
        FAIL("expected ConfigError for: " << what);
    } catch (const ConfigError& e) {
        INFO("message: " << e.what());
        CHECK(std::string(e.what()).find(what) != std::string::npos);
        CHECK(e.line == line);
    }
}

int ri(CounterRng& r, int lo, int hi) {
    return lo + static_cast<int>(r.uniform() * (hi - lo + 1));
}
double rd(CounterRng& r, double lo, double hi) { return lo + r.uniform() * (hi - lo); }
std::vector<double> rlist(CounterRng& r, int n, double lo, double hi) {
    std::vector<double> v(n);
    for (double& x : v) x = rd(r, lo, hi);
    return v;
}
template <class T> T pick(CounterRng& r, std::initializer_list<T> xs) {
    return *(xs.begin() + ri(r, 0, static_cast<int>(xs.size()) - 1));
}

} // namespace

TEST_CASE("a minimal file yields defaults plus the command") {
    const auto cfg = parse_config("[run]\ncommand = tabulate-z\n");
    RunConfig expect;
    expect.command = "tabulate-z";
    CHECK(cfg == expect);
    CHECK(cfg.sigma == 1.0);
    CHECK(cfg.out_dir == "out");
}

TEST_CASE("whitespace, comments, and CRLF are tolerated") {
    const auto cfg = parse_config("# leading comment\n\n  [ run ]  \r\n"
                                  "   command=   sample-shell\r\n"
                                  "\t\n# trailing comment");
    CHECK(cfg.command == "sample-shell");
    // An empty command stays empty (render round trips before a command is chosen).
    CHECK(parse_config("[run]\ncommand =\n").command.empty());
}

TEST_CASE("render/parse round trips the defaults") {
    const RunConfig def;
    CHECK(parse_config(render_config(def)) == def);
    RunConfig named = def;
    named.command = "estimate-gk";
    named.checkpoint_in = "state.ckpt";
    named.table_csv = "coefficients.csv";
    named.table_json = "coefficients.json";
    CHECK(parse_config(render_config(named)) == named);
}

TEST_CASE("render/parse round trips randomized configs") {
    CounterRng r(11, make_stream(StreamPurpose::misc, 60, 0));
    for (int rep = 0; rep < 50; ++rep) {
        RunConfig c;
        c.command = pick(r, {std::string(), std::string("simulate-micro"),
                             std::string("converge"), std::string("stationarity")});
        c.seed = static_cast<std::uint64_t>(r.uniform() * 1e9);
        c.threads = ri(r, 0, 8);
        c.pin = pick(r, {std::string("harmonic"), std::string("softened")});
        c.lambda = rd(r, 0.0, 5.0);
        c.coupling = pick(r, {std::string("harmonic_v"), std::string("cosine_v")});
        c.k = rd(r, 0.1, 4.0);
        c.sigma = rd(r, 0.1, 3.0);
        c.d = ri(r, 1, 2);
        c.nx = ri(r, 1, 9);
        c.ny = c.d == 1 ? 1 : ri(r, 1, 9);
        c.eps = rd(r, 0.0, 0.5);
        c.h = rd(r, 1e-4, 1e-2);
        c.T = c.h * ri(r, 1, 1000);
        c.record_stride = ri(r, 1, 5);
        c.observable = pick(r, {std::string("current"), std::string("site_energy_bare"),
                                std::string("site_energy_full"), std::string("hamiltonian")});
        c.obs_i = ri(r, 0, 3);
        c.obs_k = ri(r, 0, 3);
        c.init_energies = rlist(r, ri(r, 1, 4), 0.0, 3.0);
        c.checkpoint_in = pick(r, {std::string(), std::string("chk.bin")});
        c.save_final = r.uniform() < 0.5;
        c.trajectory_id = static_cast<std::uint64_t>(r.uniform() * 1e6);
        c.a = rd(r, 0.0, 4.0);
        c.n_samples = ri(r, 1, 1000000);
        c.z_method = pick(r, {std::string("monte_carlo"), std::string("quadrature")});
        c.z_grid = rlist(r, ri(r, 1, 3), 0.0, 3.0);
        c.a1 = rd(r, 0.0, 3.0);
        c.a2 = rd(r, 0.0, 3.0);
        c.n_traj = ri(r, 2, 100);
        c.T_max = rd(r, 0.5, 40.0);
        c.gk_h = rd(r, 1e-4, 1e-2);
        c.gk_stride = ri(r, 1, 10);
        c.lag_max = rd(r, 0.0, 10.0);
        c.origin_spacing = rd(r, 0.0, 2.0);
        c.diagnostic_zero = r.uniform() < 0.5;
        c.tail_extrapolation = r.uniform() < 0.5;
        c.table_grid = rlist(r, ri(r, 1, 5), 0.0, 2.0);
        c.meso_h = rd(r, 1e-4, 1e-2);
        c.meso_T = c.meso_h * ri(r, 1, 500);
        c.meso_stride = ri(r, 1, 5);
        c.e0 = rlist(r, ri(r, 1, 3), 0.0, 2.0);
        c.source = pick(r, {std::string("harmonic"), std::string("table")});
        c.table_csv = pick(r, {std::string(), std::string("t.csv")});
        c.table_json = pick(r, {std::string(), std::string("t.json")});
        c.beta = rd(r, 0.1, 5.0);
        c.total = rd(r, 0.0, 4.0);
        c.path_id = static_cast<std::uint64_t>(r.uniform() * 1e6);
        c.eps_list = rlist(r, ri(r, 1, 4), 0.05, 0.8);
        c.t_macro = rd(r, 0.1, 2.0);
        c.n_paths = ri(r, 2, 500);
        c.n_boot = ri(r, 2, 100);
        c.decay_a = rd(r, 0.1, 3.0);
        c.decay_paths = ri(r, 2, 500);
        c.decay_T = rd(r, 1.0, 40.0);
        c.decay_h = rd(r, 1e-4, 1e-2);
        c.decay_stride = ri(r, 1, 10);
        c.decay_lag_max = rd(r, 0.0, 5.0);
        c.decay_origin_spacing = rd(r, 0.0, 2.0);
        c.t_lo = rd(r, 0.0, 3.0);
        c.t_hi = c.t_lo + rd(r, 0.5, 3.0);
        c.peaks = r.uniform() < 0.5;
        c.out_dir = pick(r, {std::string("out"), std::string("runs/a b")});

        INFO("rep " << rep);
        CHECK(parse_config(render_config(c)) == c);
    }
}

TEST_CASE("field errors carry the offending line") {
    expect_error("# c\n\n[run]\ncommand = estimate-gk\n[model]\nsigma = -1\n", "sigma", 6);
    expect_error("[model]\nsigma = 1.5x\n", "not a number", 2);
    expect_error("[model]\nk = 0\n", "k: must be > 0", 2);
    expect_error("[model]\nlambda = -0.5\n", "lambda", 2);
    expect_error("[run]\nseed = -3\n", "nonnegative", 2);
    expect_error("[run]\nthreads = -1\n", "threads", 2);
    expect_error("[run]\ncommand = fly\n", "unknown subcommand", 2);
    expect_error("[micro]\nobservable = momentum\n", "observable", 2);
    expect_error("[micro]\nsave_final = 1\n", "expected true or false", 2);
    expect_error("[micro]\nh = fast\n", "'fast' is not a number", 2);
    expect_error("[gk]\nn_traj = 1\n", "n_traj: must be >= 2", 2);
    expect_error("[lattice]\nd = 3\n", "d: must be 1 or 2", 2);
    expect_error("[meso]\ne0 =\n", "needs at least one value", 2);
    expect_error("[meso]\ne0 = 1,-2\n", "entries must be >= 0", 2);
    expect_error("[converge]\neps_list = 0.2,0\n", "entries must be > 0", 2);
    expect_error("[output]\ndir =\n", "dir: must not be empty", 2);
}

TEST_CASE("structural errors") {
    expect_error("[frobnicate]\n", "unknown section", 1);
    expect_error("[run\n", "unterminated section header", 1);
    expect_error("x = 1\n", "before any [section]", 1);
    expect_error("[run]\n= 5\n", "missing key before '='", 2);
    expect_error("[run]\nfoo\n", "expected key = value", 2);
    expect_error("[lattice]\nnz = 3\n", "unknown key 'nz'", 2);
    expect_error("[shell]\nsigma = 1\n", "unknown key 'sigma'", 2);
}

TEST_CASE("cross-key checks report line zero") {
    expect_error("[micro]\nh = 2\nT = 1\n", "h must be <= T", 0);
    expect_error("[meso]\nh = 2\nT = 1\n", "[meso] h must be <= T", 0);
    expect_error("[lattice]\nd = 1\nny = 2\n", "ny must be 1 when d = 1", 0);
    expect_error("[decay]\nt_lo = 5\nt_hi = 2\n", "t_lo must be < t_hi", 0);
}
