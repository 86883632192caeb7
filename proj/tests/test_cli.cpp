#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wcgl/config.hpp"
#include "wcgl/runner.hpp"
#include "wcgl/state.hpp"

using namespace wcgl;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("wcgl-cli-" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json manifest(const fs::path& dir) { return json::parse(slurp(dir / "manifest.json")); }

std::set<std::string> dir_entries(const fs::path& dir) {
    std::set<std::string> names;
    for (const auto& e : fs::directory_iterator(dir)) names.insert(e.path().filename().string());
    return names;
}

// Second field of the first data row of a CSV.
double csv_cell(const std::string& text, int row, int col) {
    std::istringstream in(text);
    std::string line;
    for (int r = 0; r <= row; ++r) REQUIRE(std::getline(in, line));
    std::istringstream ls(line);
    std::string cell;
    for (int c = 0; c <= col; ++c) REQUIRE(std::getline(ls, cell, ','));
    return std::stod(cell);
}

std::int64_t line_count(const std::string& s) { return std::count(s.begin(), s.end(), '\n'); }

} // namespace

TEST_CASE("tabulate-z writes the partition grid and reruns byte-identically") {
    RunConfig cfg;
    cfg.command = "tabulate-z";
    cfg.seed = 7;
    cfg.threads = 1;
    cfg.z_grid = {1.0};
    cfg.n_samples = 20000;
    const auto dir_a = fresh_dir("z-a");
    cfg.out_dir = dir_a.string();
    const auto res = run(cfg);
    REQUIRE(res.exit_code == 0);
    CHECK(res.outputs == std::vector<std::string>{"z.csv", "manifest.json"});

    const std::string z_a = slurp(dir_a / "z.csv");
    // Header + one grid point; harmonic Z(1) = 4 pi^2, dlogZ(1) = 1.
    CHECK(line_count(z_a) == 2);
    CHECK(csv_cell(z_a, 1, 1) == doctest::Approx(39.47841760435743).epsilon(1e-12));
    CHECK(csv_cell(z_a, 1, 3) == doctest::Approx(1.0).epsilon(1e-9));

    const auto m = manifest(dir_a);
    CHECK(m["complete"] == true);
    CHECK(m["command"] == "tabulate-z");
    CHECK(m["seed"] == 7);
    CHECK(!m.contains("error"));
    CHECK(m["initial_law"].is_string());
    CHECK(m["outputs"] == json::array({"z.csv"}));
    // The echoed config re-parses to the run's exact configuration.
    CHECK(parse_config(m["config_text"].get<std::string>()) == cfg);

    const auto dir_b = fresh_dir("z-b");
    cfg.out_dir = dir_b.string();
    REQUIRE(run(cfg).exit_code == 0);
    CHECK(slurp(dir_b / "z.csv") == z_a);
}

TEST_CASE("simulate-micro stages exactly the declared outputs") {
    RunConfig cfg;
    cfg.command = "simulate-micro";
    cfg.seed = 3;
    cfg.eps = 0.1;
    cfg.h = 1e-3;
    cfg.T = 0.5;
    cfg.record_stride = 100;
    cfg.observable = "current";
    cfg.save_final = true;
    const auto dir = fresh_dir("micro");
    cfg.out_dir = dir.string();

    const auto res = run(cfg);
    REQUIRE(res.exit_code == 0);
    CHECK(res.outputs == std::vector<std::string>{"series.csv", "final.ckpt", "manifest.json"});
    // Nothing extra on disk: no staging leftovers, every file accounted for.
    CHECK(dir_entries(dir) == std::set<std::string>{"series.csv", "final.ckpt", "manifest.json"});

    const auto m = manifest(dir);
    CHECK(m["complete"] == true);
    CHECK(m["outputs"] == json::array({"series.csv", "final.ckpt"}));
    CHECK(m["details"]["n_steps"] == 500);
    CHECK(m.contains("initial_law")); // drew the start from energy shells

    const std::string series = slurp(dir / "series.csv");
    CHECK(line_count(series) == 7); // header + t = 0, 0.1, ..., 0.5
    CHECK(series.rfind("t,j_0_1", 0) == 0);

    // The checkpoint is loadable and matches the lattice size.
    const PhaseState s = load_checkpoint((dir / "final.ckpt").string());
    CHECK(s.n() == 2);

    SUBCASE("restarting from the checkpoint skips the shell draw") {
        RunConfig c2 = cfg;
        c2.checkpoint_in = (dir / "final.ckpt").string();
        c2.save_final = false;
        const auto dir2 = fresh_dir("micro-restart");
        c2.out_dir = dir2.string();
        REQUIRE(run(c2).exit_code == 0);
        CHECK(!manifest(dir2).contains("initial_law"));
    }
    SUBCASE("a missing checkpoint is an I/O failure") {
        RunConfig c2 = cfg;
        c2.checkpoint_in = (dir / "no-such.ckpt").string();
        const auto dir2 = fresh_dir("micro-badckpt");
        c2.out_dir = dir2.string();
        const auto r2 = run(c2);
        CHECK(r2.exit_code == 4);
        const auto m2 = manifest(dir2);
        CHECK(m2["complete"] == false);
        CHECK(m2["error"].is_string());
        CHECK(m2["outputs"] == json::array());
    }
}

TEST_CASE("sample-shell reports the acceptance rate") {
    RunConfig cfg;
    cfg.command = "sample-shell";
    cfg.seed = 5;
    cfg.a = 1.0;
    cfg.n_samples = 5000;
    const auto dir = fresh_dir("shell");
    cfg.out_dir = dir.string();
    REQUIRE(run(cfg).exit_code == 0);

    const std::string samples = slurp(dir / "samples.csv");
    CHECK(line_count(samples) == 5001);
    CHECK(samples.rfind("q1,q2,p1,p2", 0) == 0);

    const auto rep = json::parse(slurp(dir / "shell_report.json"));
    CHECK(rep["n"] == 5000);
    const double rate = rep["acceptance_rate"].get<double>();
    const double lb = rep["acceptance_lower_bound"].get<double>();
    CHECK(lb == 1.0 / 64.0); // harmonic families: c = 8
    CHECK(rate >= lb);
    CHECK(rate <= 1.0);
    CHECK(rate == doctest::Approx(0.25).epsilon(0.05));
}

TEST_CASE("estimate-gk writes gk.json and is worker-count independent") {
    RunConfig cfg;
    cfg.command = "estimate-gk";
    cfg.seed = 9;
    cfg.threads = 1;
    cfg.a1 = 1.0;
    cfg.a2 = 1.0;
    cfg.n_traj = 50;
    cfg.T_max = 4.0;
    cfg.gk_h = 1e-3;
    cfg.gk_stride = 10;
    cfg.lag_max = 1.5;
    const auto dir1 = fresh_dir("gk-1");
    cfg.out_dir = dir1.string();
    REQUIRE(run(cfg).exit_code == 0);

    const auto g = json::parse(slurp(dir1 / "gk.json"));
    CHECK(g["n_traj"] == 50);
    CHECK(g["zero_shortcut"] == false);
    CHECK(g["gamma2"].is_number());
    CHECK(g["stderr"].get<double>() > 0.0);
    CHECK(g["t_star"].get<double>() > 0.0);
    const std::string acf1 = slurp(dir1 / "acf.csv");
    CHECK(line_count(acf1) == 152); // header + lags 0..150

    cfg.threads = 2;
    const auto dir2 = fresh_dir("gk-2");
    cfg.out_dir = dir2.string();
    REQUIRE(run(cfg).exit_code == 0);
    CHECK(slurp(dir2 / "acf.csv") == acf1);
    // gk.json carries only statistics, so it must match byte for byte too.
    CHECK(slurp(dir2 / "gk.json") == slurp(dir1 / "gk.json"));

    SUBCASE("the stored zero-axis shortcut skips sampling") {
        RunConfig z = cfg;
        z.a1 = 0.0;
        const auto dirz = fresh_dir("gk-zero");
        z.out_dir = dirz.string();
        REQUIRE(run(z).exit_code == 0);
        const auto gz = json::parse(slurp(dirz / "gk.json"));
        CHECK(gz["zero_shortcut"] == true);
        CHECK(gz["gamma2"] == 0.0);
        CHECK(!fs::exists(dirz / "acf.csv")); // no ACF estimated
        CHECK(!manifest(dirz).contains("initial_law"));
    }
}

TEST_CASE("tabulate-coefficients writes the table pair") {
    RunConfig cfg;
    cfg.command = "tabulate-coefficients";
    cfg.seed = 13;
    cfg.threads = 1;
    cfg.table_grid = {0.0, 0.8, 1.6};
    cfg.n_traj = 24;
    cfg.T_max = 6.0;
    cfg.gk_h = 2e-3;
    cfg.gk_stride = 5;
    cfg.lag_max = 2.5;
    const auto dir = fresh_dir("table");
    cfg.out_dir = dir.string();
    REQUIRE(run(cfg).exit_code == 0);

    const std::string csv = slurp(dir / "coefficients.csv");
    CHECK(line_count(csv) == 10); // header + 3x3 grid
    CHECK(csv.rfind("a1,a2,gamma2,gamma2_stderr,G,alpha,alpha_stderr", 0) == 0);
    const auto meta = json::parse(slurp(dir / "coefficients.json"));
    CHECK(meta["sigma"] == 1.0);
    CHECK(meta["grid"] == json::array({0.0, 0.8, 1.6}));
    CHECK(meta["pin_family"] == "harmonic");
}

TEST_CASE("simulate-meso records the energy path") {
    RunConfig cfg;
    cfg.command = "simulate-meso";
    cfg.seed = 17;
    cfg.meso_h = 1e-3;
    cfg.meso_T = 0.5;
    cfg.meso_stride = 100;
    cfg.e0 = {1.0, 1.0};
    const auto dir = fresh_dir("meso");
    cfg.out_dir = dir.string();
    REQUIRE(run(cfg).exit_code == 0);

    const std::string path = slurp(dir / "meso_path.csv");
    CHECK(line_count(path) == 7); // header + 6 records
    CHECK(path.rfind("t,e_1,e_2", 0) == 0);
    const auto rep = json::parse(slurp(dir / "meso_report.json"));
    CHECK(rep["increments"] == 500);
    CHECK(rep["clamp_frequency"].is_number());

    SUBCASE("a table source without files is a config failure") {
        RunConfig bad = cfg;
        bad.source = "table";
        const auto dirb = fresh_dir("meso-notable");
        bad.out_dir = dirb.string();
        const auto r = run(bad);
        CHECK(r.exit_code == 2);
        CHECK(manifest(dirb)["complete"] == false);
    }
    SUBCASE("the closed-form source rejects non-harmonic models") {
        RunConfig bad = cfg;
        bad.pin = "softened";
        const auto dirb = fresh_dir("meso-softpin");
        bad.out_dir = dirb.string();
        CHECK(run(bad).exit_code == 2);
    }
}

TEST_CASE("stationarity writes the distribution check") {
    RunConfig cfg;
    cfg.command = "stationarity";
    cfg.seed = 19;
    cfg.meso_h = 1e-3;
    cfg.meso_T = 900.0;
    cfg.beta = 1.0;
    cfg.total = 2.0;
    const auto dir = fresh_dir("stat");
    cfg.out_dir = dir.string();
    REQUIRE(run(cfg).exit_code == 0);

    const auto rep = json::parse(slurp(dir / "stationarity.json"));
    CHECK(rep["n"].get<int>() >= 1100);
    CHECK(rep["ks"].get<double>() < 0.06);
    CHECK(rep["sample_spacing"].get<double>() == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(rep["insufficient_burn_in"] == false);
    CHECK(rep["beta"] == 1.0);
    CHECK(rep["total"] == 2.0);
}

TEST_CASE("decay-rate writes the fit report") {
    RunConfig cfg;
    cfg.command = "decay-rate";
    cfg.seed = 23;
    cfg.threads = 1;
    cfg.decay_a = 1.0;
    cfg.decay_paths = 60;
    cfg.decay_T = 12.0;
    cfg.decay_h = 1e-3;
    cfg.decay_stride = 10;
    cfg.decay_lag_max = 6.0;
    cfg.t_lo = 0.3;
    cfg.t_hi = 5.5;
    cfg.peaks = true;
    const auto dir = fresh_dir("decay");
    cfg.out_dir = dir.string();
    REQUIRE(run(cfg).exit_code == 0);

    const auto fit = json::parse(slurp(dir / "decay.json"));
    CHECK(fit["observable"] == "qp");
    CHECK(fit["sigma"] == 1.0);
    CHECK(fit["lambda"].is_number());
    CHECK(fit["r2"].is_number());
    CHECK(fit["envelope_peaks"] == true);
    CHECK(fit["n_paths"] == 60);
    CHECK(fit["t_lo"] == 0.3);
    CHECK(fs::exists(dir / "acf.csv"));
}

TEST_CASE("converge writes one row per coupling strength") {
    RunConfig cfg;
    cfg.command = "converge";
    cfg.seed = 29;
    cfg.threads = 1;
    cfg.eps_list = {0.5, 0.25};
    cfg.t_macro = 0.3;
    cfg.n_paths = 40;
    cfg.n_boot = 50;
    const auto dir = fresh_dir("conv");
    cfg.out_dir = dir.string();
    REQUIRE(run(cfg).exit_code == 0);

    const std::string csv = slurp(dir / "converge.csv");
    CHECK(line_count(csv) == 3);
    CHECK(csv.rfind("eps,W1,W1_err,KS,KS_err", 0) == 0);
    const auto rep = json::parse(slurp(dir / "converge.json"));
    CHECK(rep["eps"] == json::array({0.5, 0.25}));
    CHECK(rep["n_samples"] == json::array({40, 40}));
    CHECK(rep["w1_monotone"].is_boolean());
    CHECK(rep["e0"] == json::array({1.0, 1.0}));

    SUBCASE("a non-decreasing ladder fails as configuration") {
        RunConfig bad = cfg;
        bad.eps_list = {0.25, 0.5};
        const auto dirb = fresh_dir("conv-bad");
        bad.out_dir = dirb.string();
        const auto r = run(bad);
        CHECK(r.exit_code == 2);
        const auto m = manifest(dirb);
        CHECK(m["complete"] == false);
        CHECK(m["outputs"] == json::array());
        CHECK(dir_entries(dirb) == std::set<std::string>{"manifest.json"});
    }
}

TEST_CASE("failure modes map to distinct exit codes") {
    SUBCASE("missing command") {
        RunConfig cfg;
        const auto dir = fresh_dir("nocmd");
        cfg.out_dir = dir.string();
        const auto r = run(cfg);
        CHECK(r.exit_code == 2);
        CHECK(r.message.find("command is required") != std::string::npos);
        CHECK(!fs::exists(dir)); // rejected before touching the disk
    }
    SUBCASE("unwritable output directory") {
        RunConfig cfg;
        cfg.command = "sample-shell";
        cfg.n_samples = 10;
        cfg.out_dir = "/proc/nope/x";
        const auto r = run(cfg);
        CHECK(r.exit_code == 4);
        CHECK(r.message.find("output directory") != std::string::npos);
    }
    SUBCASE("numerical blow-up") {
        // An unstable step size drives the integrator to non-finite values.
        RunConfig cfg;
        cfg.command = "simulate-micro";
        cfg.h = 3.0;
        cfg.T = 3000.0;
        const auto dir = fresh_dir("blowup");
        cfg.out_dir = dir.string();
        const auto r = run(cfg);
        CHECK(r.exit_code == 3);
        const auto m = manifest(dir);
        CHECK(m["complete"] == false);
        CHECK(m["error"].is_string());
    }
}
