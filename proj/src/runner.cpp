#include "wcgl/runner.hpp"

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

#include <json.hpp>

#include "wcgl/analysis.hpp"
#include "wcgl/coefficients.hpp"
#include "wcgl/csv.hpp"
#include "wcgl/integrator.hpp"
#include "wcgl/lattice.hpp"
#include "wcgl/meso.hpp"
#include "wcgl/parallel.hpp"
#include "wcgl/potential.hpp"
#include "wcgl/rng.hpp"
#include "wcgl/shell.hpp"
#include "wcgl/state.hpp"
#include "wcgl/version.hpp"

namespace fs = std::filesystem;

namespace wcgl {

namespace {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (!in.good() && !in.eof()) throw IoError("read failed on '" + path + "'");
    return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out.good()) throw IoError("write failed on '" + path.string() + "'");
}

// One output file assembled in memory, then staged to disk.
struct Outputs {
    std::vector<std::pair<std::string, std::string>> files; // name -> content
    bool drew_from_shells = false; // manifest notes the initial law
    nlohmann::json extra;          // subcommand-specific manifest fields

    void add(const std::string& name, std::string content) {
        files.emplace_back(name, std::move(content));
    }
};

Lattice lattice_from(const RunConfig& c) { return Lattice::make(c.d, {c.nx, c.ny}); }

int effective_threads(const RunConfig& c) {
    return c.threads == 0 ? default_threads() : c.threads;
}

std::vector<double> broadcast_energies(const std::vector<double>& src, int n_sites,
                                       const char* what) {
    if (static_cast<int>(src.size()) == n_sites) return src;
    if (src.size() == 1) return std::vector<double>(n_sites, src[0]);
    throw std::invalid_argument(std::string(what) +
                                ": give one energy per site or a single value to broadcast");
}

PhaseState product_shell_state(const std::vector<double>& energies, const PotentialPair& pp,
                               std::uint64_t seed, std::uint64_t task) {
    PhaseState s = PhaseState::zeros(static_cast<int>(energies.size()));
    for (std::size_t i = 0; i < energies.size(); ++i) {
        CounterRng rng(seed, make_stream(StreamPurpose::shell, task, i));
        auto [q, p] = sample_shell(energies[i], pp, rng);
        s.q[i] = q;
        s.p[i] = p;
    }
    return s;
}

CoefficientSource coefficient_source(const RunConfig& c, const PotentialPair& pp) {
    if (c.source == "harmonic") {
        if (c.pin != "harmonic" || c.coupling != "harmonic_v" || c.k != 2.0)
            throw std::invalid_argument(
                "source = harmonic: the closed form is for the harmonic pin with the default "
                "coupling (k = 2); use a measured table otherwise");
        (void)pp;
        return CoefficientSource::harmonic(c.sigma);
    }
    if (c.table_csv.empty() || c.table_json.empty())
        throw std::invalid_argument("source = table needs table_csv and table_json paths");
    return CoefficientSource::from_table(
        table_from_files(read_file(c.table_csv), read_file(c.table_json)));
}

GkParams gk_params(const RunConfig& c) {
    GkParams g;
    g.n_traj = c.n_traj;
    g.T_max = c.T_max;
    g.h = c.gk_h;
    g.record_stride = c.gk_stride;
    g.lag_max = c.lag_max;
    g.origin_spacing = c.origin_spacing;
    g.diagnostic_zero = c.diagnostic_zero;
    g.tail_extrapolation = c.tail_extrapolation;
    g.threads = effective_threads(c);
    return g;
}

// ---- subcommands ----------------------------------------------------------

void cmd_simulate_micro(const RunConfig& c, const PotentialPair& pp, Outputs& out) {
    const Lattice lat = lattice_from(c);
    PhaseState s0;
    if (!c.checkpoint_in.empty()) {
        try {
            s0 = load_checkpoint(c.checkpoint_in);
        } catch (const std::exception& e) {
            throw IoError(e.what());
        }
        check_state(s0, lat);
    } else {
        const auto energies = broadcast_energies(c.init_energies, lat.n_sites, "init_energies");
        s0 = product_shell_state(energies, pp, c.seed, c.trajectory_id);
        out.drew_from_shells = true;
    }

    ObservableSpec spec;
    spec.i = c.obs_i;
    spec.k = c.obs_k;
    if (c.observable == "current") {
        spec.kind = ObservableSpec::Kind::current;
        spec.name = "j_" + std::to_string(c.obs_i) + "_" + std::to_string(c.obs_k);
    } else if (c.observable == "site_energy_bare") {
        spec.kind = ObservableSpec::Kind::site_energy_bare;
        spec.name = "e0_" + std::to_string(c.obs_i);
    } else if (c.observable == "site_energy_full") {
        spec.kind = ObservableSpec::Kind::site_energy_full;
        spec.name = "e_" + std::to_string(c.obs_i);
    } else {
        spec.kind = ObservableSpec::Kind::hamiltonian;
        spec.name = "H";
    }

    SimParams sp;
    sp.eps = c.eps;
    sp.sigma = c.sigma;
    sp.h = c.h;
    sp.T = c.T;
    sp.seed = c.seed;
    sp.trajectory_id = c.trajectory_id;
    sp.record_stride = c.record_stride;

    PhaseState final_state;
    const auto series = simulate(s0, sp, pp, lat, {spec}, c.save_final ? &final_state : nullptr);

    CsvWriter csv;
    csv.header({"t", series[0].name});
    for (std::size_t i = 0; i < series[0].t.size(); ++i)
        csv.row({series[0].t[i], series[0].value[i]});
    out.add("series.csv", std::move(csv.text));

    if (c.save_final) {
        // The checkpoint writer targets a path; bounce through a temp file to
        // get the bytes into the staged-output list.
        static std::atomic<std::uint64_t> ckpt_counter{0};
        const fs::path tmp = fs::temp_directory_path() /
                             ("wcgl-ckpt-" + std::to_string(::getpid()) + "-" +
                              std::to_string(ckpt_counter.fetch_add(1)) + ".bin");
        save_checkpoint(tmp.string(), final_state);
        std::string bytes = read_file(tmp.string());
        fs::remove(tmp);
        out.add("final.ckpt", std::move(bytes));
    }
    out.extra["n_steps"] = std::llround(c.T / c.h);
}

void cmd_sample_shell(const RunConfig& c, const PotentialPair& pp, Outputs& out) {
    CounterRng rng(c.seed, make_stream(StreamPurpose::shell, 0, 0));
    CsvWriter csv;
    csv.header({"q1", "q2", "p1", "p2"});
    std::int64_t accepted = 0;
    double proposals = 0.0;
    for (std::int64_t i = 0; i < c.n_samples; ++i) {
        double ratio = 1.0;
        auto [q, p] = sample_shell(c.a, pp, rng, &ratio);
        ++accepted;
        proposals += 1.0 / ratio;
        csv.row({q.x, q.y, p.x, p.y});
    }
    out.drew_from_shells = true;
    out.add("samples.csv", std::move(csv.text));
    nlohmann::json rep;
    rep["schema_version"] = kManifestSchemaVersion;
    rep["a"] = c.a;
    rep["n"] = c.n_samples;
    rep["acceptance_rate"] = static_cast<double>(accepted) / proposals;
    rep["acceptance_lower_bound"] = 1.0 / (pp.c * pp.c);
    out.add("shell_report.json", rep.dump(2) + "\n");
}

void cmd_tabulate_z(const RunConfig& c, const PotentialPair& pp, Outputs& out) {
    const ZMethod method =
        c.z_method == "quadrature" ? ZMethod::quadrature : ZMethod::monte_carlo;
    CsvWriter csv;
    csv.header({"a", "Z", "Z_stderr", "dlogZ"});
    for (std::size_t gi = 0; gi < c.z_grid.size(); ++gi) {
        const double a = c.z_grid[gi];
        CounterRng rng(c.seed, make_stream(StreamPurpose::shell, gi, 0));
        const ZEstimate z = partition_z(a, pp, c.n_samples, method, &rng);
        const double dlz = a > 0.0 ? log_z_derivative(a, pp)
                                   : std::numeric_limits<double>::infinity();
        csv.row({a, z.z, z.stderr_, dlz});
    }
    out.drew_from_shells = method == ZMethod::monte_carlo;
    out.add("z.csv", std::move(csv.text));
}

void cmd_estimate_gk(const RunConfig& c, const PotentialPair& pp, Outputs& out) {
    const GkResult r = green_kubo_gamma2(c.a1, c.a2, c.sigma, pp, gk_params(c), c.seed);
    nlohmann::json j;
    j["schema_version"] = kManifestSchemaVersion;
    j["a1"] = c.a1;
    j["a2"] = c.a2;
    j["sigma"] = c.sigma;
    j["gamma2"] = r.gamma2;
    j["stderr"] = r.stderr_;
    j["t_star"] = r.t_star;
    j["n_traj"] = r.n_traj;
    j["n_origins"] = r.n_origins;
    j["zero_shortcut"] = r.zero_shortcut;
    j["warn_short_tmax"] = r.warn_short_tmax;
    j["warn_truncation"] = r.warn_truncation;
    j["tail_extrapolated"] = r.tail_extrapolated;
    out.add("gk.json", j.dump(2) + "\n");
    if (!r.acf_t.empty()) {
        CsvWriter csv;
        csv.header({"lag", "acf"});
        for (std::size_t i = 0; i < r.acf_t.size(); ++i) csv.row({r.acf_t[i], r.acf_c[i]});
        out.add("acf.csv", std::move(csv.text));
    }
    out.drew_from_shells = !r.zero_shortcut;
}

void cmd_tabulate_coefficients(const RunConfig& c, const PotentialPair& pp, Outputs& out) {
    const CoefficientTable tbl = tabulate(c.table_grid, c.sigma, pp, gk_params(c), c.seed);
    out.add("coefficients.csv", table_to_csv(tbl));
    out.add("coefficients.json", table_meta_to_json(tbl));
    out.drew_from_shells = true;
}

void cmd_simulate_meso(const RunConfig& c, const PotentialPair& pp, Outputs& out) {
    const Lattice lat = lattice_from(c);
    const CoefficientSource coeffs = coefficient_source(c, pp);
    EnergyVector e0;
    e0.e = broadcast_energies(c.e0, lat.n_sites, "e0");

    MesoParams mp;
    mp.h = c.meso_h;
    mp.T = c.meso_T;
    mp.seed = c.seed;
    mp.path_id = c.path_id;
    mp.record_stride = c.meso_stride;
    const MesoPath path = meso_simulate(e0, mp, coeffs, lat);

    CsvWriter csv;
    std::vector<std::string> head{"t"};
    for (int i = 1; i <= lat.n_sites; ++i) head.push_back("e_" + std::to_string(i));
    csv.header(head);
    for (std::size_t r = 0; r < path.t.size(); ++r) {
        std::vector<double> row{path.t[r]};
        row.insert(row.end(), path.e[r].e.begin(), path.e[r].e.end());
        csv.row(row);
    }
    out.add("meso_path.csv", std::move(csv.text));

    nlohmann::json j;
    j["schema_version"] = kManifestSchemaVersion;
    j["increments"] = path.stats.increments;
    j["clamped"] = path.stats.clamped;
    j["clamp_frequency"] = path.stats.clamp_frequency();
    out.add("meso_report.json", j.dump(2) + "\n");
}

void cmd_stationarity(const RunConfig& c, const PotentialPair& pp, Outputs& out) {
    const Lattice lat = lattice_from(c);
    const CoefficientSource coeffs = coefficient_source(c, pp);
    MesoParams mp;
    mp.h = c.meso_h;
    mp.T = c.meso_T;
    mp.seed = c.seed;
    mp.path_id = c.path_id;
    mp.beta = c.beta;
    mp.total = c.total;
    const StationarityReport rep = stationarity_check(lat, coeffs, c.beta, mp, &pp);

    nlohmann::json j;
    j["schema_version"] = kManifestSchemaVersion;
    j["ks"] = rep.ks;
    j["n"] = rep.n;
    j["burn_in_time"] = rep.burn_in_time;
    j["sample_spacing"] = rep.sample_spacing;
    j["clamp_frequency"] = rep.clamp_frequency;
    j["halves_ks"] = rep.halves_ks;
    j["halves_threshold"] = rep.halves_threshold;
    j["insufficient_burn_in"] = rep.insufficient_burn_in;
    j["beta"] = rep.beta;
    j["total"] = rep.total;
    out.add("stationarity.json", j.dump(2) + "\n");
}

void cmd_decay_rate(const RunConfig& c, const PotentialPair& pp, Outputs& out) {
    const double lag_max = c.decay_lag_max > 0.0 ? c.decay_lag_max : 0.55 * c.decay_T;
    const double spacing =
        c.decay_origin_spacing > 0.0 ? c.decay_origin_spacing : 1.0 / (c.sigma * c.sigma);
    const PooledAcf acf =
        single_site_flux_acf(c.decay_a, c.sigma, pp, c.decay_T, c.decay_h, c.decay_stride,
                             lag_max, spacing, c.decay_paths, c.seed, effective_threads(c));
    out.drew_from_shells = true;

    CsvWriter csv;
    csv.header({"t", "acf"});
    for (std::size_t i = 0; i < acf.t.size(); ++i) csv.row({acf.t[i], acf.c[i]});
    out.add("acf.csv", std::move(csv.text));

    DecayFit fit;
    double floor = 0.0;
    if (c.peaks) {
        floor = peak_floor(acf);
        const auto [tp, cp] = envelope_peaks(acf.t, acf.c, floor);
        fit = fit_decay_rate(tp, cp, c.t_lo, c.t_hi, "qp", c.sigma);
    } else {
        fit = fit_decay_rate(acf.t, acf.c, c.t_lo, c.t_hi, "qp", c.sigma);
    }
    nlohmann::json j;
    j["schema_version"] = kManifestSchemaVersion;
    j["observable"] = fit.observable;
    j["sigma"] = fit.sigma;
    j["lambda"] = fit.lambda;
    j["stderr"] = fit.stderr_;
    j["r2"] = fit.r2;
    j["t_lo"] = fit.t_lo;
    j["t_hi"] = fit.t_hi;
    j["accepted"] = fit.accepted;
    j["envelope_peaks"] = c.peaks;
    j["peak_floor"] = floor;
    j["n_paths"] = acf.n_paths;
    j["n_origins"] = acf.n_origins;
    out.add("decay.json", j.dump(2) + "\n");
}

void cmd_converge(const RunConfig& c, const PotentialPair& pp, Outputs& out) {
    const Lattice lat = lattice_from(c);
    const CoefficientSource coeffs = coefficient_source(c, pp);
    ConvergeParams cp;
    cp.eps_list = c.eps_list;
    cp.t_macro = c.t_macro;
    cp.n_paths = c.n_paths;
    cp.e0 = broadcast_energies(c.e0, lat.n_sites, "e0");
    cp.sigma = c.sigma;
    cp.h_micro = c.h;
    cp.h_meso = c.meso_h;
    cp.seed = c.seed;
    cp.n_boot = c.n_boot;
    cp.threads = effective_threads(c);
    const DistanceReport rep = convergence_study(cp, pp, lat, coeffs);
    out.drew_from_shells = true;

    CsvWriter csv;
    csv.header({"eps", "W1", "W1_err", "KS", "KS_err"});
    for (std::size_t i = 0; i < rep.eps.size(); ++i)
        csv.row({rep.eps[i], rep.w1[i], rep.w1_err[i], rep.ks[i], rep.ks_err[i]});
    out.add("converge.csv", std::move(csv.text));

    nlohmann::json j;
    j["schema_version"] = kManifestSchemaVersion;
    j["eps"] = rep.eps;
    j["n_samples"] = rep.n_samples;
    j["w1"] = rep.w1;
    j["w1_err"] = rep.w1_err;
    j["ks"] = rep.ks;
    j["ks_err"] = rep.ks_err;
    j["w1_monotone"] = rep.w1_monotone;
    j["t_macro"] = rep.t_macro;
    j["e0"] = rep.e0;
    out.add("converge.json", j.dump(2) + "\n");
}

std::string manifest_text(const RunConfig& cfg, const Outputs& out, bool complete,
                          const std::string& error, double wall_seconds) {
    nlohmann::json m;
    m["schema_version"] = kManifestSchemaVersion;
    m["version"] = kVersion;
    m["command"] = cfg.command;
    m["seed"] = cfg.seed;
    m["threads"] = effective_threads(cfg);
    m["sign_convention"] = kCurrentSignConvention;
    if (out.drew_from_shells)
        m["initial_law"] = "product of single-site energy-shell measures";
    m["config_text"] = render_config(cfg);
    m["wall_time_seconds"] = wall_seconds;
    m["complete"] = complete;
    if (!error.empty()) m["error"] = error;
    std::vector<std::string> names;
    for (const auto& [name, content] : out.files) names.push_back(name);
    m["outputs"] = names;
    if (!out.extra.is_null()) m["details"] = out.extra;
    return m.dump(2) + "\n";
}

} // namespace

RunResult run(const RunConfig& cfg) {
    RunResult res;
    res.out_dir = cfg.out_dir;

    const auto t0 = std::chrono::steady_clock::now();
    auto wall = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    // Configuration-level failures happen before anything touches the disk.
    PotentialPair pp;
    try {
        if (cfg.command.empty()) throw ConfigError("config: [run] command is required", 0);
        pp = make_potential(cfg.pin, cfg.lambda, cfg.coupling, cfg.k);
    } catch (const std::exception& e) {
        res.exit_code = 2;
        res.message = e.what();
        return res;
    }

    // Staging area inside the output directory; unique per process and call.
    static std::atomic<std::uint64_t> stage_counter{0};
    fs::path outdir(cfg.out_dir);
    fs::path staging;
    try {
        fs::create_directories(outdir);
        staging = outdir / (".staging-" + std::to_string(::getpid()) + "-" +
                            std::to_string(stage_counter.fetch_add(1)));
        fs::create_directory(staging);
    } catch (const std::exception& e) {
        res.exit_code = 4;
        res.message = std::string("cannot prepare output directory: ") + e.what();
        return res;
    }

    Outputs out;
    bool complete = true;
    std::string error;
    try {
        if (cfg.command == "simulate-micro") cmd_simulate_micro(cfg, pp, out);
        else if (cfg.command == "sample-shell") cmd_sample_shell(cfg, pp, out);
        else if (cfg.command == "tabulate-z") cmd_tabulate_z(cfg, pp, out);
        else if (cfg.command == "estimate-gk") cmd_estimate_gk(cfg, pp, out);
        else if (cfg.command == "tabulate-coefficients") cmd_tabulate_coefficients(cfg, pp, out);
        else if (cfg.command == "simulate-meso") cmd_simulate_meso(cfg, pp, out);
        else if (cfg.command == "stationarity") cmd_stationarity(cfg, pp, out);
        else if (cfg.command == "decay-rate") cmd_decay_rate(cfg, pp, out);
        else if (cfg.command == "converge") cmd_converge(cfg, pp, out);
        else throw ConfigError("config: unknown command '" + cfg.command + "'", 0);
    } catch (const ConfigError& e) {
        complete = false;
        error = e.what();
        res.exit_code = 2;
    } catch (const IoError& e) {
        complete = false;
        error = e.what();
        res.exit_code = 4;
    } catch (const std::invalid_argument& e) {
        complete = false;
        error = e.what();
        res.exit_code = 2;
    } catch (const std::exception& e) {
        complete = false;
        error = e.what();
        res.exit_code = 3;
    }
    res.message = error;

    // Stage every produced file, write the manifest last, then move the lot
    // into place. A failure here trumps the command's own status.
    try {
        for (const auto& [name, content] : out.files) write_file(staging / name, content);
        write_file(staging / "manifest.json",
                   manifest_text(cfg, out, complete, error, wall()));
        for (const auto& [name, content] : out.files) {
            fs::rename(staging / name, outdir / name);
            res.outputs.push_back(name);
        }
        fs::rename(staging / "manifest.json", outdir / "manifest.json");
        res.outputs.push_back("manifest.json");
        fs::remove(staging);
    } catch (const std::exception& e) {
        std::error_code ec;
        fs::remove_all(staging, ec);
        res.exit_code = 4;
        res.message = std::string("cannot finalize outputs: ") + e.what();
        return res;
    }
    return res;
}

} // namespace wcgl
