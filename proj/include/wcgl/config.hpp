#pragma once
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace wcgl {

// Thrown on any parse or validation problem; `line` is 1-based, 0 when the
// failure is not tied to one line (cross-key checks).
struct ConfigError : std::runtime_error {
    ConfigError(const std::string& msg, int line_) : std::runtime_error(msg), line(line_) {}
    int line = 0;
};

// Everything a run needs, one field per config key. Sections group related
// keys; every key has a default so a minimal file is just [run] plus a
// command. render() echoes all of them back, and parse(render(cfg)) == cfg.
struct RunConfig {
    // [run]
    std::string command;      // one of the subcommand names; required to run
    std::uint64_t seed = 0;
    int threads = 0;          // 0 = all logical cores

    // [model]
    std::string pin = "harmonic";        // harmonic | softened
    double lambda = 1.0;                 // softened steepness
    std::string coupling = "harmonic_v"; // harmonic_v | cosine_v
    double k = 2.0;                      // coupling strength
    double sigma = 1.0;                  // noise strength of the dynamics

    // [lattice]
    int d = 1;
    int nx = 2;
    int ny = 1;

    // [micro]
    double eps = 0.0;
    double h = 1e-3;
    double T = 1.0;
    int record_stride = 1;
    std::string observable = "hamiltonian"; // current | site_energy_bare |
                                            // site_energy_full | hamiltonian
    int obs_i = 0;
    int obs_k = 1;
    std::vector<double> init_energies = {1.0}; // per-site shells; single value broadcasts
    std::string checkpoint_in;                 // start from this checkpoint when set
    bool save_final = false;                   // write the final state as a checkpoint
    std::uint64_t trajectory_id = 0;

    // [shell]
    double a = 1.0;
    std::int64_t n_samples = 1000000;
    std::string z_method = "monte_carlo"; // monte_carlo | quadrature
    std::vector<double> z_grid = {1.0};

    // [gk]
    double a1 = 1.0;
    double a2 = 1.0;
    std::int64_t n_traj = 10000;
    double T_max = 20.0;
    double gk_h = 1e-3;
    int gk_stride = 10;
    double lag_max = 0.0;         // 0 -> T_max/2
    double origin_spacing = 0.0;  // 0 -> 1/sigma^2
    bool diagnostic_zero = false;
    bool tail_extrapolation = false;

    // [table]
    std::vector<double> table_grid = {0.0, 0.25, 0.5, 1.0, 1.5, 2.0};

    // [meso]
    double meso_h = 1e-3;
    double meso_T = 1.0;
    int meso_stride = 1;
    std::vector<double> e0 = {1.0, 1.0};
    std::string source = "harmonic"; // harmonic | table
    std::string table_csv;           // table files for source = table
    std::string table_json;
    double beta = 1.0;
    double total = 2.0;
    std::uint64_t path_id = 0;

    // [converge]
    std::vector<double> eps_list = {0.4, 0.2, 0.1};
    double t_macro = 1.0;
    int n_paths = 2000;
    int n_boot = 200;

    // [decay]
    double decay_a = 1.0;
    int decay_paths = 800;
    double decay_T = 40.0;
    double decay_h = 1e-3;
    int decay_stride = 10;
    double decay_lag_max = 0.0;        // 0 -> 0.55 T
    double decay_origin_spacing = 0.0; // 0 -> 1/sigma^2
    double t_lo = 1.0;
    double t_hi = 8.0;
    bool peaks = true; // fit the envelope peaks instead of the raw ACF

    // [output]
    std::string out_dir = "out";

    bool operator==(const RunConfig&) const = default;
};

// `[section]` headers with flat `key = value` lines; `#` starts a comment.
// Unknown sections or keys, malformed values, and out-of-range values all
// throw ConfigError with the offending line number.
RunConfig parse_config(const std::string& text);

// Canonical echo of every key (defaults included). Doubles use the shortest
// round-trip form, so parse(render(cfg)) == cfg field for field.
std::string render_config(const RunConfig& cfg);

inline const std::vector<std::string>& subcommand_names() {
    static const std::vector<std::string> names = {
        "simulate-micro", "sample-shell",  "tabulate-z",
        "estimate-gk",    "tabulate-coefficients", "simulate-meso",
        "stationarity",   "decay-rate",    "converge"};
    return names;
}

} // namespace wcgl
