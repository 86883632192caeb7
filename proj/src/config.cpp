#include "wcgl/config.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <cstdlib>

#include "wcgl/csv.hpp"

namespace wcgl {

namespace {

[[noreturn]] void fail(int line, const std::string& msg) {
    throw ConfigError("config line " + std::to_string(line) + ": " + msg, line);
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v, int line) {
    if (v.empty()) fail(line, key + ": expected a number, got an empty value");
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end != v.c_str() + v.size()) fail(line, key + ": '" + v + "' is not a number");
    if (!std::isfinite(x)) fail(line, key + ": value must be finite");
    return x;
}

std::int64_t to_i64(const std::string& key, const std::string& v, int line) {
    if (v.empty()) fail(line, key + ": expected an integer, got an empty value");
    char* end = nullptr;
    const long long x = std::strtoll(v.c_str(), &end, 10);
    if (end != v.c_str() + v.size()) fail(line, key + ": '" + v + "' is not an integer");
    return x;
}

int to_int(const std::string& key, const std::string& v, int line) {
    const std::int64_t x = to_i64(key, v, line);
    if (x < INT_MIN || x > INT_MAX) fail(line, key + ": value out of range");
    return static_cast<int>(x);
}

std::uint64_t to_u64(const std::string& key, const std::string& v, int line) {
    if (v.empty() || v[0] == '-') fail(line, key + ": expected a nonnegative integer");
    char* end = nullptr;
    const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
    if (end != v.c_str() + v.size()) fail(line, key + ": '" + v + "' is not an integer");
    return x;
}

bool to_bool(const std::string& key, const std::string& v, int line) {
    if (v == "true") return true;
    if (v == "false") return false;
    fail(line, key + ": expected true or false, got '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v, int line) {
    if (trim(v).empty()) fail(line, key + ": needs at least one value");
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= v.size()) {
        const std::size_t comma = v.find(',', start);
        const std::string tok =
            trim(v.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
        out.push_back(to_double(key, tok, line));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

void require(bool ok, int line, const std::string& msg) {
    if (!ok) fail(line, msg);
}

bool one_of(const std::string& v, std::initializer_list<const char*> names) {
    return std::any_of(names.begin(), names.end(), [&](const char* n) { return v == n; });
}

void list_nonneg(const std::string& key, const std::vector<double>& v, int line) {
    for (double x : v) require(x >= 0.0, line, key + ": entries must be >= 0");
}

std::string join(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += fmt_double(v[i]);
    }
    return out;
}

} // namespace

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::string section;
    int line = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        const std::string raw =
            text.substr(pos, eol == std::string::npos ? std::string::npos : eol - pos);
        pos = eol == std::string::npos ? text.size() + 1 : eol + 1;
        ++line;
        const std::string s = trim(raw);
        if (s.empty() || s[0] == '#') continue;
        if (s.front() == '[') {
            require(s.back() == ']', line, "unterminated section header");
            section = trim(s.substr(1, s.size() - 2));
            require(one_of(section, {"run", "model", "lattice", "micro", "shell", "gk", "table",
                                     "meso", "converge", "decay", "output"}),
                    line, "unknown section [" + section + "]");
            continue;
        }
        const std::size_t eq = s.find('=');
        require(eq != std::string::npos, line, "expected key = value");
        const std::string key = trim(s.substr(0, eq));
        const std::string val = trim(s.substr(eq + 1));
        require(!key.empty(), line, "missing key before '='");
        require(!section.empty(), line, "key '" + key + "' appears before any [section]");

        auto unknown = [&]() -> void { fail(line, "unknown key '" + key + "' in [" + section + "]"); };

        if (section == "run") {
            if (key == "command") {
                require(val.empty() || std::find(subcommand_names().begin(),
                                                 subcommand_names().end(),
                                                 val) != subcommand_names().end(),
                        line, "command: unknown subcommand '" + val + "'");
                cfg.command = val;
            } else if (key == "seed") {
                cfg.seed = to_u64(key, val, line);
            } else if (key == "threads") {
                cfg.threads = to_int(key, val, line);
                require(cfg.threads >= 0, line, "threads: must be >= 0 (0 = all cores)");
            } else unknown();
        } else if (section == "model") {
            if (key == "pin") {
                require(one_of(val, {"harmonic", "softened"}), line,
                        "pin: expected harmonic or softened");
                cfg.pin = val;
            } else if (key == "lambda") {
                cfg.lambda = to_double(key, val, line);
                require(cfg.lambda >= 0.0, line, "lambda: must be >= 0");
            } else if (key == "coupling") {
                require(one_of(val, {"harmonic_v", "cosine_v"}), line,
                        "coupling: expected harmonic_v or cosine_v");
                cfg.coupling = val;
            } else if (key == "k") {
                cfg.k = to_double(key, val, line);
                require(cfg.k > 0.0, line, "k: must be > 0");
            } else if (key == "sigma") {
                cfg.sigma = to_double(key, val, line);
                require(cfg.sigma > 0.0, line, "sigma: must be > 0");
            } else unknown();
        } else if (section == "lattice") {
            if (key == "d") {
                cfg.d = to_int(key, val, line);
                require(cfg.d == 1 || cfg.d == 2, line, "d: must be 1 or 2");
            } else if (key == "nx") {
                cfg.nx = to_int(key, val, line);
                require(cfg.nx >= 1, line, "nx: must be >= 1");
            } else if (key == "ny") {
                cfg.ny = to_int(key, val, line);
                require(cfg.ny >= 1, line, "ny: must be >= 1");
            } else unknown();
        } else if (section == "micro") {
            if (key == "eps") {
                cfg.eps = to_double(key, val, line);
                require(cfg.eps >= 0.0, line, "eps: must be >= 0");
            } else if (key == "h") {
                cfg.h = to_double(key, val, line);
                require(cfg.h > 0.0, line, "h: must be > 0");
            } else if (key == "T") {
                cfg.T = to_double(key, val, line);
                require(cfg.T > 0.0, line, "T: must be > 0");
            } else if (key == "record_stride") {
                cfg.record_stride = to_int(key, val, line);
                require(cfg.record_stride >= 1, line, "record_stride: must be >= 1");
            } else if (key == "observable") {
                require(one_of(val, {"current", "site_energy_bare", "site_energy_full",
                                     "hamiltonian"}),
                        line, "observable: unknown name '" + val + "'");
                cfg.observable = val;
            } else if (key == "obs_i") {
                cfg.obs_i = to_int(key, val, line);
                require(cfg.obs_i >= 0, line, "obs_i: must be >= 0");
            } else if (key == "obs_k") {
                cfg.obs_k = to_int(key, val, line);
                require(cfg.obs_k >= 0, line, "obs_k: must be >= 0");
            } else if (key == "init_energies") {
                cfg.init_energies = to_list(key, val, line);
                list_nonneg(key, cfg.init_energies, line);
            } else if (key == "checkpoint") {
                cfg.checkpoint_in = val;
            } else if (key == "save_final") {
                cfg.save_final = to_bool(key, val, line);
            } else if (key == "trajectory_id") {
                cfg.trajectory_id = to_u64(key, val, line);
            } else unknown();
        } else if (section == "shell") {
            if (key == "a") {
                cfg.a = to_double(key, val, line);
                require(cfg.a >= 0.0, line, "a: must be >= 0");
            } else if (key == "n") {
                cfg.n_samples = to_i64(key, val, line);
                require(cfg.n_samples >= 1, line, "n: must be >= 1");
            } else if (key == "method") {
                require(one_of(val, {"monte_carlo", "quadrature"}), line,
                        "method: expected monte_carlo or quadrature");
                cfg.z_method = val;
            } else if (key == "grid") {
                cfg.z_grid = to_list(key, val, line);
                list_nonneg(key, cfg.z_grid, line);
            } else unknown();
        } else if (section == "gk") {
            if (key == "a1") {
                cfg.a1 = to_double(key, val, line);
                require(cfg.a1 >= 0.0, line, "a1: must be >= 0");
            } else if (key == "a2") {
                cfg.a2 = to_double(key, val, line);
                require(cfg.a2 >= 0.0, line, "a2: must be >= 0");
            } else if (key == "n_traj") {
                cfg.n_traj = to_i64(key, val, line);
                require(cfg.n_traj >= 2, line, "n_traj: must be >= 2");
            } else if (key == "T_max") {
                cfg.T_max = to_double(key, val, line);
                require(cfg.T_max > 0.0, line, "T_max: must be > 0");
            } else if (key == "h") {
                cfg.gk_h = to_double(key, val, line);
                require(cfg.gk_h > 0.0, line, "h: must be > 0");
            } else if (key == "record_stride") {
                cfg.gk_stride = to_int(key, val, line);
                require(cfg.gk_stride >= 1, line, "record_stride: must be >= 1");
            } else if (key == "lag_max") {
                cfg.lag_max = to_double(key, val, line);
                require(cfg.lag_max >= 0.0, line, "lag_max: must be >= 0");
            } else if (key == "origin_spacing") {
                cfg.origin_spacing = to_double(key, val, line);
                require(cfg.origin_spacing >= 0.0, line, "origin_spacing: must be >= 0");
            } else if (key == "diagnostic_zero") {
                cfg.diagnostic_zero = to_bool(key, val, line);
            } else if (key == "tail_extrapolation") {
                cfg.tail_extrapolation = to_bool(key, val, line);
            } else unknown();
        } else if (section == "table") {
            if (key == "grid") {
                cfg.table_grid = to_list(key, val, line);
                list_nonneg(key, cfg.table_grid, line);
            } else unknown();
        } else if (section == "meso") {
            if (key == "h") {
                cfg.meso_h = to_double(key, val, line);
                require(cfg.meso_h > 0.0, line, "h: must be > 0");
            } else if (key == "T") {
                cfg.meso_T = to_double(key, val, line);
                require(cfg.meso_T > 0.0, line, "T: must be > 0");
            } else if (key == "record_stride") {
                cfg.meso_stride = to_int(key, val, line);
                require(cfg.meso_stride >= 1, line, "record_stride: must be >= 1");
            } else if (key == "e0") {
                cfg.e0 = to_list(key, val, line);
                list_nonneg(key, cfg.e0, line);
            } else if (key == "source") {
                require(one_of(val, {"harmonic", "table"}), line,
                        "source: expected harmonic or table");
                cfg.source = val;
            } else if (key == "table_csv") {
                cfg.table_csv = val;
            } else if (key == "table_json") {
                cfg.table_json = val;
            } else if (key == "beta") {
                cfg.beta = to_double(key, val, line);
                require(cfg.beta > 0.0, line, "beta: must be > 0");
            } else if (key == "total") {
                cfg.total = to_double(key, val, line);
                require(cfg.total >= 0.0, line, "total: must be >= 0");
            } else if (key == "path_id") {
                cfg.path_id = to_u64(key, val, line);
            } else unknown();
        } else if (section == "converge") {
            if (key == "eps_list") {
                cfg.eps_list = to_list(key, val, line);
                for (double x : cfg.eps_list)
                    require(x > 0.0, line, "eps_list: entries must be > 0");
            } else if (key == "t_macro") {
                cfg.t_macro = to_double(key, val, line);
                require(cfg.t_macro > 0.0, line, "t_macro: must be > 0");
            } else if (key == "n_paths") {
                cfg.n_paths = to_int(key, val, line);
                require(cfg.n_paths >= 2, line, "n_paths: must be >= 2");
            } else if (key == "n_boot") {
                cfg.n_boot = to_int(key, val, line);
                require(cfg.n_boot >= 2, line, "n_boot: must be >= 2");
            } else unknown();
        } else if (section == "decay") {
            if (key == "a") {
                cfg.decay_a = to_double(key, val, line);
                require(cfg.decay_a > 0.0, line, "a: must be > 0");
            } else if (key == "n_paths") {
                cfg.decay_paths = to_int(key, val, line);
                require(cfg.decay_paths >= 2, line, "n_paths: must be >= 2");
            } else if (key == "T") {
                cfg.decay_T = to_double(key, val, line);
                require(cfg.decay_T > 0.0, line, "T: must be > 0");
            } else if (key == "h") {
                cfg.decay_h = to_double(key, val, line);
                require(cfg.decay_h > 0.0, line, "h: must be > 0");
            } else if (key == "record_stride") {
                cfg.decay_stride = to_int(key, val, line);
                require(cfg.decay_stride >= 1, line, "record_stride: must be >= 1");
            } else if (key == "lag_max") {
                cfg.decay_lag_max = to_double(key, val, line);
                require(cfg.decay_lag_max >= 0.0, line, "lag_max: must be >= 0");
            } else if (key == "origin_spacing") {
                cfg.decay_origin_spacing = to_double(key, val, line);
                require(cfg.decay_origin_spacing >= 0.0, line, "origin_spacing: must be >= 0");
            } else if (key == "t_lo") {
                cfg.t_lo = to_double(key, val, line);
                require(cfg.t_lo >= 0.0, line, "t_lo: must be >= 0");
            } else if (key == "t_hi") {
                cfg.t_hi = to_double(key, val, line);
                require(cfg.t_hi > 0.0, line, "t_hi: must be > 0");
            } else if (key == "peaks") {
                cfg.peaks = to_bool(key, val, line);
            } else unknown();
        } else if (section == "output") {
            if (key == "dir") {
                require(!val.empty(), line, "dir: must not be empty");
                cfg.out_dir = val;
            } else unknown();
        }
    }

    // Cross-key checks; not tied to a single line.
    if (cfg.d == 1 && cfg.ny != 1) throw ConfigError("config: [lattice] ny must be 1 when d = 1", 0);
    if (cfg.h > cfg.T) throw ConfigError("config: [micro] h must be <= T", 0);
    if (cfg.meso_h > cfg.meso_T) throw ConfigError("config: [meso] h must be <= T", 0);
    if (!(cfg.t_lo < cfg.t_hi)) throw ConfigError("config: [decay] t_lo must be < t_hi", 0);
    return cfg;
}

std::string render_config(const RunConfig& c) {
    std::string o;
    auto kv = [&](const char* key, const std::string& v) {
        o += key;
        o += " = ";
        o += v;
        o += '\n';
    };
    auto kd = [&](const char* key, double v) { kv(key, fmt_double(v)); };
    auto ki = [&](const char* key, std::int64_t v) { kv(key, std::to_string(v)); };
    auto ku = [&](const char* key, std::uint64_t v) { kv(key, std::to_string(v)); };
    auto kb = [&](const char* key, bool v) { kv(key, v ? "true" : "false"); };

    o += "[run]\n";
    kv("command", c.command);
    ku("seed", c.seed);
    ki("threads", c.threads);
    o += "\n[model]\n";
    kv("pin", c.pin);
    kd("lambda", c.lambda);
    kv("coupling", c.coupling);
    kd("k", c.k);
    kd("sigma", c.sigma);
    o += "\n[lattice]\n";
    ki("d", c.d);
    ki("nx", c.nx);
    ki("ny", c.ny);
    o += "\n[micro]\n";
    kd("eps", c.eps);
    kd("h", c.h);
    kd("T", c.T);
    ki("record_stride", c.record_stride);
    kv("observable", c.observable);
    ki("obs_i", c.obs_i);
    ki("obs_k", c.obs_k);
    kv("init_energies", join(c.init_energies));
    kv("checkpoint", c.checkpoint_in);
    kb("save_final", c.save_final);
    ku("trajectory_id", c.trajectory_id);
    o += "\n[shell]\n";
    kd("a", c.a);
    ki("n", c.n_samples);
    kv("method", c.z_method);
    kv("grid", join(c.z_grid));
    o += "\n[gk]\n";
    kd("a1", c.a1);
    kd("a2", c.a2);
    ki("n_traj", c.n_traj);
    kd("T_max", c.T_max);
    kd("h", c.gk_h);
    ki("record_stride", c.gk_stride);
    kd("lag_max", c.lag_max);
    kd("origin_spacing", c.origin_spacing);
    kb("diagnostic_zero", c.diagnostic_zero);
    kb("tail_extrapolation", c.tail_extrapolation);
    o += "\n[table]\n";
    kv("grid", join(c.table_grid));
    o += "\n[meso]\n";
    kd("h", c.meso_h);
    kd("T", c.meso_T);
    ki("record_stride", c.meso_stride);
    kv("e0", join(c.e0));
    kv("source", c.source);
    kv("table_csv", c.table_csv);
    kv("table_json", c.table_json);
    kd("beta", c.beta);
    kd("total", c.total);
    ku("path_id", c.path_id);
    o += "\n[converge]\n";
    kv("eps_list", join(c.eps_list));
    kd("t_macro", c.t_macro);
    ki("n_paths", c.n_paths);
    ki("n_boot", c.n_boot);
    o += "\n[decay]\n";
    kd("a", c.decay_a);
    ki("n_paths", c.decay_paths);
    kd("T", c.decay_T);
    kd("h", c.decay_h);
    ki("record_stride", c.decay_stride);
    kd("lag_max", c.decay_lag_max);
    kd("origin_spacing", c.decay_origin_spacing);
    kd("t_lo", c.t_lo);
    kd("t_hi", c.t_hi);
    kb("peaks", c.peaks);
    o += "\n[output]\n";
    kv("dir", c.out_dir);
    return o;
}

} // namespace wcgl
