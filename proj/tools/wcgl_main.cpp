#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "wcgl/config.hpp"
#include "wcgl/runner.hpp"
#include "wcgl/version.hpp"

namespace {

int run_cli(int argc, char** argv) {
    CLI::App app{"Lattice energy-transport toolkit: microscopic oscillator dynamics, "
                 "shell sampling, exchange-coefficient estimation, and the mesoscopic "
                 "energy diffusion"};
    app.set_version_flag("--version", wcgl::kVersion);

    std::string command, config_path, out_dir;
    std::uint64_t seed = 0;
    int threads = -1;
    bool have_seed = false;

    std::string joined;
    for (const auto& name : wcgl::subcommand_names()) {
        if (!joined.empty()) joined += ", ";
        joined += name;
    }
    app.add_option("command", command, "Subcommand: " + joined);
    app.add_option("-c,--config", config_path, "Config file (key = value sections)");
    app.add_option("--seed", seed, "Root seed (overrides the config)")
        ->each([&](const std::string&) { have_seed = true; });
    app.add_option("--threads", threads, "Worker threads (0 = all cores; overrides the config)");
    app.add_option("-o,--out", out_dir, "Output directory (overrides the config)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    wcgl::RunConfig cfg;
    if (!config_path.empty()) {
        std::ifstream in(config_path, std::ios::binary);
        if (!in) {
            std::fprintf(stderr, "error: cannot open config '%s'\n", config_path.c_str());
            return 4;
        }
        std::ostringstream ss;
        ss << in.rdbuf();
        try {
            cfg = wcgl::parse_config(ss.str());
        } catch (const wcgl::ConfigError& e) {
            std::fprintf(stderr, "error: %s\n", e.what());
            return 2;
        }
    }
    if (!command.empty()) cfg.command = command;
    if (have_seed) cfg.seed = seed;
    if (threads >= 0) cfg.threads = threads;
    if (!out_dir.empty()) cfg.out_dir = out_dir;

    const wcgl::RunResult res = wcgl::run(cfg);
    if (res.exit_code == 0) {
        std::printf("%s: wrote", cfg.command.c_str());
        for (const auto& f : res.outputs) std::printf(" %s/%s", res.out_dir.c_str(), f.c_str());
        std::printf("\n");
    } else {
        std::fprintf(stderr, "error: %s\n", res.message.c_str());
    }
    return res.exit_code;
}

} // namespace

int main(int argc, char** argv) { return run_cli(argc, argv); }
