#include "wcgl/state.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <stdexcept>

namespace wcgl {

void check_state(const PhaseState& s, const Lattice& lat) {
    if (s.q.size() != s.p.size() || s.n() != lat.n_sites)
        throw std::invalid_argument("state: array lengths do not match the lattice");
    for (int i = 0; i < s.n(); ++i) {
        if (!std::isfinite(s.q[i].x) || !std::isfinite(s.q[i].y) || !std::isfinite(s.p[i].x) ||
            !std::isfinite(s.p[i].y))
            throw std::invalid_argument("state: non-finite component at site " + std::to_string(i));
    }
}

void check_energy(const EnergyVector& ev) {
    for (int i = 0; i < ev.n(); ++i) {
        if (!(ev.e[i] >= 0.0) || !std::isfinite(ev.e[i]))
            throw std::invalid_argument("energy: negative or non-finite entry at site " +
                                        std::to_string(i));
    }
}

double site_energy(const PhaseState& s, int i, double eps, const PotentialPair& pp,
                   const Lattice& lat) {
    if (i < 0 || i >= lat.n_sites) throw std::invalid_argument("site_energy: site out of range");
    if (eps < 0.0) throw std::invalid_argument("site_energy: eps must be >= 0");
    double e = 0.5 * norm2(s.p[i]) + u_pin(pp, s.q[i]);
    if (eps != 0.0) {
        for (int k : lat.neighbors[i]) e += 0.5 * eps * v_pair(pp, s.q[i] - s.q[k]);
    }
    return e;
}

double current(const PhaseState& s, int i, int k, const PotentialPair& pp, const Lattice& lat) {
    if (!lat.adjacent(i, k)) throw std::invalid_argument("current: sites are not adjacent");
    return -0.5 * dot(grad_v_pair(pp, s.q[i] - s.q[k]), s.p[i] + s.p[k]);
}

double total_hamiltonian(const PhaseState& s, double eps, const PotentialPair& pp,
                         const Lattice& lat) {
    if (eps < 0.0) throw std::invalid_argument("total_hamiltonian: eps must be >= 0");
    double h = 0.0;
    for (int i = 0; i < lat.n_sites; ++i) h += 0.5 * norm2(s.p[i]) + u_pin(pp, s.q[i]);
    if (eps != 0.0) {
        for (const auto& e : lat.edges) h += eps * v_pair(pp, s.q[e.a] - s.q[e.b]);
    }
    return h;
}

namespace {

constexpr char kMagic[8] = {'W', 'C', 'G', 'L', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kCheckpointVersion = 1;

struct FileCloser {
    void operator()(std::FILE* f) const { if (f) std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void write_all(std::FILE* f, const void* data, std::size_t bytes) {
    if (std::fwrite(data, 1, bytes, f) != bytes)
        throw std::runtime_error("checkpoint: short write");
}

void read_all(std::FILE* f, void* data, std::size_t bytes) {
    if (std::fread(data, 1, bytes, f) != bytes)
        throw std::runtime_error("checkpoint: short read");
}

} // namespace

void save_checkpoint(const std::string& path, const PhaseState& s) {
    static_assert(std::endian::native == std::endian::little,
                  "checkpoint format is little-endian");
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw std::runtime_error("checkpoint: cannot open '" + path + "' for writing");
    write_all(f.get(), kMagic, sizeof(kMagic));
    const std::uint32_t version = kCheckpointVersion;
    const std::uint64_t n = static_cast<std::uint64_t>(s.n());
    const std::uint32_t d = 2;
    write_all(f.get(), &version, sizeof(version));
    write_all(f.get(), &n, sizeof(n));
    write_all(f.get(), &d, sizeof(d));
    for (const Vec2& v : s.q) { write_all(f.get(), &v.x, 8); write_all(f.get(), &v.y, 8); }
    for (const Vec2& v : s.p) { write_all(f.get(), &v.x, 8); write_all(f.get(), &v.y, 8); }
}

PhaseState load_checkpoint(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
    char magic[8];
    read_all(f.get(), magic, sizeof(magic));
    for (int i = 0; i < 8; ++i)
        if (magic[i] != kMagic[i]) throw std::runtime_error("checkpoint: bad magic");
    std::uint32_t version = 0, d = 0;
    std::uint64_t n = 0;
    read_all(f.get(), &version, sizeof(version));
    read_all(f.get(), &n, sizeof(n));
    read_all(f.get(), &d, sizeof(d));
    if (version != kCheckpointVersion) throw std::runtime_error("checkpoint: unknown version");
    if (d != 2) throw std::runtime_error("checkpoint: unexpected component count");
    if (n > (1ull << 32)) throw std::runtime_error("checkpoint: implausible site count");
    PhaseState s = PhaseState::zeros(static_cast<int>(n));
    for (Vec2& v : s.q) { read_all(f.get(), &v.x, 8); read_all(f.get(), &v.y, 8); }
    for (Vec2& v : s.p) { read_all(f.get(), &v.x, 8); read_all(f.get(), &v.y, 8); }
    return s;
}

} // namespace wcgl
