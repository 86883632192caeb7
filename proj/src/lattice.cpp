#include "wcgl/lattice.hpp"

#include <algorithm>
#include <stdexcept>

namespace wcgl {

Lattice Lattice::make(int d, std::array<int, 2> extents) {
    if (d != 1 && d != 2) throw std::invalid_argument("lattice: d must be 1 or 2");
    if (d == 1) extents[1] = 1;
    if (extents[0] < 1 || extents[1] < 1)
        throw std::invalid_argument("lattice: extents must be positive");
    Lattice lat;
    lat.d = d;
    lat.extents = extents;
    lat.n_sites = extents[0] * extents[1];
    lat.neighbors.resize(lat.n_sites);
    const int nx = extents[0], ny = extents[1];
    for (int y = 0; y < ny; ++y) {
        for (int x = 0; x < nx; ++x) {
            const int i = x + nx * y;
            if (x + 1 < nx) lat.edges.push_back({i, i + 1});
            if (y + 1 < ny) lat.edges.push_back({i, i + nx});
        }
    }
    std::sort(lat.edges.begin(), lat.edges.end(),
              [](const Edge& l, const Edge& r) { return l.a != r.a ? l.a < r.a : l.b < r.b; });
    for (const Edge& e : lat.edges) {
        lat.neighbors[e.a].push_back(e.b);
        lat.neighbors[e.b].push_back(e.a);
    }
    for (auto& nb : lat.neighbors) std::sort(nb.begin(), nb.end());
    return lat;
}

Lattice Lattice::chain(int n) { return make(1, {n, 1}); }
Lattice Lattice::box(int nx, int ny) { return make(2, {nx, ny}); }

bool Lattice::adjacent(int i, int k) const {
    if (i < 0 || k < 0 || i >= n_sites || k >= n_sites) return false;
    const auto& nb = neighbors[i];
    return std::binary_search(nb.begin(), nb.end(), k);
}

} // namespace wcgl
