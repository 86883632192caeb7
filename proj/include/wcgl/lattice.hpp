#pragma once
#include <array>
#include <vector>

namespace wcgl {

// Finite box in Z^d (d = 1 or 2) with free boundary. Site index is
// x + extents[0]*y (row-major); the oriented edge list stores each undirected
// nearest-neighbor bond once, smaller site index first (lexicographic order
// on (y, x) coincides with index order).
struct Lattice {
    struct Edge {
        int a = 0, b = 0; // a < b
    };

    int d = 1;
    std::array<int, 2> extents{1, 1};
    int n_sites = 1;
    std::vector<Edge> edges;
    std::vector<std::vector<int>> neighbors; // per site, ascending

    static Lattice chain(int n);
    static Lattice box(int nx, int ny);
    static Lattice make(int d, std::array<int, 2> extents);

    bool adjacent(int i, int k) const;
};

} // namespace wcgl
