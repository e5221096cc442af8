#include "cftpq/lattice.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>

namespace cftpq {

Lattice make_from_edges(int n, const std::vector<std::pair<int, int>>& edges) {
    if (n < 0 || n > 63)
        throw std::invalid_argument("lattice: site count must be in [0, 63]");
    Lattice lat;
    lat.n = n;
    lat.adj.resize(n);
    std::set<std::pair<int, int>> seen;
    for (auto [a, b] : edges) {
        if (a < 0 || b < 0 || a >= n || b >= n)
            throw std::invalid_argument("lattice: edge endpoint out of range");
        if (a == b) throw std::invalid_argument("lattice: self-loop rejected");
        auto bond = std::minmax(a, b);
        if (!seen.insert(bond).second)
            throw std::invalid_argument("lattice: duplicate edge (" + std::to_string(a) +
                                        ", " + std::to_string(b) + ")");
    }
    for (auto [a, b] : seen) {
        lat.bonds.emplace_back(a, b);
        lat.adj[a].push_back(b);
        lat.adj[b].push_back(a);
    }
    for (auto& nb : lat.adj) std::sort(nb.begin(), nb.end());
    return lat;
}

Lattice make_chain(int n) {
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
    return make_from_edges(n, edges);
}

Lattice make_cycle(int n) {
    if (n < 3) throw std::invalid_argument("lattice: a cycle needs at least 3 sites");
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
    return make_from_edges(n, edges);
}

Lattice make_square(int width, int height, bool periodic) {
    if (width < 1 || height < 1)
        throw std::invalid_argument("lattice: grid dimensions must be positive");
    if (periodic && (width < 3 || height < 3))
        throw std::invalid_argument(
            "lattice: periodic wrap needs both dimensions >= 3 (otherwise bonds duplicate)");
    auto id = [width](int x, int y) { return y * width + x; };
    std::vector<std::pair<int, int>> edges;
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            if (x + 1 < width) edges.emplace_back(id(x, y), id(x + 1, y));
            else if (periodic) edges.emplace_back(id(x, y), id(0, y));
            if (y + 1 < height) edges.emplace_back(id(x, y), id(x, y + 1));
            else if (periodic) edges.emplace_back(id(x, y), id(x, 0));
        }
    return make_from_edges(width * height, edges);
}

}  // namespace cftpq
