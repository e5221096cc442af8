#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace cftpq {

/// Undirected interaction graph: adjacency lists plus a deduplicated bond
/// list (i < j, each bond once) for energy sums.
struct Lattice {
    int n = 0;
    std::vector<std::vector<int>> adj;
    std::vector<std::pair<int, int>> bonds;

    int degree(int i) const { return static_cast<int>(adj[i].size()); }
};

/// Open chain 0-1-...-(n-1); n >= 0 (n = 0 is the empty graph).
Lattice make_chain(int n);

/// Ring of n >= 3 sites.
Lattice make_cycle(int n);

/// width x height grid, row-major site order; periodic wrap requires both
/// dimensions >= 3 so no bond is duplicated.
Lattice make_square(int width, int height, bool periodic);

/// Explicit edge list; rejects self-loops, out-of-range sites and duplicates.
Lattice make_from_edges(int n, const std::vector<std::pair<int, int>>& edges);

}  // namespace cftpq
