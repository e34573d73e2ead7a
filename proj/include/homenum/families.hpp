#pragma once

#include <string>
#include <vector>

#include "homenum/errors.hpp"
#include "homenum/structures.hpp"

namespace homenum {

// Deterministic generators for the instance families used across tests and
// the CLI. All of them are graphs over a single binary symbol E; undirected
// edges are stored as both ordered tuples (u,v),(v,u) consecutively, loops as
// a single (v,v) tuple appended after the plain edges in vertex order.
//
//   path n                : v0 - v1 - ... - vn            (n edges)
//   loop_path_one_end n   : path n with a loop at v0
//   loop_path_both_ends n : path n with loops at v0 and vn
//   clique n              : K_n on v0..v{n-1}
//   clique_plus_loop n    : K_n plus an extra vertex v{n} carrying a loop
//   loop_clique n         : K_n with a loop on every vertex
//   path_plus_loop n      : path n plus a disconnected looped vertex v{n+1}
//   independent_padding n : K_n plus n isolated vertices
//   grid n                : n x n grid, vertices row-major v0..v{n*n-1}
inline Structure generate_family(const std::string& family, int n) {
    if (n < 1) throw DomainError("family size must be >= 1");

    std::vector<std::pair<int, int>> edges; // undirected, u != v
    std::vector<int> loops;
    int vertices = 0;

    if (family == "path" || family == "loop_path_one_end" || family == "loop_path_both_ends" ||
        family == "path_plus_loop") {
        vertices = n + 1;
        for (int i = 0; i < n; ++i) edges.push_back({i, i + 1});
        if (family == "loop_path_one_end") loops.push_back(0);
        if (family == "loop_path_both_ends") {
            loops.push_back(0);
            loops.push_back(n);
        }
        if (family == "path_plus_loop") {
            loops.push_back(vertices);
            ++vertices;
        }
    } else if (family == "clique" || family == "clique_plus_loop" || family == "loop_clique" ||
               family == "independent_padding") {
        vertices = n;
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) edges.push_back({i, j});
        }
        if (family == "clique_plus_loop") {
            loops.push_back(vertices);
            ++vertices;
        }
        if (family == "loop_clique") {
            for (int i = 0; i < n; ++i) loops.push_back(i);
        }
        if (family == "independent_padding") vertices = 2 * n;
    } else if (family == "grid") {
        vertices = n * n;
        for (int r = 0; r < n; ++r) {
            for (int c = 0; c < n; ++c) {
                int v = r * n + c;
                if (c + 1 < n) edges.push_back({v, v + 1});
                if (r + 1 < n) edges.push_back({v, v + n});
            }
        }
    } else {
        throw DomainError("unknown family '" + family + "'");
    }

    std::vector<std::string> universe;
    universe.reserve(static_cast<size_t>(vertices));
    for (int i = 0; i < vertices; ++i) universe.push_back("v" + std::to_string(i));

    std::vector<Tuple> table;
    for (auto [u, v] : edges) {
        table.push_back({u, v});
        table.push_back({v, u});
    }
    for (int v : loops) table.push_back({v, v});

    return Structure(Vocabulary({{"E", 2}}), family + std::to_string(n), std::move(universe),
                     {std::move(table)});
}

} // namespace homenum
