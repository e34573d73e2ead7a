#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <istream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "homenum/errors.hpp"
#include "homenum/io.hpp"
#include "homenum/structures.hpp"

namespace homenum {

// Rooted tree decomposition. Node 0 is always the root (parent -1); bags hold
// sorted universe/vertex indices.
struct TreeDecomposition {
    std::vector<int> parent;
    std::vector<std::vector<int>> bags;

    int node_count() const { return static_cast<int>(bags.size()); }

    int width() const {
        int w = -1;
        for (const auto& b : bags) w = std::max(w, static_cast<int>(b.size()) - 1);
        return w;
    }
};

namespace detail {

// Exact computation switches to the subset DP below this vertex count; above
// it only widths <= 2 are supported (degree peeling), anything else is
// refused rather than answered heuristically.
constexpr int kSubsetDpLimit = 18;
constexpr int kPeelWidthLimit = 2;

// Re-roots (and, for disconnected inputs, links) a parent forest so that node
// 0 becomes the single root. Linking bag-trees of different graph components
// cannot break the decomposition conditions: every vertex's bags live inside
// one component's nodes.
inline void reroot_at_zero(std::vector<int>& parent) {
    int m = static_cast<int>(parent.size());
    if (m == 0) return;
    std::vector<std::vector<int>> adj(static_cast<size_t>(m));
    std::vector<int> roots;
    for (int i = 0; i < m; ++i) {
        if (parent[static_cast<size_t>(i)] < 0) {
            roots.push_back(i);
        } else {
            int p = parent[static_cast<size_t>(i)];
            adj[static_cast<size_t>(i)].push_back(p);
            adj[static_cast<size_t>(p)].push_back(i);
        }
    }
    std::vector<int> np(static_cast<size_t>(m), -2);
    std::vector<int> queue = {0};
    np[0] = -1;
    for (size_t qi = 0; qi < queue.size(); ++qi) {
        int u = queue[qi];
        for (int w : adj[static_cast<size_t>(u)]) {
            if (np[static_cast<size_t>(w)] == -2) {
                np[static_cast<size_t>(w)] = u;
                queue.push_back(w);
            }
        }
        // after finishing a component, attach the next unreached root under 0
        if (qi + 1 == queue.size()) {
            for (int r : roots) {
                if (np[static_cast<size_t>(r)] == -2) {
                    np[static_cast<size_t>(r)] = 0;
                    queue.push_back(r);
                    break;
                }
            }
        }
    }
    parent = std::move(np);
}

// Turns a total elimination order into a decomposition: bag i is the
// eliminated vertex plus its (fill-)neighborhood at elimination time, and its
// parent is the bag of the earliest-eliminated member of that neighborhood.
inline TreeDecomposition build_from_elimination(const Graph& g, const std::vector<int>& order) {
    int n = g.n;
    std::vector<std::set<int>> adj(static_cast<size_t>(n));
    for (int v = 0; v < n; ++v) {
        adj[static_cast<size_t>(v)].insert(g.adj[static_cast<size_t>(v)].begin(),
                                           g.adj[static_cast<size_t>(v)].end());
    }
    std::vector<int> pos(static_cast<size_t>(n), -1);
    for (int i = 0; i < n; ++i) pos[static_cast<size_t>(order[static_cast<size_t>(i)])] = i;

    TreeDecomposition td;
    if (n == 0) {
        td.parent = {-1};
        td.bags = {{}};
        return td;
    }
    td.parent.assign(static_cast<size_t>(n), -1);
    td.bags.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        int v = order[static_cast<size_t>(i)];
        std::vector<int> h(adj[static_cast<size_t>(v)].begin(), adj[static_cast<size_t>(v)].end());
        std::vector<int>& bag = td.bags[static_cast<size_t>(i)];
        bag = h;
        bag.push_back(v);
        std::sort(bag.begin(), bag.end());

        int best = -1;
        for (int w : h) {
            if (best < 0 || pos[static_cast<size_t>(w)] < pos[static_cast<size_t>(best)]) best = w;
        }
        if (best >= 0) td.parent[static_cast<size_t>(i)] = pos[static_cast<size_t>(best)];

        for (int a : h) adj[static_cast<size_t>(a)].erase(v);
        for (size_t x = 0; x < h.size(); ++x) {
            for (size_t y = x + 1; y < h.size(); ++y) {
                adj[static_cast<size_t>(h[x])].insert(h[y]);
                adj[static_cast<size_t>(h[y])].insert(h[x]);
            }
        }
    }
    reroot_at_zero(td.parent);
    return td;
}

// Held-Karp style DP over subsets: TW(S) = min over v in S of
// max(TW(S minus v), |Q(S minus v, v)|) where Q follows paths through the
// eliminated set. Exact for any width; needs n <= kSubsetDpLimit.
inline std::optional<TreeDecomposition> decompose_exact(const Graph& g, int k) {
    int n = g.n;
    std::vector<uint32_t> am(static_cast<size_t>(n), 0);
    for (int v = 0; v < n; ++v) {
        for (int w : g.adj[static_cast<size_t>(v)]) am[static_cast<size_t>(v)] |= 1u << w;
    }

    const uint32_t full = n == 32 ? ~0u : (1u << n) - 1;
    std::vector<int8_t> dp(static_cast<size_t>(full) + 1, 0);
    std::vector<int8_t> choice(static_cast<size_t>(full) + 1, -1);
    dp[0] = -1;

    auto q_size = [&](uint32_t s2, int v) {
        uint32_t comp = 1u << v;
        uint32_t frontier = comp;
        uint32_t nb = 0;
        while (frontier) {
            uint32_t f = 0;
            uint32_t it = frontier;
            while (it) {
                int u = std::countr_zero(it);
                it &= it - 1;
                f |= am[static_cast<size_t>(u)];
            }
            nb |= f;
            frontier = f & s2 & ~comp;
            comp |= frontier;
        }
        return std::popcount(nb & ~s2 & ~(1u << v));
    };

    for (uint32_t mask = 1; mask <= full; ++mask) {
        int best = 127, ch = -1;
        uint32_t it = mask;
        while (it) {
            int v = std::countr_zero(it);
            it &= it - 1;
            uint32_t s2 = mask ^ (1u << v);
            int w = std::max(static_cast<int>(dp[s2]), q_size(s2, v));
            if (w < best) {
                best = w;
                ch = v;
            }
        }
        dp[mask] = static_cast<int8_t>(best);
        choice[mask] = static_cast<int8_t>(ch);
    }

    if (n > 0 && dp[full] > k) return std::nullopt;

    std::vector<int> order(static_cast<size_t>(n));
    uint32_t mask = full;
    for (int i = n - 1; i >= 0; --i) {
        int v = choice[mask];
        order[static_cast<size_t>(i)] = v;
        mask ^= 1u << v;
    }
    return build_from_elimination(g, order);
}

// Repeatedly eliminates a minimum-index vertex of current degree <= k,
// adding the fill edge when a degree-2 vertex goes. Exact for k <= 2: graphs
// of treewidth <= k are closed under these eliminations (they are minors) and
// always contain a vertex of degree <= k, so stalling proves width > k.
inline std::optional<TreeDecomposition> decompose_peel(const Graph& g, int k) {
    int n = g.n;
    std::vector<std::set<int>> adj(static_cast<size_t>(n));
    for (int v = 0; v < n; ++v) {
        adj[static_cast<size_t>(v)].insert(g.adj[static_cast<size_t>(v)].begin(),
                                           g.adj[static_cast<size_t>(v)].end());
    }
    std::set<int> ready;
    for (int v = 0; v < n; ++v) {
        if (static_cast<int>(adj[static_cast<size_t>(v)].size()) <= k) ready.insert(v);
    }
    std::vector<char> gone(static_cast<size_t>(n), 0);
    std::vector<int> order;
    order.reserve(static_cast<size_t>(n));

    while (!ready.empty()) {
        int v = *ready.begin();
        ready.erase(ready.begin());
        if (gone[static_cast<size_t>(v)]) continue;
        if (static_cast<int>(adj[static_cast<size_t>(v)].size()) > k) continue; // stale entry
        gone[static_cast<size_t>(v)] = 1;
        order.push_back(v);

        std::vector<int> h(adj[static_cast<size_t>(v)].begin(), adj[static_cast<size_t>(v)].end());
        for (int a : h) adj[static_cast<size_t>(a)].erase(v);
        if (h.size() == 2) {
            adj[static_cast<size_t>(h[0])].insert(h[1]);
            adj[static_cast<size_t>(h[1])].insert(h[0]);
        }
        for (int a : h) {
            if (!gone[static_cast<size_t>(a)] &&
                static_cast<int>(adj[static_cast<size_t>(a)].size()) <= k) {
                ready.insert(a);
            }
        }
    }

    if (static_cast<int>(order.size()) != n) return std::nullopt;
    return build_from_elimination(g, order);
}

} // namespace detail

// Width-bounded exact tree decomposition of a graph. Returns nullopt exactly
// when tw(g) > k; never guesses. Large graphs are only supported up to width
// 2 (everything the rest of this library needs at scale); beyond that the
// instance is refused.
inline std::optional<TreeDecomposition> decompose_graph(const Graph& g, int k) {
    if (k < 0) throw DomainError("width bound must be >= 0");
    if (g.n == 0) {
        TreeDecomposition td;
        td.parent = {-1};
        td.bags = {{}};
        return td;
    }
    if (g.n <= detail::kSubsetDpLimit) return detail::decompose_exact(g, k);
    if (k <= detail::kPeelWidthLimit) return detail::decompose_peel(g, k);
    throw SizeGuardError("exact tree width needs <= " + std::to_string(detail::kSubsetDpLimit) +
                         " vertices for width bounds above " +
                         std::to_string(detail::kPeelWidthLimit) +
                         "; supply a decomposition instead");
}

inline std::optional<TreeDecomposition> decompose(const Structure& A, int k) {
    return decompose_graph(gaifman_graph(A), k);
}

// Exact treewidth; subject to the same size limits as decompose_graph.
inline int exact_treewidth(const Graph& g) {
    if (g.n <= detail::kSubsetDpLimit) {
        auto td = detail::decompose_exact(g, g.n == 0 ? 0 : g.n - 1);
        return td->width();
    }
    for (int k = 0; k <= detail::kPeelWidthLimit; ++k) {
        if (detail::decompose_peel(g, k)) return k;
    }
    throw SizeGuardError("exact tree width needs <= " + std::to_string(detail::kSubsetDpLimit) +
                         " vertices when it exceeds " +
                         std::to_string(detail::kPeelWidthLimit));
}

namespace detail {

inline bool validate_shape(int n_verts, const TreeDecomposition& td, std::string* reason) {
    auto fail = [&](const std::string& r) {
        if (reason) *reason = r;
        return false;
    };
    int m = td.node_count();
    if (m == 0 || static_cast<int>(td.parent.size()) != m) {
        return fail("decomposition must have matching bag and parent lists, at least one node");
    }
    if (td.parent[0] != -1) return fail("node 0 must be the root");
    std::vector<std::vector<int>> children(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) {
        int p = td.parent[static_cast<size_t>(i)];
        if (i == 0) continue;
        if (p < 0 || p >= m) return fail("non-root node with invalid parent");
        children[static_cast<size_t>(p)].push_back(i);
    }
    std::vector<char> seen(static_cast<size_t>(m), 0);
    std::vector<int> stack = {0};
    seen[0] = 1;
    int visited = 0;
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        ++visited;
        for (int c : children[static_cast<size_t>(u)]) {
            if (seen[static_cast<size_t>(c)]) return fail("parent links contain a cycle");
            seen[static_cast<size_t>(c)] = 1;
            stack.push_back(c);
        }
    }
    if (visited != m) return fail("parent links do not form one tree");
    for (const auto& bag : td.bags) {
        for (int v : bag) {
            if (v < 0 || v >= n_verts) return fail("bag entry out of range");
        }
    }
    return true;
}

inline bool validate_connectivity(int n_verts, const TreeDecomposition& td, std::string* reason) {
    int m = td.node_count();
    std::vector<std::vector<int>> adj(static_cast<size_t>(m));
    for (int i = 1; i < m; ++i) {
        int p = td.parent[static_cast<size_t>(i)];
        adj[static_cast<size_t>(i)].push_back(p);
        adj[static_cast<size_t>(p)].push_back(i);
    }
    for (int v = 0; v < n_verts; ++v) {
        std::vector<int> holds;
        for (int i = 0; i < m; ++i) {
            const auto& bag = td.bags[static_cast<size_t>(i)];
            if (std::find(bag.begin(), bag.end(), v) != bag.end()) holds.push_back(i);
        }
        if (holds.empty()) {
            if (reason) *reason = "element never appears in a bag";
            return false;
        }
        std::vector<char> in_holds(static_cast<size_t>(m), 0);
        for (int i : holds) in_holds[static_cast<size_t>(i)] = 1;
        std::vector<char> seen(static_cast<size_t>(m), 0);
        std::vector<int> stack = {holds[0]};
        seen[static_cast<size_t>(holds[0])] = 1;
        size_t reached = 0;
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            ++reached;
            for (int w : adj[static_cast<size_t>(u)]) {
                if (in_holds[static_cast<size_t>(w)] && !seen[static_cast<size_t>(w)]) {
                    seen[static_cast<size_t>(w)] = 1;
                    stack.push_back(w);
                }
            }
        }
        if (reached != holds.size()) {
            if (reason) *reason = "bags holding one element are not connected in the tree";
            return false;
        }
    }
    return true;
}

inline bool bag_covers(const std::vector<int>& bag, const Tuple& t) {
    for (int e : t) {
        if (!std::binary_search(bag.begin(), bag.end(), e)) return false;
    }
    return true;
}

} // namespace detail

// Conditions: the parent links form one tree rooted at node 0, every
// element's bags form a connected subtree, and every tuple's entries lie
// together in some bag.
inline bool validate(const Structure& A, const TreeDecomposition& td, std::string* reason = nullptr) {
    if (!detail::validate_shape(A.size(), td, reason)) return false;

    TreeDecomposition sorted = td;
    for (auto& bag : sorted.bags) std::sort(bag.begin(), bag.end());

    if (!detail::validate_connectivity(A.size(), sorted, reason)) return false;
    for (int s = 0; s < A.vocab().size(); ++s) {
        for (const Tuple& t : A.table(s)) {
            bool covered = false;
            for (const auto& bag : sorted.bags) {
                if (detail::bag_covers(bag, t)) {
                    covered = true;
                    break;
                }
            }
            if (!covered) {
                if (reason) *reason = "tuple not covered by any bag";
                return false;
            }
        }
    }
    return true;
}

// Same conditions with edges in place of tuples.
inline bool validate_graph(const Graph& g, const TreeDecomposition& td,
                           std::string* reason = nullptr) {
    if (!detail::validate_shape(g.n, td, reason)) return false;

    TreeDecomposition sorted = td;
    for (auto& bag : sorted.bags) std::sort(bag.begin(), bag.end());

    if (!detail::validate_connectivity(g.n, sorted, reason)) return false;
    for (int v = 0; v < g.n; ++v) {
        for (int w : g.adj[static_cast<size_t>(v)]) {
            if (w < v) continue;
            bool covered = false;
            for (const auto& bag : sorted.bags) {
                if (std::binary_search(bag.begin(), bag.end(), v) &&
                    std::binary_search(bag.begin(), bag.end(), w)) {
                    covered = true;
                    break;
                }
            }
            if (!covered) {
                if (reason) *reason = "edge not covered by any bag";
                return false;
            }
        }
    }
    return true;
}

// Text format, one node per line: "bag <id> <parent-id|-> <elem>...".
// Exactly one node carries '-'; the tree is re-rooted so that node 0 of the
// parsed decomposition is the root.
inline TreeDecomposition parse_decomposition(std::istream& in, const Structure& A) {
    struct Row {
        int id;
        std::string parent_tok;
        std::vector<int> bag;
        int line;
    };
    std::vector<Row> rows;
    std::unordered_map<int, int> id_to_node;

    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        auto toks = detail::tokenize_line(raw);
        if (toks.empty()) continue;
        if (toks[0] != "bag" || toks.size() < 3) {
            throw ParseError(line_no, "expected 'bag <id> <parent|-> <elem>...'");
        }
        Row row;
        row.id = detail::parse_int(toks[1], line_no, "node id");
        row.parent_tok = toks[2];
        row.line = line_no;
        for (size_t i = 3; i < toks.size(); ++i) {
            auto e = A.element_index(toks[i]);
            if (!e) throw ParseError(line_no, "unknown element '" + toks[i] + "'");
            row.bag.push_back(*e);
        }
        std::sort(row.bag.begin(), row.bag.end());
        row.bag.erase(std::unique(row.bag.begin(), row.bag.end()), row.bag.end());
        if (!id_to_node.emplace(row.id, static_cast<int>(rows.size())).second) {
            throw ParseError(line_no, "duplicate node id");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError(line_no, "empty decomposition");

    TreeDecomposition td;
    int roots = 0;
    for (const Row& row : rows) {
        td.bags.push_back(row.bag);
        if (row.parent_tok == "-") {
            td.parent.push_back(-1);
            ++roots;
        } else {
            int pid = detail::parse_int(row.parent_tok, row.line, "parent id");
            auto it = id_to_node.find(pid);
            if (it == id_to_node.end()) throw ParseError(row.line, "unknown parent id");
            td.parent.push_back(it->second);
        }
    }
    if (roots != 1) throw ParseError(line_no, "decomposition must have exactly one root '-'");

    // reject cyclic parent links before re-rooting
    detail::reroot_at_zero(td.parent);
    for (int p : td.parent) {
        if (p == -2) throw ParseError(line_no, "decomposition nodes do not form one tree");
    }
    return td;
}

inline std::string serialize_decomposition(const TreeDecomposition& td, const Structure& A) {
    std::ostringstream out;
    for (int i = 0; i < td.node_count(); ++i) {
        out << "bag " << i << " ";
        if (td.parent[static_cast<size_t>(i)] < 0) {
            out << "-";
        } else {
            out << td.parent[static_cast<size_t>(i)];
        }
        for (int v : td.bags[static_cast<size_t>(i)]) out << " " << A.element_name(v);
        out << "\n";
    }
    return out.str();
}

} // namespace homenum
