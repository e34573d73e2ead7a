#pragma once

#include <algorithm>
#include <functional>
#include <optional>
#include <unordered_set>
#include <vector>

#include "homenum/errors.hpp"
#include "homenum/structures.hpp"
#include "homenum/treewidth.hpp"

namespace homenum {

// Extension query: does some homomorphism of A[region] into B agree with
// seed on fixed_set? fixed_set and region are sorted universe index sets,
// fixed_set a subset of region, and seed is defined exactly on fixed_set.
struct ExtensionQuery {
    std::vector<int> fixed_set;
    std::vector<int> region;
    PartialAssignment seed;
};

namespace detail {

struct ActiveTuple {
    int sym;
    const Tuple* t;
};

// A[region] compiled once: membership mask plus the tuples that survive the
// restriction. Callers that query the same region many times reuse this.
struct RegionContext {
    std::vector<int> region;  // sorted
    std::vector<char> in_region;
    std::vector<ActiveTuple> tuples;
};

inline RegionContext compile_region(const Structure& A, std::vector<int> region) {
    std::sort(region.begin(), region.end());
    region.erase(std::unique(region.begin(), region.end()), region.end());
    RegionContext rc;
    rc.in_region.assign(static_cast<size_t>(A.size()), 0);
    for (int x : region) {
        if (x < 0 || x >= A.size()) throw DomainError("region element out of range");
        rc.in_region[static_cast<size_t>(x)] = 1;
    }
    rc.region = std::move(region);
    for (int s = 0; s < A.vocab().size(); ++s) {
        for (const Tuple& t : A.table(s)) {
            bool inside = true;
            for (int e : t) {
                if (!rc.in_region[static_cast<size_t>(e)]) {
                    inside = false;
                    break;
                }
            }
            if (inside) rc.tuples.push_back({s, &t});
        }
    }
    return rc;
}

// One surviving tuple with at least one unseeded entry, reduced over the
// seed: scope lists its distinct free elements (ascending), allowed the
// value rows (aligned with scope) that complete it inside B's table.
struct ReducedConstraint {
    std::vector<int> scope;
    std::unordered_set<Tuple, TupleHash> allowed;
};

// Nice tree decomposition: one operation per node, children stored before
// parents so a linear sweep is bottom-up.
struct NiceNode {
    enum Kind { Leaf, Introduce, Forget, Join } kind = Leaf;
    int vertex = -1; // introduced / forgotten, local index
    int child0 = -1;
    int child1 = -1;
    std::vector<int> bag; // sorted local indices
};

struct NiceTree {
    std::vector<NiceNode> nodes;
    int root = -1;
};

inline NiceTree make_nice(const TreeDecomposition& td) {
    NiceTree nt;
    auto add = [&](NiceNode n) {
        nt.nodes.push_back(std::move(n));
        return static_cast<int>(nt.nodes.size()) - 1;
    };

    int m = td.node_count();
    std::vector<std::vector<int>> children(static_cast<size_t>(m));
    int root = -1;
    for (int i = 0; i < m; ++i) {
        if (td.parent[static_cast<size_t>(i)] < 0) {
            root = i;
        } else {
            children[static_cast<size_t>(td.parent[static_cast<size_t>(i)])].push_back(i);
        }
    }

    // chain of introduces from cur_bag up to target (target must contain cur)
    auto introduce_up = [&](int node, std::vector<int> cur, const std::vector<int>& target) {
        for (int v : target) {
            if (std::binary_search(cur.begin(), cur.end(), v)) continue;
            cur.insert(std::lower_bound(cur.begin(), cur.end(), v), v);
            node = add({NiceNode::Introduce, v, node, -1, cur});
        }
        return node;
    };
    auto forget_down = [&](int node, std::vector<int> cur, const std::vector<int>& target) {
        for (int v : std::vector<int>(cur)) {
            if (std::binary_search(target.begin(), target.end(), v)) continue;
            cur.erase(std::lower_bound(cur.begin(), cur.end(), v));
            node = add({NiceNode::Forget, v, node, -1, cur});
        }
        return node;
    };

    // returns index of a node whose bag equals td.bags[t] (sorted)
    std::function<int(int)> build = [&](int t) -> int {
        std::vector<int> bag = td.bags[static_cast<size_t>(t)];
        std::sort(bag.begin(), bag.end());
        const auto& kids = children[static_cast<size_t>(t)];
        if (kids.empty()) {
            int node = add({NiceNode::Leaf, -1, -1, -1, {}});
            return introduce_up(node, {}, bag);
        }
        int acc = -1;
        for (int c : kids) {
            int sub = build(c);
            std::vector<int> cbag = td.bags[static_cast<size_t>(c)];
            std::sort(cbag.begin(), cbag.end());
            sub = forget_down(sub, cbag, bag);
            std::vector<int> shared;
            std::set_intersection(cbag.begin(), cbag.end(), bag.begin(), bag.end(),
                                  std::back_inserter(shared));
            sub = introduce_up(sub, shared, bag);
            if (acc < 0) {
                acc = sub;
            } else {
                acc = add({NiceNode::Join, -1, acc, sub, bag});
            }
        }
        return acc;
    };

    int top = build(root);
    std::vector<int> top_bag = nt.nodes[static_cast<size_t>(top)].bag;
    nt.root = forget_down(top, top_bag, {});
    return nt;
}

// Decision DP over a nice decomposition of dp_verts (local indices refer to
// positions in dp_verts). Seeded vertices, when present among dp_verts,
// contribute exactly their pinned value. Each constraint is checked at one
// node whose bag covers its scope.
inline bool run_extension_dp(const std::vector<int>& dp_verts, const NiceTree& nt,
                             const PartialAssignment& seed, int target_size,
                             const std::vector<ReducedConstraint>& constraints) {
    size_t nn = nt.nodes.size();

    // assign each constraint to the first node covering its scope, recording
    // the bag positions its key is read from
    struct Check {
        const ReducedConstraint* c;
        std::vector<int> bag_pos;
    };
    std::vector<std::vector<Check>> node_checks(nn);
    {
        std::vector<int> pos; // global -> local
        int maxg = 1;
        for (int g : dp_verts) maxg = std::max(maxg, g + 1);
        pos.assign(static_cast<size_t>(maxg), -1);
        for (size_t i = 0; i < dp_verts.size(); ++i) {
            pos[static_cast<size_t>(dp_verts[i])] = static_cast<int>(i);
        }

        for (const ReducedConstraint& c : constraints) {
            std::vector<int> local_scope;
            for (int g : c.scope) local_scope.push_back(pos[static_cast<size_t>(g)]);
            // scope sorted globally and dp_verts ascending => local sorted too
            bool placed = false;
            for (size_t ni = 0; ni < nn && !placed; ++ni) {
                const auto& bag = nt.nodes[ni].bag;
                if (!std::includes(bag.begin(), bag.end(), local_scope.begin(),
                                   local_scope.end())) {
                    continue;
                }
                Check chk;
                chk.c = &c;
                for (int lv : local_scope) {
                    chk.bag_pos.push_back(static_cast<int>(
                        std::lower_bound(bag.begin(), bag.end(), lv) - bag.begin()));
                }
                node_checks[ni].push_back(std::move(chk));
                placed = true;
            }
            if (!placed) throw Error("internal: constraint scope not covered by any bag");
        }
    }

    std::vector<std::vector<std::vector<int>>> states(nn);
    for (size_t ni = 0; ni < nn; ++ni) {
        const NiceNode& node = nt.nodes[ni];
        std::vector<std::vector<int>>& out = states[ni];
        switch (node.kind) {
        case NiceNode::Leaf:
            out.push_back({});
            break;
        case NiceNode::Introduce: {
            const auto& child = states[static_cast<size_t>(node.child0)];
            size_t pos = static_cast<size_t>(
                std::lower_bound(node.bag.begin(), node.bag.end(), node.vertex) -
                node.bag.begin());
            int gv = dp_verts[static_cast<size_t>(node.vertex)];
            int lo = 0, hi = target_size;
            if (seed.defined(gv)) {
                lo = seed.at(gv);
                hi = lo + 1;
            }
            for (const auto& s : child) {
                for (int b = lo; b < hi; ++b) {
                    std::vector<int> ns = s;
                    ns.insert(ns.begin() + static_cast<long>(pos), b);
                    out.push_back(std::move(ns));
                }
            }
            break;
        }
        case NiceNode::Forget: {
            const auto& child = states[static_cast<size_t>(node.child0)];
            const auto& cbag = nt.nodes[static_cast<size_t>(node.child0)].bag;
            size_t pos = static_cast<size_t>(
                std::lower_bound(cbag.begin(), cbag.end(), node.vertex) - cbag.begin());
            for (const auto& s : child) {
                std::vector<int> ns = s;
                ns.erase(ns.begin() + static_cast<long>(pos));
                out.push_back(std::move(ns));
            }
            std::sort(out.begin(), out.end());
            out.erase(std::unique(out.begin(), out.end()), out.end());
            break;
        }
        case NiceNode::Join: {
            auto& a = states[static_cast<size_t>(node.child0)];
            auto& b = states[static_cast<size_t>(node.child1)];
            std::sort(a.begin(), a.end());
            std::sort(b.begin(), b.end());
            std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                                  std::back_inserter(out));
            break;
        }
        }

        if (!node_checks[ni].empty()) {
            std::vector<std::vector<int>> kept;
            Tuple key;
            for (const auto& s : out) {
                bool ok = true;
                for (const Check& chk : node_checks[ni]) {
                    key.clear();
                    for (int bp : chk.bag_pos) key.push_back(s[static_cast<size_t>(bp)]);
                    if (!chk.c->allowed.count(key)) {
                        ok = false;
                        break;
                    }
                }
                if (ok) kept.push_back(s);
            }
            out = std::move(kept);
        }

        // free the children; nothing above re-reads them
        if (node.child0 >= 0) states[static_cast<size_t>(node.child0)].clear();
        if (node.child1 >= 0) states[static_cast<size_t>(node.child1)].clear();
        if (out.empty()) return false;
    }

    return !states[static_cast<size_t>(nt.root)].empty();
}

// Core decision: does a homomorphism of A[rc.region] into B extend seed
// (restricted to the region)? Seed violations inside the region answer
// false; a free part whose primal graph exceeds k throws WidthExceededError
// unless a caller-supplied decomposition covering the whole region is given.
inline bool ext_decide(const Structure& A, const Structure& B, const RegionContext& rc,
                       const PartialAssignment& seed, int k,
                       const TreeDecomposition* user_td = nullptr) {
    std::vector<ReducedConstraint> constraints;
    Tuple image;
    for (const ActiveTuple& at : rc.tuples) {
        const Tuple& t = *at.t;
        bool covered = true;
        for (int e : t) {
            if (!seed.defined(e)) {
                covered = false;
                break;
            }
        }
        if (covered) {
            image.clear();
            for (int e : t) image.push_back(seed.at(e));
            if (!B.has_tuple(at.sym, image)) return false;
            continue;
        }

        ReducedConstraint c;
        for (int e : t) {
            if (!seed.defined(e)) c.scope.push_back(e);
        }
        std::sort(c.scope.begin(), c.scope.end());
        c.scope.erase(std::unique(c.scope.begin(), c.scope.end()), c.scope.end());

        for (const Tuple& bt : B.table(at.sym)) {
            Tuple key(c.scope.size(), -1);
            bool ok = true;
            for (size_t p = 0; p < t.size() && ok; ++p) {
                int e = t[p];
                if (seed.defined(e)) {
                    ok = bt[p] == seed.at(e);
                } else {
                    size_t sp = static_cast<size_t>(
                        std::lower_bound(c.scope.begin(), c.scope.end(), e) - c.scope.begin());
                    if (key[sp] < 0) {
                        key[sp] = bt[p];
                    } else {
                        ok = key[sp] == bt[p];
                    }
                }
            }
            if (ok) c.allowed.insert(std::move(key));
        }
        if (c.allowed.empty()) return false;
        constraints.push_back(std::move(c));
    }

    std::vector<int> free;
    for (int x : rc.region) {
        if (!seed.defined(x)) free.push_back(x);
    }
    if (free.empty() && !user_td) return true;

    std::vector<int> dp_verts;
    TreeDecomposition td;
    if (user_td) {
        // decomposition is over the whole region; seeded vertices are pinned
        dp_verts = rc.region;
        td = *user_td;
        // translate bags from global to local indices
        std::vector<int> pos(static_cast<size_t>(A.size()), -1);
        for (size_t i = 0; i < dp_verts.size(); ++i) pos[static_cast<size_t>(dp_verts[i])] = static_cast<int>(i);
        for (auto& bag : td.bags) {
            for (int& v : bag) {
                int lv = pos[static_cast<size_t>(v)];
                if (lv < 0) throw DomainError("decomposition bag leaves the region");
                v = lv;
            }
            std::sort(bag.begin(), bag.end());
        }
    } else {
        dp_verts = free;
        std::vector<int> pos(static_cast<size_t>(A.size()), -1);
        for (size_t i = 0; i < free.size(); ++i) pos[static_cast<size_t>(free[i])] = static_cast<int>(i);
        std::vector<std::pair<int, int>> edges;
        for (const ReducedConstraint& c : constraints) {
            for (size_t i = 0; i < c.scope.size(); ++i) {
                for (size_t j = i + 1; j < c.scope.size(); ++j) {
                    edges.push_back({pos[static_cast<size_t>(c.scope[i])],
                                     pos[static_cast<size_t>(c.scope[j])]});
                }
            }
        }
        Graph fg = Graph::from_edges(static_cast<int>(free.size()), edges);
        auto dec = decompose_graph(fg, k);
        if (!dec) {
            throw WidthExceededError("free part of the extension query exceeds width " +
                                     std::to_string(k));
        }
        td = std::move(*dec);
        // local indices in td already refer to positions in `free`
    }

    NiceTree nt = make_nice(td);
    return run_extension_dp(dp_verts, nt, seed, B.size(), constraints);
}

} // namespace detail

namespace detail {

inline void check_query(const Structure& A, const Structure& B, const ExtensionQuery& q) {
    if (!(A.vocab() == B.vocab())) throw DomainError("structures have different vocabularies");
    if (q.seed.source_size() != A.size()) {
        throw DomainError("seed source size does not match structure universe");
    }
    std::vector<char> in_region(static_cast<size_t>(A.size()), 0);
    for (int x : q.region) {
        if (x < 0 || x >= A.size()) throw DomainError("region element out of range");
        in_region[static_cast<size_t>(x)] = 1;
    }
    for (int x : q.fixed_set) {
        if (x < 0 || x >= A.size()) throw DomainError("fixed element out of range");
        if (!in_region[static_cast<size_t>(x)]) {
            throw DomainError("fixed set must be contained in the region");
        }
    }
    std::vector<int> dom = q.seed.domain();
    std::vector<int> fixed = q.fixed_set;
    std::sort(fixed.begin(), fixed.end());
    if (dom != fixed) throw DomainError("seed must be defined exactly on the fixed set");
    for (int x : dom) {
        if (q.seed.at(x) >= B.size()) throw DomainError("seed value out of target range");
    }
    if (!is_homomorphism(q.seed, A, B)) {
        throw InvalidSeedError("seed is not a partial homomorphism");
    }
}

} // namespace detail

// Does some homomorphism of A[region] into B extend the seed? Throws
// InvalidSeedError when the seed itself breaks a tuple of A[fixed_set], and
// WidthExceededError when the free part's primal graph has width > k.
inline bool homomorphism_ext(const Structure& A, const Structure& B, const ExtensionQuery& q,
                             int k) {
    detail::check_query(A, B, q);
    detail::RegionContext rc = detail::compile_region(A, q.region);
    return detail::ext_decide(A, B, rc, q.seed, k);
}

// Lexicographically least extension witness (universe order on free
// elements, target order on values), or nullopt. Computed by per-variable
// refixing: fix each free element to the least value that keeps the
// remaining query feasible.
inline std::optional<PartialAssignment> first_extension(const Structure& A, const Structure& B,
                                                        const ExtensionQuery& q, int k) {
    detail::check_query(A, B, q);
    detail::RegionContext rc = detail::compile_region(A, q.region);
    if (!detail::ext_decide(A, B, rc, q.seed, k)) return std::nullopt;

    PartialAssignment cur = q.seed;
    for (int x : rc.region) {
        if (cur.defined(x)) continue;
        bool placed = false;
        for (int b = 0; b < B.size() && !placed; ++b) {
            cur.assign(x, b);
            if (detail::ext_decide(A, B, rc, cur, k)) {
                placed = true;
            } else {
                cur.unassign(x);
            }
        }
        if (!placed) throw Error("internal: feasible query lost its witness");
    }
    return cur;
}

} // namespace homenum
