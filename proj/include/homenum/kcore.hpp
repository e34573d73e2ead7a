#pragma once

#include <algorithm>
#include <functional>
#include <numeric>
#include <optional>
#include <vector>

#include "homenum/endoseq.hpp"
#include "homenum/errors.hpp"
#include "homenum/structures.hpp"
#include "homenum/treewidth.hpp"

namespace homenum {

// A retraction moving at most k elements: an endomorphism that is the
// identity outside `moved` and maps `moved` into the untouched part. The map
// is stored over the universe of the structure it retracts (for chained
// retractions: defined exactly on the current member set, global indices).
struct Retraction {
    PartialAssignment map;
    std::vector<int> moved; // sorted
};

namespace detail {

// Backtracking homomorphism existence; used by the reference core and small
// cross-checks. Prunes on every completed tuple, unlike the oracle module.
inline bool exists_hom(const Structure& A, const Structure& B) {
    if (!(A.vocab() == B.vocab())) throw DomainError("structures have different vocabularies");
    if (A.size() == 0) return true;
    if (B.size() == 0) return false;

    // tuples indexed by the position of their last-assigned element
    std::vector<std::vector<std::pair<int, const Tuple*>>> due(static_cast<size_t>(A.size()));
    for (int s = 0; s < A.vocab().size(); ++s) {
        for (const Tuple& t : A.table(s)) {
            int last = *std::max_element(t.begin(), t.end());
            due[static_cast<size_t>(last)].push_back({s, &t});
        }
    }

    PartialAssignment f(A.size());
    Tuple image;
    std::function<bool(int)> go = [&](int x) -> bool {
        if (x == A.size()) return true;
        for (int b = 0; b < B.size(); ++b) {
            f.assign(x, b);
            bool ok = true;
            for (const auto& [s, t] : due[static_cast<size_t>(x)]) {
                image.clear();
                for (int e : *t) image.push_back(f.at(e));
                if (!B.has_tuple(s, image)) {
                    ok = false;
                    break;
                }
            }
            if (ok && go(x + 1)) return true;
            f.unassign(x);
        }
        return false;
    };
    return go(0);
}

// Enumerates the nonempty subsets of {0..m-1} with at most k elements in
// colex (= numeric bitmask) order, calling cb with positions in descending
// order; cb returns false to stop.
inline void for_each_small_subset(int m, int k, const std::function<bool(const std::vector<int>&)>& cb) {
    if (k <= 0) return;
    std::vector<int> cur;
    bool stop = false;
    std::function<void(int, int)> gen = [&](int avail, int room) {
        if (stop) return;
        if (!cb(cur)) {
            stop = true;
            return;
        }
        if (room == 0) return;
        for (int t = 0; t < avail && !stop; ++t) {
            cur.push_back(t);
            gen(t, room - 1);
            cur.pop_back();
        }
    };
    for (int t = 0; t < m && !stop; ++t) {
        cur.push_back(t);
        gen(t, k - 1);
        cur.pop_back();
    }
}

// One k-retraction of A[members] (global indices, sorted), scanning moved
// sets in colex order over scan positions and target assignments in
// lexicographic order, or nullopt if A[members] admits none.
inline std::optional<Retraction> find_k_retraction_on(const Structure& A,
                                                      const std::vector<int>& members, int k,
                                                      const std::vector<int>& scan) {
    int m = static_cast<int>(scan.size());

    // active tuples and their incidence by member
    std::vector<char> in(static_cast<size_t>(A.size()), 0);
    for (int x : members) in[static_cast<size_t>(x)] = 1;
    std::vector<std::pair<int, const Tuple*>> tuples;
    for (int s = 0; s < A.vocab().size(); ++s) {
        for (const Tuple& t : A.table(s)) {
            bool inside = true;
            for (int e : t) {
                if (!in[static_cast<size_t>(e)]) {
                    inside = false;
                    break;
                }
            }
            if (inside) tuples.push_back({s, &t});
        }
    }
    std::vector<std::vector<int>> incident(static_cast<size_t>(A.size()));
    for (size_t ti = 0; ti < tuples.size(); ++ti) {
        const Tuple& t = *tuples[ti].second;
        for (int e : t) {
            auto& lst = incident[static_cast<size_t>(e)];
            if (lst.empty() || lst.back() != static_cast<int>(ti)) lst.push_back(static_cast<int>(ti));
        }
    }

    std::optional<Retraction> found;
    std::vector<int> touched;
    Tuple image;

    for_each_small_subset(m, k, [&](const std::vector<int>& positions) {
        // positions arrive in descending order; build the moved set
        std::vector<int> moved;
        for (int p : positions) moved.push_back(scan[static_cast<size_t>(p)]);
        std::sort(moved.begin(), moved.end());

        std::vector<char> is_moved(static_cast<size_t>(A.size()), 0);
        for (int x : moved) is_moved[static_cast<size_t>(x)] = 1;

        // targets in scan order, excluding the moved set
        std::vector<int> targets;
        for (int x : scan) {
            if (!is_moved[static_cast<size_t>(x)]) targets.push_back(x);
        }
        if (targets.empty()) return true; // nothing to map onto; next subset

        // moved elements ordered by scan position (the subset came by position)
        std::vector<int> moved_scan;
        for (int x : scan) {
            if (is_moved[static_cast<size_t>(x)]) moved_scan.push_back(x);
        }

        // tuples that can change: those touching the moved set
        touched.clear();
        {
            std::vector<char> seen(tuples.size(), 0);
            for (int x : moved) {
                for (int ti : incident[static_cast<size_t>(x)]) {
                    if (!seen[static_cast<size_t>(ti)]) {
                        seen[static_cast<size_t>(ti)] = 1;
                        touched.push_back(ti);
                    }
                }
            }
        }

        // odometer over target choices, first moved element most significant
        std::vector<int> pick(moved_scan.size(), 0);
        PartialAssignment f(A.size());
        for (int x : members) f.assign(x, x);
        while (true) {
            for (size_t i = 0; i < moved_scan.size(); ++i) {
                f.assign(moved_scan[i], targets[static_cast<size_t>(pick[i])]);
            }
            bool ok = true;
            for (int ti : touched) {
                image.clear();
                for (int e : *tuples[static_cast<size_t>(ti)].second) image.push_back(f.at(e));
                if (!A.has_tuple(tuples[static_cast<size_t>(ti)].first, image)) {
                    ok = false;
                    break;
                }
            }
            if (ok) {
                found = Retraction{f, moved};
                return false; // stop the subset scan
            }
            int pos = static_cast<int>(pick.size()) - 1;
            while (pos >= 0 && pick[static_cast<size_t>(pos)] ==
                                   static_cast<int>(targets.size()) - 1) {
                pick[static_cast<size_t>(pos)] = 0;
                --pos;
            }
            if (pos < 0) break;
            ++pick[static_cast<size_t>(pos)];
        }
        return true;
    });

    return found;
}

} // namespace detail

// Scan order: a permutation of A's universe; moved-set candidates are tried
// in colex order of scan positions, targets in scan order. The default is
// universe order, which makes every answer below deterministic.
inline std::vector<int> default_scan_order(const Structure& A) {
    std::vector<int> order(static_cast<size_t>(A.size()));
    std::iota(order.begin(), order.end(), 0);
    return order;
}

inline std::optional<Retraction> find_k_retraction(const Structure& A, int k,
                                                   const std::vector<int>& scan_order) {
    if (k < 0) throw DomainError("k must be >= 0");
    std::vector<int> check = scan_order;
    std::sort(check.begin(), check.end());
    std::vector<int> want(static_cast<size_t>(A.size()));
    std::iota(want.begin(), want.end(), 0);
    if (check != want) throw DomainError("scan order must be a permutation of the universe");
    std::vector<int> members = want;
    return detail::find_k_retraction_on(A, members, k, scan_order);
}

inline std::optional<Retraction> find_k_retraction(const Structure& A, int k) {
    return find_k_retraction(A, k, default_scan_order(A));
}

struct KCoreResult {
    Structure core;              // induced on the surviving members
    std::vector<int> members;    // surviving universe indices of A, sorted
    std::vector<Retraction> steps; // maps in A's global indices
};

// Greedily retracts until no k-retraction is left. All k-cores of a
// structure are isomorphic, so the greedy order does not matter beyond
// which representative comes out.
inline KCoreResult k_core(const Structure& A, int k, const std::vector<int>& scan_order) {
    if (k < 0) throw DomainError("k must be >= 0");
    {
        std::vector<int> check = scan_order;
        std::sort(check.begin(), check.end());
        std::vector<int> want(static_cast<size_t>(A.size()));
        std::iota(want.begin(), want.end(), 0);
        if (check != want) throw DomainError("scan order must be a permutation of the universe");
    }

    std::vector<int> members(static_cast<size_t>(A.size()));
    std::iota(members.begin(), members.end(), 0);
    std::vector<int> scan = scan_order;

    KCoreResult res;
    while (true) {
        auto r = detail::find_k_retraction_on(A, members, k, scan);
        if (!r) break;
        std::vector<char> is_moved(static_cast<size_t>(A.size()), 0);
        for (int x : r->moved) is_moved[static_cast<size_t>(x)] = 1;
        std::vector<int> next;
        for (int x : members) {
            if (!is_moved[static_cast<size_t>(x)]) next.push_back(x);
        }
        members = std::move(next);
        std::vector<int> nscan;
        for (int x : scan) {
            if (!is_moved[static_cast<size_t>(x)]) nscan.push_back(x);
        }
        scan = std::move(nscan);
        res.steps.push_back(std::move(*r));
    }
    res.members = members;
    res.core = induced_substructure(A, members);
    return res;
}

inline KCoreResult k_core(const Structure& A, int k) {
    return k_core(A, k, default_scan_order(A));
}

// Packages a chain of retractions as an endomorphism sequence of width k.
// Verifies that each step is a retraction of the structure the previous
// steps left behind, and that the final induced structure has width <= k.
inline EndoSequence sequence_from_retractions(const Structure& A,
                                              const std::vector<Retraction>& steps, int k) {
    if (k < 0) throw DomainError("k must be >= 0");
    EndoSequence seq;
    seq.width = k;

    std::vector<int> members(static_cast<size_t>(A.size()));
    std::iota(members.begin(), members.end(), 0);
    seq.levels.push_back(members);

    for (size_t si = 0; si < steps.size(); ++si) {
        const Retraction& r = steps[si];
        std::string at = "step " + std::to_string(si + 1);
        if (r.map.source_size() != A.size()) {
            throw InvalidSequenceError(at + ": map has wrong source size");
        }
        if (r.map.domain() != members) {
            throw InvalidSequenceError(at + ": map is not defined exactly on the current members");
        }
        if (r.moved.empty() || static_cast<int>(r.moved.size()) > k) {
            throw InvalidSequenceError(at + ": moved set must have between 1 and k elements");
        }
        if (!std::is_sorted(r.moved.begin(), r.moved.end())) {
            throw InvalidSequenceError(at + ": moved set must be sorted");
        }
        if (!std::includes(members.begin(), members.end(), r.moved.begin(), r.moved.end())) {
            throw InvalidSequenceError(at + ": moved set leaves the current members");
        }
        std::vector<char> is_moved(static_cast<size_t>(A.size()), 0);
        for (int x : r.moved) is_moved[static_cast<size_t>(x)] = 1;
        std::vector<int> next;
        for (int x : members) {
            if (!is_moved[static_cast<size_t>(x)]) next.push_back(x);
        }
        for (int x : members) {
            int v = r.map.at(x);
            if (is_moved[static_cast<size_t>(x)]) {
                if (!std::binary_search(next.begin(), next.end(), v)) {
                    throw InvalidSequenceError(at + ": moved element must map into the remainder");
                }
            } else if (v != x) {
                throw InvalidSequenceError(at + ": map must be the identity off the moved set");
            }
        }
        if (!is_homomorphism(r.map, A, A)) {
            throw InvalidSequenceError(at + ": map is not an endomorphism of the current structure");
        }
        members = std::move(next);
        if (members.empty()) throw InvalidSequenceError(at + ": retraction emptied the structure");
        seq.levels.push_back(members);
        seq.maps.push_back(r.map);
    }

    if (!decompose(induced_substructure(A, members), k)) {
        throw WidthExceededError("final structure of the chain exceeds width " +
                                 std::to_string(k));
    }
    return seq;
}

// Reference core: the smallest X (by size, then by subset enumeration order)
// such that A has a homomorphism into A[X]. Exponential; capped at 7
// elements.
inline Structure brute_force_core(const Structure& A) {
    if (A.size() > 7) throw SizeGuardError("reference core computation is capped at 7 elements");
    if (A.size() == 0) return A;

    int n = A.size();
    for (int size = 1; size <= n; ++size) {
        std::vector<int> pick(static_cast<size_t>(size));
        std::iota(pick.begin(), pick.end(), 0);
        while (true) {
            Structure sub = induced_substructure(A, pick);
            if (detail::exists_hom(A, sub)) return sub;

            int i = size - 1;
            while (i >= 0 && pick[static_cast<size_t>(i)] == n - size + i) --i;
            if (i < 0) break;
            ++pick[static_cast<size_t>(i)];
            for (int j = i + 1; j < size; ++j) {
                pick[static_cast<size_t>(j)] = pick[static_cast<size_t>(j - 1)] + 1;
            }
        }
    }
    throw Error("internal: structure has no core"); // unreachable: X = universe works
}

} // namespace homenum
