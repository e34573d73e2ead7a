#pragma once

#include <algorithm>
#include <cassert>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "homenum/errors.hpp"
#include "homenum/extension.hpp"
#include "homenum/io.hpp"
#include "homenum/structures.hpp"
#include "homenum/treewidth.hpp"

namespace homenum {

using HomSink = std::function<bool(const Homomorphism&)>;

// A width-k endomorphism sequence over A: a strictly shrinking chain of
// subuniverses A = L0 > L1 > ... > Ln (Ln nonempty) together with surjective
// homomorphisms maps[i] : A[L_i] -> A[L_{i+1}], such that every difference
// L_i minus L_{i+1} induces a subgraph of A's primal graph of treewidth <= k
// and the structure induced by Ln has treewidth <= k.
struct EndoSequence {
    std::vector<std::vector<int>> levels; // sorted universe indices
    std::vector<PartialAssignment> maps;  // maps[i] defined exactly on levels[i]
    int width = -1;

    int depth() const { return static_cast<int>(maps.size()); }
};

// A strict prefix position in B's table for one relation symbol: prefix has
// no extension to a full tuple of the relation, but its own head (one entry
// shorter) does. Every non-tuple of B^r has exactly one bad prefix as a
// prefix, which is what the elementary-extension branching enumerates.
struct BadPrefix {
    int sym = -1;
    Tuple prefix;

    bool operator==(const BadPrefix&) const = default;
};

// All bad prefixes of one relation of B, deterministic order: by prefix
// length, then lexicographically.
inline std::vector<BadPrefix> bad_prefixes(const Structure& B, int sym) {
    if (sym < 0 || sym >= B.vocab().size()) throw DomainError("relation symbol out of range");
    int r = B.vocab().symbol(sym).arity;
    const auto& table = B.table(sym);

    std::vector<BadPrefix> out;
    if (table.empty()) return out; // the empty prefix is not extendible

    // present[s] = sorted distinct prefixes of length s
    std::vector<Tuple> present = {{}};
    for (int s = 1; s <= r; ++s) {
        std::vector<Tuple> next;
        for (const Tuple& t : table) next.push_back(Tuple(t.begin(), t.begin() + s));
        std::sort(next.begin(), next.end());
        next.erase(std::unique(next.begin(), next.end()), next.end());

        for (const Tuple& p : present) {
            for (int b = 0; b < B.size(); ++b) {
                Tuple q = p;
                q.push_back(b);
                if (!std::binary_search(next.begin(), next.end(), q)) {
                    out.push_back({sym, std::move(q)});
                }
            }
        }
        present = std::move(next);
    }
    return out;
}

inline std::vector<BadPrefix> bad_prefixes(const Structure& B) {
    std::vector<BadPrefix> out;
    for (int s = 0; s < B.vocab().size(); ++s) {
        auto part = bad_prefixes(B, s);
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

namespace detail {

inline bool seq_fail(std::string* reason, const std::string& r) {
    if (reason) *reason = r;
    return false;
}

} // namespace detail

// Checks every defining condition; on failure names the first violated one.
inline bool validate_sequence(const Structure& A, const EndoSequence& seq,
                              std::string* reason = nullptr) {
    using detail::seq_fail;
    if (seq.width < 0) return seq_fail(reason, "sequence width is missing or negative");
    if (seq.levels.empty()) return seq_fail(reason, "sequence has no levels");
    if (static_cast<int>(seq.levels.size()) != seq.depth() + 1) {
        return seq_fail(reason, "level count must be one more than map count");
    }

    // level 0 is the whole universe, levels strictly shrink, stay sorted sets
    for (size_t i = 0; i < seq.levels.size(); ++i) {
        const auto& lv = seq.levels[i];
        for (int x : lv) {
            if (x < 0 || x >= A.size()) {
                return seq_fail(reason, "level " + std::to_string(i) + " has an element out of range");
            }
        }
        if (!std::is_sorted(lv.begin(), lv.end()) ||
            std::adjacent_find(lv.begin(), lv.end()) != lv.end()) {
            return seq_fail(reason, "level " + std::to_string(i) + " is not a sorted set");
        }
    }
    if (static_cast<int>(seq.levels[0].size()) != A.size()) {
        return seq_fail(reason, "level 0 must be the whole universe");
    }
    if (seq.levels.back().empty()) return seq_fail(reason, "last level must be nonempty");
    for (size_t i = 0; i + 1 < seq.levels.size(); ++i) {
        const auto& hi = seq.levels[i];
        const auto& lo = seq.levels[i + 1];
        if (!std::includes(hi.begin(), hi.end(), lo.begin(), lo.end())) {
            return seq_fail(reason,
                            "level " + std::to_string(i + 1) + " is not contained in level " +
                                std::to_string(i));
        }
        if (lo.size() >= hi.size()) {
            return seq_fail(reason, "level " + std::to_string(i + 1) +
                                        " does not strictly shrink (equal levels are forbidden)");
        }
    }

    // each map is a surjective homomorphism A[L_i] -> A[L_{i+1}]
    for (int i = 0; i < seq.depth(); ++i) {
        const PartialAssignment& f = seq.maps[static_cast<size_t>(i)];
        if (f.source_size() != A.size()) {
            return seq_fail(reason, "map " + std::to_string(i + 1) + " has wrong source size");
        }
        std::vector<int> dom = f.domain();
        if (dom != seq.levels[static_cast<size_t>(i)]) {
            return seq_fail(reason, "map " + std::to_string(i + 1) +
                                        " must be defined exactly on level " + std::to_string(i));
        }
        const auto& lo = seq.levels[static_cast<size_t>(i + 1)];
        std::vector<char> hit(static_cast<size_t>(A.size()), 0);
        for (int x : dom) {
            int v = f.at(x);
            if (!std::binary_search(lo.begin(), lo.end(), v)) {
                return seq_fail(reason, "map " + std::to_string(i + 1) +
                                            " maps outside level " + std::to_string(i + 1));
            }
            hit[static_cast<size_t>(v)] = 1;
        }
        for (int v : lo) {
            if (!hit[static_cast<size_t>(v)]) {
                return seq_fail(reason, "map " + std::to_string(i + 1) +
                                            " is not surjective onto level " + std::to_string(i + 1));
            }
        }
        if (!is_homomorphism(f, A, A)) {
            return seq_fail(reason,
                            "map " + std::to_string(i + 1) + " is not a homomorphism of level " +
                                std::to_string(i));
        }
    }

    // width bounds: primal-graph differences and the final induced structure
    Graph g = gaifman_graph(A);
    for (int i = 0; i < seq.depth(); ++i) {
        const auto& hi = seq.levels[static_cast<size_t>(i)];
        const auto& lo = seq.levels[static_cast<size_t>(i + 1)];
        std::vector<int> diff;
        std::set_difference(hi.begin(), hi.end(), lo.begin(), lo.end(), std::back_inserter(diff));
        if (!decompose_graph(induced_subgraph(g, diff), seq.width)) {
            return seq_fail(reason, "difference of levels " + std::to_string(i) + " and " +
                                        std::to_string(i + 1) + " exceeds width " +
                                        std::to_string(seq.width));
        }
    }
    if (!decompose(induced_substructure(A, seq.levels.back()), seq.width)) {
        return seq_fail(reason,
                        "structure induced by the last level exceeds width " +
                            std::to_string(seq.width));
    }
    return true;
}

namespace detail {

// If psi (a homomorphism of A[L_t] into B) is constant on the fibers of
// maps[t] and the induced map on L_{t+1} is again a homomorphism, returns
// that induced map; otherwise nullopt. This is exactly the reducibility test.
inline std::optional<PartialAssignment> reduce_step(const Structure& A, const Structure& B,
                                                    const EndoSequence& seq, int t,
                                                    const PartialAssignment& psi) {
    const PartialAssignment& f = seq.maps[static_cast<size_t>(t)];
    PartialAssignment next(A.size());
    for (int x : seq.levels[static_cast<size_t>(t)]) {
        int z = f.at(x);
        int v = psi.at(x);
        if (next.defined(z)) {
            if (next.at(z) != v) return std::nullopt; // not constant on a fiber
        } else {
            next.assign(z, v);
        }
    }
    if (!is_homomorphism(next, A, B)) return std::nullopt;
    return next;
}

} // namespace detail

struct IndexResult {
    int level = 0;               // largest t such that phi factors through maps[t-1]...maps[0]
    PartialAssignment factor;    // the unique factor on levels[level]
};

// Factors a full homomorphism phi : A -> B through the sequence as far as it
// goes. The factor at each level is unique because the maps are surjective.
inline IndexResult index_of(const Structure& A, const Structure& B, const EndoSequence& seq,
                            const Homomorphism& phi) {
    if (!phi.total() || phi.source_size() != A.size()) {
        throw DomainError("index_of needs a total assignment on A");
    }
    if (!is_homomorphism(phi, A, B)) throw DomainError("index_of needs a homomorphism");

    PartialAssignment cur = phi;
    for (int t = 0; t < seq.depth(); ++t) {
        auto next = detail::reduce_step(A, B, seq, t, cur);
        if (!next) return {t, cur};
        cur = std::move(*next);
    }
    return {seq.depth(), cur};
}

// Is psi (a homomorphism of A[L_t] into B) elementary, i.e. not expressible
// as psi' after maps[t]? Homomorphisms at the last level are elementary by
// convention: there is nothing left to factor through.
inline bool is_elementary(const Structure& A, const Structure& B, const EndoSequence& seq, int t,
                          const PartialAssignment& psi) {
    if (t < 0 || t > seq.depth()) throw DomainError("level out of range");
    if (psi.source_size() != A.size() || psi.domain() != seq.levels[static_cast<size_t>(t)]) {
        throw DomainError("psi must be defined exactly on the level");
    }
    if (!is_homomorphism(psi, A, B)) {
        throw InvalidSeedError("psi is not a homomorphism of the level structure");
    }
    if (t == seq.depth()) return true;
    return !detail::reduce_step(A, B, seq, t, psi);
}

namespace detail {

// Shared engine for the elementary-extension test and the enumerator. Holds
// everything that is per-(A, B, sequence) so the per-call work stays small.
class SeqEngine {
public:
    SeqEngine(const Structure& A, const Structure& B, const EndoSequence& seq)
        : A_(A), B_(B), seq_(seq) {
        int n = seq.depth();
        rc_.reserve(static_cast<size_t>(n) + 1);
        for (int i = 0; i <= n; ++i) {
            rc_.push_back(compile_region(A, seq.levels[static_cast<size_t>(i)]));
        }
        diffs_.resize(static_cast<size_t>(n) + 1);
        for (int i = 0; i < n; ++i) {
            std::set_difference(seq.levels[static_cast<size_t>(i)].begin(),
                                seq.levels[static_cast<size_t>(i)].end(),
                                seq.levels[static_cast<size_t>(i + 1)].begin(),
                                seq.levels[static_cast<size_t>(i + 1)].end(),
                                std::back_inserter(diffs_[static_cast<size_t>(i)]));
        }
        diffs_[static_cast<size_t>(n)] = seq.levels[static_cast<size_t>(n)];

        fibers_.assign(static_cast<size_t>(n), {});
        for (int t = 0; t < n; ++t) {
            auto& fib = fibers_[static_cast<size_t>(t)];
            fib.assign(static_cast<size_t>(A.size()), {});
            for (int x : seq.levels[static_cast<size_t>(t)]) {
                fib[static_cast<size_t>(seq.maps[static_cast<size_t>(t)].at(x))].push_back(x);
            }
        }

        bp_.assign(static_cast<size_t>(B.vocab().size()), {});
        for (int s = 0; s < B.vocab().size(); ++s) bp_[static_cast<size_t>(s)] = bad_prefixes(B, s);
    }

    // Can seed (defined on a subset of levels[t] containing what the caller
    // fixed) be extended to an elementary homomorphism of A[levels[t]]?
    bool elementary_extendible(int t, const PartialAssignment& seed) const {
        const int n = seq_.depth();
        if (t == n) return ext_decide(A_, B_, rc_[static_cast<size_t>(t)], seed, seq_.width);

        // Branch over the ways reducibility can fail. Distinct branches often
        // collapse to the same effective pin set, so memoize on the delta.
        std::map<std::vector<std::pair<int, int>>, bool> cache;
        auto try_pins = [&](const std::vector<std::pair<int, int>>& pins) {
            std::vector<std::pair<int, int>> delta;
            for (auto [x, b] : pins) {
                if (seed.defined(x)) {
                    if (seed.at(x) != b) return false;
                } else {
                    delta.push_back({x, b});
                }
            }
            std::sort(delta.begin(), delta.end());
            for (size_t i = 1; i < delta.size(); ++i) {
                if (delta[i - 1].first == delta[i].first) {
                    if (delta[i - 1].second != delta[i].second) return false;
                }
            }
            delta.erase(std::unique(delta.begin(), delta.end()), delta.end());
            auto it = cache.find(delta);
            if (it != cache.end()) return it->second;
            PartialAssignment merged = seed;
            for (auto [x, b] : delta) merged.assign(x, b);
            bool ok = ext_decide(A_, B_, rc_[static_cast<size_t>(t)], merged, seq_.width);
            cache.emplace(std::move(delta), ok);
            return ok;
        };

        // (a) some fiber of maps[t] gets two different values
        for (int z : seq_.levels[static_cast<size_t>(t + 1)]) {
            const auto& fib = fibers_[static_cast<size_t>(t)][static_cast<size_t>(z)];
            for (size_t i = 0; i < fib.size(); ++i) {
                for (size_t j = i + 1; j < fib.size(); ++j) {
                    for (int u = 0; u < B_.size(); ++u) {
                        if (seed.defined(fib[i]) && seed.at(fib[i]) != u) continue;
                        for (int v = 0; v < B_.size(); ++v) {
                            if (v == u) continue;
                            if (seed.defined(fib[j]) && seed.at(fib[j]) != v) continue;
                            if (try_pins({{fib[i], u}, {fib[j], v}})) return true;
                        }
                    }
                }
            }
        }

        // (b) the induced map sends some tuple of A[L_{t+1}] onto a bad prefix
        for (const ActiveTuple& at : rc_[static_cast<size_t>(t + 1)].tuples) {
            for (const BadPrefix& bp : bp_[static_cast<size_t>(at.sym)]) {
                std::vector<std::pair<int, int>> pins;
                for (size_t p = 0; p < bp.prefix.size(); ++p) {
                    pins.push_back({representative(t, (*at.t)[p], seed), bp.prefix[p]});
                }
                if (try_pins(pins)) return true;
            }
        }
        return false;
    }

    const std::vector<int>& diff(int i) const { return diffs_[static_cast<size_t>(i)]; }
    const RegionContext& region(int i) const { return rc_[static_cast<size_t>(i)]; }

    // Full DFS per the alternating-output schedule; returns emitted count.
    long run(const HomSink& sink) {
        stop_ = false;
        count_ = 0;
        sink_ref_ = &sink;
#ifndef NDEBUG
        emitted_.clear();
#endif
        PartialAssignment empty(A_.size());
        enum_level(seq_.depth(), 0, empty, 0);
        sink_ref_ = nullptr;
        return count_;
    }

    // test hook: called with (level, psi) for every completed elementary node
    std::function<void(int, const PartialAssignment&)> on_elementary;

private:
    // Pinning representative for the fiber of z: a seed-defined member if one
    // exists (pinning it is then a no-op for that branch), else the least.
    int representative(int t, int z, const PartialAssignment& seed) const {
        const auto& fib = fibers_[static_cast<size_t>(t)][static_cast<size_t>(z)];
        for (int x : fib) {
            if (seed.defined(x)) return x;
        }
        return fib.front();
    }

    void emit(int level, const PartialAssignment& psi) {
        if (stop_) return;
        PartialAssignment full = psi;
        for (int i = level - 1; i >= 0; --i) {
            full = compose(full, seq_.maps[static_cast<size_t>(i)]);
        }
#ifndef NDEBUG
        assert(emitted_.insert(full).second && "duplicate emission");
#endif
        ++count_;
        if (!sink_ref_ || !(*sink_ref_)(full)) stop_ = true;
    }

    void enum_level(int i, int j, const PartialAssignment& psi, int depth) {
        if (stop_) return;
        const auto& d = diffs_[static_cast<size_t>(i)];
        if (j == static_cast<int>(d.size())) {
            if (on_elementary) on_elementary(i, psi);
            if (depth % 2 == 0) {
                emit(i, psi);
                children(i, psi, depth);
            } else {
                children(i, psi, depth);
                emit(i, psi);
            }
            return;
        }
        int x = d[static_cast<size_t>(j)];
        PartialAssignment ext = psi;
        for (int b = 0; b < B_.size() && !stop_; ++b) {
            ext.assign(x, b);
            if (elementary_extendible(i, ext)) enum_level(i, j + 1, ext, depth);
            ext.unassign(x);
        }
    }

    void children(int i, const PartialAssignment& psi, int depth) {
        PartialAssignment g = psi; // on levels[ip + 1] at iteration ip
        for (int ip = i - 1; ip >= 0 && !stop_; --ip) {
            if (elementary_extendible(ip, g)) enum_level(ip, 0, g, depth + 1);
            if (ip > 0) g = compose(g, seq_.maps[static_cast<size_t>(ip)]);
        }
    }

    const Structure& A_;
    const Structure& B_;
    const EndoSequence& seq_;
    std::vector<RegionContext> rc_;
    std::vector<std::vector<int>> diffs_;
    std::vector<std::vector<std::vector<int>>> fibers_; // [t][z] = fiber of maps[t]
    std::vector<std::vector<BadPrefix>> bp_;
    bool stop_ = false;
    long count_ = 0;
    const HomSink* sink_ref_ = nullptr;
#ifndef NDEBUG
    std::unordered_set<PartialAssignment, PartialAssignmentHash> emitted_;
#endif
};

} // namespace detail

// Can g0 (defined on X, a subset of levels[t] that contains levels[t+1] when
// t < depth) be extended to an elementary homomorphism of A[levels[t]]?
inline bool elementary_ext(const Structure& A, const Structure& B, const EndoSequence& seq, int t,
                           const PartialAssignment& g0) {
    if (t < 0 || t > seq.depth()) throw DomainError("level out of range");
    if (g0.source_size() != A.size()) throw DomainError("seed source size mismatch");
    const auto& level = seq.levels[static_cast<size_t>(t)];
    std::vector<int> dom = g0.domain();
    if (!std::includes(level.begin(), level.end(), dom.begin(), dom.end())) {
        throw DomainError("seed domain must lie inside the level");
    }
    if (t < seq.depth()) {
        const auto& next = seq.levels[static_cast<size_t>(t + 1)];
        if (!std::includes(dom.begin(), dom.end(), next.begin(), next.end())) {
            throw DomainError("seed domain must contain the next level");
        }
    }
    for (int x : dom) {
        if (g0.at(x) >= B.size()) throw DomainError("seed value out of target range");
    }
    if (!is_homomorphism(g0, A, B)) throw InvalidSeedError("seed is not a partial homomorphism");

    detail::SeqEngine eng(A, B, seq);
    return eng.elementary_extendible(t, g0);
}

// Enumerates every homomorphism A -> B exactly once through the sequence.
// The sink returns false to stop early; returns the number emitted.
inline long enumerate_wpd(const Structure& A, const Structure& B, const EndoSequence& seq,
                          const HomSink& sink) {
    if (!(A.vocab() == B.vocab())) throw DomainError("structures have different vocabularies");
    std::string reason;
    if (!validate_sequence(A, seq, &reason)) {
        throw InvalidSequenceError(reason);
    }
    detail::SeqEngine eng(A, B, seq);
    return eng.run(sink);
}

// ---- sequence file format ----------------------------------------------
//
//   width 1
//   level 0 a b c
//   level 1 a
//   map 1 a:a b:a c:a
//
// Levels must appear as 0,1,2,...; map i is defined on level i-1. The width
// line is optional (the CLI can supply it); '#' comments allowed.

inline EndoSequence read_endo_sequence(std::istream& in, const Structure& A) {
    EndoSequence seq;
    std::vector<std::optional<PartialAssignment>> maps;
    std::string raw;
    int line_no = 0;
    bool saw_width = false;

    while (std::getline(in, raw)) {
        ++line_no;
        auto toks = detail::tokenize_line(raw);
        if (toks.empty()) continue;
        const std::string& kw = toks[0];

        if (kw == "width") {
            if (toks.size() != 2) throw ParseError(line_no, "expected 'width <k>'");
            if (saw_width || !seq.levels.empty()) {
                throw ParseError(line_no, "'width' must come first, once");
            }
            int k = detail::parse_int(toks[1], line_no, "width");
            if (k < 0) throw ParseError(line_no, "width must be >= 0");
            seq.width = k;
            saw_width = true;
        } else if (kw == "level") {
            if (toks.size() < 2) throw ParseError(line_no, "expected 'level <i> <elem>...'");
            int idx = detail::parse_int(toks[1], line_no, "level index");
            if (idx != static_cast<int>(seq.levels.size())) {
                throw ParseError(line_no, "levels must appear in order 0,1,2,...");
            }
            std::vector<int> lv;
            for (size_t i = 2; i < toks.size(); ++i) {
                auto e = A.element_index(toks[i]);
                if (!e) throw ParseError(line_no, "unknown element '" + toks[i] + "'");
                lv.push_back(*e);
            }
            std::sort(lv.begin(), lv.end());
            if (std::adjacent_find(lv.begin(), lv.end()) != lv.end()) {
                throw ParseError(line_no, "duplicate element in level");
            }
            seq.levels.push_back(std::move(lv));
            maps.emplace_back(std::nullopt);
        } else if (kw == "map") {
            if (toks.size() < 2) throw ParseError(line_no, "expected 'map <i> <src>:<dst>...'");
            int idx = detail::parse_int(toks[1], line_no, "map index");
            if (idx < 1 || idx >= static_cast<int>(seq.levels.size())) {
                throw ParseError(line_no, "map index must name an existing level >= 1");
            }
            PartialAssignment f(A.size());
            for (size_t i = 2; i < toks.size(); ++i) {
                auto colon = toks[i].find(':');
                if (colon == std::string::npos) {
                    throw ParseError(line_no, "expected '<src>:<dst>' pairs");
                }
                auto src = A.element_index(toks[i].substr(0, colon));
                auto dst = A.element_index(toks[i].substr(colon + 1));
                if (!src || !dst) throw ParseError(line_no, "unknown element in map entry");
                if (f.defined(*src)) throw ParseError(line_no, "element mapped twice");
                f.assign(*src, *dst);
            }
            if (f.domain() != seq.levels[static_cast<size_t>(idx - 1)]) {
                throw ParseError(line_no, "map " + std::to_string(idx) +
                                              " must cover level " + std::to_string(idx - 1) +
                                              " exactly");
            }
            if (maps[static_cast<size_t>(idx - 1)]) {
                throw ParseError(line_no, "duplicate map " + std::to_string(idx));
            }
            maps[static_cast<size_t>(idx - 1)] = std::move(f);
        } else {
            throw ParseError(line_no, "expected 'width', 'level' or 'map'");
        }
    }
    if (seq.levels.empty()) throw ParseError(line_no, "sequence has no levels");
    for (size_t i = 0; i + 1 < seq.levels.size(); ++i) {
        if (!maps[i]) {
            throw ParseError(line_no, "missing map " + std::to_string(i + 1));
        }
        seq.maps.push_back(std::move(*maps[i]));
    }
    return seq;
}

inline std::string serialize_endo_sequence(const EndoSequence& seq, const Structure& A) {
    std::ostringstream out;
    if (seq.width >= 0) out << "width " << seq.width << "\n";
    for (size_t i = 0; i < seq.levels.size(); ++i) {
        out << "level " << i;
        for (int x : seq.levels[i]) out << " " << A.element_name(x);
        out << "\n";
    }
    for (int i = 0; i < seq.depth(); ++i) {
        out << "map " << (i + 1);
        const PartialAssignment& f = seq.maps[static_cast<size_t>(i)];
        for (int x : seq.levels[static_cast<size_t>(i)]) {
            out << " " << A.element_name(x) << ":" << A.element_name(f.at(x));
        }
        out << "\n";
    }
    return out.str();
}

} // namespace homenum
