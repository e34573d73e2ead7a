#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "homenum/errors.hpp"

namespace homenum {

// A tuple of element indices (indices into a structure's universe).
using Tuple = std::vector<int>;

struct TupleHash {
    size_t operator()(const Tuple& t) const {
        size_t h = 1469598103934665603ull;
        for (int v : t) {
            h ^= static_cast<size_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        }
        return h;
    }
};

struct RelationSymbol {
    std::string name;
    int arity = 0;

    bool operator==(const RelationSymbol&) const = default;
};

// A finite relational vocabulary: named symbols with fixed arities >= 1.
class Vocabulary {
public:
    Vocabulary() = default;

    explicit Vocabulary(std::vector<RelationSymbol> symbols) : symbols_(std::move(symbols)) {
        for (size_t i = 0; i < symbols_.size(); ++i) {
            const auto& s = symbols_[i];
            if (s.arity < 1) {
                throw DomainError("relation symbol '" + s.name + "' has arity < 1");
            }
            if (s.name.empty()) {
                throw DomainError("relation symbol with empty name");
            }
            if (!index_.emplace(s.name, static_cast<int>(i)).second) {
                throw DomainError("duplicate relation symbol '" + s.name + "'");
            }
        }
    }

    int size() const { return static_cast<int>(symbols_.size()); }
    const RelationSymbol& symbol(int i) const { return symbols_.at(static_cast<size_t>(i)); }

    std::optional<int> find(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    bool operator==(const Vocabulary& other) const { return symbols_ == other.symbols_; }

private:
    std::vector<RelationSymbol> symbols_;
    std::unordered_map<std::string, int> index_;
};

// A finite relational structure. Immutable after construction; the universe
// order is the order elements were listed in, and every deterministic
// contract in this library (enumeration order, witness choice, scan order)
// is stated in terms of it.
class Structure {
public:
    Structure() = default;

    Structure(Vocabulary vocab, std::string name, std::vector<std::string> universe,
              std::vector<std::vector<Tuple>> tables)
        : vocab_(std::move(vocab)),
          name_(std::move(name)),
          universe_(std::move(universe)),
          tables_(std::move(tables)) {
        if (static_cast<int>(tables_.size()) != vocab_.size()) {
            throw DomainError("table count does not match vocabulary size");
        }
        for (size_t i = 0; i < universe_.size(); ++i) {
            if (universe_[i].empty()) throw DomainError("empty element name");
            if (!elem_index_.emplace(universe_[i], static_cast<int>(i)).second) {
                throw DomainError("duplicate element '" + universe_[i] + "'");
            }
        }
        tuple_sets_.resize(tables_.size());
        for (size_t s = 0; s < tables_.size(); ++s) {
            const int arity = vocab_.symbol(static_cast<int>(s)).arity;
            for (const Tuple& t : tables_[s]) {
                if (static_cast<int>(t.size()) != arity) {
                    throw DomainError("tuple arity mismatch for relation '" +
                                      vocab_.symbol(static_cast<int>(s)).name + "'");
                }
                for (int e : t) {
                    if (e < 0 || e >= size()) {
                        throw DomainError("tuple element index out of range");
                    }
                }
                if (!tuple_sets_[s].insert(t).second) {
                    throw DomainError("duplicate tuple in relation '" +
                                      vocab_.symbol(static_cast<int>(s)).name + "'");
                }
            }
        }
    }

    const Vocabulary& vocab() const { return vocab_; }
    const std::string& name() const { return name_; }
    int size() const { return static_cast<int>(universe_.size()); }
    const std::vector<std::string>& universe() const { return universe_; }
    const std::string& element_name(int i) const { return universe_.at(static_cast<size_t>(i)); }

    std::optional<int> element_index(const std::string& name) const {
        auto it = elem_index_.find(name);
        if (it == elem_index_.end()) return std::nullopt;
        return it->second;
    }

    const std::vector<Tuple>& table(int sym) const { return tables_.at(static_cast<size_t>(sym)); }

    bool has_tuple(int sym, const Tuple& t) const {
        return tuple_sets_.at(static_cast<size_t>(sym)).count(t) > 0;
    }

    long total_tuples() const {
        long n = 0;
        for (const auto& tab : tables_) n += static_cast<long>(tab.size());
        return n;
    }

private:
    Vocabulary vocab_;
    std::string name_;
    std::vector<std::string> universe_;
    std::vector<std::vector<Tuple>> tables_;
    std::unordered_map<std::string, int> elem_index_;
    std::vector<std::unordered_set<Tuple, TupleHash>> tuple_sets_;
};

// A partial map from one universe into another, represented densely over the
// source universe with -1 for "undefined". A total one is a candidate
// homomorphism.
class PartialAssignment {
public:
    PartialAssignment() = default;
    explicit PartialAssignment(int source_size) : val_(static_cast<size_t>(source_size), -1) {}

    static PartialAssignment empty(int source_size) { return PartialAssignment(source_size); }

    int source_size() const { return static_cast<int>(val_.size()); }
    bool defined(int x) const { return val_.at(static_cast<size_t>(x)) >= 0; }

    int at(int x) const {
        int v = val_.at(static_cast<size_t>(x));
        if (v < 0) throw DomainError("assignment undefined at element " + std::to_string(x));
        return v;
    }

    // -1 when undefined.
    int raw(int x) const { return val_.at(static_cast<size_t>(x)); }

    void assign(int x, int v) {
        if (v < 0) throw DomainError("cannot assign a negative value");
        int& slot = val_.at(static_cast<size_t>(x));
        if (slot < 0) ++defined_;
        slot = v;
    }

    void unassign(int x) {
        int& slot = val_.at(static_cast<size_t>(x));
        if (slot >= 0) --defined_;
        slot = -1;
    }

    int defined_count() const { return defined_; }
    bool total() const { return defined_ == source_size(); }

    std::vector<int> domain() const {
        std::vector<int> d;
        d.reserve(static_cast<size_t>(defined_));
        for (int x = 0; x < source_size(); ++x) {
            if (val_[static_cast<size_t>(x)] >= 0) d.push_back(x);
        }
        return d;
    }

    bool operator==(const PartialAssignment&) const = default;

private:
    std::vector<int> val_;
    int defined_ = 0;
};

// Total assignments double as homomorphisms once checked.
using Homomorphism = PartialAssignment;

struct PartialAssignmentHash {
    size_t operator()(const PartialAssignment& f) const {
        size_t h = 1469598103934665603ull;
        for (int x = 0; x < f.source_size(); ++x) {
            h ^= static_cast<size_t>(f.raw(x) + 1) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        }
        return h;
    }
};

// Checks that f respects every tuple of A whose entries all lie in f's
// domain. For partial f this is exactly "f is a homomorphism of the
// substructure induced by its domain", so no separate induced-substructure
// pass is ever needed.
inline bool is_homomorphism(const PartialAssignment& f, const Structure& A, const Structure& B) {
    if (f.source_size() != A.size()) {
        throw DomainError("assignment source size does not match structure universe");
    }
    if (!(A.vocab() == B.vocab())) {
        throw DomainError("structures have different vocabularies");
    }
    for (int x = 0; x < A.size(); ++x) {
        if (f.defined(x) && f.at(x) >= B.size()) {
            throw DomainError("assignment value out of range of target universe");
        }
    }
    Tuple image;
    for (int s = 0; s < A.vocab().size(); ++s) {
        for (const Tuple& t : A.table(s)) {
            bool covered = true;
            for (int e : t) {
                if (!f.defined(e)) {
                    covered = false;
                    break;
                }
            }
            if (!covered) continue;
            image.clear();
            for (int e : t) image.push_back(f.at(e));
            if (!B.has_tuple(s, image)) return false;
        }
    }
    return true;
}

// outer after inner: x -> outer(inner(x)), defined exactly on inner's domain.
// Every element inner maps to must be in outer's domain.
inline PartialAssignment compose(const PartialAssignment& outer, const PartialAssignment& inner) {
    PartialAssignment r(inner.source_size());
    for (int x = 0; x < inner.source_size(); ++x) {
        if (!inner.defined(x)) continue;
        int mid = inner.at(x);
        if (mid >= outer.source_size() || !outer.defined(mid)) {
            throw DomainError("composition undefined: inner image leaves outer domain");
        }
        r.assign(x, outer.at(mid));
    }
    return r;
}

// Simple undirected graph on {0..n-1}; adjacency lists kept sorted, no
// self-loops.
struct Graph {
    int n = 0;
    std::vector<std::vector<int>> adj;

    static Graph empty(int n) {
        Graph g;
        g.n = n;
        g.adj.assign(static_cast<size_t>(n), {});
        return g;
    }

    static Graph from_edges(int n, const std::vector<std::pair<int, int>>& edges) {
        Graph g = empty(n);
        for (auto [a, b] : edges) {
            if (a < 0 || a >= n || b < 0 || b >= n) throw DomainError("edge endpoint out of range");
            if (a == b) continue;
            g.adj[static_cast<size_t>(a)].push_back(b);
            g.adj[static_cast<size_t>(b)].push_back(a);
        }
        g.normalize();
        return g;
    }

    void normalize() {
        for (auto& v : adj) {
            std::sort(v.begin(), v.end());
            v.erase(std::unique(v.begin(), v.end()), v.end());
        }
    }

    bool adjacent(int a, int b) const {
        const auto& v = adj.at(static_cast<size_t>(a));
        return std::binary_search(v.begin(), v.end(), b);
    }

    long edge_count() const {
        long d = 0;
        for (const auto& v : adj) d += static_cast<long>(v.size());
        return d / 2;
    }
};

// Primal graph: two distinct elements are adjacent iff they share a tuple.
inline Graph gaifman_graph(const Structure& A) {
    Graph g = Graph::empty(A.size());
    for (int s = 0; s < A.vocab().size(); ++s) {
        for (const Tuple& t : A.table(s)) {
            for (size_t i = 0; i < t.size(); ++i) {
                for (size_t j = i + 1; j < t.size(); ++j) {
                    if (t[i] != t[j]) {
                        g.adj[static_cast<size_t>(t[i])].push_back(t[j]);
                        g.adj[static_cast<size_t>(t[j])].push_back(t[i]);
                    }
                }
            }
        }
    }
    g.normalize();
    return g;
}

// Subgraph induced on verts (universe indices, need not be sorted); vertex i
// of the result is verts[i].
inline Graph induced_subgraph(const Graph& g, const std::vector<int>& verts) {
    std::vector<int> pos(static_cast<size_t>(g.n), -1);
    for (size_t i = 0; i < verts.size(); ++i) {
        int v = verts[i];
        if (v < 0 || v >= g.n) throw DomainError("induced vertex out of range");
        if (pos[static_cast<size_t>(v)] >= 0) throw DomainError("duplicate vertex in induced set");
        pos[static_cast<size_t>(v)] = static_cast<int>(i);
    }
    Graph h = Graph::empty(static_cast<int>(verts.size()));
    for (size_t i = 0; i < verts.size(); ++i) {
        for (int w : g.adj[static_cast<size_t>(verts[i])]) {
            int j = pos[static_cast<size_t>(w)];
            if (j >= 0) h.adj[i].push_back(j);
        }
    }
    h.normalize();
    return h;
}

// Substructure induced by X: universe keeps A's order restricted to X, and a
// tuple survives iff all its entries lie in X.
inline Structure induced_substructure(const Structure& A, const std::vector<int>& X) {
    std::vector<char> in(static_cast<size_t>(A.size()), 0);
    for (int x : X) {
        if (x < 0 || x >= A.size()) throw DomainError("induced element out of range");
        if (in[static_cast<size_t>(x)]) throw DomainError("duplicate element in induced set");
        in[static_cast<size_t>(x)] = 1;
    }
    std::vector<int> remap(static_cast<size_t>(A.size()), -1);
    std::vector<std::string> universe;
    for (int x = 0; x < A.size(); ++x) {
        if (in[static_cast<size_t>(x)]) {
            remap[static_cast<size_t>(x)] = static_cast<int>(universe.size());
            universe.push_back(A.element_name(x));
        }
    }
    std::vector<std::vector<Tuple>> tables(static_cast<size_t>(A.vocab().size()));
    for (int s = 0; s < A.vocab().size(); ++s) {
        for (const Tuple& t : A.table(s)) {
            bool inside = true;
            for (int e : t) {
                if (!in[static_cast<size_t>(e)]) {
                    inside = false;
                    break;
                }
            }
            if (!inside) continue;
            Tuple r;
            r.reserve(t.size());
            for (int e : t) r.push_back(remap[static_cast<size_t>(e)]);
            tables[static_cast<size_t>(s)].push_back(std::move(r));
        }
    }
    return Structure(A.vocab(), A.name(), std::move(universe), std::move(tables));
}

} // namespace homenum
