#pragma once

#include <algorithm>
#include <vector>

#include "homenum/errors.hpp"
#include "homenum/structures.hpp"

namespace homenum {

// Reference implementations. These enumerate the full |B|^|A| candidate space
// with a plain odometer and test each candidate against the homomorphism
// definition directly. No pruning on purpose: the value of this module is
// that it is too simple to be wrong, not that it is fast.

namespace detail {

// |B|^|A| clamped; -1 when it exceeds limit.
inline long candidate_count(int a, int b, long limit) {
    long c = 1;
    for (int i = 0; i < a; ++i) {
        if (b == 0) return a == 0 ? 1 : 0;
        if (c > limit / b) return -1;
        c *= b;
    }
    return c;
}

} // namespace detail

constexpr long kOracleCandidateLimit = 10000000; // 10^7

// All homomorphisms A -> B, in lexicographic order over (source universe
// order, target universe order). Refuses instances with more than 10^7
// candidate maps.
inline std::vector<Homomorphism> brute_homs(const Structure& A, const Structure& B) {
    if (!(A.vocab() == B.vocab())) throw DomainError("structures have different vocabularies");
    long cands = detail::candidate_count(A.size(), B.size(), kOracleCandidateLimit);
    if (cands < 0) {
        throw SizeGuardError("oracle refuses instance: candidate space exceeds 10^7");
    }

    std::vector<Homomorphism> out;
    if (A.size() == 0) {
        out.push_back(PartialAssignment(0));
        return out;
    }
    if (B.size() == 0) return out;

    std::vector<int> vals(static_cast<size_t>(A.size()), 0);
    while (true) {
        PartialAssignment f(A.size());
        for (int x = 0; x < A.size(); ++x) f.assign(x, vals[static_cast<size_t>(x)]);
        if (is_homomorphism(f, A, B)) out.push_back(std::move(f));

        int pos = A.size() - 1;
        while (pos >= 0 && vals[static_cast<size_t>(pos)] == B.size() - 1) {
            vals[static_cast<size_t>(pos)] = 0;
            --pos;
        }
        if (pos < 0) break;
        ++vals[static_cast<size_t>(pos)];
    }
    return out;
}

// Distinct restrictions of the homomorphisms A -> B to the projection list Y
// (universe indices). Set semantics: duplicates collapse; output sorted
// lexicographically by (position in Y, target index).
inline std::vector<PartialAssignment> brute_projections(const Structure& A, const Structure& B,
                                                        const std::vector<int>& Y) {
    std::vector<char> seen(static_cast<size_t>(A.size()), 0);
    for (int y : Y) {
        if (y < 0 || y >= A.size()) throw DomainError("projection element out of range");
        if (seen[static_cast<size_t>(y)]) throw DomainError("duplicate projection element");
        seen[static_cast<size_t>(y)] = 1;
    }

    std::vector<PartialAssignment> out;
    std::vector<std::vector<int>> keys;
    for (const Homomorphism& h : brute_homs(A, B)) {
        std::vector<int> key;
        key.reserve(Y.size());
        for (int y : Y) key.push_back(h.at(y));
        keys.push_back(std::move(key));
    }
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    for (const auto& key : keys) {
        PartialAssignment p(A.size());
        for (size_t i = 0; i < Y.size(); ++i) p.assign(Y[i], key[i]);
        out.push_back(std::move(p));
    }
    return out;
}

} // namespace homenum
