#pragma once

#include <algorithm>
#include <functional>
#include <string>
#include <vector>

#include "homenum/errors.hpp"
#include "homenum/extension.hpp"
#include "homenum/structures.hpp"
#include "homenum/treewidth.hpp"

namespace homenum {

// Delay bookkeeping for the projection enumerator. A backtrack is one
// retreat of the assigned prefix (popping one variable); candidate values
// rejected by the extendibility test are not backtracks. The algorithm never
// backtracks before the first answer and at most |Y| times between answers.
struct CqeStats {
    long emissions = 0;
    long backtracks_before_first = 0;
    long max_backtracks_between = 0;
    long backtracks_after_last = 0;
};

// Enumerates the distinct restrictions to Y of homomorphisms A -> B, without
// duplicates, in lexicographic order over (Y positions, target universe
// order). Requires the primal graph of all of A to have width <= k — the
// bound must hold for A itself, not a smaller equivalent core, because the
// extendibility tests range over full A. Emitted assignments are defined
// exactly on Y; the sink returns false to stop early. Returns the count.
inline long cqe_enumerate(const Structure& A, const Structure& B, const std::vector<int>& Y,
                          int k, const std::function<bool(const PartialAssignment&)>& sink,
                          CqeStats* stats = nullptr) {
    if (!(A.vocab() == B.vocab())) throw DomainError("structures have different vocabularies");
    std::vector<char> seen(static_cast<size_t>(A.size()), 0);
    for (int y : Y) {
        if (y < 0 || y >= A.size()) throw DomainError("projection element out of range");
        if (seen[static_cast<size_t>(y)]) throw DomainError("duplicate projection element");
        seen[static_cast<size_t>(y)] = 1;
    }
    if (!decompose(A, k)) {
        throw WidthExceededError("source structure exceeds width " + std::to_string(k));
    }

    CqeStats local;
    CqeStats& st = stats ? *stats : local;
    st = CqeStats{};

    detail::RegionContext rc = detail::compile_region(A, [&] {
        std::vector<int> all(static_cast<size_t>(A.size()));
        for (int i = 0; i < A.size(); ++i) all[static_cast<size_t>(i)] = i;
        return all;
    }());

    const int ell = static_cast<int>(Y.size());
    long count = 0;

    auto emit = [&](const PartialAssignment& proj) {
        ++count;
        ++st.emissions;
        st.max_backtracks_between = std::max(st.max_backtracks_between, st.backtracks_after_last);
        st.backtracks_after_last = 0;
        return sink(proj);
    };

    if (ell == 0) {
        // a single empty answer iff any homomorphism exists at all
        PartialAssignment none(A.size());
        if (detail::ext_decide(A, B, rc, none, k)) emit(none);
        return count;
    }

    PartialAssignment phi(A.size());
    std::vector<int> cursor(static_cast<size_t>(ell), 0);
    int m = 0; // number of assigned prefix variables
    bool emitted_any = false;

    while (true) {
        if (m == ell) {
            PartialAssignment proj(A.size());
            for (int y : Y) proj.assign(y, phi.at(y));
            emitted_any = true;
            if (!emit(proj)) break;
            phi.unassign(Y[static_cast<size_t>(ell - 1)]);
            m = ell - 1;
            ++st.backtracks_after_last;
            continue;
        }

        int y = Y[static_cast<size_t>(m)];
        bool found = false;
        for (int b = cursor[static_cast<size_t>(m)]; b < B.size(); ++b) {
            phi.assign(y, b);
            if (detail::ext_decide(A, B, rc, phi, k)) {
                cursor[static_cast<size_t>(m)] = b + 1;
                found = true;
                break;
            }
            phi.unassign(y);
        }
        if (found) {
            ++m;
            continue;
        }
        cursor[static_cast<size_t>(m)] = 0;
        if (m == 0) break;
        phi.unassign(Y[static_cast<size_t>(m - 1)]);
        --m;
        if (emitted_any) {
            ++st.backtracks_after_last;
        } else {
            ++st.backtracks_before_first;
        }
    }

    return count;
}

} // namespace homenum
