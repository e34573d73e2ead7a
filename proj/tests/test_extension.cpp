#include <catch2/catch_amalgamated.hpp>

#include "homenum/extension.hpp"
#include "homenum/families.hpp"
#include "homenum/oracle.hpp"
#include "testutil.hpp"

using namespace homenum;
using namespace testutil;

namespace {

// reference: does any assignment of region extend the seed to a homomorphism
// of A[region]?
bool brute_ext(const Structure& A, const Structure& B, const ExtensionQuery& q) {
    std::vector<int> free;
    for (int x : q.region) {
        if (!q.seed.defined(x)) free.push_back(x);
    }
    std::sort(free.begin(), free.end());
    PartialAssignment f = q.seed;
    std::vector<int> pick(free.size(), 0);
    while (true) {
        for (size_t i = 0; i < free.size(); ++i) f.assign(free[i], pick[i]);
        if (is_homomorphism(f, A, B)) return true;
        int p = static_cast<int>(free.size()) - 1;
        while (p >= 0 && pick[static_cast<size_t>(p)] == B.size() - 1) {
            pick[static_cast<size_t>(p)] = 0;
            --p;
        }
        if (p < 0) return false;
        ++pick[static_cast<size_t>(p)];
    }
}

// first witness in lex order (free elements ascending, values ascending)
std::optional<PartialAssignment> brute_first(const Structure& A, const Structure& B,
                                             const ExtensionQuery& q) {
    std::vector<int> free;
    for (int x : q.region) {
        if (!q.seed.defined(x)) free.push_back(x);
    }
    std::sort(free.begin(), free.end());
    PartialAssignment f = q.seed;
    std::vector<int> pick(free.size(), 0);
    while (true) {
        for (size_t i = 0; i < free.size(); ++i) f.assign(free[i], pick[i]);
        if (is_homomorphism(f, A, B)) return f;
        int p = static_cast<int>(free.size()) - 1;
        while (p >= 0 && pick[static_cast<size_t>(p)] == B.size() - 1) {
            pick[static_cast<size_t>(p)] = 0;
            --p;
        }
        if (p < 0) return std::nullopt;
        ++pick[static_cast<size_t>(p)];
    }
}

ExtensionQuery random_query(Rng& rng, const Structure& A, const Structure& B) {
    ExtensionQuery q;
    q.seed = PartialAssignment(A.size());
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    for (int x = 0; x < A.size(); ++x) {
        if (coin(rng) < 0.7) q.region.push_back(x);
    }
    std::uniform_int_distribution<int> val(0, B.size() - 1);
    for (int x : q.region) {
        if (coin(rng) < 0.35) {
            q.fixed_set.push_back(x);
            q.seed.assign(x, val(rng));
        }
    }
    return q;
}

} // namespace

TEST_CASE("extension decision matches brute force on random queries") {
    Rng rng(52001);
    int checked = 0;
    for (int it = 0; it < 400; ++it) {
        Structure A = random_structure(rng, 5, {2, 1}, 0.25);
        Structure B = random_structure(rng, 3, {2, 1}, 0.45);
        ExtensionQuery q = random_query(rng, A, B);
        if (!is_homomorphism(q.seed, A, B)) {
            REQUIRE_THROWS_AS(homomorphism_ext(A, B, q, 4), InvalidSeedError);
            continue;
        }
        REQUIRE(homomorphism_ext(A, B, q, 4) == brute_ext(A, B, q));
        ++checked;
    }
    REQUIRE(checked > 200); // most seeds should be usable
}

TEST_CASE("ternary relations go through the same DP") {
    Rng rng(52002);
    for (int it = 0; it < 150; ++it) {
        Structure A = random_structure(rng, 4, {3}, 0.12);
        Structure B = random_structure(rng, 3, {3}, 0.3);
        ExtensionQuery q = random_query(rng, A, B);
        if (!is_homomorphism(q.seed, A, B)) continue;
        REQUIRE(homomorphism_ext(A, B, q, 3) == brute_ext(A, B, q));
    }
}

TEST_CASE("first_extension returns the lexicographically least witness") {
    Rng rng(52003);
    int hits = 0;
    for (int it = 0; it < 250; ++it) {
        Structure A = random_structure(rng, 4, {2}, 0.3);
        Structure B = random_structure(rng, 3, {2}, 0.5);
        ExtensionQuery q = random_query(rng, A, B);
        if (!is_homomorphism(q.seed, A, B)) continue;
        auto got = first_extension(A, B, q, 3);
        auto want = brute_first(A, B, q);
        REQUIRE(got.has_value() == want.has_value());
        if (got) {
            REQUIRE(hom_key(*got) == hom_key(*want));
            REQUIRE(is_homomorphism(*got, A, B));
            ++hits;
        }
    }
    REQUIRE(hits > 40);
}

TEST_CASE("whole-structure queries agree with the oracle") {
    Rng rng(52004);
    for (int it = 0; it < 100; ++it) {
        Structure A = random_structure(rng, 4, {2}, 0.3);
        Structure B = random_structure(rng, 3, {2}, 0.4);
        ExtensionQuery q;
        q.seed = PartialAssignment(A.size());
        for (int x = 0; x < A.size(); ++x) q.region.push_back(x);
        REQUIRE(homomorphism_ext(A, B, q, 3) == !brute_homs(A, B).empty());
    }
}

TEST_CASE("seed violations inside the region fail without error") {
    // E(a,b) with both pinned to a non-edge: internal decision is false
    Structure A = make_structure("a", 2, {2}, {{{0, 1}}});
    Structure B = make_structure("b", 2, {2}, {{{0, 1}}});
    auto rc = homenum::detail::compile_region(A, {0, 1});
    PartialAssignment bad(2);
    bad.assign(0, 1);
    bad.assign(1, 0);
    REQUIRE(!homenum::detail::ext_decide(A, B, rc, bad, 1));
    // but the public query interface refuses it loudly
    ExtensionQuery q;
    q.region = {0, 1};
    q.fixed_set = {0, 1};
    q.seed = bad;
    REQUIRE_THROWS_AS(homomorphism_ext(A, B, q, 1), InvalidSeedError);
}

TEST_CASE("query validation") {
    Structure A = make_structure("a", 3, {2}, {{{0, 1}}});
    Structure B = make_structure("b", 2, {2}, {{{0, 1}, {1, 0}}});
    Structure C = make_structure("c", 2, {1}, {{}});

    ExtensionQuery q;
    q.region = {0, 1};
    q.seed = PartialAssignment(3);
    REQUIRE_THROWS_AS(homomorphism_ext(A, C, q, 1), DomainError);

    ExtensionQuery bad_region;
    bad_region.region = {0, 9};
    bad_region.seed = PartialAssignment(3);
    REQUIRE_THROWS_AS(homomorphism_ext(A, B, bad_region, 1), DomainError);

    ExtensionQuery fixed_outside;
    fixed_outside.region = {0, 1};
    fixed_outside.fixed_set = {2};
    fixed_outside.seed = PartialAssignment(3);
    fixed_outside.seed.assign(2, 0);
    REQUIRE_THROWS_AS(homomorphism_ext(A, B, fixed_outside, 1), DomainError);

    ExtensionQuery mismatch;
    mismatch.region = {0, 1};
    mismatch.fixed_set = {0};
    mismatch.seed = PartialAssignment(3); // defined nowhere
    REQUIRE_THROWS_AS(homomorphism_ext(A, B, mismatch, 1), DomainError);

    ExtensionQuery holey;
    holey.region = {0, 1};
    holey.seed = PartialAssignment(2); // wrong source size
    REQUIRE_THROWS_AS(homomorphism_ext(A, B, holey, 1), DomainError);

    ExtensionQuery big_value;
    big_value.region = {0, 1};
    big_value.fixed_set = {0};
    big_value.seed = PartialAssignment(3);
    big_value.seed.assign(0, 5);
    REQUIRE_THROWS_AS(homomorphism_ext(A, B, big_value, 1), DomainError);
}

TEST_CASE("width bound applies to the free part only") {
    Structure k4 = generate_family("clique", 4);
    Structure k5 = generate_family("clique", 5);
    ExtensionQuery q;
    q.region = {0, 1, 2, 3};
    q.seed = PartialAssignment(4);
    REQUIRE_THROWS_AS(homomorphism_ext(k4, k5, q, 1), WidthExceededError);
    REQUIRE(homomorphism_ext(k4, k5, q, 3));

    // pinning two vertices leaves a single free edge: width 1 suffices
    ExtensionQuery pinned;
    pinned.region = {0, 1, 2, 3};
    pinned.fixed_set = {0, 1};
    pinned.seed = PartialAssignment(4);
    pinned.seed.assign(0, 0);
    pinned.seed.assign(1, 1);
    REQUIRE(homomorphism_ext(k4, k5, pinned, 1));
}

TEST_CASE("empty regions and empty structures are vacuously extendible") {
    Structure A = make_structure("a", 3, {2}, {{{0, 1}}});
    Structure B = make_structure("b", 1, {2}, {{}});
    ExtensionQuery q;
    q.seed = PartialAssignment(3);
    REQUIRE(homomorphism_ext(A, B, q, 0)); // empty region

    Structure empty = make_structure("e", 0, {2}, {{}});
    ExtensionQuery qe;
    qe.seed = PartialAssignment(0);
    REQUIRE(homomorphism_ext(empty, B, qe, 0));
}

TEST_CASE("user-supplied decompositions drive the same DP") {
    Rng rng(52005);
    int used = 0;
    for (int it = 0; it < 120; ++it) {
        Structure A = random_structure(rng, 5, {2}, 0.3);
        Structure B = random_structure(rng, 3, {2}, 0.5);
        auto td = decompose(A, 4);
        REQUIRE(td.has_value());
        ExtensionQuery q;
        q.seed = PartialAssignment(A.size());
        for (int x = 0; x < A.size(); ++x) q.region.push_back(x);
        std::uniform_int_distribution<int> val(0, B.size() - 1);
        std::uniform_real_distribution<double> coin(0.0, 1.0);
        for (int x : q.region) {
            if (coin(rng) < 0.3) {
                q.fixed_set.push_back(x);
                q.seed.assign(x, val(rng));
            }
        }
        if (!is_homomorphism(q.seed, A, B)) continue;
        auto rc = homenum::detail::compile_region(A, q.region);
        bool with_td = homenum::detail::ext_decide(A, B, rc, q.seed, 0, &*td);
        REQUIRE(with_td == brute_ext(A, B, q));
        ++used;
    }
    REQUIRE(used > 60);

    // a bag reaching outside the region is refused
    Structure A = make_structure("a", 3, {2}, {{{0, 1}}});
    Structure B = make_structure("b", 2, {2}, {{{0, 1}}});
    auto rc = homenum::detail::compile_region(A, {0, 1});
    TreeDecomposition td;
    td.parent = {-1};
    td.bags = {{0, 1, 2}};
    PartialAssignment seed(3);
    REQUIRE_THROWS_AS(homenum::detail::ext_decide(A, B, rc, seed, 0, &td), DomainError);
}
