#include "eisen/rootdata.hpp"

#include "eisen/errors.hpp"

#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <vector>

using namespace eisen;
using namespace eisen::rootdata;

namespace {

// all permutations preserving the blocks of P (the parabolic's Weyl subgroup)
std::vector<WeylElem> block_subgroup(const Composition& P) {
    std::vector<WeylElem> out;
    for (const WeylElem& w : all_weyl(P.n())) {
        bool ok = true;
        for (int i = 0; i < P.n() && ok; ++i)
            if (P.block_of(w.map[i]) != P.block_of(i)) ok = false;
        if (ok) out.push_back(w);
    }
    return out;
}

std::vector<int> sorted_parts(const Composition& P) {
    std::vector<int> v = P.parts;
    std::sort(v.begin(), v.end());
    return v;
}

} // namespace

TEST_CASE("weyl element algebra") {
    WeylElem a{{1, 2, 0}};
    WeylElem b{{0, 2, 1}};
    CHECK((a * b).map == std::vector<int>{1, 0, 2}); // (a*b)(i) = a(b(i))
    CHECK(WeylElem{{2, 1, 0}}.length() == 3);
    CHECK(WeylElem::identity(4).length() == 0);
    for (const WeylElem& w : all_weyl(4)) {
        CHECK(w * w.inverse() == WeylElem::identity(4));
        CHECK(w.inverse() * w == WeylElem::identity(4));
        CHECK(w.inverse().length() == w.length());
    }
}

TEST_CASE("permutation action preserves the dot product") {
    RootVector v{{Rat(1), Rat(-3), Rat(1, 2), Rat(3, 2)}};
    RootVector u{{Rat(2), Rat(1), Rat(-1), Rat(-2)}};
    for (const WeylElem& w : all_weyl(4))
        CHECK(v.permuted(w).dot(u.permuted(w)) == v.dot(u));
    // the action is by w . e_i = e_{w(i)}
    RootVector e0{{Rat(1), Rat(0), Rat(0)}};
    WeylElem w{{1, 2, 0}};
    CHECK(e0.permuted(w) == RootVector{{Rat(0), Rat(1), Rat(0)}});
}

TEST_CASE("levi simple roots") {
    CHECK(simple_roots(Composition({1, 1, 1})).empty());
    auto r21 = simple_roots(Composition({2, 1}));
    REQUIRE(r21.size() == 1);
    CHECK(r21[0] == simple_root(3, 0));
    auto r22 = simple_roots(Composition({2, 2}));
    REQUIRE(r22.size() == 2);
    CHECK(r22[0] == simple_root(4, 0));
    CHECK(r22[1] == simple_root(4, 2));
    CHECK(delta0(4).size() == 3);
}

TEST_CASE("block projection and delta0 expansion") {
    // projection fixes block-constant vectors and kills the Levi's own roots
    Composition P({2, 2});
    for (const RootVector& a : simple_roots(P))
        CHECK(block_projection(P, a).is_zero());
    RootVector v{{Rat(1), Rat(1), Rat(-1), Rat(-1)}};
    CHECK(block_projection(P, v) == v);

    // partial sums reconstruct the vector in the delta0 basis
    RootVector z{{Rat(3), Rat(-1, 2), Rat(0), Rat(-5, 2), Rat(0)}};
    auto c = delta0_expansion(z);
    RootVector back{std::vector<Rat>(5, Rat(0))};
    for (int i = 0; i < 4; ++i) {
        auto a = simple_root(5, i);
        for (int j = 0; j < 5; ++j) back.coords[j] += c[i] * a.coords[j];
    }
    CHECK(back == z);

    RootVector bad{{Rat(1), Rat(1)}};
    CHECK_THROWS_AS(delta0_expansion(bad), DomainError);
}

TEST_CASE("projected roots of a parabolic") {
    auto d11 = delta_P(Composition({1, 1}));
    REQUIRE(d11.size() == 1);
    CHECK(d11[0].root == simple_root(2, 0));
    REQUIRE(d11[0].delta0_coeffs.size() == 1);
    CHECK(d11[0].delta0_coeffs[0] == 1);

    auto d21 = delta_P(Composition({2, 1}));
    REQUIRE(d21.size() == 1);
    CHECK(d21[0].root == RootVector{{Rat(1, 2), Rat(1, 2), Rat(-1)}});
    CHECK(d21[0].delta0_coeffs == std::vector<Rat>{Rat(1, 2), Rat(1)});
    CHECK(d21[0].root.dot(d21[0].coroot) == Rat(3, 2));
    CHECK(d21[0].source_index == 1);

    // general invariants: one root per boundary, nonnegative delta0
    // coefficients (strictly positive at the crossing), positive pairing
    // with its own coroot
    for (int n = 2; n <= 6; ++n)
        for (const Composition& P : all_compositions(n)) {
            auto dP = delta_P(P);
            CHECK(int(dP.size()) == P.num_blocks() - 1);
            for (const auto& pr : dP) {
                CHECK(pr.root == pr.coroot);
                CHECK(pr.root.dot(pr.coroot) > 0);
                for (const Rat& c : pr.delta0_coeffs) CHECK(c >= 0);
                CHECK(pr.delta0_coeffs[pr.source_index] > 0);
                CHECK(block_projection(P, pr.root) == pr.root);
            }
        }
}

TEST_CASE("double coset representatives: hand-worked cases") {
    auto all3 = double_coset_reps(Composition({1, 1, 1}), Composition({1, 1, 1}));
    CHECK(all3.size() == 6);

    auto reps = double_coset_reps(Composition({2, 1}), Composition({1, 2}));
    REQUIRE(reps.size() == 2);
    CHECK(reps[0] == WeylElem::identity(3));
    CHECK(reps[1] == WeylElem{{1, 2, 0}});
}

TEST_CASE("double coset representatives match orbit counting") {
    for (int n = 2; n <= 5; ++n) {
        auto W = all_weyl(n);
        std::map<std::vector<int>, int> index;
        for (size_t i = 0; i < W.size(); ++i) index[W[i].map] = int(i);
        for (const Composition& P : all_compositions(n))
            for (const Composition& Q : all_compositions(n)) {
                auto WP = block_subgroup(P);
                auto WQ = block_subgroup(Q);
                auto reps = double_coset_reps(P, Q);

                std::vector<char> seen(W.size(), 0);
                int orbits = 0;
                for (size_t i = 0; i < W.size(); ++i) {
                    if (seen[i]) continue;
                    ++orbits;
                    int reps_inside = 0, min_len = W[i].length(), at_min = 0;
                    std::vector<const WeylElem*> orbit;
                    for (const WeylElem& u : WQ)
                        for (const WeylElem& v : WP) {
                            WeylElem g = u * W[i] * v;
                            int gi = index[g.map];
                            if (!seen[gi]) {
                                seen[gi] = 1;
                                orbit.push_back(&W[gi]);
                            }
                        }
                    for (const WeylElem* g : orbit) {
                        if (std::find(reps.begin(), reps.end(), *g) != reps.end())
                            ++reps_inside;
                        min_len = std::min(min_len, g->length());
                    }
                    for (const WeylElem* g : orbit)
                        if (g->length() == min_len) ++at_min;
                    // exactly one representative per coset, and it is the
                    // unique length minimizer
                    CHECK(reps_inside == 1);
                    CHECK(at_min == 1);
                }
                CHECK(orbits == int(reps.size()));
            }
    }
}

TEST_CASE("subordinate parabolics") {
    Composition P({2, 1}), Q({1, 2});
    WeylElem w{{1, 2, 0}};
    auto [Pw, Qw] = subordinate_parabolics(w, P, Q);
    CHECK(Pw == Composition({2, 1}));
    CHECK(Qw == Composition({1, 2}));

    CHECK_THROWS_AS(subordinate_parabolics(WeylElem{{1, 0, 2}}, P, Q), DomainError);

    // the two subordinate compositions always have equal part multisets
    // (w restricts to a bijection between the corresponding Levi directions)
    for (int n = 2; n <= 5; ++n)
        for (const Composition& A : all_compositions(n))
            for (const Composition& B : all_compositions(n))
                for (const WeylElem& u : double_coset_reps(A, B)) {
                    auto [Aw, Bw] = subordinate_parabolics(u, A, B);
                    CHECK(sorted_parts(Aw) == sorted_parts(Bw));
                }
}

TEST_CASE("omega sets") {
    auto o2 = omega_full(Composition({1, 1}), Composition({1, 1}));
    CHECK(o2.size() == 2);

    auto o3 = omega_full(Composition({2, 1}), Composition({1, 2}));
    REQUIRE(o3.size() == 1);
    CHECK(o3[0] == WeylElem{{1, 2, 0}});

    // omega_full(P, Q) is nonempty exactly when P and Q have the same parts
    // up to reordering
    for (int n = 2; n <= 6; ++n)
        for (const Composition& P : all_compositions(n))
            for (const Composition& Q : all_compositions(n)) {
                bool assoc = sorted_parts(P) == sorted_parts(Q);
                CHECK(!omega_full(P, Q).empty() == assoc);
            }

    // inversion is a bijection omega_full(P, Q) -> omega_full(Q, P)
    for (const Composition& P : all_compositions(4))
        for (const Composition& Q : all_compositions(4)) {
            auto fwd = omega_full(P, Q);
            auto bwd = omega_full(Q, P);
            CHECK(fwd.size() == bwd.size());
            for (const WeylElem& w : fwd)
                CHECK(std::find(bwd.begin(), bwd.end(), w.inverse()) != bwd.end());
        }
}

TEST_CASE("chamber separation constants") {
    // rank one: lambda = t/2 (1,-1) with t > 1 flips to pairing -t < -1
    CHECK(chamber_separation(1.0, Composition({1, 1}), Composition({1, 1})) == 1.0);

    // single block: no roots and no nontrivial w, vacuously the base constant
    CHECK(chamber_separation(2.0, Composition({3}), Composition({1, 1, 1})) == 2.0);

    // these should all terminate with a finite certificate
    for (int n = 2; n <= 4; ++n)
        for (const Composition& P : all_compositions(n))
            for (const Composition& Q : all_compositions(n)) {
                double cp = chamber_separation(1.0, P, Q, 16, 7);
                CHECK(cp >= 1.0);
            }
}
