#pragma once

#include <gmpxx.h>

#include <utility>
#include <vector>

/*
 * Type A root-system combinatorics over exact rationals.
 *
 * Everything lives in the coordinate model: the ambient space is Q^n with the
 * standard dot product, the simple roots are e_i - e_{i+1}, and the Weyl group
 * is S_n acting by w . e_i = e_{w(i)}.  A standard parabolic is recorded by the
 * composition of n listing its block sizes; its "Levi directions" a_P are the
 * block-constant vectors with total sum zero, and block averaging is the
 * orthogonal projection onto them.
 */

namespace eisen::rootdata {

using Rat = mpq_class;

// ordered list of positive block sizes summing to n
struct Composition {
    std::vector<int> parts;

    explicit Composition(std::vector<int> p);

    int n() const;
    int num_blocks() const { return int(parts.size()); }
    int block_of(int i) const;                       // block index containing position i
    std::vector<std::pair<int, int>> blocks() const; // half-open [begin, end) ranges

    bool operator==(const Composition& o) const { return parts == o.parts; }
    bool operator!=(const Composition& o) const { return !(*this == o); }
};

// permutation in one-line notation: map[i] = w(i), zero-based
struct WeylElem {
    std::vector<int> map;

    static WeylElem identity(int n);

    int n() const { return int(map.size()); }
    WeylElem inverse() const;
    WeylElem operator*(const WeylElem& rhs) const; // (this * rhs)(i) = this(rhs(i))
    int length() const;                            // number of inversions

    bool operator==(const WeylElem& o) const { return map == o.map; }
    bool operator!=(const WeylElem& o) const { return !(*this == o); }
};

// vector in Q^n with exact rational coordinates
struct RootVector {
    std::vector<Rat> coords;

    int n() const { return int(coords.size()); }
    Rat dot(const RootVector& other) const;
    bool is_zero() const;
    RootVector permuted(const WeylElem& w) const; // w . v, coordinates pushed forward

    bool operator==(const RootVector& o) const { return coords == o.coords; }
};

RootVector simple_root(int n, int i); // e_i - e_{i+1}
std::vector<RootVector> delta0(int n);

// simple roots internal to the blocks of P (the Levi's own simple roots)
std::vector<RootVector> simple_roots(const Composition& P);

// orthogonal projection onto block-constant vectors (average over each block)
RootVector block_projection(const Composition& P, const RootVector& v);

/*
 * Coefficients of a sum-zero vector in the basis delta0: v = sum c_i a_i with
 * a_i = e_i - e_{i+1} forces c_i = v_0 + ... + v_i, the partial sums.
 */
std::vector<Rat> delta0_expansion(const RootVector& v);

/*
 * A root of a_P: the block projection of a simple root crossing a boundary of
 * P, together with its coroot (same coordinates in type A), its expansion in
 * delta0, and the index k of the crossing root e_k - e_{k+1} it came from.
 */
struct ProjectedRoot {
    RootVector root;
    RootVector coroot;
    std::vector<Rat> delta0_coeffs;
    int source_index = -1;
};

// one projected root per boundary between consecutive blocks of P
std::vector<ProjectedRoot> delta_P(const Composition& P);

/*
 * Minimal-length representatives of the double cosets W_Q \ W / W_P: the
 * permutations increasing on every block of P whose inverse is increasing on
 * every block of Q.  Sorted by length, then lexicographically.
 */
std::vector<WeylElem> double_coset_reps(const Composition& P, const Composition& Q);

/*
 * For a minimal representative w, the compositions P_w refining P and Q_w
 * refining Q cut out by w: consecutive positions stay in one part of P_w
 * exactly when they share a block of P and their images share a block of Q,
 * and symmetrically for Q_w via w^{-1}.  Throws if w is not minimal.
 */
std::pair<Composition, Composition> subordinate_parabolics(const WeylElem& w,
                                                           const Composition& P,
                                                           const Composition& Q);

// minimal representatives w with Q_w = Q (w maps a_P onto a subspace of a_Q)
std::vector<WeylElem> omega_semi(const Composition& P, const Composition& Q);

// w in omega_semi(P, Q) with w^{-1} in omega_semi(Q, P): bijections a_P -> a_Q
std::vector<WeylElem> omega_full(const Composition& P, const Composition& Q);

/*
 * Search for a constant c' >= max(c, 1) such that whenever lambda in a_P^*
 * pairs > c' with every coroot of Delta_P, each nonidentity w in
 * omega_semi(P, Q) sends it to pair < -c with some coroot of Delta_Q.  The
 * certificate is statistical: `trials` random exact-rational lambda per
 * candidate c', doubling c' on failure.  Returns the accepted c'.
 */
double chamber_separation(double c, const Composition& P, const Composition& Q,
                          int trials = 64, unsigned long seed = 1);

std::vector<Composition> all_compositions(int n); // all 2^{n-1} compositions of n
std::vector<WeylElem> all_weyl(int n);            // all of S_n in lex order

} // namespace eisen::rootdata
