#include "eisen/rootdata.hpp"

#include "eisen/errors.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace eisen::rootdata {

Composition::Composition(std::vector<int> p) : parts(std::move(p)) {
    if (parts.empty()) throw DomainError("Composition: no parts");
    for (int x : parts)
        if (x < 1) throw DomainError("Composition: parts must be positive");
}

int Composition::n() const { return std::accumulate(parts.begin(), parts.end(), 0); }

int Composition::block_of(int i) const {
    int acc = 0;
    for (size_t b = 0; b < parts.size(); ++b) {
        acc += parts[b];
        if (i < acc) return int(b);
    }
    throw DomainError("Composition::block_of: index out of range");
}

std::vector<std::pair<int, int>> Composition::blocks() const {
    std::vector<std::pair<int, int>> out;
    int acc = 0;
    for (int p : parts) {
        out.emplace_back(acc, acc + p);
        acc += p;
    }
    return out;
}

WeylElem WeylElem::identity(int n) {
    WeylElem w;
    w.map.resize(n);
    std::iota(w.map.begin(), w.map.end(), 0);
    return w;
}

WeylElem WeylElem::inverse() const {
    WeylElem out;
    out.map.resize(map.size());
    for (size_t i = 0; i < map.size(); ++i) out.map[map[i]] = int(i);
    return out;
}

WeylElem WeylElem::operator*(const WeylElem& rhs) const {
    WeylElem out;
    out.map.resize(map.size());
    for (size_t i = 0; i < map.size(); ++i) out.map[i] = map[rhs.map[i]];
    return out;
}

int WeylElem::length() const {
    int inv = 0;
    for (size_t i = 0; i < map.size(); ++i)
        for (size_t j = i + 1; j < map.size(); ++j)
            if (map[i] > map[j]) ++inv;
    return inv;
}

Rat RootVector::dot(const RootVector& other) const {
    if (coords.size() != other.coords.size())
        throw DomainError("RootVector::dot: dimension mismatch");
    Rat acc = 0;
    for (size_t i = 0; i < coords.size(); ++i) acc += coords[i] * other.coords[i];
    return acc;
}

bool RootVector::is_zero() const {
    for (const Rat& c : coords)
        if (c != 0) return false;
    return true;
}

RootVector RootVector::permuted(const WeylElem& w) const {
    RootVector out;
    out.coords.resize(coords.size());
    for (size_t i = 0; i < coords.size(); ++i) out.coords[w.map[i]] = coords[i];
    return out;
}

RootVector simple_root(int n, int i) {
    if (i < 0 || i + 1 >= n) throw DomainError("simple_root: index out of range");
    RootVector v;
    v.coords.assign(n, 0);
    v.coords[i] = 1;
    v.coords[i + 1] = -1;
    return v;
}

std::vector<RootVector> delta0(int n) {
    std::vector<RootVector> out;
    for (int i = 0; i + 1 < n; ++i) out.push_back(simple_root(n, i));
    return out;
}

std::vector<RootVector> simple_roots(const Composition& P) {
    std::vector<RootVector> out;
    const int n = P.n();
    for (auto [b, e] : P.blocks())
        for (int i = b; i + 1 < e; ++i) out.push_back(simple_root(n, i));
    return out;
}

RootVector block_projection(const Composition& P, const RootVector& v) {
    if (v.n() != P.n()) throw DomainError("block_projection: dimension mismatch");
    RootVector out;
    out.coords.resize(v.coords.size());
    for (auto [b, e] : P.blocks()) {
        Rat avg = 0;
        for (int i = b; i < e; ++i) avg += v.coords[i];
        avg /= (e - b);
        for (int i = b; i < e; ++i) out.coords[i] = avg;
    }
    return out;
}

std::vector<Rat> delta0_expansion(const RootVector& v) {
    Rat total = 0;
    for (const Rat& c : v.coords) total += c;
    if (total != 0) throw DomainError("delta0_expansion: vector must sum to zero");
    std::vector<Rat> out;
    Rat acc = 0;
    for (int i = 0; i + 1 < v.n(); ++i) {
        acc += v.coords[i];
        out.push_back(acc);
    }
    return out;
}

std::vector<ProjectedRoot> delta_P(const Composition& P) {
    std::vector<ProjectedRoot> out;
    const int n = P.n();
    // crossing roots e_k - e_{k+1} at the block boundaries
    int acc = 0;
    for (size_t b = 0; b + 1 < P.parts.size(); ++b) {
        acc += P.parts[b];
        int k = acc - 1;
        RootVector beta = simple_root(n, k);
        ProjectedRoot pr;
        pr.root = block_projection(P, beta);
        pr.coroot = pr.root; // type A: coroot of beta has the same coordinates
        pr.delta0_coeffs = delta0_expansion(pr.root);
        pr.source_index = k;
        out.push_back(std::move(pr));
    }
    return out;
}

namespace {

bool increasing_on_blocks(const WeylElem& w, const Composition& P) {
    for (auto [b, e] : P.blocks())
        for (int i = b; i + 1 < e; ++i)
            if (w.map[i] > w.map[i + 1]) return false;
    return true;
}

bool is_reduced(const WeylElem& w, const Composition& P, const Composition& Q) {
    return increasing_on_blocks(w, P) && increasing_on_blocks(w.inverse(), Q);
}

Composition refinement_along(const WeylElem& w, const Composition& P, const Composition& Q) {
    // group consecutive positions by (P-block, Q-block of image)
    const int n = P.n();
    std::vector<int> parts;
    int run = 0;
    std::pair<int, int> key{-1, -1};
    for (int i = 0; i < n; ++i) {
        std::pair<int, int> k{P.block_of(i), Q.block_of(w.map[i])};
        if (i == 0 || k == key) {
            ++run;
        } else {
            parts.push_back(run);
            run = 1;
        }
        key = k;
    }
    parts.push_back(run);
    return Composition(parts);
}

} // namespace

std::vector<WeylElem> double_coset_reps(const Composition& P, const Composition& Q) {
    if (P.n() != Q.n()) throw DomainError("double_coset_reps: size mismatch");
    std::vector<WeylElem> out;
    for (const WeylElem& w : all_weyl(P.n()))
        if (is_reduced(w, P, Q)) out.push_back(w);
    std::sort(out.begin(), out.end(), [](const WeylElem& a, const WeylElem& b) {
        int la = a.length(), lb = b.length();
        if (la != lb) return la < lb;
        return a.map < b.map;
    });
    return out;
}

std::pair<Composition, Composition> subordinate_parabolics(const WeylElem& w,
                                                           const Composition& P,
                                                           const Composition& Q) {
    if (w.n() != P.n() || P.n() != Q.n())
        throw DomainError("subordinate_parabolics: size mismatch");
    if (!is_reduced(w, P, Q))
        throw DomainError("subordinate_parabolics: w is not a minimal representative");
    return {refinement_along(w, P, Q), refinement_along(w.inverse(), Q, P)};
}

std::vector<WeylElem> omega_semi(const Composition& P, const Composition& Q) {
    std::vector<WeylElem> out;
    for (const WeylElem& w : double_coset_reps(P, Q)) {
        auto [Pw, Qw] = subordinate_parabolics(w, P, Q);
        (void)Pw;
        if (Qw == Q) out.push_back(w);
    }
    return out;
}

std::vector<WeylElem> omega_full(const Composition& P, const Composition& Q) {
    std::vector<WeylElem> out;
    auto back = omega_semi(Q, P);
    for (const WeylElem& w : omega_semi(P, Q)) {
        WeylElem wi = w.inverse();
        if (std::find(back.begin(), back.end(), wi) != back.end()) out.push_back(w);
    }
    return out;
}

namespace {

// solve M x = rhs exactly; M square, small
std::vector<Rat> solve_rat(std::vector<std::vector<Rat>> M, std::vector<Rat> rhs) {
    const int k = int(M.size());
    for (int col = 0; col < k; ++col) {
        int piv = -1;
        for (int r = col; r < k; ++r)
            if (M[r][col] != 0) {
                piv = r;
                break;
            }
        if (piv < 0) throw SingularSystemError("solve_rat: singular pairing matrix");
        std::swap(M[piv], M[col]);
        std::swap(rhs[piv], rhs[col]);
        for (int r = 0; r < k; ++r) {
            if (r == col || M[r][col] == 0) continue;
            Rat f = M[r][col] / M[col][col];
            for (int c = col; c < k; ++c) M[r][c] -= f * M[col][c];
            rhs[r] -= f * rhs[col];
        }
    }
    std::vector<Rat> x(k);
    for (int i = 0; i < k; ++i) x[i] = rhs[i] / M[i][i];
    return x;
}

} // namespace

double chamber_separation(double c, const Composition& P, const Composition& Q,
                          int trials, unsigned long seed) {
    if (P.n() != Q.n()) throw DomainError("chamber_separation: size mismatch");
    auto dP = delta_P(P);
    auto dQ = delta_P(Q);
    std::vector<WeylElem> ws;
    for (const WeylElem& w : omega_semi(P, Q))
        if (!(w == WeylElem::identity(P.n()))) ws.push_back(w);

    const Rat c_exact(c);
    Rat cprime = std::max(c, 1.0);
    if (ws.empty() || dP.empty()) return cprime.get_d();

    const int k = int(dP.size());
    std::vector<std::vector<Rat>> M(k, std::vector<Rat>(k));
    for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) M[a][b] = dP[b].root.dot(dP[a].coroot);

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> numer(1, 128);

    for (int doublings = 0; doublings < 40; ++doublings) {
        bool ok = true;
        for (int t = 0; t < trials && ok; ++t) {
            // random pairing targets strictly above c'
            std::vector<Rat> targets(k);
            for (int a = 0; a < k; ++a)
                targets[a] = cprime * (1 + Rat(numer(rng), 64));
            std::vector<Rat> x = solve_rat(M, targets);
            RootVector lambda;
            lambda.coords.assign(P.n(), 0);
            for (int b = 0; b < k; ++b)
                for (int i = 0; i < P.n(); ++i)
                    lambda.coords[i] += x[b] * dP[b].root.coords[i];
            for (const WeylElem& w : ws) {
                RootVector wl = lambda.permuted(w);
                bool separated = false;
                for (const auto& alpha : dQ)
                    if (wl.dot(alpha.coroot) < -c_exact) {
                        separated = true;
                        break;
                    }
                if (!separated) {
                    ok = false;
                    break;
                }
            }
        }
        if (ok) return cprime.get_d();
        cprime *= 2;
    }
    throw ConvergenceError("chamber_separation: no separation constant found");
}

std::vector<Composition> all_compositions(int n) {
    std::vector<Composition> out;
    for (unsigned mask = 0; mask < (1u << (n - 1)); ++mask) {
        std::vector<int> parts;
        int run = 1;
        for (int i = 0; i + 1 < n; ++i) {
            if (mask & (1u << i)) {
                parts.push_back(run);
                run = 1;
            } else {
                ++run;
            }
        }
        parts.push_back(run);
        out.push_back(Composition(parts));
    }
    return out;
}

std::vector<WeylElem> all_weyl(int n) {
    std::vector<WeylElem> out;
    WeylElem w = WeylElem::identity(n);
    do {
        out.push_back(w);
    } while (std::next_permutation(w.map.begin(), w.map.end()));
    return out;
}

} // namespace eisen::rootdata
