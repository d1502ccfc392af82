#include "eisen/rational_solve.hpp"

#include "eisen/errors.hpp"

namespace eisen::merocont {

using ratpoly::exact_div;
using ratpoly::gcd;
using ratpoly::primitive;
using ratpoly::squarefree_factors;

RatPoly bareiss_det(std::vector<std::vector<RatPoly>> a) {
    const int n = int(a.size());
    if (n == 0) return RatPoly::constant(1);
    RatPoly prev = RatPoly::constant(1);
    int sign = 1;
    for (int k = 0; k < n - 1; ++k) {
        int piv = -1;
        for (int r = k; r < n; ++r)
            if (!a[r][k].is_zero()) {
                piv = r;
                break;
            }
        if (piv < 0) return {};
        if (piv != k) {
            std::swap(a[piv], a[k]);
            sign = -sign;
        }
        for (int i = k + 1; i < n; ++i)
            for (int j = k + 1; j < n; ++j)
                a[i][j] = exact_div(a[i][j] * a[k][k] - a[i][k] * a[k][j], prev);
        prev = a[k][k];
    }
    return sign > 0 ? a[n - 1][n - 1] : a[n - 1][n - 1].scaled(-1);
}

namespace {

/*
 * Fraction-free row reduction of [rows | rhs] tracking the original indices
 * of the pivot rows: these form a subsystem whose determinant is a nonzero
 * polynomial, so its Cramer solution is THE candidate for the whole family.
 */
std::vector<int> select_pivot_rows(const RationalFamily& fam) {
    const int m = fam.num_equations(), n = fam.dim();
    std::vector<std::vector<RatPoly>> a(m);
    for (int i = 0; i < m; ++i) {
        a[i] = fam.rows[i];
        a[i].push_back(fam.rhs[i]);
    }
    std::vector<int> index(m);
    for (int i = 0; i < m; ++i) index[i] = i;
    RatPoly prev = RatPoly::constant(1);
    for (int k = 0; k < n; ++k) {
        int piv = -1;
        for (int r = k; r < m; ++r)
            if (!a[r][k].is_zero()) {
                piv = r;
                break;
            }
        if (piv < 0)
            throw SingularSystemError(
                "solve_rational_family: no unique solution (rank below dimension)");
        std::swap(a[piv], a[k]);
        std::swap(index[piv], index[k]);
        for (int i = k + 1; i < m; ++i)
            for (int j = k + 1; j <= n; ++j)
                a[i][j] = exact_div(a[i][j] * a[k][k] - a[i][k] * a[k][j], prev);
        prev = a[k][k];
    }
    return {index.begin(), index.begin() + n};
}

} // namespace

RationalSolution solve_rational_family(const RationalFamily& fam) {
    const int m = fam.num_equations(), n = fam.dim();
    if (n == 0 || m < n)
        throw SingularSystemError("solve_rational_family: underdetermined family");
    for (int i = 0; i < m; ++i)
        if (int(fam.rows[i].size()) != n)
            throw DomainError("solve_rational_family: ragged rows");
    if (int(fam.rhs.size()) != m)
        throw DomainError("solve_rational_family: rhs size mismatch");

    std::vector<int> sel = select_pivot_rows(fam);

    std::vector<std::vector<RatPoly>> A(n);
    std::vector<RatPoly> b(n);
    for (int i = 0; i < n; ++i) {
        A[i] = fam.rows[sel[i]];
        b[i] = fam.rhs[sel[i]];
    }
    RatPoly D = bareiss_det(A);
    std::vector<RatPoly> N(n);
    for (int j = 0; j < n; ++j) {
        auto Aj = A;
        for (int i = 0; i < n; ++i) Aj[i][j] = b[i];
        N[j] = bareiss_det(Aj);
    }

    // every equation must hold identically: sum_j M_ij N_j == c_i D in Q[s]
    for (int i = 0; i < m; ++i) {
        RatPoly lhs;
        for (int j = 0; j < n; ++j) lhs = lhs + fam.rows[i][j] * N[j];
        if (!(lhs == fam.rhs[i] * D))
            throw InconsistentSystemError(
                "solve_rational_family: equation " + std::to_string(i) +
                " fails as a polynomial identity");
    }

    RationalSolution sol;
    sol.v.resize(n);
    RatPoly lcm_den = RatPoly::constant(1);
    for (int j = 0; j < n; ++j) {
        RatPoly g = N[j].is_zero() ? D : gcd(N[j], D);
        RatPoly den = exact_div(D, g);
        RatPoly num = N[j].is_zero() ? RatPoly{} : exact_div(N[j], g);
        // normalize the denominator to its primitive representative
        RatPoly den_p = primitive(den);
        Rat unit = den_p.leading() / den.leading();
        sol.v[j] = {num.scaled(unit), den_p};
        lcm_den = exact_div(lcm_den * den_p, gcd(lcm_den, den_p));
    }
    sol.denominator = primitive(lcm_den);
    sol.pole_factors = squarefree_factors(sol.denominator);
    return sol;
}

} // namespace eisen::merocont
