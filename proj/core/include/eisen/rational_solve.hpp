#pragma once

#include "eisen/ratpoly.hpp"

#include <utility>
#include <vector>

/*
 * Exact mode of the continuation engine: a linear system whose coefficients
 * are polynomials in one parameter is solved once and for all over the
 * rational function field.  Fraction-free elimination picks a set of rows
 * whose determinant is a nonzero polynomial, Cramer's rule produces the
 * solution, and the remaining equations are verified as polynomial
 * identities, so the output is the unique solution of the full system at
 * every parameter value outside the denominator's zero set.
 */

namespace eisen::merocont {

using ratpoly::cd;
using ratpoly::Rat;
using ratpoly::RatPoly;

struct RationalFamily {
    std::vector<std::vector<RatPoly>> rows; // num_equations x dim
    std::vector<RatPoly> rhs;               // num_equations

    int dim() const { return rows.empty() ? 0 : int(rows[0].size()); }
    int num_equations() const { return int(rows.size()); }
};

// reduced fraction num/den with primitive denominator
struct RatFraction {
    RatPoly num;
    RatPoly den;

    cd eval(cd s) const { return num.eval(s) / den.eval(s); }
};

struct RationalSolution {
    std::vector<RatFraction> v;                      // the solution over Q(s)
    RatPoly denominator;                             // lcm of component dens
    std::vector<std::pair<RatPoly, int>> pole_factors; // its square-free split
};

// fraction-free determinant of a square polynomial matrix
RatPoly bareiss_det(std::vector<std::vector<RatPoly>> a);

/*
 * Unique solution over Q(s).  Throws SingularSystemError when the system has
 * no parameter-independent unique solution (rank below dim for every row
 * choice) and InconsistentSystemError when some unused equation fails as an
 * identity.
 */
RationalSolution solve_rational_family(const RationalFamily& fam);

} // namespace eisen::merocont
