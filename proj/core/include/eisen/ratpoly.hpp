#pragma once

#include <gmpxx.h>

#include <complex>
#include <string>
#include <utility>
#include <vector>

/*
 * Dense univariate polynomials over Q with exact arithmetic: the coefficient
 * layer of the exact continuation mode.  Coefficients are stored lowest degree
 * first; the zero polynomial has an empty coefficient list and degree -1.
 */

namespace eisen::ratpoly {

using Rat = mpq_class;
using cd = std::complex<double>;

struct RatPoly {
    std::vector<Rat> c; // c[k] multiplies s^k; no trailing zeros

    RatPoly() = default;
    RatPoly(std::initializer_list<Rat> coeffs);
    explicit RatPoly(std::vector<Rat> coeffs);
    static RatPoly constant(const Rat& a);
    static RatPoly variable(); // s

    int degree() const { return int(c.size()) - 1; }
    bool is_zero() const { return c.empty(); }
    const Rat& leading() const;

    Rat eval(const Rat& x) const;
    cd eval(cd x) const;

    RatPoly derivative() const;

    RatPoly operator+(const RatPoly& o) const;
    RatPoly operator-(const RatPoly& o) const;
    RatPoly operator*(const RatPoly& o) const;
    RatPoly scaled(const Rat& a) const;
    bool operator==(const RatPoly& o) const { return c == o.c; }

    std::string str(const std::string& var = "s") const;
};

// quotient and remainder with deg(rem) < deg(divisor)
std::pair<RatPoly, RatPoly> divmod(const RatPoly& a, const RatPoly& b);

// exact quotient; throws DomainError when the remainder is nonzero
RatPoly exact_div(const RatPoly& a, const RatPoly& b);

// integer-primitive normalization: integer coefficients with content 1 and
// positive leading coefficient (canonical representative up to units)
RatPoly primitive(const RatPoly& a);

// monic-free gcd, returned in primitive form; gcd(0, b) = primitive(b)
RatPoly gcd(const RatPoly& a, const RatPoly& b);

// Yun square-free decomposition: f = unit * prod factors[i].first ^
// factors[i].second with pairwise coprime square-free factors
std::vector<std::pair<RatPoly, int>> squarefree_factors(const RatPoly& f);

} // namespace eisen::ratpoly
