#include "eisen/rational_solve.hpp"

#include "eisen/errors.hpp"
#include "eisen/ratpoly.hpp"

#include <doctest.h>

#include <complex>

using namespace eisen;
using namespace eisen::ratpoly;

namespace {

const RatPoly X = RatPoly::variable();

RatPoly lin(const Rat& a, const Rat& b) { return RatPoly{b, a}; } // a*s + b

} // namespace

TEST_CASE("polynomial arithmetic and division") {
    RatPoly f = lin(1, -1) * lin(1, 2) * lin(1, 2); // (s-1)(s+2)^2
    RatPoly g = lin(1, 2);
    auto [q, r] = divmod(f, g);
    CHECK(r.is_zero());
    CHECK(q == lin(1, -1) * lin(1, 2));
    CHECK(f == q * g + r);

    auto [q2, r2] = divmod(f, lin(1, 0) * lin(1, 0) + RatPoly::constant(1)); // s^2+1
    CHECK(f == q2 * (X * X + RatPoly::constant(1)) + r2);
    CHECK(r2.degree() < 2);

    CHECK_THROWS_AS(exact_div(f + RatPoly::constant(1), g), DomainError);
    CHECK_THROWS_AS(divmod(f, RatPoly{}), DomainError);

    // evaluation agrees with the factored form
    std::complex<double> s{0.3, 0.8};
    auto expect = (s - 1.0) * (s + 2.0) * (s + 2.0);
    CHECK(std::abs(f.eval(s) - expect) < 1e-14);
    CHECK(f.eval(Rat(1)) == 0);
    CHECK(f.eval(Rat(-2)) == 0);
}

TEST_CASE("gcd and square-free factorization") {
    RatPoly a = lin(1, -1) * lin(1, 2) * lin(1, 2);
    RatPoly b = lin(1, -1) * lin(1, 3);
    CHECK(gcd(a, b) == lin(1, -1));
    CHECK(gcd(lin(1, 1), lin(1, -1)) == RatPoly::constant(1));
    CHECK(gcd(RatPoly{}, a) == primitive(a));

    // scaling invariance: gcd is the primitive representative
    CHECK(gcd(a.scaled(Rat(3, 7)), b.scaled(Rat(-2, 5))) == lin(1, -1));

    RatPoly sq = X * X + RatPoly::constant(1);
    RatPoly f = lin(1, -1) * lin(1, 2) * lin(1, 2) * sq * sq * sq;
    auto factors = squarefree_factors(f);
    REQUIRE(factors.size() == 3);
    CHECK(factors[0].first == lin(1, -1));
    CHECK(factors[0].second == 1);
    CHECK(factors[1].first == lin(1, 2));
    CHECK(factors[1].second == 2);
    CHECK(factors[2].first == sq);
    CHECK(factors[2].second == 3);
}

TEST_CASE("polynomial printing") {
    CHECK((X * X - lin(2, 0) + RatPoly::constant(1)).str() == "s^2 - 2*s + 1");
    CHECK(lin(-1, 0).str() == "-s");
    CHECK(RatPoly{}.str() == "0");
    CHECK(RatPoly::constant(Rat(3, 4)).str() == "3/4");
}

TEST_CASE("exact solver: diagonal and hand-worked systems") {
    using namespace eisen::merocont;

    // identity system
    RationalFamily id;
    id.rows = {{RatPoly::constant(1), RatPoly{}}, {RatPoly{}, RatPoly::constant(1)}};
    id.rhs = {X, X * X};
    auto sid = solve_rational_family(id);
    CHECK(sid.v[0].num == X);
    CHECK(sid.v[0].den == RatPoly::constant(1));
    CHECK(sid.v[1].num == X * X);
    CHECK(sid.denominator == RatPoly::constant(1));
    CHECK(sid.pole_factors.empty());

    // [[1, s], [s, 1]] v = (1, 0): v = (1, -s)/(1 - s^2)
    RationalFamily two;
    two.rows = {{RatPoly::constant(1), X}, {X, RatPoly::constant(1)}};
    two.rhs = {RatPoly::constant(1), RatPoly{}};
    auto s2 = solve_rational_family(two);
    RatPoly den = X * X - RatPoly::constant(1); // primitive with positive leading
    CHECK(s2.v[0].num == RatPoly::constant(-1));
    CHECK(s2.v[0].den == den);
    CHECK(s2.v[1].num == X);
    CHECK(s2.v[1].den == den);
    CHECK(s2.denominator == den);
    REQUIRE(s2.pole_factors.size() == 1);
    CHECK(s2.pole_factors[0].first == den);
    CHECK(s2.pole_factors[0].second == 1);
}

TEST_CASE("exact solver: block system with mixed denominator") {
    using namespace eisen::merocont;
    // [[s, -1, 0], [1, s, 0], [0, 0, s-2]] v = (1, 2, 3)
    RationalFamily fam;
    RatPoly zero;
    fam.rows = {{X, RatPoly::constant(-1), zero},
                {RatPoly::constant(1), X, zero},
                {zero, zero, lin(1, -2)}};
    fam.rhs = {RatPoly::constant(1), RatPoly::constant(2), RatPoly::constant(3)};
    auto sol = solve_rational_family(fam);
    RatPoly s2p1 = X * X + RatPoly::constant(1);
    CHECK(sol.v[0].num == lin(1, 2)); // (s + 2) / (s^2 + 1)
    CHECK(sol.v[0].den == s2p1);
    CHECK(sol.v[1].num == lin(2, -1)); // (2s - 1) / (s^2 + 1)
    CHECK(sol.v[1].den == s2p1);
    CHECK(sol.v[2].num == RatPoly::constant(3));
    CHECK(sol.v[2].den == lin(1, -2));
    CHECK(sol.denominator == s2p1 * lin(1, -2));

    // appending a consistent combination keeps the solution and passes the
    // identity audit; corrupting its rhs must be caught
    RationalFamily over = fam;
    over.rows.push_back({lin(1, 1), lin(1, -1), zero}); // row0 + row1
    over.rhs.push_back(RatPoly::constant(3));
    auto so = solve_rational_family(over);
    CHECK(so.v[0].num == sol.v[0].num);
    CHECK(so.v[2].den == sol.v[2].den);

    over.rhs.back() = RatPoly::constant(4);
    CHECK_THROWS_AS(solve_rational_family(over), InconsistentSystemError);
}

TEST_CASE("exact solver: degenerate families are rejected") {
    using namespace eisen::merocont;
    RationalFamily under;
    under.rows = {{RatPoly::constant(1), X}};
    under.rhs = {RatPoly::constant(1)};
    CHECK_THROWS_AS(solve_rational_family(under), SingularSystemError);

    RationalFamily rankdef;
    rankdef.rows = {{RatPoly::constant(1), X}, {RatPoly::constant(2), lin(2, 0)}};
    rankdef.rhs = {RatPoly::constant(1), RatPoly::constant(2)};
    CHECK_THROWS_AS(solve_rational_family(rankdef), SingularSystemError);
}
