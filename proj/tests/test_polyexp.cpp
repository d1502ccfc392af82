#include "eisen/polyexp.hpp"

#include "eisen/errors.hpp"

#include <doctest.h>

#include <complex>
#include <random>
#include <vector>

using namespace eisen;
using namespace eisen::polyexp;
using namespace std::complex_literals;

namespace {

cd rand_cd(std::mt19937& rng, double spread) {
    std::uniform_real_distribution<double> u(-spread, spread);
    return {u(rng), u(rng)};
}

// random member of the space of a canonical tuple: per distinct exponent, a
// random polynomial of total degree below the multiplicity
PolyExpFn random_member(const ExpTuple& canon, std::mt19937& rng) {
    PolyExpFn f = PolyExpFn::zero(canon.dim);
    int i = 0;
    while (i < canon.n()) {
        int j = i + 1;
        while (j < canon.n() && canon.exponents[j] == canon.exponents[i]) ++j;
        int mult = j - i;
        Poly p = Poly::zero(canon.dim);
        if (canon.dim == 1) {
            for (int d = 0; d < mult; ++d)
                p = p + Poly::monomial(1, {d}, rand_cd(rng, 1.0));
        } else {
            for (int a = 0; a < mult; ++a)
                for (int b = 0; a + b < mult; ++b)
                    p = p + Poly::monomial(2, {a, b}, rand_cd(rng, 1.0));
        }
        f = f + PolyExpFn::exponential(canon.exponents[i], p);
        i = j;
    }
    return f;
}

} // namespace

TEST_CASE("difference operator on symbolic functions") {
    Functional lam{0.3 + 0.7i};
    auto f = PolyExpFn::exponential(lam, Poly::constant(1, 1.0));
    auto killed = diff_op(f, {1.3}, lam);
    CHECK(killed.max_coef() == 0.0); // exact cancellation of equal products

    // x e^{lambda x} drops to e^lambda e^{lambda x} under D_1^lambda
    auto g = PolyExpFn::exponential(lam, Poly::monomial(1, {1}, 1.0));
    auto dg = diff_op(g, {1.0}, lam);
    REQUIRE(dg.terms.size() == 1);
    CHECK(dg.terms[0].p.total_degree() == 0);
    cd expect = std::exp(lam[0]);
    CHECK(std::abs(dg.terms[0].p.coef.at({0}) - expect) < 1e-14);
}

TEST_CASE("difference operators commute pointwise") {
    std::mt19937 rng(11);
    auto f = [](const std::vector<double>& x) {
        return std::exp(cd(0.2, 1.1) * x[0] + cd(-0.4, 0.3) * x[1]) +
               cd(x[0] * x[0] - x[1], 0.5 * x[0]);
    };
    std::vector<double> v1{0.7, -0.2}, v2{-0.3, 0.9};
    Functional l1{0.5 + 0.1i, -0.2i}, l2{-0.1 + 0.4i, 0.3};
    auto a = diff_op(diff_op(std::function<cd(const std::vector<double>&)>(f), v1, l1), v2, l2);
    auto b = diff_op(diff_op(std::function<cd(const std::vector<double>&)>(f), v2, l2), v1, l1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int t = 0; t < 25; ++t) {
        std::vector<double> x{u(rng), u(rng)};
        CHECK(std::abs(a(x) - b(x)) <= 1e-12 * (1 + std::abs(a(x))));
    }
}

TEST_CASE("symbolic and pointwise difference operators agree") {
    Functional mu{0.4 - 0.2i, 0.1 + 0.3i};
    auto f = PolyExpFn::exponential(mu, Poly::monomial(2, {1, 1}, 2.0 + 1.0i)) +
             PolyExpFn::exponential({0.0 + 0.0i, 0.0 + 0.0i}, Poly::monomial(2, {2, 0}, 1.0));
    std::vector<double> v{0.6, -0.4};
    Functional lam{0.2 + 0.5i, -0.3};
    auto sym = diff_op(f, v, lam);
    auto pw = diff_op(std::function<cd(const std::vector<double>&)>(
                          [&](const std::vector<double>& x) { return f.eval(x); }),
                      v, lam);
    for (double x = -1; x <= 1; x += 0.4)
        for (double y = -1; y <= 1; y += 0.4) {
            cd s = sym.eval({x, y}), p = pw({x, y});
            CHECK(std::abs(s - p) <= 1e-12 * (1 + std::abs(s)));
        }
}

TEST_CASE("space dimensions") {
    ExpTuple distinct{2, {{1.0 + 0i, 0i}, {0i, 1.0 + 0i}, {2.0 + 0i, 1.0 + 0i}}};
    CHECK(dim_space(distinct) == 3);
    ExpTuple twice2{2, {{0.5 + 0i, 0.1 + 0i}, {0.5 + 0i, 0.1 + 0i}}};
    CHECK(dim_space(twice2) == 3); // constants and two linear forms
    ExpTuple twice1{1, {{0.5 + 0i}, {0.5 + 0i}}};
    CHECK(dim_space(twice1) == 2);
    // near-equal exponents merge into one double node
    ExpTuple nearby{1, {{0.5 + 0i}, {0.5 + 5e-10 + 0i}}};
    CHECK(dim_space(nearby) == 2);
    CHECK(nearby.canonical().exponents[0] == nearby.canonical().exponents[1]);
}

TEST_CASE("concatenation and membership") {
    std::mt19937 rng(23);
    ExpTuple a{1, {{0.3 + 0.4i}, {0.3 + 0.4i}}};
    ExpTuple b{1, {{-0.5 + 0.1i}}};
    ExpTuple empty{1, {}};
    CHECK(a.concat(empty).n() == 2);

    auto f1 = random_member(a.canonical(), rng);
    auto f2 = random_member(b.canonical(), rng);
    CHECK(member_of(f1, a));
    CHECK(member_of(f2, b));
    CHECK(member_of(f1 + f2, a.concat(b)));
    CHECK(!member_of(f1, b));
    CHECK(dim_space(a.concat(b)) >= dim_space(a));

    // degree at the exponent must stay below the multiplicity
    auto too_big = PolyExpFn::exponential({0.3 + 0.4i}, Poly::monomial(1, {2}, 1.0));
    CHECK(!member_of(too_big, a));
}

TEST_CASE("one-dimensional sections: small cases") {
    const double R = 3.0;

    // single node: coefficient a e^{-lambda/R}
    Functional lam{0.8 - 0.6i};
    auto s1 = section_1d(ExpTuple{1, {lam}}, R);
    cd a = 2.0 + 0.5i;
    Eigen::VectorXcd vals(1);
    vals << a;
    auto f1 = s1.apply(vals);
    REQUIRE(f1.terms.size() == 1);
    CHECK(std::abs(f1.terms[0].p.coef.at({0}) - a * std::exp(-lam[0] / R)) < 1e-12);

    // two distinct exponents
    cd l1 = 0.4 + 0.9i, l2 = -0.7 + 0.2i;
    auto s2 = section_1d(ExpTuple{1, {{l1}, {l2}}}, R);
    auto target = [&](double x) { return std::exp(l1 * x) + 2.0 * std::exp(l2 * x); };
    Eigen::VectorXcd v2(2);
    v2 << target(s2.nodes[0]), target(s2.nodes[1]);
    auto f2 = s2.apply(v2);
    for (double x : {0.0, 0.5, 1.3, 2.0})
        CHECK(std::abs(f2.eval({x}) - target(x)) < 1e-10);

    // confluent pair reconstructs (1 + x) e^{lambda x}
    cd l = 0.3 + 0.5i;
    auto s3 = section_1d(ExpTuple{1, {{l}, {l}}}, R);
    auto target3 = [&](double x) { return (1.0 + x) * std::exp(l * x); };
    Eigen::VectorXcd v3(2);
    v3 << target3(s3.nodes[0]), target3(s3.nodes[1]);
    auto f3 = s3.apply(v3);
    for (double x : {0.0, 0.5, 1.3, 2.0})
        CHECK(std::abs(f3.eval({x}) - target3(x)) < 1e-8);

    CHECK_THROWS_AS(section_1d(ExpTuple{1, {{5.0 + 0i}}}, R), DomainError);
}

TEST_CASE("reconstruction identity on random tuples") {
    std::mt19937 rng(101);
    std::uniform_int_distribution<int> size(1, 5);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    const double R = 3.0;
    double worst = 0;
    for (int trial = 0; trial < 200; ++trial) {
        int n = size(rng);
        ExpTuple tuple{1, {}};
        for (int k = 0; k < n; ++k) tuple.exponents.push_back({rand_cd(rng, 1.4)});
        // every third tuple gets a forced confluence
        if (trial % 3 == 0 && n >= 2) tuple.exponents[1] = tuple.exponents[0];
        auto canon = tuple.canonical();
        auto sec = section_1d(tuple, R);
        auto f = random_member(canon, rng);
        Eigen::VectorXcd vals(canon.n());
        for (int i = 0; i < canon.n(); ++i) vals[i] = f.eval({sec.nodes[i]});
        auto rec = sec.apply(vals);
        for (int q = 0; q < 10; ++q) {
            double x = u(rng);
            worst = std::max(worst, std::abs(rec.eval({x}) - f.eval({x})));
        }
    }
    CHECK(worst <= 1e-8);
}

TEST_CASE("section weights are analytic through confluence") {
    // discrete Cauchy means of the evaluation weights along a circle in one
    // exponent, centered at a collision with another exponent
    const double R = 3.0, xstar = 0.77;
    cd l1 = 0.4 + 0.3i;
    for (int entry = 0; entry < 2; ++entry) {
        cd center_val;
        {
            auto sec = section_1d(ExpTuple{1, {{l1}, {l1}}}, R);
            center_val = sec.weights(xstar)[entry];
        }
        cd mean = 0;
        const int m = 16;
        const double rho = 1e-2;
        for (int j = 0; j < m; ++j) {
            double th = 2 * M_PI * j / m;
            cd l2 = l1 + rho * std::exp(cd(0, th));
            auto sec = section_1d(ExpTuple{1, {{l1}, {l2}}}, R);
            mean += sec.weights(xstar)[entry];
        }
        mean /= m;
        CHECK(std::abs(mean - center_val) <= 1e-6);
    }
}

TEST_CASE("annihilation characterizes membership") {
    std::mt19937 rng(57);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (int trial = 0; trial < 20; ++trial) {
        ExpTuple tuple{2, {}};
        int n = 2 + trial % 3;
        for (int k = 0; k < n; ++k)
            tuple.exponents.push_back({rand_cd(rng, 0.8), rand_cd(rng, 0.8)});
        if (trial % 2 == 0) tuple.exponents.back() = tuple.exponents[0];
        auto canon = tuple.canonical();
        auto f = random_member(canon, rng);
        auto g = f + PolyExpFn::exponential({1.7 + 0.4i, -1.2 + 0.9i},
                                            Poly::constant(2, 1.0));

        PolyExpFn df = f, dg = g;
        for (const Functional& lam : canon.exponents) {
            std::vector<double> v{u(rng), u(rng)};
            df = diff_op(df, v, lam);
            dg = diff_op(dg, v, lam);
        }
        double scale = 1 + f.max_coef();
        CHECK(df.max_coef() <= 1e-10 * scale);
        CHECK(dg.max_coef() > 1e-6);
    }
}

TEST_CASE("tensor-product sections on the plane") {
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> u(0.0, 1.5);
    const double R = 3.0;

    // rank one: product of two single-exponential fits
    ExpTuple one{2, {{0.2 + 0.1i, -0.4 + 0.3i}}};
    auto p1 = section_product(one, R, R);
    auto f1 = [&](double x, double y) {
        return std::exp(one.exponents[0][0] * x + one.exponents[0][1] * y);
    };
    Eigen::MatrixXcd vals1(1, 1);
    vals1(0, 0) = f1(p1.sx.nodes[0], p1.sy.nodes[0]);
    auto rec1 = p1.apply(vals1);
    CHECK(std::abs(rec1(0.3, 0.9) - f1(0.3, 0.9)) < 1e-12);

    // two distinct exponents, difference of pure exponentials
    ExpTuple two{2, {{0.5 + 0.4i, -0.2 + 0.1i}, {-0.3 + 0.2i, 0.6 - 0.5i}}};
    auto p2 = section_product(two, R, R);
    auto f2 = [&](double x, double y) {
        return std::exp(two.exponents[0][0] * x + two.exponents[0][1] * y) -
               std::exp(two.exponents[1][0] * x + two.exponents[1][1] * y);
    };
    Eigen::MatrixXcd vals2(2, 2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) vals2(i, j) = f2(p2.sx.nodes[i], p2.sy.nodes[j]);
    auto rec2 = p2.apply(vals2);
    for (int q = 0; q < 100; ++q) {
        double x = u(rng), y = u(rng);
        CHECK(std::abs(rec2(x, y) - f2(x, y)) <= 1e-8);
    }

    // doubled exponent: the member (1 + x - 2y) e^{<l, .>} is reproduced even
    // though the tensor interpolant may carry an xy cross term outside the
    // original space
    Functional l{0.3 - 0.2i, 0.25 + 0.45i};
    ExpTuple rep{2, {l, l}};
    auto p3 = section_product(rep, R, R);
    auto f3 = [&](double x, double y) {
        return (1.0 + x - 2.0 * y) * std::exp(l[0] * x + l[1] * y);
    };
    Eigen::MatrixXcd vals3(2, 2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) vals3(i, j) = f3(p3.sx.nodes[i], p3.sy.nodes[j]);
    auto rec3 = p3.apply(vals3);
    for (int q = 0; q < 50; ++q) {
        double x = u(rng), y = u(rng);
        CHECK(std::abs(rec3(x, y) - f3(x, y)) <= 1e-8);
    }
}
