#include "eisen/merocont.hpp"
#include "eisen/errors.hpp"
#include "eisen/ratpoly.hpp"
#include "eisen/rational_solve.hpp"

#include <doctest.h>
#include <json.hpp>

#include <Eigen/Dense>

#include <random>

using namespace eisen;
using namespace eisen::merocont;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;

namespace {

cd rand_cd(std::mt19937_64& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    double re = u(rng), im = u(rng);
    return {re, im};
}

MatrixXcd random_matrix(std::mt19937_64& rng, int rows, int cols) {
    MatrixXcd M(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) M(i, j) = rand_cd(rng);
    return M;
}

// distance from v to the column span of L, relative to |v|
double span_distance(const MatrixXcd& L, const VectorXcd& v) {
    if (L.cols() == 0) return 1.0;
    VectorXcd x = L.completeOrthogonalDecomposition().solve(v);
    return (L * x - v).norm() / v.norm();
}

CallableFamily resolvent_family() {
    // [[1, s], [s, 1]] v = (1, 0): v = (1, -s) / (1 - s^2)
    return CallableFamily(
        2, 2,
        [](cd s) {
            MatrixXcd M(2, 2);
            M << 1.0, s, s, 1.0;
            return M;
        },
        [](cd) { return VectorXcd(Eigen::Vector2cd(1.0, 0.0)); });
}

} // namespace

TEST_CASE("scalar family: s v = s^2") {
    CallableFamily fam(
        1, 1, [](cd s) { return MatrixXcd::Constant(1, 1, s); },
        [](cd s) { return VectorXcd::Constant(1, s * s); });
    auto sol = continue_unique_solution(fam, FiniteTypeWitness::trivial(1),
                                        {cd(2.0), cd(3.0)}, {cd(1.3)});

    // with the identity witness the reduced system is the family itself, so
    // the representation is exactly N = s^2 over d = s (up to one shared unit)
    cd unit = sol.denominator(cd(1.0));
    CHECK(std::abs(sol.denominator(cd(0.5)) / unit - 0.5) < 1e-14);
    CHECK(std::abs(sol.numerator(cd(3.0))(0) / unit - 9.0) < 1e-13);
    CHECK(std::abs(sol.value(cd(2.5))(0) - 2.5) < 1e-14);
    CHECK(sol.max_scaled_residual(cd(2.5)) < 1e-14);

    // at s = 0 numerator and denominator both vanish: a removable point of
    // the representation, not a pole of the solution
    CHECK_THROWS_AS((void)sol.value(cd(0.0)), DomainError);
    CHECK(sol.removable_candidate(cd(0.0)));
    CHECK_FALSE(sol.removable_candidate(cd(2.0)));
}

TEST_CASE("2x2 resolvent family: poles at s = +-1") {
    CallableFamily fam = resolvent_family();
    auto sol = continue_unique_solution(fam, FiniteTypeWitness::trivial(2),
                                        {cd(2.0), cd(3.0, 0.5)}, {cd(0.3), cd(1.7)});

    for (cd s : {cd(2.0), cd(0.5), cd(3.0, 1.0), cd(-2.5, 0.25)}) {
        VectorXcd v = sol.value(s);
        cd det = 1.0 - s * s;
        CHECK(std::abs(v(0) - 1.0 / det) < 1e-12);
        CHECK(std::abs(v(1) + s / det) < 1e-12);
        CHECK(sol.max_scaled_residual(s) < 1e-13);
    }

    // d vanishes at the genuine poles and N does not: these are not removable
    CHECK(std::abs(sol.denominator(cd(1.0))) < 1e-12 * sol.denominator_scale());
    CHECK(std::abs(sol.denominator(cd(-1.0))) < 1e-12 * sol.denominator_scale());
    CHECK_FALSE(sol.removable_candidate(cd(1.0)));
    CHECK_THROWS_AS((void)sol.value(cd(1.0)), DomainError);
}

TEST_CASE("overdetermined consistent family keeps all residuals small") {
    // rows 3 and 4 are analytic combinations of rows 1 and 2, rhs made
    // consistent, so the solution still exists and the engine must pick a
    // nondegenerate pair and satisfy everything
    CallableFamily fam(
        2, 4,
        [](cd s) {
            MatrixXcd M(4, 2);
            M.row(0) << 1.0, s;
            M.row(1) << s, 1.0;
            M.row(2) = M.row(0) + M.row(1);
            M.row(3) = M.row(0) + s * M.row(1);
            return M;
        },
        [](cd s) {
            VectorXcd c(4);
            c << 1.0, 0.0, 1.0, 1.0;
            c(3) = c(0) + s * c(1);
            return c;
        });
    auto sol = continue_unique_solution(fam, FiniteTypeWitness::trivial(2),
                                        {cd(2.0), cd(0.4, 0.6)}, {cd(1.6)});
    for (cd s : {cd(2.0), cd(-0.5, 0.8), cd(4.0, -1.0)}) {
        VectorXcd v = sol.value(s);
        cd det = 1.0 - s * s;
        CHECK(std::abs(v(0) - 1.0 / det) < 1e-10);
        CHECK(std::abs(v(1) + s / det) < 1e-10);
        VectorXcd res = fam.residuals(s, v);
        CHECK(res.lpNorm<Eigen::Infinity>() < 1e-10);
    }
}

TEST_CASE("zero-rank witness: homogeneous system accepted, inhomogeneous refused") {
    auto id_mat = [](cd) { return MatrixXcd(MatrixXcd::Identity(3, 3)); };
    FiniteTypeWitness w = fredholm_witness(id_mat, cd(0.5));
    CHECK(w.dim_L == 0);

    CallableFamily hom(3, 3, id_mat, [](cd) { return VectorXcd(VectorXcd::Zero(3)); });
    auto sol = continue_unique_solution(hom, w, {cd(2.0)}, {cd(1.0)});
    CHECK(sol.value(cd(4.0)).norm() == 0.0);
    CHECK(std::abs(sol.denominator(cd(4.0)) - 1.0) < 1e-15);

    CallableFamily inhom(3, 3, id_mat,
                         [](cd s) { return VectorXcd(VectorXcd::Constant(3, s)); });
    CHECK_THROWS_AS((void)continue_unique_solution(inhom, w, {cd(2.0)}, {cd(1.0)}),
                    WitnessError);
}

TEST_CASE("witness too small for the actual solution trips the audit") {
    CallableFamily fam(
        2, 2, [](cd) { return MatrixXcd(MatrixXcd::Identity(2, 2)); },
        [](cd) { return VectorXcd(Eigen::Vector2cd(1.0, 1.0)); });
    FiniteTypeWitness w;
    w.dim_E = 2;
    w.dim_L = 1;
    w.eval = [](cd) {
        MatrixXcd L(2, 1);
        L << 1.0, 0.0;
        return L;
    };
    CHECK_THROWS_AS((void)continue_unique_solution(fam, w, {cd(2.0)}, {cd(1.0)}),
                    WitnessError);
}

TEST_CASE("underdetermined family is rejected") {
    CallableFamily fam(
        2, 1,
        [](cd s) {
            MatrixXcd M(1, 2);
            M << 1.0, s;
            return M;
        },
        [](cd) { return VectorXcd(VectorXcd::Ones(1)); });
    CHECK_THROWS_AS((void)continue_unique_solution(fam, FiniteTypeWitness::trivial(2),
                                                   {cd(2.0)}, {cd(1.0)}),
                    SingularSystemError);
}

TEST_CASE("fredholm witness: rank-one deviation from the identity") {
    // M(s) = I - s e1 e1^T is singular exactly at s = 1 with kernel e1
    auto M = [](cd s) {
        MatrixXcd A = MatrixXcd::Identity(4, 4);
        A(0, 0) -= s;
        return A;
    };
    FiniteTypeWitness w = fredholm_witness(M, cd(0.5));
    REQUIRE(w.dim_L == 1);
    VectorXcd e1 = VectorXcd::Zero(4);
    e1(0) = 1.0;
    for (cd s : {cd(1.0), cd(2.0), cd(0.3, 0.4)})
        CHECK(span_distance(w.eval(s), e1) < 1e-12);
}

TEST_CASE("fredholm witness: rank-4 kernel family against a dense SVD oracle") {
    std::mt19937_64 rng(2024);
    const int n = 50;
    Eigen::HouseholderQR<MatrixXcd> qr(random_matrix(rng, n, 4));
    MatrixXcd Q = qr.householderQ() * MatrixXcd::Identity(n, 4);
    Eigen::Vector4d sig(2.0, 1.2, 0.7, 0.3);
    MatrixXcd K = Q * sig.asDiagonal() * Q.adjoint();
    auto M = [K, n](cd s) { return MatrixXcd(MatrixXcd::Identity(n, n) - s * K); };

    FiniteTypeWitness w = fredholm_witness(M, cd(0.37));
    REQUIRE(w.dim_L == 4);

    // at s = 1/sigma_j the family is singular; the dense kernel vector must
    // lie in the witness image
    for (int j = 0; j < 4; ++j) {
        cd sj(1.0 / sig(j), 0.0);
        Eigen::BDCSVD<MatrixXcd> svd(M(sj), Eigen::ComputeThinV);
        REQUIRE(svd.singularValues()(n - 1) < 1e-12);
        VectorXcd kern = svd.matrixV().col(n - 1);
        CHECK(span_distance(w.eval(sj), kern) < 1e-8);
    }

    // off the singular set the witness stays full rank and well conditioned
    for (int t = 0; t < 10; ++t) {
        cd s = rand_cd(rng, 2.0) + cd(0.0, 0.35);
        MatrixXcd lam = w.eval(s);
        Eigen::BDCSVD<MatrixXcd> svd(lam);
        CHECK(svd.singularValues()(3) > 1e-6 * svd.singularValues()(0));
    }
}

TEST_CASE("fredholm witness refuses a family far from the identity") {
    std::mt19937_64 rng(7);
    MatrixXcd A = random_matrix(rng, 20, 20);
    auto M = [A](cd s) { return MatrixXcd(s * A); };
    WitnessOptions opts;
    opts.rank_cap = 8;
    CHECK_THROWS_AS((void)fredholm_witness(M, cd(1.0), opts), WitnessError);
}

TEST_CASE("split witness: free second coordinate contributes one dimension") {
    // ten equations [I - phi(s) P | 0] on eleven coordinates, P a rank-2
    // projector and phi(s0) = 1: the reduction kernel at s0 is Im P plus the
    // untouched last coordinate, so the witness has dimension rank(P) + 1
    std::mt19937_64 rng(11);
    Eigen::HouseholderQR<MatrixXcd> qr(random_matrix(rng, 10, 2));
    MatrixXcd V = qr.householderQ() * MatrixXcd::Identity(10, 2);
    MatrixXcd P = V * V.adjoint();
    const cd s0(0.6, 0.0);
    auto mat = [P, s0](cd s) {
        MatrixXcd M = MatrixXcd::Zero(10, 11);
        M.leftCols(10) = MatrixXcd::Identity(10, 10) - (s / s0) * P;
        return M;
    };
    CallableFamily fam(11, 10, mat, [](cd) { return VectorXcd(VectorXcd::Zero(10)); });

    std::vector<int> block1(10), block2{10}, rows(10);
    for (int i = 0; i < 10; ++i) block1[i] = rows[i] = i;
    auto nu = [](cd) { return MatrixXcd(MatrixXcd::Ones(1, 1)); };
    FiniteTypeWitness w = fredholm_split_witness(fam, block1, block2, nu, 1, rows, s0);
    REQUIRE(w.dim_L == 3);

    // dense oracle at s0: the full 10x11 matrix has a 3-dimensional kernel
    Eigen::FullPivLU<MatrixXcd> lu(mat(s0));
    lu.setThreshold(1e-10);
    MatrixXcd kern = lu.kernel();
    REQUIRE(kern.cols() == 3);
    for (int j = 0; j < 3; ++j)
        CHECK(span_distance(w.eval(s0), VectorXcd(kern.col(j))) < 1e-8);

    // away from s0 only the last coordinate is free, and it stays captured
    VectorXcd elast = VectorXcd::Zero(11);
    elast(10) = 1.0;
    for (cd s : {cd(1.4), cd(2.0, 0.7)})
        CHECK(span_distance(w.eval(s), elast) < 1e-10);
}

TEST_CASE("split witness with empty second block matches the square witness") {
    std::mt19937_64 rng(2024);
    const int n = 50;
    Eigen::HouseholderQR<MatrixXcd> qr(random_matrix(rng, n, 4));
    MatrixXcd Q = qr.householderQ() * MatrixXcd::Identity(n, 4);
    Eigen::Vector4d sig(2.0, 1.2, 0.7, 0.3);
    MatrixXcd K = Q * sig.asDiagonal() * Q.adjoint();
    auto mat = [K, n](cd s) { return MatrixXcd(MatrixXcd::Identity(n, n) - s * K); };
    CallableFamily fam(n, n, mat, [n](cd) { return VectorXcd(VectorXcd::Zero(n)); });

    std::vector<int> block1(n), rows(n);
    for (int i = 0; i < n; ++i) block1[i] = rows[i] = i;
    FiniteTypeWitness ws =
        fredholm_split_witness(fam, block1, {}, nullptr, 0, rows, cd(0.37));
    FiniteTypeWitness wf = fredholm_witness(mat, cd(0.37));
    REQUIRE(ws.dim_L == wf.dim_L);

    // same image: compare the orthogonal projectors onto the two spans
    for (cd s : {cd(0.37), cd(1.0 / 1.2), cd(0.9, 0.4)}) {
        auto proj = [](const MatrixXcd& L) {
            Eigen::HouseholderQR<MatrixXcd> q(L);
            MatrixXcd Qt = q.householderQ() * MatrixXcd::Identity(L.rows(), L.cols());
            return MatrixXcd(Qt * Qt.adjoint());
        };
        CHECK((proj(ws.eval(s)) - proj(wf.eval(s))).norm() < 1e-8);
    }
}

TEST_CASE("split witness end to end: coupled block with a genuine pole") {
    /*
     * Equations on C^10 (+) C:  (I - phi(s) P) v1 = s z u  and  u = s,
     * with P = V V* rank two, phi(s) = s / s0, z having components both in
     * Im P and its complement.  Splitting z = z_perp + z_P, the solution is
     *   v1(s) = s^2 (z_perp + z_P / (1 - phi(s))),  u = s,
     * meromorphic with a pole at s = s0 in the z_P direction.
     */
    std::mt19937_64 rng(5);
    Eigen::HouseholderQR<MatrixXcd> qr(random_matrix(rng, 10, 2));
    MatrixXcd V = qr.householderQ() * MatrixXcd::Identity(10, 2);
    MatrixXcd P = V * V.adjoint();
    VectorXcd z = random_matrix(rng, 10, 1);
    VectorXcd zP = P * z, zperp = z - zP;
    REQUIRE(zP.norm() > 0.05);
    REQUIRE(zperp.norm() > 0.05);

    const cd s0(0.6, 0.0);
    auto mat = [P, z, s0](cd s) {
        MatrixXcd M = MatrixXcd::Zero(11, 11);
        M.topLeftCorner(10, 10) = MatrixXcd::Identity(10, 10) - (s / s0) * P;
        M.topRightCorner(10, 1) = -s * z;
        M(10, 10) = 1.0;
        return M;
    };
    auto rhs = [](cd s) {
        VectorXcd c = VectorXcd::Zero(11);
        c(10) = s;
        return c;
    };
    CallableFamily fam(11, 11, mat, rhs);

    std::vector<int> block1(10), block2{10}, red(10);
    for (int i = 0; i < 10; ++i) block1[i] = red[i] = i;
    auto nu = [](cd) { return MatrixXcd(MatrixXcd::Ones(1, 1)); };
    FiniteTypeWitness w = fredholm_split_witness(fam, block1, block2, nu, 1, red, s0);
    // the coupling column removes the free direction at s0: Im P only
    REQUIRE(w.dim_L == 2);

    auto sol = continue_unique_solution(fam, w, {cd(1.5), cd(2.0, 0.5)},
                                        {cd(0.9), cd(1.8)});
    auto closed = [&](cd s) {
        VectorXcd v(11);
        v.head(10) = s * s * (zperp + zP / (1.0 - s / s0));
        v(10) = s;
        return v;
    };
    for (cd s : {cd(1.5), cd(2.0, 0.5), cd(0.9), cd(-1.2, 0.3), cd(0.601)}) {
        VectorXcd v = sol.value(s);
        VectorXcd ref = closed(s);
        CHECK((v - ref).norm() / ref.norm() < 1e-6);
        CHECK(sol.max_scaled_residual(s) < 1e-8);
    }
    // the representation's denominator dips at the pole
    CHECK(std::abs(sol.denominator(cd(0.6001))) <
          1e-2 * std::abs(sol.denominator(cd(1.5))));
}

TEST_CASE("numeric engine agrees with the exact solver at random points") {
    RatPoly X = RatPoly::variable();
    RationalFamily rf;
    rf.rows = {{X, RatPoly{-1}, RatPoly{0}},
               {RatPoly{1}, X, RatPoly{0}},
               {RatPoly{0}, RatPoly{0}, X - RatPoly{2}}};
    rf.rhs = {RatPoly{1}, RatPoly{2}, RatPoly{3}};
    RationalSolution exact = solve_rational_family(rf);

    RationalNumericFamily fam(rf);
    auto sol = continue_unique_solution(fam, FiniteTypeWitness::trivial(3),
                                        {cd(3.0), cd(2.5, 1.0)}, {cd(1.3)});

    std::mt19937_64 rng(99);
    int tested = 0;
    while (tested < 50) {
        cd s = rand_cd(rng, 3.0);
        if (std::abs(exact.denominator.eval(s)) < 1e-3) continue;
        ++tested;
        VectorXcd v = sol.value(s);
        for (int j = 0; j < 3; ++j) {
            cd ref = exact.v[j].num.eval(s) / exact.v[j].den.eval(s);
            CHECK(std::abs(v(j) - ref) <= 1e-8 * (1.0 + std::abs(ref)));
        }
    }
}

TEST_CASE("representation is independent of the probe and uniqueness grids") {
    CallableFamily fam = resolvent_family();
    auto sol_a = continue_unique_solution(fam, FiniteTypeWitness::trivial(2),
                                          {cd(2.0), cd(3.0)}, {cd(0.3), cd(1.7)});
    auto sol_b = continue_unique_solution(fam, FiniteTypeWitness::trivial(2),
                                          {cd(4.0, 0.5)}, {cd(2.2, -0.4)});

    std::vector<cd> pts{cd(2.0), cd(0.5, 0.5), cd(-3.0, 1.0), cd(1.2)};
    for (cd s : pts)
        CHECK((sol_a.value(s) - sol_b.value(s)).norm() < 1e-10);

    // denominators agree up to one global unit
    cd unit = sol_a.denominator(pts[0]) / sol_b.denominator(pts[0]);
    for (cd s : pts)
        CHECK(std::abs(sol_a.denominator(s) / sol_b.denominator(s) - unit) <
              1e-10 * std::abs(unit));
}

TEST_CASE("uniqueness certificate: witness-direction perturbations raise the residual") {
    CallableFamily fam = resolvent_family();
    FiniteTypeWitness w = FiniteTypeWitness::trivial(2);
    auto sol = continue_unique_solution(fam, w, {cd(2.0)}, {cd(1.7)});
    std::mt19937_64 rng(31);
    for (cd s : {cd(2.0), cd(0.4, 0.8)}) {
        VectorXcd v = sol.value(s);
        double base = fam.residuals(s, v).norm();
        for (int t = 0; t < 5; ++t) {
            VectorXcd g = random_matrix(rng, 2, 1);
            VectorXcd vp = v + 0.05 * (w.eval(s) * g).normalized();
            CHECK(fam.residuals(s, vp).norm() > std::max(10.0 * base, 1e-6));
        }
    }
}

TEST_CASE("grid dump is valid JSON with pole records") {
    CallableFamily fam = resolvent_family();
    auto sol = continue_unique_solution(fam, FiniteTypeWitness::trivial(2),
                                        {cd(2.0)}, {cd(1.7)});
    std::string js = sol.sample_grid_json({cd(2.0), cd(1.0), cd(0.5)});
    auto arr = nlohmann::json::parse(js);
    REQUIRE(arr.is_array());
    REQUIRE(arr.size() == 3);

    CHECK(arr[0]["s"][0].get<double>() == 2.0);
    CHECK(arr[0]["v"].is_array());
    CHECK(arr[0]["residual"].get<double>() < 1e-12);

    // s = 1 is a pole: value suppressed, flagged non-removable
    CHECK(arr[1]["v"].is_null());
    CHECK(arr[1]["removable_candidate"].get<bool>() == false);
    CHECK(arr[2]["N"].size() == 2);
}
