#pragma once

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <map>
#include <vector>

/*
 * Polynomial-exponential functions on R^d: finite sums of e^{<mu, x>} p(x)
 * with polynomial p.  The space attached to a tuple of exponents consists of
 * those sums whose polynomial degree at each exponent stays below the
 * exponent's multiplicity; difference operators D_v^lambda characterize
 * membership, and a confluent interpolation section reconstructs members from
 * finitely many samples, analytically in the tuple.
 */

namespace eisen::polyexp {

using cd = std::complex<double>;

// exponent vector of a monomial, one entry per variable
using MultiIndex = std::vector<int>;

// polynomial in dim variables, monomial basis, complex coefficients
struct Poly {
    int dim = 1;
    std::map<MultiIndex, cd> coef;

    static Poly zero(int dim);
    static Poly constant(int dim, cd c);
    static Poly monomial(int dim, const MultiIndex& alpha, cd c);

    bool is_zero() const { return coef.empty(); }
    int total_degree() const; // -1 for the zero polynomial
    double max_coef() const;
    cd eval(const std::vector<double>& x) const;

    Poly shifted(const std::vector<double>& v) const; // x -> p(x + v)
    Poly scaled(cd a) const;
    Poly pruned(double tol) const; // drop |coefficient| <= tol
    Poly operator+(const Poly& o) const;
    Poly operator*(const Poly& o) const;
};

// complex linear functional on R^d, paired by <lambda, v> = sum lambda_i v_i
using Functional = std::vector<cd>;

cd pair_fn(const Functional& lambda, const std::vector<double>& v);

// tuple of exponents with order-insensitive semantics; the canonical form
// sorts lexicographically by (Re, Im) per coordinate and replaces clusters of
// exponents within merge_tol by their common mean (higher-multiplicity node)
struct ExpTuple {
    int dim = 1;
    std::vector<Functional> exponents;

    int n() const { return int(exponents.size()); }
    ExpTuple canonical(double merge_tol = 1e-9) const;
    ExpTuple concat(const ExpTuple& other) const;
    int multiplicity(const Functional& mu, double merge_tol = 1e-9) const;
};

// finite sum of e^{<mu, x>} p_mu(x)
struct PolyExpFn {
    struct Term {
        Functional mu;
        Poly p;
    };
    int dim = 1;
    std::vector<Term> terms;

    static PolyExpFn zero(int dim);
    static PolyExpFn exponential(const Functional& mu, const Poly& p);

    cd eval(const std::vector<double>& x) const;
    PolyExpFn operator+(const PolyExpFn& o) const;
    PolyExpFn scaled(cd a) const;
    // merge terms with exponents within tol, drop zero polynomials
    PolyExpFn normalized(double exp_tol = 1e-12) const;
    double max_coef() const;
};

// every term exponent occurs in the tuple with multiplicity > its degree
bool member_of(const PolyExpFn& f, const ExpTuple& tuple, double merge_tol = 1e-9);

// D_v^lambda f (x) = f(x + v) - e^{<lambda, v>} f(x), exact on the symbolic
// representation (the degree at exponent lambda drops by one)
PolyExpFn diff_op(const PolyExpFn& f, const std::vector<double>& v, const Functional& lambda);

// pointwise version for black-box samples
std::function<cd(const std::vector<double>&)>
diff_op(std::function<cd(const std::vector<double>&)> f, std::vector<double> v,
        Functional lambda);

// dimension of the space: sum over distinct exponents of C(mult - 1 + dim, dim)
long dim_space(const ExpTuple& tuple, double merge_tol = 1e-9);

/*
 * Interpolation section on the line.  Basis functions are divided differences
 * b_k = [lambda_1 .. lambda_k] e^{(.) x} of the exponential in its exponent
 * over prefixes of the canonically ordered tuple: they span the same space,
 * stay finite when exponents collide (an m-fold node contributes
 * x^{m-1} e^{lambda x} / (m-1)!), and depend analytically on the tuple.  The
 * section recovers basis coefficients from values on the nodes Y = {k/R}.
 */
struct Section1D {
    ExpTuple tuple; // canonical
    double R = 1;
    std::vector<double> nodes;     // k/R, k = 1..n
    std::vector<PolyExpFn> basis;  // b_1 .. b_n
    Eigen::MatrixXcd M;            // M(i, k) = b_{k+1}(nodes[i])
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu;

    // the member of the space taking the given values on the nodes
    PolyExpFn apply(const Eigen::VectorXcd& values) const;
    // evaluation weights: f(x) = weights(x) . node_values for members f
    Eigen::RowVectorXcd weights(double x) const;
};

// requires tuple.dim == 1 and R > max |lambda_i|
Section1D section_1d(const ExpTuple& tuple, double R, double merge_tol = 1e-9);

// tensor-product section on R^2 from the coordinate splitting of the tuple;
// reconstructs every member of the 2-d space exactly, though the interpolant
// may use product terms outside that space
struct Section2D {
    Section1D sx, sy;

    std::function<cd(double, double)> apply(const Eigen::MatrixXcd& values) const;
};

Section2D section_product(const ExpTuple& tuple, double Rx, double Ry,
                          double merge_tol = 1e-9);

} // namespace eisen::polyexp
