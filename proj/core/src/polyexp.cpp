#include "eisen/polyexp.hpp"

#include "eisen/errors.hpp"

#include <algorithm>
#include <cmath>

namespace eisen::polyexp {

namespace {

double binomial(int n, int k) {
    double b = 1;
    for (int i = 1; i <= k; ++i) b *= double(n - k + i) / i;
    return b;
}

bool lex_less(const Functional& a, const Functional& b) {
    for (size_t i = 0; i < a.size(); ++i) {
        if (a[i].real() != b[i].real()) return a[i].real() < b[i].real();
        if (a[i].imag() != b[i].imag()) return a[i].imag() < b[i].imag();
    }
    return false;
}

double dist_inf(const Functional& a, const Functional& b) {
    double d = 0;
    for (size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

} // namespace

Poly Poly::zero(int dim) { return Poly{dim, {}}; }

Poly Poly::constant(int dim, cd c) {
    Poly p{dim, {}};
    if (c != cd(0)) p.coef[MultiIndex(dim, 0)] = c;
    return p;
}

Poly Poly::monomial(int dim, const MultiIndex& alpha, cd c) {
    Poly p{dim, {}};
    if (int(alpha.size()) != dim) throw DomainError("Poly::monomial: bad multi-index");
    if (c != cd(0)) p.coef[alpha] = c;
    return p;
}

int Poly::total_degree() const {
    int deg = -1;
    for (const auto& [a, c] : coef) {
        int d = 0;
        for (int e : a) d += e;
        deg = std::max(deg, d);
    }
    return deg;
}

double Poly::max_coef() const {
    double m = 0;
    for (const auto& [a, c] : coef) m = std::max(m, std::abs(c));
    return m;
}

cd Poly::eval(const std::vector<double>& x) const {
    cd acc = 0;
    for (const auto& [a, c] : coef) {
        cd t = c;
        for (int i = 0; i < dim; ++i)
            for (int e = 0; e < a[i]; ++e) t *= x[i];
        acc += t;
    }
    return acc;
}

Poly Poly::shifted(const std::vector<double>& v) const {
    Poly out{dim, {}};
    for (const auto& [a, c] : coef) {
        // expand prod_i (x_i + v_i)^{a_i} over sub-indices beta <= a
        MultiIndex beta(dim, 0);
        while (true) {
            cd w = c;
            for (int i = 0; i < dim; ++i)
                w *= binomial(a[i], beta[i]) * std::pow(v[i], a[i] - beta[i]);
            if (w != cd(0)) out.coef[beta] += w;
            int i = 0;
            for (; i < dim; ++i) {
                if (beta[i] < a[i]) {
                    ++beta[i];
                    break;
                }
                beta[i] = 0;
            }
            if (i == dim) break;
        }
    }
    return out;
}

Poly Poly::scaled(cd s) const {
    Poly out{dim, {}};
    if (s == cd(0)) return out;
    for (const auto& [a, c] : coef) out.coef[a] = c * s;
    return out;
}

Poly Poly::pruned(double tol) const {
    Poly out{dim, {}};
    for (const auto& [a, c] : coef)
        if (std::abs(c) > tol) out.coef[a] = c;
    return out;
}

Poly Poly::operator+(const Poly& o) const {
    Poly out = *this;
    for (const auto& [a, c] : o.coef) {
        out.coef[a] += c;
        if (out.coef[a] == cd(0)) out.coef.erase(a);
    }
    return out;
}

Poly Poly::operator*(const Poly& o) const {
    Poly out{dim, {}};
    for (const auto& [a, ca] : coef)
        for (const auto& [b, cb] : o.coef) {
            MultiIndex ab(dim);
            for (int i = 0; i < dim; ++i) ab[i] = a[i] + b[i];
            out.coef[ab] += ca * cb;
        }
    return out;
}

cd pair_fn(const Functional& lambda, const std::vector<double>& v) {
    cd acc = 0;
    for (size_t i = 0; i < lambda.size(); ++i) acc += lambda[i] * v[i];
    return acc;
}

ExpTuple ExpTuple::canonical(double merge_tol) const {
    std::vector<Functional> sorted = exponents;
    std::sort(sorted.begin(), sorted.end(), lex_less);
    // cluster adjacent exponents within merge_tol and replace by the mean
    std::vector<Functional> out;
    size_t i = 0;
    while (i < sorted.size()) {
        size_t j = i + 1;
        while (j < sorted.size() && dist_inf(sorted[j], sorted[j - 1]) <= merge_tol) ++j;
        Functional mean(dim, cd(0));
        for (size_t k = i; k < j; ++k)
            for (int c = 0; c < dim; ++c) mean[c] += sorted[k][c];
        for (int c = 0; c < dim; ++c) mean[c] /= double(j - i);
        for (size_t k = i; k < j; ++k) out.push_back(mean);
        i = j;
    }
    return ExpTuple{dim, out};
}

ExpTuple ExpTuple::concat(const ExpTuple& other) const {
    if (other.n() == 0) return *this;
    if (n() == 0) return other;
    if (dim != other.dim) throw DomainError("ExpTuple::concat: dimension mismatch");
    ExpTuple out = *this;
    out.exponents.insert(out.exponents.end(), other.exponents.begin(),
                         other.exponents.end());
    return out;
}

int ExpTuple::multiplicity(const Functional& mu, double merge_tol) const {
    int m = 0;
    for (const Functional& l : exponents)
        if (dist_inf(l, mu) <= merge_tol) ++m;
    return m;
}

PolyExpFn PolyExpFn::zero(int dim) { return PolyExpFn{dim, {}}; }

PolyExpFn PolyExpFn::exponential(const Functional& mu, const Poly& p) {
    PolyExpFn f{int(mu.size()), {}};
    f.terms.push_back({mu, p});
    return f;
}

cd PolyExpFn::eval(const std::vector<double>& x) const {
    cd acc = 0;
    for (const Term& t : terms) acc += std::exp(pair_fn(t.mu, x)) * t.p.eval(x);
    return acc;
}

PolyExpFn PolyExpFn::operator+(const PolyExpFn& o) const {
    PolyExpFn out = *this;
    out.terms.insert(out.terms.end(), o.terms.begin(), o.terms.end());
    return out.normalized();
}

PolyExpFn PolyExpFn::scaled(cd a) const {
    PolyExpFn out{dim, {}};
    if (a == cd(0)) return out;
    for (const Term& t : terms) out.terms.push_back({t.mu, t.p.scaled(a)});
    return out;
}

PolyExpFn PolyExpFn::normalized(double exp_tol) const {
    std::vector<Term> sorted = terms;
    std::sort(sorted.begin(), sorted.end(),
              [](const Term& a, const Term& b) { return lex_less(a.mu, b.mu); });
    PolyExpFn out{dim, {}};
    size_t i = 0;
    while (i < sorted.size()) {
        Term acc = sorted[i];
        size_t j = i + 1;
        while (j < sorted.size() && dist_inf(sorted[j].mu, acc.mu) <= exp_tol) {
            acc.p = acc.p + sorted[j].p;
            ++j;
        }
        if (!acc.p.is_zero()) out.terms.push_back(std::move(acc));
        i = j;
    }
    return out;
}

double PolyExpFn::max_coef() const {
    double m = 0;
    for (const Term& t : terms) m = std::max(m, t.p.max_coef());
    return m;
}

bool member_of(const PolyExpFn& f, const ExpTuple& tuple, double merge_tol) {
    ExpTuple canon = tuple.canonical(merge_tol);
    for (const auto& t : f.normalized(merge_tol).terms) {
        // ignore numerically negligible residue terms
        Poly p = t.p.pruned(1e-12 * std::max(1.0, f.max_coef()));
        if (p.is_zero()) continue;
        if (p.total_degree() >= canon.multiplicity(t.mu, merge_tol)) return false;
    }
    return true;
}

PolyExpFn diff_op(const PolyExpFn& f, const std::vector<double>& v,
                  const Functional& lambda) {
    PolyExpFn out{f.dim, {}};
    cd el = std::exp(pair_fn(lambda, v));
    for (const auto& t : f.terms) {
        cd em = std::exp(pair_fn(t.mu, v));
        Poly p = t.p.shifted(v).scaled(em) + t.p.scaled(-el);
        if (!p.is_zero()) out.terms.push_back({t.mu, p});
    }
    return out.normalized();
}

std::function<cd(const std::vector<double>&)>
diff_op(std::function<cd(const std::vector<double>&)> f, std::vector<double> v,
        Functional lambda) {
    cd el = std::exp(pair_fn(lambda, v));
    return [f = std::move(f), v = std::move(v), el](const std::vector<double>& u) {
        std::vector<double> uv(u.size());
        for (size_t i = 0; i < u.size(); ++i) uv[i] = u[i] + v[i];
        return f(uv) - el * f(u);
    };
}

long dim_space(const ExpTuple& tuple, double merge_tol) {
    ExpTuple canon = tuple.canonical(merge_tol);
    long total = 0;
    int i = 0;
    while (i < canon.n()) {
        int j = i + 1;
        while (j < canon.n() && canon.exponents[j] == canon.exponents[i]) ++j;
        int mult = j - i;
        // number of monomials of total degree < mult in dim variables
        total += long(std::llround(binomial(mult - 1 + tuple.dim, tuple.dim)));
        i = j;
    }
    return total;
}

namespace {

/*
 * Divided differences of lambda -> e^{lambda x} over the canonical node list
 * (equal nodes adjacent).  Entry (i, j) covers nodes i..j: when the endpoints
 * coincide all intermediate nodes do too and the confluent value is
 * x^{j-i} e^{lambda x} / (j-i)!; otherwise the usual quotient recursion
 * applies, symbolically on polynomial-exponential functions.
 */
std::vector<PolyExpFn> newton_basis_1d(const std::vector<cd>& nodes) {
    const int n = int(nodes.size());
    std::vector<std::vector<PolyExpFn>> dd(n, std::vector<PolyExpFn>(n));
    for (int len = 0; len < n; ++len)
        for (int i = 0; i + len < n; ++i) {
            int j = i + len;
            if (nodes[i] == nodes[j]) {
                double fact = 1;
                for (int q = 2; q <= len; ++q) fact *= q;
                Poly p = Poly::monomial(1, {len}, 1.0 / fact);
                dd[i][j] = PolyExpFn::exponential({nodes[i]}, p);
            } else {
                PolyExpFn diff = dd[i + 1][j] + dd[i][j - 1].scaled(-1);
                dd[i][j] = diff.scaled(1.0 / (nodes[j] - nodes[i]));
            }
        }
    std::vector<PolyExpFn> basis;
    for (int k = 0; k < n; ++k) basis.push_back(dd[0][k]);
    return basis;
}

} // namespace

Section1D section_1d(const ExpTuple& tuple, double R, double merge_tol) {
    if (tuple.dim != 1) throw DomainError("section_1d: tuple must be 1-dimensional");
    if (tuple.n() == 0) throw DomainError("section_1d: empty tuple");
    ExpTuple canon = tuple.canonical(merge_tol);
    double max_mod = 0;
    for (const Functional& l : canon.exponents)
        max_mod = std::max(max_mod, std::abs(l[0]));
    if (R <= max_mod)
        throw DomainError("section_1d: need R > max |lambda|");

    Section1D sec;
    sec.tuple = canon;
    sec.R = R;
    const int n = canon.n();
    std::vector<cd> nodes_l(n);
    for (int k = 0; k < n; ++k) nodes_l[k] = canon.exponents[k][0];
    sec.basis = newton_basis_1d(nodes_l);
    sec.nodes.resize(n);
    for (int k = 0; k < n; ++k) sec.nodes[k] = double(k + 1) / R;

    sec.M.resize(n, n);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) sec.M(i, k) = sec.basis[k].eval({sec.nodes[i]});

    // Hadamard-relative determinant guard against unusable conditioning
    double hadamard = 1;
    for (int i = 0; i < n; ++i) hadamard *= sec.M.row(i).norm();
    sec.lu = Eigen::PartialPivLU<Eigen::MatrixXcd>(sec.M);
    if (std::abs(sec.lu.determinant()) < 1e-13 * hadamard)
        throw FitError("section_1d: interpolation matrix numerically singular");
    return sec;
}

PolyExpFn Section1D::apply(const Eigen::VectorXcd& values) const {
    Eigen::VectorXcd c = lu.solve(values);
    PolyExpFn f = PolyExpFn::zero(1);
    for (int k = 0; k < c.size(); ++k) f = f + basis[k].scaled(c[k]);
    return f;
}

Eigen::RowVectorXcd Section1D::weights(double x) const {
    const int n = int(basis.size());
    Eigen::VectorXcd b(n);
    for (int k = 0; k < n; ++k) b[k] = basis[k].eval({x});
    // w . M = b^T, solved through the transpose (no conjugation)
    Eigen::VectorXcd w = M.transpose().partialPivLu().solve(b);
    return w.transpose();
}

std::function<cd(double, double)> Section2D::apply(const Eigen::MatrixXcd& values) const {
    // coefficients C with values = Mx C My^T
    Eigen::MatrixXcd tmp = sx.lu.solve(values);
    Eigen::MatrixXcd C = sy.lu.solve(tmp.transpose()).transpose();
    auto bx = sx.basis;
    auto by = sy.basis;
    return [C, bx, by](double x, double y) {
        Eigen::VectorXcd vx(bx.size()), vy(by.size());
        for (size_t k = 0; k < bx.size(); ++k) vx[k] = bx[k].eval({x});
        for (size_t k = 0; k < by.size(); ++k) vy[k] = by[k].eval({y});
        return (vx.transpose() * C * vy)(0);
    };
}

Section2D section_product(const ExpTuple& tuple, double Rx, double Ry, double merge_tol) {
    if (tuple.dim != 2) throw DomainError("section_product: tuple must be 2-dimensional");
    ExpTuple tx{1, {}}, ty{1, {}};
    for (const Functional& l : tuple.exponents) {
        tx.exponents.push_back({l[0]});
        ty.exponents.push_back({l[1]});
    }
    return Section2D{section_1d(tx, Rx, merge_tol), section_1d(ty, Ry, merge_tol)};
}

} // namespace eisen::polyexp
