#include "eisen/ratpoly.hpp"

#include "eisen/errors.hpp"

#include <sstream>

namespace eisen::ratpoly {

namespace {

void strip(std::vector<Rat>& c) {
    while (!c.empty() && c.back() == 0) c.pop_back();
}

} // namespace

RatPoly::RatPoly(std::initializer_list<Rat> coeffs) : c(coeffs) { strip(c); }

RatPoly::RatPoly(std::vector<Rat> coeffs) : c(std::move(coeffs)) { strip(c); }

RatPoly RatPoly::constant(const Rat& a) {
    RatPoly p;
    if (a != 0) p.c.push_back(a);
    return p;
}

RatPoly RatPoly::variable() { return RatPoly{0, 1}; }

const Rat& RatPoly::leading() const {
    if (is_zero()) throw DomainError("RatPoly::leading: zero polynomial");
    return c.back();
}

Rat RatPoly::eval(const Rat& x) const {
    Rat acc = 0;
    for (size_t k = c.size(); k-- > 0;) acc = acc * x + c[k];
    return acc;
}

cd RatPoly::eval(cd x) const {
    cd acc = 0;
    for (size_t k = c.size(); k-- > 0;) acc = acc * x + c[k].get_d();
    return acc;
}

RatPoly RatPoly::derivative() const {
    RatPoly d;
    for (size_t k = 1; k < c.size(); ++k) d.c.push_back(c[k] * long(k));
    strip(d.c);
    return d;
}

RatPoly RatPoly::operator+(const RatPoly& o) const {
    RatPoly r;
    r.c.resize(std::max(c.size(), o.c.size()), 0);
    for (size_t k = 0; k < c.size(); ++k) r.c[k] += c[k];
    for (size_t k = 0; k < o.c.size(); ++k) r.c[k] += o.c[k];
    strip(r.c);
    return r;
}

RatPoly RatPoly::operator-(const RatPoly& o) const { return *this + o.scaled(-1); }

RatPoly RatPoly::operator*(const RatPoly& o) const {
    if (is_zero() || o.is_zero()) return {};
    RatPoly r;
    r.c.assign(c.size() + o.c.size() - 1, 0);
    for (size_t i = 0; i < c.size(); ++i)
        for (size_t j = 0; j < o.c.size(); ++j) r.c[i + j] += c[i] * o.c[j];
    strip(r.c);
    return r;
}

RatPoly RatPoly::scaled(const Rat& a) const {
    if (a == 0) return {};
    RatPoly r = *this;
    for (Rat& x : r.c) x *= a;
    return r;
}

std::string RatPoly::str(const std::string& var) const {
    if (is_zero()) return "0";
    std::ostringstream out;
    bool first = true;
    for (size_t k = c.size(); k-- > 0;) {
        if (c[k] == 0) continue;
        Rat a = c[k];
        if (!first) {
            out << (a < 0 ? " - " : " + ");
            if (a < 0) a = -a;
        } else if (a < 0) {
            out << "-";
            a = -a;
        }
        first = false;
        bool unit = a == 1 && k > 0;
        if (!unit) out << a.get_str();
        if (k > 0) {
            if (!unit) out << "*";
            out << var;
            if (k > 1) out << "^" << k;
        }
    }
    return out.str();
}

std::pair<RatPoly, RatPoly> divmod(const RatPoly& a, const RatPoly& b) {
    if (b.is_zero()) throw DomainError("divmod: division by zero polynomial");
    RatPoly q, r = a;
    if (a.degree() >= b.degree()) q.c.assign(a.degree() - b.degree() + 1, 0);
    while (!r.is_zero() && r.degree() >= b.degree()) {
        int shift = r.degree() - b.degree();
        Rat f = r.leading() / b.leading();
        q.c[shift] = f;
        for (size_t k = 0; k < b.c.size(); ++k) r.c[k + shift] -= f * b.c[k];
        strip(r.c);
    }
    strip(q.c);
    return {q, r};
}

RatPoly exact_div(const RatPoly& a, const RatPoly& b) {
    auto [q, r] = divmod(a, b);
    if (!r.is_zero()) throw DomainError("exact_div: nonzero remainder");
    return q;
}

RatPoly primitive(const RatPoly& a) {
    if (a.is_zero()) return a;
    // common denominator, then gcd of integer numerators
    mpz_class den = 1;
    for (const Rat& x : a.c) den = lcm(den, x.get_den());
    mpz_class g = 0;
    for (const Rat& x : a.c) g = ::gcd(g, mpz_class(x.get_num() * (den / x.get_den())));
    Rat scale(den, g);
    if (a.leading() < 0) scale = -scale;
    return a.scaled(scale);
}

RatPoly gcd(const RatPoly& a, const RatPoly& b) {
    RatPoly x = a, y = b;
    while (!y.is_zero()) {
        RatPoly r = divmod(x, y).second;
        x = y;
        y = primitive(r); // control coefficient growth
    }
    if (x.is_zero()) return x;
    return primitive(x);
}

std::vector<std::pair<RatPoly, int>> squarefree_factors(const RatPoly& f) {
    std::vector<std::pair<RatPoly, int>> out;
    if (f.degree() < 1) return out;
    RatPoly g = gcd(f, f.derivative());
    RatPoly b = exact_div(f, g);
    RatPoly d = exact_div(f.derivative(), g) - b.derivative();
    for (int i = 1; b.degree() > 0 || !d.is_zero(); ++i) {
        RatPoly a = gcd(b, d);
        if (a.degree() > 0) out.emplace_back(a, i);
        b = exact_div(b, a);
        d = exact_div(d, a) - b.derivative();
        if (b.degree() < 1) break;
    }
    return out;
}

} // namespace eisen::ratpoly
