#pragma once
// Univariate polynomials with exact rational coefficients, ascending order.
// Supplies the division/gcd/derivative/evaluation toolkit used by the
// canonical-form pipeline. All operations are exact.

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <encctl/rational.hpp>

namespace encctl {

class RatPoly {
  public:
    RatPoly() = default;  // zero polynomial
    explicit RatPoly(std::vector<Rational> coeffs) : c_(std::move(coeffs)) { normalize(); }

    static RatPoly zero() { return {}; }
    static RatPoly one() { return constant(1); }
    static RatPoly constant(const Rational& v) { return RatPoly({v}); }
    static RatPoly variable() { return RatPoly({Rational(0), Rational(1)}); }

    static RatPoly monomial(std::size_t deg, const Rational& coeff = Rational(1)) {
        std::vector<Rational> c(deg + 1, Rational(0));
        c[deg] = coeff;
        return RatPoly(std::move(c));
    }

    static RatPoly from_int_coeffs(const std::vector<i64>& coeffs) {
        std::vector<Rational> c(coeffs.begin(), coeffs.end());
        return RatPoly(std::move(c));
    }

    bool is_zero() const { return c_.empty(); }
    // degree of the zero polynomial is reported as -1
    int degree() const { return static_cast<int>(c_.size()) - 1; }

    const Rational& operator[](std::size_t i) const {
        static const Rational kZero(0);
        return i < c_.size() ? c_[i] : kZero;
    }
    const std::vector<Rational>& coeffs() const { return c_; }

    const Rational& leading() const {
        if (is_zero()) throw std::domain_error("leading coefficient of zero polynomial");
        return c_.back();
    }
    bool is_monic() const { return !is_zero() && c_.back() == 1; }

    bool operator==(const RatPoly& o) const { return c_ == o.c_; }
    bool operator!=(const RatPoly& o) const { return !(*this == o); }

    RatPoly operator+(const RatPoly& o) const {
        std::vector<Rational> out(std::max(c_.size(), o.c_.size()), Rational(0));
        for (std::size_t i = 0; i < c_.size(); ++i) out[i] += c_[i];
        for (std::size_t i = 0; i < o.c_.size(); ++i) out[i] += o.c_[i];
        return RatPoly(std::move(out));
    }

    RatPoly operator-(const RatPoly& o) const {
        std::vector<Rational> out(std::max(c_.size(), o.c_.size()), Rational(0));
        for (std::size_t i = 0; i < c_.size(); ++i) out[i] += c_[i];
        for (std::size_t i = 0; i < o.c_.size(); ++i) out[i] -= o.c_[i];
        return RatPoly(std::move(out));
    }

    RatPoly operator*(const RatPoly& o) const {
        if (is_zero() || o.is_zero()) return {};
        std::vector<Rational> out(c_.size() + o.c_.size() - 1, Rational(0));
        for (std::size_t i = 0; i < c_.size(); ++i) {
            if (c_[i] == 0) continue;
            for (std::size_t j = 0; j < o.c_.size(); ++j) out[i + j] += c_[i] * o.c_[j];
        }
        return RatPoly(std::move(out));
    }

    RatPoly scaled(const Rational& f) const {
        std::vector<Rational> out(c_);
        for (auto& x : out) x *= f;
        return RatPoly(std::move(out));
    }

    RatPoly make_monic() const {
        if (is_zero()) throw std::domain_error("cannot normalize zero polynomial");
        return scaled(Rational(1) / leading());
    }

    // returns {quotient, remainder}
    std::pair<RatPoly, RatPoly> divmod(const RatPoly& d) const {
        if (d.is_zero()) throw std::domain_error("polynomial division by zero");
        if (degree() < d.degree()) return {RatPoly{}, *this};
        std::vector<Rational> rem(c_);
        std::vector<Rational> quo(c_.size() - d.c_.size() + 1, Rational(0));
        const Rational inv_lead = Rational(1) / d.leading();
        for (std::size_t i = quo.size(); i-- > 0;) {
            const Rational f = rem[i + d.c_.size() - 1] * inv_lead;
            if (f == 0) continue;
            quo[i] = f;
            for (std::size_t j = 0; j < d.c_.size(); ++j) rem[i + j] -= f * d.c_[j];
        }
        return {RatPoly(std::move(quo)), RatPoly(std::move(rem))};
    }

    RatPoly operator/(const RatPoly& d) const {
        auto [quo, rem] = divmod(d);
        if (!rem.is_zero()) throw std::domain_error("inexact polynomial division");
        return quo;
    }

    bool divides(const RatPoly& other) const { return other.divmod(*this).second.is_zero(); }

    RatPoly derivative() const {
        if (degree() < 1) return {};
        std::vector<Rational> out(c_.size() - 1);
        for (std::size_t i = 1; i < c_.size(); ++i) out[i - 1] = c_[i] * Rational(i);
        return RatPoly(std::move(out));
    }

    RatPoly pow(std::size_t e) const {
        RatPoly out = one();
        for (std::size_t i = 0; i < e; ++i) out = out * (*this);
        return out;
    }

    Rational eval(const Rational& x) const {
        Rational acc(0);
        for (std::size_t i = c_.size(); i-- > 0;) acc = acc * x + c_[i];
        return acc;
    }

    RatMatrix eval_at_matrix(const RatMatrix& m) const {
        if (!m.square()) throw std::invalid_argument("polynomial of non-square matrix");
        RatMatrix acc(m.rows(), m.cols());
        for (std::size_t i = c_.size(); i-- > 0;) {
            acc = acc * m;
            for (std::size_t d = 0; d < m.rows(); ++d) acc.at(d, d) += c_[i];
        }
        return acc;
    }

    // Substitution p(b*s) for the scale trick that clears denominators of a
    // monic polynomial while keeping it monic over the integers.
    RatPoly compose_scale(const Rational& b) const {
        std::vector<Rational> out(c_);
        Rational f(1);
        for (std::size_t i = 1; i < out.size(); ++i) {
            f *= b;
            out[i] *= f;
        }
        return RatPoly(std::move(out));
    }

    bool is_integer() const {
        for (const auto& x : c_)
            if (!rat_is_integer(x)) return false;
        return true;
    }

    std::string str(const std::string& var = "s") const {
        if (is_zero()) return "0";
        std::ostringstream os;
        bool first = true;
        for (std::size_t i = c_.size(); i-- > 0;) {
            const Rational& v = c_[i];
            if (v == 0) continue;
            const bool neg = v < 0;
            const Rational mag = neg ? Rational(-v) : v;
            if (first) {
                if (neg) os << "-";
                first = false;
            } else {
                os << (neg ? " - " : " + ");
            }
            if (i == 0 || mag != 1) os << format_rational(mag);
            if (i > 0) {
                if (mag != 1) os << "*";
                os << var;
                if (i > 1) os << "^" << i;
            }
        }
        return os.str();
    }

  private:
    void normalize() {
        while (!c_.empty() && c_.back() == 0) c_.pop_back();
    }

    std::vector<Rational> c_;  // ascending; empty means zero
};

inline std::ostream& operator<<(std::ostream& os, const RatPoly& p) { return os << p.str(); }

inline RatPoly poly_gcd(RatPoly a, RatPoly b) {
    while (!b.is_zero()) {
        RatPoly r = a.divmod(b).second;
        a = std::move(b);
        b = std::move(r);
    }
    if (a.is_zero()) return a;
    return a.make_monic();
}

inline RatPoly poly_lcm(const RatPoly& a, const RatPoly& b) {
    if (a.is_zero() || b.is_zero()) return {};
    const RatPoly g = poly_gcd(a, b);
    return ((a * b) / g).make_monic();
}

// Companion matrix in first-column layout: column 0 carries the coefficients
// a_1..a_d of det(sI - C) = s^d - a_1 s^{d-1} - ... - a_d, and the remaining
// columns are the shifted identity.
inline RatMatrix companion_matrix(const RatPoly& char_poly) {
    if (!char_poly.is_monic()) throw std::invalid_argument("companion of non-monic polynomial");
    const int d = char_poly.degree();
    if (d < 1) throw std::invalid_argument("companion needs degree >= 1");
    RatMatrix m(static_cast<std::size_t>(d), static_cast<std::size_t>(d));
    for (int r = 0; r < d; ++r) m.at(static_cast<std::size_t>(r), 0) = -char_poly[static_cast<std::size_t>(d - 1 - r)];
    for (int c = 1; c < d; ++c) m.at(static_cast<std::size_t>(c - 1), static_cast<std::size_t>(c)) = 1;
    return m;
}

// Exact characteristic polynomial det(sI - F) via the trace recursion
// (Faddeev-LeVerrier), ascending coefficients, monic.
inline RatPoly characteristic_polynomial(const RatMatrix& f) {
    if (!f.square()) throw std::invalid_argument("characteristic polynomial of non-square matrix");
    const std::size_t n = f.rows();
    std::vector<Rational> coeff(n + 1, Rational(0));
    coeff[n] = 1;
    RatMatrix m = RatMatrix::identity(n);
    for (std::size_t k = 1; k <= n; ++k) {
        m = f * m;
        Rational tr(0);
        for (std::size_t i = 0; i < n; ++i) tr += m.at(i, i);
        const Rational ck = -tr / Rational(k);
        coeff[n - k] = ck;
        for (std::size_t i = 0; i < n; ++i) m.at(i, i) += ck;
    }
    return RatPoly(std::move(coeff));
}

}  // namespace encctl
