#pragma once
// Exact rational scalars and dense rational matrices. All arithmetic is
// arbitrary-precision and exact; no floating point anywhere.

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include <encctl/primes.hpp>

namespace encctl {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;  // always canonical: reduced, den > 0

inline BigInt rat_num(const Rational& r) { return boost::multiprecision::numerator(r); }
inline BigInt rat_den(const Rational& r) { return boost::multiprecision::denominator(r); }
inline bool rat_is_integer(const Rational& r) { return rat_den(r) == 1; }

inline i64 rat_to_i64(const Rational& r) {
    if (!rat_is_integer(r)) throw std::domain_error("rational is not an integer");
    const BigInt n = rat_num(r);
    if (n > std::numeric_limits<i64>::max() || n < std::numeric_limits<i64>::min())
        throw std::domain_error("integer out of 64-bit range");
    return n.convert_to<i64>();
}

// Accepts "123", "-4", "num/den", or fixed-point decimals like "-640.5",
// each with optional sign.
namespace detail {

// Decimal-only integer parse.  Leading zeros are stripped first: the big-int
// string constructor follows C++ literal rules, where a leading zero selects
// octal ("012" would silently become 10 and "09" would throw).
inline BigInt parse_decimal_int(std::string digits) {
    bool negative = false;
    if (!digits.empty() && (digits.front() == '-' || digits.front() == '+')) {
        negative = digits.front() == '-';
        digits.erase(digits.begin());
    }
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos)
        throw std::invalid_argument("malformed integer digits");
    digits.erase(0, std::min(digits.find_first_not_of('0'), digits.size() - 1));
    const BigInt value(digits);
    return negative ? BigInt(-value) : value;
}

}  // namespace detail

inline Rational parse_rational(const std::string& text) {
    const auto slash = text.find('/');
    const auto dot = text.find('.');
    try {
        if (slash != std::string::npos) {
            if (dot != std::string::npos) throw std::invalid_argument("mixed notation");
            const BigInt n = detail::parse_decimal_int(text.substr(0, slash));
            const BigInt d = detail::parse_decimal_int(text.substr(slash + 1));
            if (d == 0) throw std::invalid_argument("zero denominator");
            return Rational(n, d);
        }
        if (dot != std::string::npos) {
            const std::string frac = text.substr(dot + 1);
            if (frac.empty() || frac.find_first_not_of("0123456789") != std::string::npos)
                throw std::invalid_argument("malformed fraction digits");
            std::string head = text.substr(0, dot);
            const bool negative = !head.empty() && head.front() == '-';
            if (!head.empty() && (head.front() == '-' || head.front() == '+')) head.erase(head.begin());
            if (head.empty()) head = "0";
            BigInt den = 1;
            for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
            const BigInt num = detail::parse_decimal_int(head) * den + detail::parse_decimal_int(frac);
            return Rational(negative ? -num : num, den);
        }
        return Rational(detail::parse_decimal_int(text));
    } catch (const std::invalid_argument&) {
        throw std::invalid_argument("malformed rational: " + text);
    } catch (const std::runtime_error&) {
        throw std::invalid_argument("malformed rational: " + text);
    }
}

inline std::string format_rational(const Rational& r) {
    std::ostringstream os;
    os << rat_num(r);
    if (!rat_is_integer(r)) os << "/" << rat_den(r);
    return os.str();
}

class RatMatrix {
  public:
    RatMatrix() = default;
    RatMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), e_(rows * cols, Rational(0)) {}

    static RatMatrix identity(std::size_t n) {
        RatMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1;
        return m;
    }

    static RatMatrix from_rows(const std::vector<std::vector<Rational>>& rows) {
        if (rows.empty()) return {};
        RatMatrix m(rows.size(), rows[0].size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r].size() != m.cols_) throw std::invalid_argument("ragged rows");
            for (std::size_t c = 0; c < m.cols_; ++c) m.at(r, c) = rows[r][c];
        }
        return m;
    }

    static RatMatrix from_int_rows(const std::vector<std::vector<i64>>& rows) {
        if (rows.empty()) return {};
        RatMatrix m(rows.size(), rows[0].size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r].size() != m.cols_) throw std::invalid_argument("ragged rows");
            for (std::size_t c = 0; c < m.cols_; ++c) m.at(r, c) = rows[r][c];
        }
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool square() const { return rows_ == cols_; }

    Rational& at(std::size_t r, std::size_t c) { return e_[r * cols_ + c]; }
    const Rational& at(std::size_t r, std::size_t c) const { return e_[r * cols_ + c]; }

    bool operator==(const RatMatrix& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && e_ == o.e_;
    }

    RatMatrix operator+(const RatMatrix& o) const {
        check_same_shape(o);
        RatMatrix out(rows_, cols_);
        for (std::size_t i = 0; i < e_.size(); ++i) out.e_[i] = e_[i] + o.e_[i];
        return out;
    }

    RatMatrix operator-(const RatMatrix& o) const {
        check_same_shape(o);
        RatMatrix out(rows_, cols_);
        for (std::size_t i = 0; i < e_.size(); ++i) out.e_[i] = e_[i] - o.e_[i];
        return out;
    }

    RatMatrix operator*(const RatMatrix& o) const {
        if (cols_ != o.rows_) throw std::invalid_argument("matrix shape mismatch");
        RatMatrix out(rows_, o.cols_);
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t k = 0; k < cols_; ++k) {
                const Rational& f = at(r, k);
                if (f == 0) continue;
                for (std::size_t c = 0; c < o.cols_; ++c) out.at(r, c) += f * o.at(k, c);
            }
        return out;
    }

    RatMatrix scaled(const Rational& f) const {
        RatMatrix out(rows_, cols_);
        for (std::size_t i = 0; i < e_.size(); ++i) out.e_[i] = e_[i] * f;
        return out;
    }

    std::vector<Rational> matvec(const std::vector<Rational>& v) const {
        if (v.size() != cols_) throw std::invalid_argument("matvec shape mismatch");
        std::vector<Rational> out(rows_, Rational(0));
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t c = 0; c < cols_; ++c) out[r] += at(r, c) * v[c];
        return out;
    }

    std::vector<Rational> col(std::size_t c) const {
        std::vector<Rational> out(rows_);
        for (std::size_t r = 0; r < rows_; ++r) out[r] = at(r, c);
        return out;
    }

    void set_col(std::size_t c, const std::vector<Rational>& v) {
        for (std::size_t r = 0; r < rows_; ++r) at(r, c) = v[r];
    }

    bool is_zero() const {
        for (const auto& x : e_)
            if (x != 0) return false;
        return true;
    }

    bool is_integer() const {
        for (const auto& x : e_)
            if (!rat_is_integer(x)) return false;
        return true;
    }

    // Exact Gauss-Jordan inverse; throws on a singular input.
    RatMatrix inverse() const {
        if (!square()) throw std::invalid_argument("inverse of non-square matrix");
        const std::size_t n = rows_;
        RatMatrix a = *this;
        RatMatrix inv = identity(n);
        for (std::size_t c = 0; c < n; ++c) {
            std::size_t pivot = c;
            while (pivot < n && a.at(pivot, c) == 0) ++pivot;
            if (pivot == n) throw std::domain_error("singular matrix");
            if (pivot != c) {
                for (std::size_t j = 0; j < n; ++j) {
                    std::swap(a.at(pivot, j), a.at(c, j));
                    std::swap(inv.at(pivot, j), inv.at(c, j));
                }
            }
            const Rational d = a.at(c, c);
            for (std::size_t j = 0; j < n; ++j) {
                a.at(c, j) /= d;
                inv.at(c, j) /= d;
            }
            for (std::size_t r = 0; r < n; ++r) {
                if (r == c || a.at(r, c) == 0) continue;
                const Rational f = a.at(r, c);
                for (std::size_t j = 0; j < n; ++j) {
                    a.at(r, j) -= f * a.at(c, j);
                    inv.at(r, j) -= f * inv.at(c, j);
                }
            }
        }
        return inv;
    }

    // Reduced row echelon form with deterministic (lexicographic) pivoting.
    // Returns the pivot column of each pivot row, in order.
    std::vector<std::size_t> rref_in_place() {
        std::vector<std::size_t> pivots;
        std::size_t row = 0;
        for (std::size_t c = 0; c < cols_ && row < rows_; ++c) {
            std::size_t pivot = row;
            while (pivot < rows_ && at(pivot, c) == 0) ++pivot;
            if (pivot == rows_) continue;
            if (pivot != row)
                for (std::size_t j = 0; j < cols_; ++j) std::swap(at(pivot, j), at(row, j));
            const Rational d = at(row, c);
            for (std::size_t j = 0; j < cols_; ++j) at(row, j) /= d;
            for (std::size_t r = 0; r < rows_; ++r) {
                if (r == row || at(r, c) == 0) continue;
                const Rational f = at(r, c);
                for (std::size_t j = 0; j < cols_; ++j) at(r, j) -= f * at(row, j);
            }
            pivots.push_back(c);
            ++row;
        }
        return pivots;
    }

    std::size_t rank() const {
        RatMatrix tmp = *this;
        return tmp.rref_in_place().size();
    }

    // dim ker, via exact elimination on a denominator-cleared integer copy
    // (row scaling preserves rank), Bareiss fraction-free pivoting.
    std::size_t nullity() const {
        std::vector<std::vector<BigInt>> a(rows_, std::vector<BigInt>(cols_));
        for (std::size_t r = 0; r < rows_; ++r) {
            BigInt l = 1;
            for (std::size_t c = 0; c < cols_; ++c)
                l = boost::multiprecision::lcm(l, rat_den(at(r, c)));
            for (std::size_t c = 0; c < cols_; ++c) {
                const Rational v = at(r, c) * l;
                a[r][c] = rat_num(v);
            }
        }
        BigInt prev = 1;
        std::size_t row = 0;
        for (std::size_t c = 0; c < cols_ && row < rows_; ++c) {
            std::size_t pivot = row;
            while (pivot < rows_ && a[pivot][c] == 0) ++pivot;
            if (pivot == rows_) continue;
            if (pivot != row) std::swap(a[pivot], a[row]);
            for (std::size_t r = row + 1; r < rows_; ++r) {
                for (std::size_t j = c + 1; j < cols_; ++j)
                    a[r][j] = (a[row][c] * a[r][j] - a[r][c] * a[row][j]) / prev;
                a[r][c] = 0;
            }
            prev = a[row][c];
            ++row;
        }
        return cols_ - row;
    }

    // Deterministic basis of the right kernel, from the RREF free columns.
    std::vector<std::vector<Rational>> kernel_basis() const {
        RatMatrix r = *this;
        const auto pivots = r.rref_in_place();
        std::vector<bool> is_pivot(cols_, false);
        for (auto c : pivots) is_pivot[c] = true;
        std::vector<std::vector<Rational>> basis;
        for (std::size_t free = 0; free < cols_; ++free) {
            if (is_pivot[free]) continue;
            std::vector<Rational> v(cols_, Rational(0));
            v[free] = 1;
            for (std::size_t p = 0; p < pivots.size(); ++p) v[pivots[p]] = -r.at(p, free);
            basis.push_back(std::move(v));
        }
        return basis;
    }

  private:
    void check_same_shape(const RatMatrix& o) const {
        if (rows_ != o.rows_ || cols_ != o.cols_)
            throw std::invalid_argument("matrix shape mismatch");
    }

    std::size_t rows_ = 0, cols_ = 0;
    std::vector<Rational> e_;
};

}  // namespace encctl
