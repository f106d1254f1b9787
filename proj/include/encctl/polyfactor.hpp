#pragma once
// Exact factorization of monic rational polynomials into monic irreducible
// factors with multiplicities. Pipeline: squarefree decomposition by repeated
// gcd with the derivative, small-integer root stripping, then small-degree
// integer factorization by modular factorization, Hensel lifting, and subset
// recombination. Hard degree cap so pathological inputs fail loudly instead
// of running unbounded searches.

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <encctl/polynomial.hpp>
#include <encctl/rational.hpp>

namespace encctl {

struct PolyFactor {
    RatPoly factor;         // monic irreducible over the rationals
    std::uint32_t multiplicity = 0;
};

inline constexpr int kFactorDegreeCap = 32;

namespace pfdetail {

// ---------- polynomials over F_p (p a small odd prime), ascending coeffs ----------

using ModPoly = std::vector<u64>;

inline void mp_trim(ModPoly& a) {
    while (!a.empty() && a.back() == 0) a.pop_back();
}

inline int mp_deg(const ModPoly& a) { return static_cast<int>(a.size()) - 1; }

inline u64 mp_mulmod(u64 a, u64 b, u64 p) {
    return static_cast<u64>((static_cast<unsigned __int128>(a) * b) % p);
}

inline u64 mp_powmod(u64 a, u64 e, u64 p) {
    u64 r = 1 % p;
    a %= p;
    while (e) {
        if (e & 1) r = mp_mulmod(r, a, p);
        a = mp_mulmod(a, a, p);
        e >>= 1;
    }
    return r;
}

inline u64 mp_inv(u64 a, u64 p) { return mp_powmod(a % p, p - 2, p); }

inline ModPoly mp_add(const ModPoly& a, const ModPoly& b, u64 p) {
    ModPoly out(std::max(a.size(), b.size()), 0);
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i];
    for (std::size_t i = 0; i < b.size(); ++i) out[i] = (out[i] + b[i]) % p;
    mp_trim(out);
    return out;
}

inline ModPoly mp_sub(const ModPoly& a, const ModPoly& b, u64 p) {
    ModPoly out(std::max(a.size(), b.size()), 0);
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i];
    for (std::size_t i = 0; i < b.size(); ++i) out[i] = (out[i] + p - b[i]) % p;
    mp_trim(out);
    return out;
}

inline ModPoly mp_mul(const ModPoly& a, const ModPoly& b, u64 p) {
    if (a.empty() || b.empty()) return {};
    ModPoly out(a.size() + b.size() - 1, 0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0) continue;
        for (std::size_t j = 0; j < b.size(); ++j)
            out[i + j] = (out[i + j] + mp_mulmod(a[i], b[j], p)) % p;
    }
    mp_trim(out);
    return out;
}

inline ModPoly mp_scale(const ModPoly& a, u64 f, u64 p) {
    ModPoly out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = mp_mulmod(a[i], f, p);
    mp_trim(out);
    return out;
}

// quotient and remainder of a by b (b nonzero)
inline std::pair<ModPoly, ModPoly> mp_divmod(const ModPoly& a, const ModPoly& b, u64 p) {
    if (b.empty()) throw std::domain_error("modular polynomial division by zero");
    if (mp_deg(a) < mp_deg(b)) return {{}, a};
    ModPoly rem = a;
    ModPoly quo(a.size() - b.size() + 1, 0);
    const u64 inv_lead = mp_inv(b.back(), p);
    for (std::size_t i = quo.size(); i-- > 0;) {
        const u64 f = mp_mulmod(rem[i + b.size() - 1], inv_lead, p);
        if (f == 0) continue;
        quo[i] = f;
        for (std::size_t j = 0; j < b.size(); ++j)
            rem[i + j] = (rem[i + j] + p - mp_mulmod(f, b[j], p)) % p;
    }
    mp_trim(rem);
    mp_trim(quo);
    return {quo, rem};
}

inline ModPoly mp_mod(const ModPoly& a, const ModPoly& b, u64 p) {
    return mp_divmod(a, b, p).second;
}

inline ModPoly mp_make_monic(const ModPoly& a, u64 p) {
    if (a.empty()) return a;
    return mp_scale(a, mp_inv(a.back(), p), p);
}

inline ModPoly mp_gcd(ModPoly a, ModPoly b, u64 p) {
    while (!b.empty()) {
        ModPoly r = mp_mod(a, b, p);
        a = std::move(b);
        b = std::move(r);
    }
    return mp_make_monic(a, p);
}

// extended gcd for coprime monic u, v: returns (a, b) with a*u + b*v = 1
inline std::pair<ModPoly, ModPoly> mp_ext_gcd_coprime(const ModPoly& u, const ModPoly& v, u64 p) {
    ModPoly r0 = u, r1 = v;
    ModPoly a0 = {1}, a1 = {};
    ModPoly b0 = {}, b1 = {1};
    while (!r1.empty()) {
        auto [q, r2] = mp_divmod(r0, r1, p);
        ModPoly a2 = mp_sub(a0, mp_mul(q, a1, p), p);
        ModPoly b2 = mp_sub(b0, mp_mul(q, b1, p), p);
        r0 = std::move(r1);
        r1 = std::move(r2);
        a0 = std::move(a1);
        a1 = std::move(a2);
        b0 = std::move(b1);
        b1 = std::move(b2);
    }
    if (mp_deg(r0) != 0) throw std::domain_error("modular factors are not coprime");
    const u64 inv = mp_inv(r0[0], p);
    return {mp_scale(a0, inv, p), mp_scale(b0, inv, p)};
}

inline ModPoly mp_derivative(const ModPoly& a, u64 p) {
    if (a.size() <= 1) return {};
    ModPoly out(a.size() - 1);
    for (std::size_t i = 1; i < a.size(); ++i) out[i - 1] = mp_mulmod(a[i], i % p, p);
    mp_trim(out);
    return out;
}

inline ModPoly mp_powmod_poly(ModPoly base, BigInt e, const ModPoly& f, u64 p) {
    ModPoly out = {1};
    base = mp_mod(base, f, p);
    while (e > 0) {
        if ((e & 1) != 0) out = mp_mod(mp_mul(out, base, p), f, p);
        base = mp_mod(mp_mul(base, base, p), f, p);
        e >>= 1;
    }
    return out;
}

// Distinct monic irreducible factors of a squarefree monic f over F_p
// (Berlekamp kernel plus gcd refinement). Deterministic iteration order.
inline std::vector<ModPoly> mp_factor_squarefree(const ModPoly& f, u64 p) {
    const int d = mp_deg(f);
    if (d <= 1) return {f};

    // rows of the Frobenius-power matrix: row i holds x^{i*p} mod f
    const ModPoly xp = mp_powmod_poly({0, 1}, BigInt(p), f, p);
    std::vector<ModPoly> rows(static_cast<std::size_t>(d));
    rows[0] = {1};
    for (int i = 1; i < d; ++i) rows[static_cast<std::size_t>(i)] = mp_mod(
        mp_mul(rows[static_cast<std::size_t>(i - 1)], xp, p), f, p);

    // kernel of (Q - I), column-vector convention: v with v(x)^p = v(x) mod f
    std::vector<std::vector<u64>> m(static_cast<std::size_t>(d), std::vector<u64>(static_cast<std::size_t>(d), 0));
    for (int c = 0; c < d; ++c) {
        const ModPoly& r = rows[static_cast<std::size_t>(c)];
        for (int j = 0; j < d; ++j)
            m[static_cast<std::size_t>(j)][static_cast<std::size_t>(c)] =
                static_cast<std::size_t>(j) < r.size() ? r[static_cast<std::size_t>(j)] : 0;
        m[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)] =
            (m[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)] + p - 1) % p;
    }
    // Gaussian elimination mod p, tracked pivots; kernel basis from free columns
    std::vector<int> pivot_col;
    std::size_t row = 0;
    for (int c = 0; c < d && row < static_cast<std::size_t>(d); ++c) {
        std::size_t pr = row;
        while (pr < static_cast<std::size_t>(d) && m[pr][static_cast<std::size_t>(c)] == 0) ++pr;
        if (pr == static_cast<std::size_t>(d)) continue;
        std::swap(m[pr], m[row]);
        const u64 inv = mp_inv(m[row][static_cast<std::size_t>(c)], p);
        for (int j = 0; j < d; ++j)
            m[row][static_cast<std::size_t>(j)] = mp_mulmod(m[row][static_cast<std::size_t>(j)], inv, p);
        for (std::size_t r2 = 0; r2 < static_cast<std::size_t>(d); ++r2) {
            if (r2 == row || m[r2][static_cast<std::size_t>(c)] == 0) continue;
            const u64 fmul = m[r2][static_cast<std::size_t>(c)];
            for (int j = 0; j < d; ++j)
                m[r2][static_cast<std::size_t>(j)] =
                    (m[r2][static_cast<std::size_t>(j)] + p -
                     mp_mulmod(fmul, m[row][static_cast<std::size_t>(j)], p)) % p;
        }
        pivot_col.push_back(c);
        ++row;
    }
    std::vector<bool> is_pivot(static_cast<std::size_t>(d), false);
    for (int c : pivot_col) is_pivot[static_cast<std::size_t>(c)] = true;
    std::vector<ModPoly> kernel;
    for (int free = 0; free < d; ++free) {
        if (is_pivot[static_cast<std::size_t>(free)]) continue;
        ModPoly v(static_cast<std::size_t>(d), 0);
        v[static_cast<std::size_t>(free)] = 1;
        for (std::size_t pidx = 0; pidx < pivot_col.size(); ++pidx)
            v[static_cast<std::size_t>(pivot_col[pidx])] =
                (p - m[pidx][static_cast<std::size_t>(free)]) % p;
        mp_trim(v);
        kernel.push_back(std::move(v));
    }

    // kernel dimension equals the number of irreducible factors (the constant
    // vector is always a kernel element)
    const std::size_t target = kernel.size();
    std::vector<ModPoly> factors = {f};
    if (target <= 1) return factors;
    for (const ModPoly& v : kernel) {
        if (factors.size() == target) break;
        std::vector<ModPoly> next;
        for (const ModPoly& g : factors) {
            if (mp_deg(g) <= 1) {
                next.push_back(g);
                continue;
            }
            ModPoly rem = g;
            for (u64 c = 0; c < p && mp_deg(rem) > 0; ++c) {
                ModPoly shifted = v;
                if (shifted.empty()) shifted = {0};
                shifted.resize(std::max<std::size_t>(shifted.size(), 1));
                shifted[0] = (shifted[0] + p - c) % p;
                mp_trim(shifted);
                ModPoly h = mp_gcd(rem, shifted, p);
                if (mp_deg(h) > 0 && mp_deg(h) < mp_deg(rem)) {
                    next.push_back(h);
                    rem = mp_divmod(rem, h, p).first;
                } else if (mp_deg(h) == mp_deg(rem) && mp_deg(h) > 0) {
                    break;  // v is constant on all of rem; no split from this v
                }
            }
            if (mp_deg(rem) > 0) next.push_back(mp_make_monic(rem, p));
        }
        factors = std::move(next);
    }
    std::sort(factors.begin(), factors.end());
    return factors;
}

// ---------- integer polynomials (BigInt coefficients, ascending) ----------

using ZPoly = std::vector<BigInt>;

inline void zp_trim(ZPoly& a) {
    while (!a.empty() && a.back() == 0) a.pop_back();
}

inline int zp_deg(const ZPoly& a) { return static_cast<int>(a.size()) - 1; }

inline BigInt bi_mod(const BigInt& a, const BigInt& m) {
    BigInt r = a % m;
    if (r < 0) r += m;
    return r;
}

inline BigInt bi_centered(const BigInt& a, const BigInt& m) {
    BigInt r = bi_mod(a, m);
    if (r * 2 > m) r -= m;
    return r;
}

inline ZPoly zp_from_mod(const ModPoly& a) {
    ZPoly out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i];
    return out;
}

inline ModPoly zp_to_mod(const ZPoly& a, u64 p) {
    ModPoly out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] = bi_mod(a[i], BigInt(p)).convert_to<u64>();
    mp_trim(out);
    return out;
}

inline ZPoly zp_reduce(const ZPoly& a, const BigInt& m) {
    ZPoly out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = bi_mod(a[i], m);
    zp_trim(out);
    return out;
}

inline ZPoly zp_centered(const ZPoly& a, const BigInt& m) {
    ZPoly out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = bi_centered(a[i], m);
    zp_trim(out);
    return out;
}

inline ZPoly zp_add(const ZPoly& a, const ZPoly& b) {
    ZPoly out(std::max(a.size(), b.size()), BigInt(0));
    for (std::size_t i = 0; i < a.size(); ++i) out[i] += a[i];
    for (std::size_t i = 0; i < b.size(); ++i) out[i] += b[i];
    zp_trim(out);
    return out;
}

inline ZPoly zp_sub(const ZPoly& a, const ZPoly& b) {
    ZPoly out(std::max(a.size(), b.size()), BigInt(0));
    for (std::size_t i = 0; i < a.size(); ++i) out[i] += a[i];
    for (std::size_t i = 0; i < b.size(); ++i) out[i] -= b[i];
    zp_trim(out);
    return out;
}

inline ZPoly zp_mul(const ZPoly& a, const ZPoly& b) {
    if (a.empty() || b.empty()) return {};
    ZPoly out(a.size() + b.size() - 1, BigInt(0));
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0) continue;
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    }
    zp_trim(out);
    return out;
}

// division by a monic divisor with coefficients taken mod m
inline std::pair<ZPoly, ZPoly> zp_divmod_monic_mod(const ZPoly& a, const ZPoly& b, const BigInt& m) {
    if (b.empty() || b.back() != 1) throw std::domain_error("divisor must be monic");
    ZPoly rem = zp_reduce(a, m);
    if (zp_deg(rem) < zp_deg(b)) return {{}, rem};
    ZPoly quo(rem.size() - b.size() + 1, BigInt(0));
    for (std::size_t i = quo.size(); i-- > 0;) {
        const BigInt f = bi_mod(rem[i + b.size() - 1], m);
        if (f == 0) continue;
        quo[i] = f;
        for (std::size_t j = 0; j < b.size(); ++j)
            rem[i + j] = bi_mod(rem[i + j] - f * b[j], m);
    }
    zp_trim(rem);
    zp_trim(quo);
    return {quo, rem};
}

// exact division over the integers; second result reports success
inline std::pair<ZPoly, bool> zp_div_exact(const ZPoly& a, const ZPoly& b) {
    if (b.empty()) return {{}, false};
    if (a.empty()) return {{}, true};
    if (zp_deg(a) < zp_deg(b)) return {{}, false};
    ZPoly rem = a;
    ZPoly quo(a.size() - b.size() + 1, BigInt(0));
    for (std::size_t i = quo.size(); i-- > 0;) {
        const BigInt& top = rem[i + b.size() - 1];
        if (top == 0) continue;
        if (top % b.back() != 0) return {{}, false};
        const BigInt f = top / b.back();
        quo[i] = f;
        for (std::size_t j = 0; j < b.size(); ++j) rem[i + j] -= f * b[j];
    }
    zp_trim(rem);
    if (!rem.empty()) return {{}, false};
    zp_trim(quo);
    return {quo, true};
}

inline BigInt zp_eval(const ZPoly& a, const BigInt& x) {
    BigInt acc = 0;
    for (std::size_t i = a.size(); i-- > 0;) acc = acc * x + a[i];
    return acc;
}

// One quadratic lifting step: from modulus m to m^2, preserving
// f = g*h and a*g + b*h = 1 (g, h monic).
struct HenselPair {
    ZPoly g, h, a, b;
    BigInt modulus;
};

inline void hensel_step(const ZPoly& f, HenselPair& st) {
    const BigInt m2 = st.modulus * st.modulus;
    const ZPoly e = zp_reduce(zp_sub(f, zp_mul(st.g, st.h)), m2);
    auto [q, r] = zp_divmod_monic_mod(zp_mul(st.b, e), st.g, m2);
    ZPoly g2 = zp_reduce(zp_add(st.g, r), m2);
    ZPoly h2 = zp_reduce(zp_add(st.h, zp_add(zp_mul(st.a, e), zp_mul(q, st.h))), m2);
    // refresh the Bezout pair: err = a*g2 + b*h2 - 1 vanishes mod m, so
    // scaling both cofactors by (1 - err) restores the identity mod m^2
    ZPoly err = zp_reduce(zp_sub(zp_add(zp_mul(st.a, g2), zp_mul(st.b, h2)), {BigInt(1)}), m2);
    ZPoly one_minus = zp_reduce(zp_sub({BigInt(1)}, err), m2);
    ZPoly a2 = zp_reduce(zp_mul(st.a, one_minus), m2);
    ZPoly b2 = zp_reduce(zp_mul(st.b, one_minus), m2);
    // keep deg a2 below deg h2 by shifting multiples of h2 into b2
    auto [t, a_red] = zp_divmod_monic_mod(a2, h2, m2);
    a2 = a_red;
    b2 = zp_reduce(zp_add(b2, zp_mul(t, g2)), m2);
    st.g = std::move(g2);
    st.h = std::move(h2);
    st.a = std::move(a2);
    st.b = std::move(b2);
    st.modulus = m2;
}

// Lift the modular factor list of monic f from mod p to mod p^(2^t) >= target.
inline std::vector<ZPoly> hensel_lift_tree(const ZPoly& f, const std::vector<ModPoly>& factors,
                                           u64 p, const BigInt& target) {
    BigInt final_mod = p;
    while (final_mod < target) final_mod *= final_mod;

    struct Rec {
        ZPoly lifted_product;
        std::size_t lo, hi;  // factor index range [lo, hi)
    };
    std::vector<ZPoly> out(factors.size());
    std::vector<Rec> stack = {{zp_reduce(f, final_mod), 0, factors.size()}};
    while (!stack.empty()) {
        Rec rec = std::move(stack.back());
        stack.pop_back();
        if (rec.hi - rec.lo == 1) {
            out[rec.lo] = std::move(rec.lifted_product);
            continue;
        }
        const std::size_t mid = rec.lo + (rec.hi - rec.lo) / 2;
        ModPoly g0 = {1}, h0 = {1};
        for (std::size_t i = rec.lo; i < mid; ++i) g0 = mp_mul(g0, factors[i], p);
        for (std::size_t i = mid; i < rec.hi; ++i) h0 = mp_mul(h0, factors[i], p);
        auto [a0, b0] = mp_ext_gcd_coprime(g0, h0, p);
        HenselPair st{zp_from_mod(g0), zp_from_mod(h0), zp_from_mod(a0), zp_from_mod(b0), BigInt(p)};
        while (st.modulus < final_mod) hensel_step(rec.lifted_product, st);
        stack.push_back({zp_reduce(st.g, final_mod), rec.lo, mid});
        stack.push_back({zp_reduce(st.h, final_mod), mid, rec.hi});
    }
    return out;
}

// factor-coefficient bound for a monic integer polynomial (Mignotte-style)
inline BigInt factor_coeff_bound(const ZPoly& f) {
    BigInt s = 0;
    for (const auto& c : f) s += c * c;
    BigInt root = boost::multiprecision::sqrt(s) + 1;
    BigInt b = root;
    for (int i = 0; i < zp_deg(f); ++i) b *= 2;
    return b;
}

inline u64 choose_prime(const ZPoly& f) {
    static const u64 primes[] = {3,    5,    7,    11,   13,   17,   19,   23,  29,  31,  37,
                                 41,   43,   47,   53,   59,   61,   67,   71,  73,  79,  83,
                                 89,   97,   101,  103,  107,  109,  113,  127, 131, 137, 139,
                                 149,  151,  157,  163,  167,  173,  179,  181, 191, 193, 197,
                                 199,  211,  223,  227,  229,  233,  239,  241, 251, 257, 263,
                                 269,  271,  277,  281,  283,  293,  307,  311, 313, 317, 331,
                                 337,  347,  349,  353,  359,  367,  373,  379, 383, 389, 397,
                                 401,  409,  419,  421,  431,  433,  439,  443, 449, 457, 461,
                                 463,  467,  479,  487,  491,  499,  503,  509, 521, 523, 541,
                                 1009, 2003, 4001, 8009, 16001, 32003, 64007};
    for (u64 p : primes) {
        const ModPoly fm = zp_to_mod(f, p);
        if (mp_deg(fm) != zp_deg(f)) continue;  // leading coefficient vanished
        const ModPoly g = mp_gcd(fm, mp_derivative(fm, p), p);
        if (mp_deg(g) == 0) return p;
    }
    throw std::runtime_error("no usable small prime for modular factorization");
}

// Irreducible monic integer factors of a squarefree monic integer polynomial.
inline std::vector<ZPoly> factor_integer_squarefree(ZPoly f) {
    std::vector<ZPoly> out;
    if (zp_deg(f) <= 0) return out;

    // strip small integer roots first; remaining linear factors are found by
    // the recombination stage regardless
    bool stripped = true;
    while (stripped && zp_deg(f) > 1) {
        stripped = false;
        for (i64 r = -30; r <= 30 && !stripped; ++r) {
            if (zp_eval(f, BigInt(r)) != 0) continue;
            auto [q, ok] = zp_div_exact(f, ZPoly{BigInt(-r), BigInt(1)});
            if (!ok) continue;
            out.push_back(ZPoly{BigInt(-r), BigInt(1)});
            f = std::move(q);
            stripped = true;
        }
    }
    if (zp_deg(f) == 1) {
        out.push_back(f);
        std::sort(out.begin(), out.end());
        return out;
    }
    if (zp_deg(f) <= 0) {
        std::sort(out.begin(), out.end());
        return out;
    }

    const u64 p = choose_prime(f);
    std::vector<ModPoly> modular = mp_factor_squarefree(zp_to_mod(f, p), p);
    if (modular.size() == 1) {
        out.push_back(f);
        std::sort(out.begin(), out.end());
        return out;
    }

    const BigInt bound = factor_coeff_bound(f);
    BigInt target = bound * 2 + 1;
    std::vector<ZPoly> leaves = hensel_lift_tree(f, modular, p, target);
    BigInt big_mod = p;
    while (big_mod < target) big_mod *= big_mod;

    ZPoly remaining = f;
    std::vector<bool> used(leaves.size(), false);
    std::size_t tests = 0;
    for (std::size_t size = 1; size <= leaves.size(); ++size) {
        bool progress = true;
        while (progress) {
            progress = false;
            std::size_t live = 0;
            for (bool u : used)
                if (!u) ++live;
            if (size > live) break;
            // deterministic subset enumeration over live leaves
            std::vector<std::size_t> live_idx;
            for (std::size_t i = 0; i < leaves.size(); ++i)
                if (!used[i]) live_idx.push_back(i);
            std::vector<std::size_t> pick(size);
            for (std::size_t i = 0; i < size; ++i) pick[i] = i;
            while (true) {
                if (++tests > (1u << 20))
                    throw std::runtime_error("factor recombination budget exceeded");
                ZPoly g = {BigInt(1)};
                for (std::size_t i : pick) g = zp_reduce(zp_mul(g, leaves[live_idx[i]]), big_mod);
                g = zp_centered(g, big_mod);
                if (!g.empty() && g.back() == 1) {
                    auto [q, ok] = zp_div_exact(remaining, g);
                    if (ok) {
                        out.push_back(g);
                        remaining = std::move(q);
                        for (std::size_t i : pick) used[live_idx[i]] = true;
                        progress = true;
                        break;
                    }
                }
                // next combination
                std::size_t k = size;
                while (k > 0 && pick[k - 1] == live_idx.size() - size + (k - 1)) --k;
                if (k == 0) break;
                ++pick[k - 1];
                for (std::size_t j = k; j < size; ++j) pick[j] = pick[j - 1] + 1;
            }
            if (zp_deg(remaining) == 0) break;
        }
        if (zp_deg(remaining) == 0) break;
    }
    if (zp_deg(remaining) > 0) out.push_back(remaining);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace pfdetail

// Squarefree decomposition of a monic polynomial by repeated gcd with the
// derivative: returns pairwise-coprime monic squarefree parts with their
// multiplicities, ascending in multiplicity.
inline std::vector<PolyFactor> squarefree_decomposition(const RatPoly& f) {
    if (f.is_zero()) throw std::invalid_argument("cannot decompose the zero polynomial");
    if (!f.is_monic()) throw std::invalid_argument("squarefree decomposition needs a monic input");
    std::vector<PolyFactor> out;
    if (f.degree() == 0) return out;
    RatPoly g = poly_gcd(f, f.derivative());
    RatPoly c = f / g;
    std::uint32_t i = 1;
    while (c.degree() > 0) {
        RatPoly y = poly_gcd(g, c);
        RatPoly z = c / y;
        if (z.degree() > 0) out.push_back({z.make_monic(), i});
        c = std::move(y);
        g = g / c;
        ++i;
    }
    return out;
}

// Full factorization of a monic rational polynomial into monic irreducible
// rational factors with multiplicities. Deterministic output order:
// by degree, then lexicographically by ascending coefficients.
inline std::vector<PolyFactor> factor_squarefree_rational(const RatPoly& p) {
    if (p.is_zero()) throw std::invalid_argument("cannot factor the zero polynomial");
    if (!p.is_monic()) throw std::invalid_argument("factorization needs a monic input");
    if (p.degree() > kFactorDegreeCap)
        throw std::invalid_argument("factorization degree cap exceeded");

    std::vector<PolyFactor> out;
    for (const auto& part : squarefree_decomposition(p)) {
        // clear denominators while staying monic: with b the lcm of the
        // denominators, P(x) = b^d part(x/b) has integer coefficients
        BigInt b = 1;
        for (const auto& c : part.factor.coeffs()) b = boost::multiprecision::lcm(b, rat_den(c));
        const int d = part.factor.degree();
        pfdetail::ZPoly scaled(static_cast<std::size_t>(d) + 1);
        for (int i = 0; i <= d; ++i) {
            BigInt pw = 1;
            for (int j = 0; j < d - i; ++j) pw *= b;
            const Rational v = part.factor[static_cast<std::size_t>(i)] * Rational(pw);
            scaled[static_cast<std::size_t>(i)] = rat_num(v);
        }
        RatPoly check = RatPoly::one();
        for (const auto& zf : pfdetail::factor_integer_squarefree(scaled)) {
            // map back: G(x) irreducible over Z gives G(b s)/b^deg monic rational
            std::vector<Rational> cs(zf.size());
            BigInt pw = 1;
            for (std::size_t i = 0; i < zf.size(); ++i) {
                cs[i] = Rational(zf[i] * pw, 1);
                pw *= b;
            }
            RatPoly factor = RatPoly(std::move(cs)).make_monic();
            check = check * factor;
            out.push_back({factor, part.multiplicity});
        }
        if (check != part.factor)
            throw std::runtime_error("internal factorization consistency check failed");
    }
    std::sort(out.begin(), out.end(), [](const PolyFactor& a, const PolyFactor& b) {
        if (a.factor.degree() != b.factor.degree()) return a.factor.degree() < b.factor.degree();
        return a.factor.coeffs() < b.factor.coeffs();
    });
    return out;
}

}  // namespace encctl
