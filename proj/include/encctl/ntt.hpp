#pragma once

// Negacyclic number-theoretic transform over a prime q == 1 (mod 2N).
// Natural-order in/out; the 2N-th root powers are folded into the butterflies,
// so pointwise products of transforms realize multiplication in Z_q[X]/(X^N + 1).

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "primes.hpp"

namespace encctl {

using u32 = std::uint32_t;

inline u64 shoup_precompute(u64 w, u64 q) {
    return static_cast<u64>((static_cast<u128>(w) << 64) / q);
}

// Result in [0, 2q); requires w < q, any a.
inline u64 mul_shoup_lazy(u64 a, u64 w, u64 w_shoup, u64 q) {
    u64 hi = static_cast<u64>((static_cast<u128>(a) * w_shoup) >> 64);
    return a * w - hi * q;
}

inline u64 mul_shoup(u64 a, u64 w, u64 w_shoup, u64 q) {
    u64 r = mul_shoup_lazy(a, w, w_shoup, q);
    return r >= q ? r - q : r;
}

class PrimeField {
public:
    PrimeField(u64 q, u32 n) : q_(q), n_(n) {
        if (n < 2 || (n & (n - 1)) != 0) throw std::invalid_argument("PrimeField: N must be a power of two >= 2");
        if ((q - 1) % (2ull * n) != 0) throw std::invalid_argument("PrimeField: q != 1 mod 2N");
        if (q >= (1ull << 61)) throw std::invalid_argument("PrimeField: q too large for lazy reduction");
        log_n_ = 0;
        while ((1u << log_n_) < n) ++log_n_;
        psi_ = find_two_n_root();
        build_tables();
    }

    u64 modulus() const { return q_; }
    u32 degree() const { return n_; }
    u64 two_n_root() const { return psi_; }

    // Coefficient domain [0, q) -> evaluation domain [0, q), in place.
    void forward(u64* a) const {
        const u64 two_q = 2 * q_;
        std::size_t t = n_;
        for (std::size_t m = 1; m < n_; m <<= 1) {
            t >>= 1;
            for (std::size_t i = 0; i < m; ++i) {
                const u64 w = psi_brv_[m + i], ws = psi_brv_shoup_[m + i];
                u64* x = a + 2 * i * t;
                u64* y = x + t;
                for (std::size_t j = 0; j < t; ++j) {
                    u64 u = x[j];
                    if (u >= two_q) u -= two_q;
                    const u64 v = mul_shoup_lazy(y[j], w, ws, q_);
                    x[j] = u + v;
                    y[j] = u - v + two_q;
                }
            }
        }
        for (std::size_t j = 0; j < n_; ++j) {
            u64 v = a[j];
            if (v >= two_q) v -= two_q;
            if (v >= q_) v -= q_;
            a[j] = v;
        }
    }

    // Evaluation domain (values < 2q accepted) -> coefficient domain [0, q), in place.
    void inverse(u64* a) const {
        const u64 two_q = 2 * q_;
        std::size_t t = 1;
        for (std::size_t m = n_; m > 1; m >>= 1) {
            const std::size_t h = m >> 1;
            std::size_t j1 = 0;
            for (std::size_t i = 0; i < h; ++i) {
                const u64 w = psi_inv_brv_[h + i], ws = psi_inv_brv_shoup_[h + i];
                u64* x = a + j1;
                u64* y = x + t;
                for (std::size_t j = 0; j < t; ++j) {
                    const u64 u = x[j], v = y[j];
                    u64 s = u + v;
                    if (s >= two_q) s -= two_q;
                    x[j] = s;
                    y[j] = mul_shoup_lazy(u - v + two_q, w, ws, q_);
                }
                j1 += 2 * t;
            }
            t <<= 1;
        }
        for (std::size_t j = 0; j < n_; ++j) a[j] = mul_shoup(a[j], n_inv_, n_inv_shoup_, q_);
    }

    void from_centered(std::span<const i64> in, u64* out) const {
        const i64 q = static_cast<i64>(q_);
        for (std::size_t j = 0; j < n_; ++j) {
            i64 v = in[j] % q;  // input magnitude may exceed q (cross-limb digits)
            out[j] = v < 0 ? static_cast<u64>(v + q) : static_cast<u64>(v);
        }
    }

    void to_centered(const u64* in, std::span<i64> out) const {
        for (std::size_t j = 0; j < n_; ++j) out[j] = center_u64(in[j], q_);
    }

private:
    u64 find_two_n_root() const {
        const u64 exp = (q_ - 1) / (2ull * n_);
        for (u64 c = 2;; ++c) {
            const u64 cand = pow_mod_u64(c, exp, q_);
            if (cand != 0 && pow_mod_u64(cand, n_, q_) == q_ - 1) return cand;
        }
    }

    static u32 bit_reverse(u32 x, u32 bits) {
        u32 r = 0;
        for (u32 i = 0; i < bits; ++i) r |= ((x >> i) & 1u) << (bits - 1 - i);
        return r;
    }

    void build_tables() {
        psi_brv_.resize(n_);
        psi_inv_brv_.resize(n_);
        const u64 psi_inv = inv_mod_u64(psi_, q_);
        u64 p = 1, pi = 1;
        std::vector<u64> pow(n_), pow_inv(n_);
        for (u32 i = 0; i < n_; ++i) {
            pow[i] = p;
            pow_inv[i] = pi;
            p = mul_mod_u64(p, psi_, q_);
            pi = mul_mod_u64(pi, psi_inv, q_);
        }
        for (u32 i = 0; i < n_; ++i) {
            psi_brv_[i] = pow[bit_reverse(i, log_n_)];
            psi_inv_brv_[i] = pow_inv[bit_reverse(i, log_n_)];
        }
        psi_brv_shoup_.resize(n_);
        psi_inv_brv_shoup_.resize(n_);
        for (u32 i = 0; i < n_; ++i) {
            psi_brv_shoup_[i] = shoup_precompute(psi_brv_[i], q_);
            psi_inv_brv_shoup_[i] = shoup_precompute(psi_inv_brv_[i], q_);
        }
        n_inv_ = inv_mod_u64(n_, q_);
        n_inv_shoup_ = shoup_precompute(n_inv_, q_);
    }

    u64 q_;
    u32 n_, log_n_ = 0;
    u64 psi_;
    u64 n_inv_ = 0, n_inv_shoup_ = 0;
    std::vector<u64> psi_brv_, psi_brv_shoup_, psi_inv_brv_, psi_inv_brv_shoup_;
};

}  // namespace encctl
