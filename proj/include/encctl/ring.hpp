#pragma once

// Arithmetic in R = Z_M[X]/(X^N + 1) with centered coefficients.
// M is a product of one or two NTT-friendly primes held as separate residue
// limbs; every public value is canonical (each limb centered in [-q/2, q/2)).

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "ntt.hpp"
#include "primes.hpp"

namespace encctl {

class RingContext;
using RingCtxPtr = std::shared_ptr<const RingContext>;

class RingContext {
public:
    static RingCtxPtr make(u32 degree, std::vector<u64> moduli) {
        return std::shared_ptr<const RingContext>(new RingContext(degree, std::move(moduli)));
    }

    u32 degree() const { return degree_; }
    const std::vector<u64>& moduli() const { return moduli_; }
    std::size_t limb_count() const { return moduli_.size(); }
    const PrimeField& field(std::size_t l) const { return fields_[l]; }

    // Inverse of moduli[1] modulo moduli[0]; defined for two-limb rings.
    u64 second_inv_mod_first() const { return second_inv_; }

    bool same_as(const RingContext& o) const { return degree_ == o.degree_ && moduli_ == o.moduli_; }

private:
    RingContext(u32 degree, std::vector<u64> moduli) : degree_(degree), moduli_(std::move(moduli)) {
        if (moduli_.empty() || moduli_.size() > 2) throw std::invalid_argument("RingContext: expected 1 or 2 moduli");
        for (u64 q : moduli_) fields_.emplace_back(q, degree_);
        if (moduli_.size() == 2) second_inv_ = inv_mod_u64(moduli_[1] % moduli_[0], moduli_[0]);
    }

    u32 degree_;
    std::vector<u64> moduli_;
    std::vector<PrimeField> fields_;
    u64 second_inv_ = 0;
};

class RingElement {
public:
    RingElement() = default;

    static RingElement zero(RingCtxPtr ctx) {
        RingElement r;
        r.ctx_ = std::move(ctx);
        r.data_.assign(r.ctx_->limb_count() * r.ctx_->degree(), 0);
        return r;
    }

    // Coefficients given as plain integers, reduced and centered per limb.
    static RingElement from_coeffs(RingCtxPtr ctx, std::span<const i64> raw) {
        if (raw.size() != ctx->degree()) throw std::invalid_argument("from_coeffs: wrong length");
        RingElement r = zero(std::move(ctx));
        for (std::size_t l = 0; l < r.ctx_->limb_count(); ++l) {
            const u64 q = r.ctx_->moduli()[l];
            auto limb = r.limb(l);
            for (std::size_t i = 0; i < raw.size(); ++i) limb[i] = reduce_center_i128(raw[i], q);
        }
        return r;
    }

    // value * X^exponent; a negative exponent means the inverse monomial.
    static RingElement monomial(RingCtxPtr ctx, i64 exponent, i64 value = 1) {
        const u32 n = ctx->degree();
        RingElement r = zero(std::move(ctx));
        const u64 two_n = 2ull * n;
        u64 e = static_cast<u64>(((exponent % static_cast<i64>(two_n)) + static_cast<i64>(two_n)) % static_cast<i64>(two_n));
        i64 v = value;
        if (e >= n) {
            e -= n;
            v = -v;
        }
        for (std::size_t l = 0; l < r.ctx_->limb_count(); ++l) r.limb(l)[e] = reduce_center_i128(v, r.ctx_->moduli()[l]);
        return r;
    }

    const RingCtxPtr& context() const { return ctx_; }
    u32 degree() const { return ctx_->degree(); }
    std::size_t limb_count() const { return ctx_->limb_count(); }

    std::span<i64> limb(std::size_t l) { return {data_.data() + l * ctx_->degree(), ctx_->degree()}; }
    std::span<const i64> limb(std::size_t l) const { return {data_.data() + l * ctx_->degree(), ctx_->degree()}; }

    // Centered representative of coefficient i modulo the full (composite) modulus.
    i128 coeff_crt(std::size_t i) const {
        if (ctx_->limb_count() == 1) return data_[i];
        const u64 q = ctx_->moduli()[0], p = ctx_->moduli()[1];
        const i64 a = limb(0)[i], b = limb(1)[i];
        i128 diff = static_cast<i128>(a) - b;
        const i64 t = reduce_center_i128(diff % static_cast<i128>(q) * ctx_->second_inv_mod_first(), q);
        return static_cast<i128>(b) + static_cast<i128>(p) * t;
    }

    u128 norm_inf() const {
        u128 best = 0;
        for (std::size_t i = 0; i < degree(); ++i) {
            i128 c = coeff_crt(i);
            u128 mag = c < 0 ? static_cast<u128>(-c) : static_cast<u128>(c);
            if (mag > best) best = mag;
        }
        return best;
    }

    bool is_zero() const {
        for (i64 v : data_)
            if (v != 0) return false;
        return true;
    }

    RingElement& operator+=(const RingElement& o) {
        check_same(o);
        for (std::size_t l = 0; l < limb_count(); ++l) {
            const i64 half = static_cast<i64>((ctx_->moduli()[l] - 1) / 2);
            const i64 q = static_cast<i64>(ctx_->moduli()[l]);
            auto dst = limb(l);
            auto src = o.limb(l);
            for (std::size_t i = 0; i < degree(); ++i) {
                i64 v = dst[i] + src[i];
                if (v > half) v -= q;
                if (v < -half) v += q;
                dst[i] = v;
            }
        }
        return *this;
    }

    RingElement& operator-=(const RingElement& o) {
        check_same(o);
        for (std::size_t l = 0; l < limb_count(); ++l) {
            const i64 half = static_cast<i64>((ctx_->moduli()[l] - 1) / 2);
            const i64 q = static_cast<i64>(ctx_->moduli()[l]);
            auto dst = limb(l);
            auto src = o.limb(l);
            for (std::size_t i = 0; i < degree(); ++i) {
                i64 v = dst[i] - src[i];
                if (v > half) v -= q;
                if (v < -half) v += q;
                dst[i] = v;
            }
        }
        return *this;
    }

    friend RingElement operator+(RingElement a, const RingElement& b) { return a += b; }
    friend RingElement operator-(RingElement a, const RingElement& b) { return a -= b; }

    friend bool operator==(const RingElement& a, const RingElement& b) {
        return a.ctx_->same_as(*b.ctx_) && a.data_ == b.data_;
    }

    void check_same(const RingElement& o) const {
        if (!ctx_ || !o.ctx_ || !ctx_->same_as(*o.ctx_)) throw std::invalid_argument("ring op: mismatched contexts");
    }

private:
    RingCtxPtr ctx_;
    std::vector<i64> data_;
};

inline RingElement ring_mul(const RingElement& a, const RingElement& b) {
    a.check_same(b);
    const auto& ctx = a.context();
    RingElement out = RingElement::zero(ctx);
    const u32 n = ctx->degree();
    std::vector<u64> fa(n), fb(n);
    for (std::size_t l = 0; l < ctx->limb_count(); ++l) {
        const PrimeField& f = ctx->field(l);
        f.from_centered(a.limb(l), fa.data());
        f.from_centered(b.limb(l), fb.data());
        f.forward(fa.data());
        f.forward(fb.data());
        for (u32 i = 0; i < n; ++i) fa[i] = mul_mod_u64(fa[i], fb[i], f.modulus());
        f.inverse(fa.data());
        f.to_centered(fa.data(), out.limb(l));
    }
    return out;
}

inline RingElement scalar_mul(const RingElement& a, i64 k) {
    RingElement out = RingElement::zero(a.context());
    for (std::size_t l = 0; l < a.limb_count(); ++l) {
        const u64 q = a.context()->moduli()[l];
        const i64 kl = reduce_center_i128(k, q);
        auto src = a.limb(l);
        auto dst = out.limb(l);
        for (std::size_t i = 0; i < a.degree(); ++i) dst[i] = reduce_center_i128(static_cast<i128>(src[i]) * kl, q);
    }
    return out;
}

// a * X^k with k of either sign; a pure signed permutation of coefficients.
inline RingElement monomial_mul(const RingElement& a, i64 k) {
    const u32 n = a.degree();
    const i64 two_n = 2ll * n;
    u64 e = static_cast<u64>(((k % two_n) + two_n) % two_n);
    RingElement out = RingElement::zero(a.context());
    for (std::size_t l = 0; l < a.limb_count(); ++l) {
        auto src = a.limb(l);
        auto dst = out.limb(l);
        for (u32 i = 0; i < n; ++i) {
            u64 t = i + e;
            bool neg = false;
            if (t >= 2ull * n) t -= 2ull * n;
            if (t >= n) {
                t -= n;
                neg = true;
            }
            dst[t] = neg ? -src[i] : src[i];
        }
    }
    return out;
}

// a(X) -> a(X^theta); theta must be odd so the exponent map is a bijection.
inline RingElement plaintext_automorphism(const RingElement& a, u64 theta) {
    const u32 n = a.degree();
    const u64 two_n = 2ull * n;
    theta %= two_n;
    if ((theta & 1) == 0) throw std::invalid_argument("plaintext_automorphism: theta must be odd");
    RingElement out = RingElement::zero(a.context());
    for (std::size_t l = 0; l < a.limb_count(); ++l) {
        auto src = a.limb(l);
        auto dst = out.limb(l);
        for (u64 i = 0; i < n; ++i) {
            u64 t = (i * theta) % two_n;
            if (t >= n) {
                dst[t - n] = -src[i];
            } else {
                dst[t] = src[i];
            }
        }
    }
    return out;
}

}  // namespace encctl
