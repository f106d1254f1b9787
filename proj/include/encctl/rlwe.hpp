#pragma once

// Symmetric Ring-LWE cryptosystem with a special-modulus gadget: fresh
// ciphertexts live over R_q, multiplier ("gadget") ciphertexts over R_{qP}
// carry P*nu^j multiples of the message against each ciphertext component,
// and the external product divides by P with rounding to return to R_q.
// Ciphertext automorphisms are key-switched through one external product.

#include <array>
#include <atomic>
#include <cmath>
#include <map>
#include <memory>
#include <stdexcept>
#include <vector>

#include "ntt.hpp"
#include "primes.hpp"
#include "ring.hpp"
#include "rng.hpp"
#include "serialize.hpp"

namespace encctl {

// Monotone external-product counter; automorphisms count through the one
// external product they perform internally.
struct OpCounter {
    std::atomic<u64> external_products{0};
    void add(u64 k = 1) { external_products.fetch_add(k, std::memory_order_relaxed); }
    u64 value() const { return external_products.load(std::memory_order_relaxed); }
    void reset() { external_products.store(0, std::memory_order_relaxed); }
};

struct EncParams {
    RingCtxPtr ctx_q;        // single limb {q}
    RingCtxPtr ctx_qp;       // limbs {q, P}
    u64 nu = 0;              // gadget base: power of two, or equal to q
    u32 d = 0;               // digits per component, smallest with nu^d >= q
    double sigma = 19.2;     // hard per-sample error bound
    double sample_stddev = 3.2;
    std::shared_ptr<const GaussianTable> gauss;
#ifdef ENCCTL_TESTING
    // Test hook: no error samples and trivial masks, making every operation
    // an exact plaintext computation carried in ciphertext containers.
    bool zero_noise = false;
#endif

    static EncParams make(u32 degree, u64 q, u64 special_p, u64 nu_base, double sigma = 19.2,
                          double sample_stddev = 3.2) {
        if (nu_base < 2) throw std::invalid_argument("EncParams: gadget base must be >= 2");
        if (nu_base != q && (nu_base & (nu_base - 1)) != 0)
            throw std::invalid_argument("EncParams: gadget base must be a power of two or equal q");
        if (sigma <= 0) throw std::invalid_argument("EncParams: sigma must be positive");
        EncParams pr;
        pr.ctx_q = RingContext::make(degree, {q});
        pr.ctx_qp = RingContext::make(degree, {q, special_p});
        pr.nu = nu_base;
        pr.d = 0;
        u128 pow = 1;
        while (pow < q) {
            pow *= nu_base;
            ++pr.d;
        }
        pr.sigma = sigma;
        pr.sample_stddev = sample_stddev;
        pr.gauss = std::make_shared<GaussianTable>(sample_stddev, sigma);
        return pr;
    }

    u64 q() const { return ctx_q->moduli()[0]; }
    u64 special_p() const { return ctx_qp->moduli()[1]; }
    u32 degree() const { return ctx_q->degree(); }

    // Worst-case decryption-error growth of one external product.
    double sigma_mult() const {
        const double n = degree();
        return static_cast<double>(d) * n * sigma * static_cast<double>(nu) / static_cast<double>(special_p()) +
               (n + 1) / 2.0;
    }

    bool noise_disabled() const {
#ifdef ENCCTL_TESTING
        return zero_noise;
#else
        return false;
#endif
    }

    u64 digest() const {
        u64 h = 0x9044454c45435354ull;
        for (u64 w : {static_cast<u64>(degree()), q(), special_p(), nu, static_cast<u64>(d)}) h = splitmix64(h ^ w);
        u64 bits;
        static_assert(sizeof(double) == 8);
        std::memcpy(&bits, &sigma, 8);
        h = splitmix64(h ^ bits);
        std::memcpy(&bits, &sample_stddev, 8);
        return splitmix64(h ^ bits);
    }

    bool matches(const EncParams& o) const { return digest() == o.digest(); }
};

struct SecretKey {
    RingElement s_q;   // over ctx_q
    RingElement s_qp;  // same ternary coefficients over ctx_qp
};

inline SecretKey keygen(const EncParams& pr, u64 seed) {
    CounterRng rng(seed);
    std::vector<i64> coeffs(pr.degree());
    for (auto& c : coeffs) c = rng.sample_ternary();
    return {RingElement::from_coeffs(pr.ctx_q, coeffs), RingElement::from_coeffs(pr.ctx_qp, coeffs)};
}

struct Ciphertext {
    RingElement b, a;

    static Ciphertext zero(const RingCtxPtr& ctx) { return {RingElement::zero(ctx), RingElement::zero(ctx)}; }
    // Noise-free container for a public value.
    static Ciphertext trivial(const RingElement& m) { return {m, RingElement::zero(m.context())}; }
};

inline Ciphertext ct_add(const Ciphertext& c1, const Ciphertext& c2) { return {c1.b + c2.b, c1.a + c2.a}; }
inline Ciphertext ct_sub(const Ciphertext& c1, const Ciphertext& c2) { return {c1.b - c2.b, c1.a - c2.a}; }
inline Ciphertext pt_mul(const RingElement& p, const Ciphertext& c) { return {ring_mul(p, c.b), ring_mul(p, c.a)}; }
inline Ciphertext ct_scalar_mul(const Ciphertext& c, i64 k) { return {scalar_mul(c.b, k), scalar_mul(c.a, k)}; }
inline Ciphertext ct_monomial_mul(const Ciphertext& c, i64 e) { return {monomial_mul(c.b, e), monomial_mul(c.a, e)}; }

namespace detail {

inline RingElement sample_uniform(const RingCtxPtr& ctx, CounterRng& rng) {
    RingElement r = RingElement::zero(ctx);
    for (std::size_t l = 0; l < ctx->limb_count(); ++l) {
        const u64 ql = ctx->moduli()[l];
        auto limb = r.limb(l);
        for (auto& v : limb) v = static_cast<i64>(center_u64(rng.uniform_below(ql), ql));
    }
    return r;
}

// Small integer error, identical value in every limb.
inline RingElement sample_error(const RingCtxPtr& ctx, const GaussianTable& gauss, CounterRng& rng) {
    std::vector<i64> coeffs(ctx->degree());
    for (auto& c : coeffs) c = gauss.sample(rng);
    return RingElement::from_coeffs(ctx, coeffs);
}

}  // namespace detail

inline Ciphertext encrypt(const RingElement& m, const SecretKey& sk, const EncParams& pr, CounterRng& rng) {
    if (!m.context()->same_as(*pr.ctx_q)) throw std::invalid_argument("encrypt: message modulus mismatch");
    if (pr.noise_disabled()) return Ciphertext::trivial(m);
    RingElement a = detail::sample_uniform(pr.ctx_q, rng);
    RingElement e = detail::sample_error(pr.ctx_q, *pr.gauss, rng);
    RingElement b = m + e - ring_mul(a, sk.s_q);
    return {b, a};
}

inline RingElement decrypt(const Ciphertext& c, const SecretKey& sk) { return c.b + ring_mul(c.a, sk.s_q); }

// Multiplier ciphertext: 2x2d matrix over R_{qP} held column-wise, with the
// NTT image of every row cached for fast repeated external products.
struct GadgetCiphertext {
    struct RowCache {
        std::array<std::vector<u64>, 2> val;    // NTT-domain values per limb
        std::array<std::vector<u64>, 2> shoup;  // Shoup companions per limb
    };

    RingCtxPtr ctx_q;
    RingCtxPtr ctx_qp;
    u64 nu = 0;
    u32 d = 0;
    std::vector<RingElement> beta;   // size 2d, rows 0..d-1 pair with the b component
    std::vector<RingElement> alpha;  // size 2d, rows d..2d-1 with the a component
    std::vector<RowCache> cache_beta, cache_alpha;

    void build_cache() {
        cache_beta.resize(beta.size());
        cache_alpha.resize(alpha.size());
        for (std::size_t r = 0; r < beta.size(); ++r) {
            fill_row(cache_beta[r], beta[r]);
            fill_row(cache_alpha[r], alpha[r]);
        }
    }

private:
    void fill_row(RowCache& row, const RingElement& elem) {
        for (std::size_t l = 0; l < 2; ++l) {
            const PrimeField& f = ctx_qp->field(l);
            const u64 ql = ctx_qp->moduli()[l];
            row.val[l].assign(ctx_qp->degree(), 0);
            f.from_centered(elem.limb(l), row.val[l].data());
            f.forward(row.val[l].data());
            row.shoup[l].resize(ctx_qp->degree());
            for (std::size_t i = 0; i < row.val[l].size(); ++i) row.shoup[l][i] = shoup_precompute(row.val[l][i], ql);
        }
    }
};

inline GadgetCiphertext encrypt_gadget(const RingElement& m, const SecretKey& sk, const EncParams& pr,
                                       CounterRng& rng) {
    if (!m.context()->same_as(*pr.ctx_q)) throw std::invalid_argument("encrypt_gadget: message modulus mismatch");
    const u64 q = pr.q();
    const u32 n = pr.degree();
    GadgetCiphertext g;
    g.ctx_q = pr.ctx_q;
    g.ctx_qp = pr.ctx_qp;
    g.nu = pr.nu;
    g.d = pr.d;
    g.beta.reserve(2 * pr.d);
    g.alpha.reserve(2 * pr.d);

    const u64 p_mod_q = pr.special_p() % q;
    u64 nu_pow = 1;  // nu^j mod q
    std::vector<RingElement> msg_terms;
    for (u32 j = 0; j < pr.d; ++j) {
        // P * nu^j * m as an element of R_{qP}: zero in the P limb.
        const u64 scale = mul_mod_u64(p_mod_q, nu_pow, q);
        RingElement t = RingElement::zero(pr.ctx_qp);
        auto dst = t.limb(0);
        auto src = m.limb(0);
        for (u32 i = 0; i < n; ++i) dst[i] = reduce_center_i128(static_cast<i128>(src[i]) * scale, q);
        msg_terms.push_back(std::move(t));
        nu_pow = mul_mod_u64(nu_pow, pr.nu % q, q);
    }

    for (u32 j = 0; j < pr.d; ++j) {  // rows pairing with the b component
        if (pr.noise_disabled()) {
            g.beta.push_back(msg_terms[j]);
            g.alpha.push_back(RingElement::zero(pr.ctx_qp));
        } else {
            RingElement a = detail::sample_uniform(pr.ctx_qp, rng);
            RingElement e = detail::sample_error(pr.ctx_qp, *pr.gauss, rng);
            g.beta.push_back(msg_terms[j] + e - ring_mul(a, sk.s_qp));
            g.alpha.push_back(std::move(a));
        }
    }
    for (u32 j = 0; j < pr.d; ++j) {  // rows pairing with the a component
        if (pr.noise_disabled()) {
            g.beta.push_back(RingElement::zero(pr.ctx_qp));
            g.alpha.push_back(msg_terms[j]);
        } else {
            RingElement u = detail::sample_uniform(pr.ctx_qp, rng);
            RingElement e = detail::sample_error(pr.ctx_qp, *pr.gauss, rng);
            g.beta.push_back(e - ring_mul(u, sk.s_qp));
            g.alpha.push_back(u + msg_terms[j]);
        }
    }
    g.build_cache();
    return g;
}

namespace detail {

// Balanced base-nu digits of centered coefficients; digit j of coefficient i
// lands in out[j][i], each digit in [-nu/2, nu/2).
inline std::vector<std::vector<i64>> signed_digits(std::span<const i64> coeffs, u64 nu, u32 d) {
    std::vector<std::vector<i64>> out(d, std::vector<i64>(coeffs.size()));
    const i64 base = static_cast<i64>(nu);
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
        i64 r = coeffs[i];
        for (u32 j = 0; j < d; ++j) {
            i64 dj = ((r % base) + base) % base;
            if (dj >= (base + 1) / 2) dj -= base;
            out[j][i] = dj;
            r = (r - dj) / base;
        }
        if (r != 0) throw std::logic_error("signed_digits: residue after final digit");
    }
    return out;
}

// Centered (x_q - x_P) * P^{-1} mod q per coefficient: division by P with
// rounding, landing back in R_q.
inline RingElement rescale_to_q(const RingElement& x, const RingCtxPtr& ctx_q) {
    const u64 q = ctx_q->moduli()[0];
    const u64 pinv = x.context()->second_inv_mod_first();
    RingElement out = RingElement::zero(ctx_q);
    auto xq = x.limb(0);
    auto xp = x.limb(1);
    auto dst = out.limb(0);
    for (std::size_t i = 0; i < dst.size(); ++i)
        dst[i] = reduce_center_i128(static_cast<i128>(xq[i] - xp[i]) * pinv, q);
    return out;
}

}  // namespace detail

inline Ciphertext external_product(const GadgetCiphertext& M, const Ciphertext& c, OpCounter& counter) {
    if (!c.b.context()->same_as(*M.ctx_q)) throw std::invalid_argument("external_product: params mismatch");
    counter.add(1);
    const u32 n = M.ctx_qp->degree();
    std::array<std::vector<u64>, 2> acc_b{std::vector<u64>(n, 0), std::vector<u64>(n, 0)};
    std::array<std::vector<u64>, 2> acc_a{std::vector<u64>(n, 0), std::vector<u64>(n, 0)};
    std::vector<u64> tmp(n);

    auto process = [&](const RingElement& comp, u32 row_base) {
        if (comp.is_zero()) return;  // trivial component contributes nothing
        auto digits = detail::signed_digits(comp.limb(0), M.nu, M.d);
        for (u32 j = 0; j < M.d; ++j) {
            const auto& brow = M.cache_beta[row_base + j];
            const auto& arow = M.cache_alpha[row_base + j];
            for (std::size_t l = 0; l < 2; ++l) {
                const PrimeField& f = M.ctx_qp->field(l);
                const u64 ql = M.ctx_qp->moduli()[l];
                f.from_centered(digits[j], tmp.data());
                f.forward(tmp.data());
                auto& ab = acc_b[l];
                auto& aa = acc_a[l];
                for (u32 i = 0; i < n; ++i) {
                    u64 t = mul_shoup_lazy(tmp[i], brow.val[l][i], brow.shoup[l][i], ql);
                    if (t >= ql) t -= ql;
                    ab[i] += t;
                    if (ab[i] >= ql) ab[i] -= ql;
                    t = mul_shoup_lazy(tmp[i], arow.val[l][i], arow.shoup[l][i], ql);
                    if (t >= ql) t -= ql;
                    aa[i] += t;
                    if (aa[i] >= ql) aa[i] -= ql;
                }
            }
        }
    };
    process(c.b, 0);
    process(c.a, M.d);

    RingElement xb = RingElement::zero(M.ctx_qp);
    RingElement xa = RingElement::zero(M.ctx_qp);
    for (std::size_t l = 0; l < 2; ++l) {
        const PrimeField& f = M.ctx_qp->field(l);
        f.inverse(acc_b[l].data());
        f.to_centered(acc_b[l].data(), xb.limb(l));
        f.inverse(acc_a[l].data());
        f.to_centered(acc_a[l].data(), xa.limb(l));
    }
    return {detail::rescale_to_q(xb, M.ctx_q), detail::rescale_to_q(xa, M.ctx_q)};
}

struct AutomorphismKey {
    u64 theta = 0;  // normalized to (1, 2N), odd
    GadgetCiphertext gadget;
};

inline AutomorphismKey gen_automorphism_key(u64 theta, const SecretKey& sk, const EncParams& pr, CounterRng& rng) {
    const u64 two_n = 2ull * pr.degree();
    const u64 t = theta % two_n;
    if (t % 2 == 0) throw std::invalid_argument("gen_automorphism_key: theta must be odd");
    if (t == 1) throw std::invalid_argument("gen_automorphism_key: theta == 1 is the identity");
    return {t, encrypt_gadget(plaintext_automorphism(sk.s_q, t), sk, pr, rng)};
}

// X^i -> X^{i*theta} on the underlying plaintext, via one key-switching
// external product on the permuted a component.
inline Ciphertext ciphertext_automorphism(const Ciphertext& c, const AutomorphismKey& ak, OpCounter& counter) {
    RingElement tb = plaintext_automorphism(c.b, ak.theta);
    RingElement ta = plaintext_automorphism(c.a, ak.theta);
    Ciphertext shifted{std::move(ta), RingElement::zero(c.a.context())};
    Ciphertext h = external_product(ak.gadget, shifted, counter);
    return {tb + h.b, h.a};
}

using AutoKeySet = std::map<u64, AutomorphismKey>;

inline const AutomorphismKey& find_automorphism_key(const AutoKeySet& keys, u64 theta, u32 degree) {
    const u64 t = theta % (2ull * degree);
    auto it = keys.find(t);
    if (it == keys.end()) throw std::invalid_argument("missing automorphism key for theta=" + std::to_string(t));
    return it->second;
}

// ---- serialization ----

inline void write_element(ByteWriter& w, const RingElement& e) {
    w.put_u32(e.degree());
    w.put_u32(static_cast<u32>(e.limb_count()));
    for (std::size_t l = 0; l < e.limb_count(); ++l) {
        w.put_u64(e.context()->moduli()[l]);
        for (i64 v : e.limb(l)) w.put_i64(v);
    }
}

inline RingElement read_element(ByteReader& r, const RingCtxPtr& ctx) {
    if (r.get_u32() != ctx->degree()) throw std::runtime_error("element degree mismatch");
    if (r.get_u32() != ctx->limb_count()) throw std::runtime_error("element limb count mismatch");
    RingElement e = RingElement::zero(ctx);
    for (std::size_t l = 0; l < ctx->limb_count(); ++l) {
        if (r.get_u64() != ctx->moduli()[l]) throw std::runtime_error("element modulus mismatch");
        for (auto& v : e.limb(l)) v = r.get_i64();
    }
    return e;
}

inline void write_ciphertext(ByteWriter& w, const Ciphertext& c) {
    write_element(w, c.b);
    write_element(w, c.a);
}

inline Ciphertext read_ciphertext(ByteReader& r, const RingCtxPtr& ctx) {
    RingElement b = read_element(r, ctx);
    RingElement a = read_element(r, ctx);
    return {std::move(b), std::move(a)};
}

inline void write_gadget(ByteWriter& w, const GadgetCiphertext& g) {
    w.put_u64(g.nu);
    w.put_u32(g.d);
    for (const auto& e : g.beta) write_element(w, e);
    for (const auto& e : g.alpha) write_element(w, e);
}

inline GadgetCiphertext read_gadget(ByteReader& r, const EncParams& pr) {
    GadgetCiphertext g;
    g.ctx_q = pr.ctx_q;
    g.ctx_qp = pr.ctx_qp;
    g.nu = r.get_u64();
    g.d = r.get_u32();
    if (g.nu != pr.nu || g.d != pr.d) throw std::runtime_error("gadget shape mismatch");
    for (u32 i = 0; i < 2 * g.d; ++i) g.beta.push_back(read_element(r, pr.ctx_qp));
    for (u32 i = 0; i < 2 * g.d; ++i) g.alpha.push_back(read_element(r, pr.ctx_qp));
    g.build_cache();
    return g;
}

inline void write_secret_key(ByteWriter& w, const SecretKey& sk) { write_element(w, sk.s_q); }

inline SecretKey read_secret_key(ByteReader& r, const EncParams& pr) {
    RingElement s_q = read_element(r, pr.ctx_q);
    std::vector<i64> coeffs(s_q.limb(0).begin(), s_q.limb(0).end());
    return {std::move(s_q), RingElement::from_coeffs(pr.ctx_qp, coeffs)};
}

inline void write_autokeys(ByteWriter& w, const AutoKeySet& keys) {
    w.put_u32(static_cast<u32>(keys.size()));
    for (const auto& [theta, ak] : keys) {
        w.put_u64(theta);
        write_gadget(w, ak.gadget);
    }
}

inline AutoKeySet read_autokeys(ByteReader& r, const EncParams& pr) {
    AutoKeySet keys;
    const u32 count = r.get_u32();
    for (u32 i = 0; i < count; ++i) {
        const u64 theta = r.get_u64();
        keys.emplace(theta, AutomorphismKey{theta, read_gadget(r, pr)});
    }
    return keys;
}

}  // namespace encctl
