#pragma once
// Slot projection over the negacyclic ring: keeps the N/alpha-equidistant
// coefficients of a message while zeroing the other N/beta-equidistant ones,
// homomorphically (one keyed automorphism per halving level) or on a bare
// polynomial (reference cascade).

#include <cstdint>
#include <stdexcept>
#include <vector>

#include <encctl/rlwe.hpp>

namespace encctl {

namespace detail {

inline bool is_pow2_u32(u32 v) { return v != 0 && (v & (v - 1)) == 0; }

inline u32 log2_exact_u32(u32 v) {
    u32 l = 0;
    while ((1u << l) < v) ++l;
    return l;
}

inline void validate_trace_args(u32 alpha, u32 beta, u32 degree) {
    if (!is_pow2_u32(alpha) || !is_pow2_u32(beta))
        throw std::invalid_argument("trace: alpha and beta must be powers of two");
    if (alpha >= beta)
        throw std::invalid_argument("trace: alpha must be strictly less than beta");
    if (beta > degree)
        throw std::invalid_argument("trace: beta must not exceed the ring degree");
}

}  // namespace detail

// Automorphism exponents consumed by the cascade from beta down to alpha:
// theta = k + 1 for k = beta, beta/2, ..., 2*alpha.
inline std::vector<u64> trace_exponents(u32 alpha, u32 beta) {
    if (!detail::is_pow2_u32(alpha) || !detail::is_pow2_u32(beta))
        throw std::invalid_argument("trace: alpha and beta must be powers of two");
    if (alpha >= beta)
        throw std::invalid_argument("trace: alpha must be strictly less than beta");
    std::vector<u64> out;
    for (u32 k = beta; k > alpha; k /= 2) out.push_back(static_cast<u64>(k) + 1);
    return out;
}

// Exponents a controller deployment precomputes keys for, covering every
// projection it performs: theta = 2^d + 1 for 0 < d <= log2(order * copies).
inline std::vector<u64> trace_key_exponents(u32 order, u32 copies) {
    if (!detail::is_pow2_u32(order) || !detail::is_pow2_u32(copies))
        throw std::invalid_argument("trace: order and copies must be powers of two");
    const u32 top = order * copies;
    std::vector<u64> out;
    for (u32 d = 1; (1u << d) <= top; ++d) out.push_back((1ull << d) + 1);
    return out;
}

// Reference cascade on an unencrypted polynomial: one exact division by
// beta/alpha followed by the add-automorphism ladder. Restricted to the
// N/beta grid the result equals the N/alpha slot projection exactly.
inline RingElement plaintext_trace(const RingElement& a, u32 alpha, u32 beta) {
    detail::validate_trace_args(alpha, beta, a.degree());
    const u64 q = a.context()->field(0).modulus();
    const u32 levels = detail::log2_exact_u32(beta / alpha);
    const u64 inv = pow_mod_u64((q + 1) / 2, levels, q);
    RingElement out = scalar_mul(a, center_u64(inv, q));
    for (u32 k = beta; k > alpha; k /= 2)
        out = out + plaintext_automorphism(out, static_cast<u64>(k) + 1);
    return out;
}

// Homomorphic slot projection. Consumes exactly log2(beta/alpha) keyed
// automorphisms, i.e. that many external products on the shared counter.
//
// The per-level halvings are hoisted into a single exact scalar multiply up
// front: the scalar commutes with every automorphism, so the polynomial map
// is identical to interleaving the halvings, but noise injected by the keyed
// automorphisms is never itself divided by two. (Halving an odd residue
// modulo an odd q yields a near-q/2 value, so re-divided automorphism noise
// would swamp the projected slots; the hoisted form keeps every slot within
// the additive noise budget.)
inline Ciphertext homomorphic_trace(const Ciphertext& c, u32 alpha, u32 beta,
                                    const AutoKeySet& keys, OpCounter& ops) {
    detail::validate_trace_args(alpha, beta, c.b.degree());
    const u64 q = c.b.context()->field(0).modulus();
    const u32 degree = c.b.degree();
    for (u32 k = beta; k > alpha; k /= 2)
        find_automorphism_key(keys, static_cast<u64>(k) + 1, degree);  // throws if missing
    const u32 levels = detail::log2_exact_u32(beta / alpha);
    const u64 inv = pow_mod_u64((q + 1) / 2, levels, q);
    Ciphertext out = ct_scalar_mul(c, center_u64(inv, q));
    for (u32 k = beta; k > alpha; k /= 2) {
        const auto& ak = find_automorphism_key(keys, static_cast<u64>(k) + 1, degree);
        out = ct_add(out, ciphertext_automorphism(out, ak, ops));
    }
    return out;
}

}  // namespace encctl
