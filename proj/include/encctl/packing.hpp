#pragma once

// Coefficient packing maps between vectors/matrices over Z_q and ring
// elements. State vectors live on the N/n-grid, stacked outputs on the
// N/(n*tau)-grid, and inputs sit densely in the low-order coefficients.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "ring.hpp"

namespace encctl {

inline u32 next_pow2_u32(u32 m) {
    u32 t = 1;
    while (t < m) t <<= 1;
    return t;
}

struct PackingLayout {
    u32 N;    // ring degree
    u32 n;    // controller order (power of two)
    u32 p;    // input channels
    u32 m;    // output channels
    u32 tau;  // output stacking factor, smallest power of two >= m

    PackingLayout(u32 ring_degree, u32 order, u32 inputs, u32 outputs)
        : N(ring_degree), n(order), p(inputs), m(outputs), tau(next_pow2_u32(outputs)) {
        if (n == 0 || (n & (n - 1)) != 0) throw std::invalid_argument("PackingLayout: n must be a power of two");
        if (p == 0 || m == 0) throw std::invalid_argument("PackingLayout: empty dimension");
        if (static_cast<u64>(n) * p > N) throw std::invalid_argument("PackingLayout: n*p exceeds ring degree");
        if (static_cast<u64>(n) * tau > N) throw std::invalid_argument("PackingLayout: n*tau exceeds ring degree");
    }

    u32 state_gap() const { return N / n; }
    u32 output_gap() const { return N / (n * tau); }
};

namespace detail {
// coeffs[...] += value * X^exponent with the negacyclic sign fold.
inline void add_monomial(std::vector<i64>& coeffs, i64 exponent, i64 value) {
    const i64 two_n = 2ll * static_cast<i64>(coeffs.size());
    i64 e = ((exponent % two_n) + two_n) % two_n;
    if (e >= static_cast<i64>(coeffs.size())) {
        coeffs[static_cast<std::size_t>(e) - coeffs.size()] -= value;
    } else {
        coeffs[static_cast<std::size_t>(e)] += value;
    }
}
}  // namespace detail

// Pack(z) = sum_i z_i X^{i N/n}.
inline RingElement pack_vector(const RingCtxPtr& ctx, const PackingLayout& layout, std::span<const i64> z) {
    if (z.size() != layout.n) throw std::invalid_argument("pack_vector: wrong length");
    std::vector<i64> coeffs(layout.N, 0);
    for (u32 i = 0; i < layout.n; ++i) coeffs[static_cast<std::size_t>(i) * layout.state_gap()] = z[i];
    return RingElement::from_coeffs(ctx, coeffs);
}

// Input word: sum_j y_j X^j (dense low-order coefficients).
inline RingElement pack_input(const RingCtxPtr& ctx, const PackingLayout& layout, std::span<const i64> y) {
    if (y.size() != layout.p) throw std::invalid_argument("pack_input: wrong length");
    std::vector<i64> coeffs(layout.N, 0);
    for (u32 j = 0; j < layout.p; ++j) coeffs[j] = y[j];
    return RingElement::from_coeffs(ctx, coeffs);
}

// Keep the N/alpha-equidistant coefficients, zero the rest.
inline RingElement slot_project(const RingElement& a, u32 alpha) {
    const u32 n = a.degree();
    if (alpha == 0 || (alpha & (alpha - 1)) != 0 || alpha > n) throw std::invalid_argument("slot_project: bad alpha");
    const u32 gap = n / alpha;
    RingElement out = RingElement::zero(a.context());
    for (std::size_t l = 0; l < a.limb_count(); ++l) {
        auto src = a.limb(l);
        auto dst = out.limb(l);
        for (u32 i = 0; i < alpha; ++i) dst[static_cast<std::size_t>(i) * gap] = src[static_cast<std::size_t>(i) * gap];
    }
    return out;
}

// Read the n state slots (first-limb centered values).
inline std::vector<i64> unpack_state(const RingElement& a, const PackingLayout& layout) {
    std::vector<i64> z(layout.n);
    auto limb = a.limb(0);
    for (u32 i = 0; i < layout.n; ++i) z[i] = limb[static_cast<std::size_t>(i) * layout.state_gap()];
    return z;
}

// Read the m stacked output slots at spacing N/(n*tau).
inline std::vector<i64> unpack_output(const RingElement& a, const PackingLayout& layout) {
    std::vector<i64> u(layout.m);
    auto limb = a.limb(0);
    for (u32 i = 0; i < layout.m; ++i) u[i] = limb[static_cast<std::size_t>(i) * layout.output_gap()];
    return u;
}

// G word: sum_i X^{i N/n} sum_j G_{ij} X^{-j}; rows indexed by state slot.
inline RingElement pack_input_matrix(const RingCtxPtr& ctx, const PackingLayout& layout,
                                     const std::vector<std::vector<i64>>& g) {
    if (g.size() != layout.n) throw std::invalid_argument("pack_input_matrix: need n rows");
    std::vector<i64> coeffs(layout.N, 0);
    for (u32 i = 0; i < layout.n; ++i) {
        if (g[i].size() != layout.p) throw std::invalid_argument("pack_input_matrix: need p columns");
        for (u32 j = 0; j < layout.p; ++j)
            detail::add_monomial(coeffs, static_cast<i64>(i) * layout.state_gap() - static_cast<i64>(j), g[i][j]);
    }
    return RingElement::from_coeffs(ctx, coeffs);
}

// H word: sum_i X^{i N/(n tau)} sum_j H_{ij} X^{-j N/n}; rows indexed by output slot.
inline RingElement pack_output_matrix(const RingCtxPtr& ctx, const PackingLayout& layout,
                                      const std::vector<std::vector<i64>>& h) {
    if (h.size() != layout.m) throw std::invalid_argument("pack_output_matrix: need m rows");
    std::vector<i64> coeffs(layout.N, 0);
    for (u32 i = 0; i < layout.m; ++i) {
        if (h[i].size() != layout.n) throw std::invalid_argument("pack_output_matrix: need n columns");
        for (u32 j = 0; j < layout.n; ++j)
            detail::add_monomial(coeffs, static_cast<i64>(i) * layout.output_gap() - static_cast<i64>(j) * layout.state_gap(),
                                 h[i][j]);
    }
    return RingElement::from_coeffs(ctx, coeffs);
}

}  // namespace encctl
