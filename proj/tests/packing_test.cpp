#include <gtest/gtest.h>

#include <vector>

#include "encctl/packing.hpp"
#include "encctl/primes.hpp"
#include "encctl/ring.hpp"
#include "encctl/rng.hpp"
#include "test_util.hpp"

using namespace encctl;
using namespace encctl::testutil;

namespace {

RingCtxPtr ctx_small(u32 n) { return RingContext::make(n, {257}); }

u64 standard_q() {
    static const u64 q = find_ntt_prime(1ull << 56, 1u << 14);
    return q;
}

std::vector<std::vector<i64>> random_matrix(CounterRng& rng, std::size_t rows, std::size_t cols, u64 q) {
    std::vector<std::vector<i64>> m(rows);
    for (auto& row : m) row = random_centered_vec(rng, cols, q);
    return m;
}

// Random block-diagonal matrix whose blocks are companion-shaped: the first
// column of each block is free, the rest is a shifted identity. Returns the
// matrix plus the list of designated column indices (block starts).
struct SparseColumnForm {
    std::vector<std::vector<i64>> f;
    std::vector<u32> r;
};

SparseColumnForm random_block_companion(CounterRng& rng, u32 n, u64 q) {
    SparseColumnForm out;
    out.f.assign(n, std::vector<i64>(n, 0));
    u32 start = 0;
    while (start < n) {
        u32 max_len = n - start;
        u32 len = 1 + static_cast<u32>(rng.uniform_below(max_len));
        out.r.push_back(start);
        auto col = random_centered_vec(rng, len, q);
        for (u32 i = 0; i < len; ++i) out.f[start + i][start] = col[i];
        for (u32 c = 1; c < len; ++c) out.f[start + c - 1][start + c] = 1;
        start += len;
    }
    return out;
}

// Column r of the pure shift structure: e_{r-1} for r >= 1, -e_{n-1} for r = 0.
std::vector<i64> shift_column(u32 n, u32 r) {
    std::vector<i64> col(n, 0);
    if (r == 0)
        col[n - 1] = -1;
    else
        col[r - 1] = 1;
    return col;
}

}  // namespace

TEST(Packing, LayoutValidation) {
    PackingLayout a(32, 8, 1, 1);
    EXPECT_EQ(a.tau, 1u);
    EXPECT_EQ(a.state_gap(), 4u);
    EXPECT_EQ(a.output_gap(), 4u);

    PackingLayout b(32, 4, 2, 2);
    EXPECT_EQ(b.tau, 2u);
    EXPECT_EQ(b.state_gap(), 8u);
    EXPECT_EQ(b.output_gap(), 4u);

    EXPECT_EQ(PackingLayout(64, 4, 1, 3).tau, 4u);
    EXPECT_EQ(PackingLayout(64, 4, 1, 5).tau, 8u);

    EXPECT_THROW(PackingLayout(32, 6, 1, 1), std::invalid_argument);   // n not a power of two
    EXPECT_THROW(PackingLayout(32, 8, 5, 1), std::invalid_argument);   // n*p > N
    EXPECT_THROW(PackingLayout(32, 8, 1, 5), std::invalid_argument);   // n*tau > N
    EXPECT_THROW(PackingLayout(32, 8, 0, 1), std::invalid_argument);
}

TEST(Packing, PackUnpackRoundTrip) {
    auto ctx = ctx_small(32);
    PackingLayout layout(32, 8, 2, 2);
    CounterRng rng(1001);
    for (int t = 0; t < 200; ++t) {
        auto z = random_centered_vec(rng, 8, 257);
        EXPECT_EQ(unpack_state(pack_vector(ctx, layout, z), layout), z);
        auto y = random_centered_vec(rng, 2, 257);
        auto packed = pack_input(ctx, layout, y);
        EXPECT_EQ(packed.limb(0)[0], y[0]);
        EXPECT_EQ(packed.limb(0)[1], y[1]);
    }
}

TEST(Packing, SlotExtractByMonomialShift) {
    auto ctx = ctx_small(64);
    PackingLayout layout(64, 8, 1, 1);
    CounterRng rng(1002);
    for (int t = 0; t < 200; ++t) {
        auto z = random_centered_vec(rng, 8, 257);
        auto packed = pack_vector(ctx, layout, z);
        for (u32 i = 0; i < 8; ++i) {
            auto shifted = monomial_mul(packed, -static_cast<i64>(i) * layout.state_gap());
            auto proj = slot_project(shifted, 1);
            EXPECT_EQ(proj.limb(0)[0], z[i]);
            for (u32 k = 1; k < 64; ++k) EXPECT_EQ(proj.limb(0)[k], 0);
        }
    }
}

TEST(Packing, SlotProjectKeepsGridOnly) {
    auto ctx = ctx_small(32);
    CounterRng rng(1003);
    auto a = RingElement::from_coeffs(ctx, random_centered_vec(rng, 32, 257));
    auto proj = slot_project(a, 4);
    for (u32 k = 0; k < 32; ++k) {
        if (k % 8 == 0)
            EXPECT_EQ(proj.limb(0)[k], a.limb(0)[k]);
        else
            EXPECT_EQ(proj.limb(0)[k], 0);
    }
    EXPECT_THROW(slot_project(a, 3), std::invalid_argument);
    EXPECT_THROW(slot_project(a, 64), std::invalid_argument);
}

// Multiplying two elements supported on the same slot grid stays on the grid,
// and off-grid content of the second factor never reaches grid positions.
TEST(Packing, SlotAbsorption) {
    auto ctx = ctx_small(64);
    CounterRng rng(1004);
    for (u32 alpha : {1u, 2u, 4u, 8u, 16u, 32u, 64u}) {
        for (int t = 0; t < 150; ++t) {
            auto a = RingElement::from_coeffs(ctx, random_centered_vec(rng, 64, 257));
            auto b = RingElement::from_coeffs(ctx, random_centered_vec(rng, 64, 257));
            auto lhs = ring_mul(slot_project(a, alpha), slot_project(b, alpha));
            auto rhs = slot_project(ring_mul(slot_project(a, alpha), b), alpha);
            EXPECT_TRUE(lhs == rhs) << "alpha=" << alpha;
        }
    }
}

// Pack(F z) reproduced from the designated packed columns plus one shift:
// Pack(F z) = sum_i Ftilde_i * z_{r_i} + X^{-N/n} Pack(z).
TEST(Packing, StateRecursionIdentity) {
    CounterRng rng(1005);
    struct Shape {
        u32 N, n;
    };
    for (Shape shape : {Shape{32, 8}, Shape{32, 4}, Shape{64, 8}, Shape{16, 16}}) {
        auto ctx = ctx_small(shape.N);
        PackingLayout layout(shape.N, shape.n, 1, 1);
        for (int t = 0; t < 250; ++t) {
            auto form = random_block_companion(rng, shape.n, 257);
            auto z = random_centered_vec(rng, shape.n, 257);

            auto lhs = pack_vector(ctx, layout, dense_matvec_mod(form.f, z, 257));

            auto rhs = monomial_mul(pack_vector(ctx, layout, z), -static_cast<i64>(layout.state_gap()));
            for (u32 ri : form.r) {
                std::vector<i64> sparse_col(shape.n);
                auto s_col = shift_column(shape.n, ri);
                for (u32 i = 0; i < shape.n; ++i) sparse_col[i] = form.f[i][ri] - s_col[i];
                rhs += scalar_mul(pack_vector(ctx, layout, sparse_col), z[ri]);
            }
            EXPECT_TRUE(lhs == rhs) << "N=" << shape.N << " n=" << shape.n << " trial " << t;
        }
    }
}

// Same identity with every column designated (dense matrix, r = all indices).
TEST(Packing, StateRecursionIdentityDenseMatrix) {
    CounterRng rng(1006);
    auto ctx = ctx_small(32);
    PackingLayout layout(32, 8, 1, 1);
    for (int t = 0; t < 250; ++t) {
        auto f = random_matrix(rng, 8, 8, 257);
        auto z = random_centered_vec(rng, 8, 257);
        auto lhs = pack_vector(ctx, layout, dense_matvec_mod(f, z, 257));
        auto rhs = monomial_mul(pack_vector(ctx, layout, z), -static_cast<i64>(layout.state_gap()));
        for (u32 ri = 0; ri < 8; ++ri) {
            std::vector<i64> sparse_col(8);
            auto s_col = shift_column(8, ri);
            for (u32 i = 0; i < 8; ++i) sparse_col[i] = f[i][ri] - s_col[i];
            rhs += scalar_mul(pack_vector(ctx, layout, sparse_col), z[ri]);
        }
        EXPECT_TRUE(lhs == rhs) << "trial " << t;
    }
}

// Slot_n(Gtilde * ytilde) = Pack(G y), including the boundary case n*p = N.
TEST(Packing, InputMapIdentity) {
    CounterRng rng(1007);
    struct Shape {
        u32 N, n, p;
    };
    for (Shape shape : {Shape{32, 8, 1}, Shape{32, 4, 2}, Shape{64, 8, 3}, Shape{16, 4, 4}}) {
        auto ctx = ctx_small(shape.N);
        PackingLayout layout(shape.N, shape.n, shape.p, 1);
        for (int t = 0; t < 300; ++t) {
            auto g = random_matrix(rng, shape.n, shape.p, 257);
            auto y = random_centered_vec(rng, shape.p, 257);
            auto lhs = slot_project(ring_mul(pack_input_matrix(ctx, layout, g), pack_input(ctx, layout, y)), shape.n);
            auto rhs = pack_vector(ctx, layout, dense_matvec_mod(g, y, 257));
            EXPECT_TRUE(lhs == rhs) << "N=" << shape.N << " n=" << shape.n << " p=" << shape.p;
        }
    }
}

// Reading the output grid of Htilde * Pack(z) gives H z.
TEST(Packing, OutputMapIdentity) {
    CounterRng rng(1008);
    struct Shape {
        u32 N, n, m;
    };
    for (Shape shape : {Shape{32, 8, 1}, Shape{32, 4, 2}, Shape{64, 8, 3}, Shape{64, 4, 4}}) {
        auto ctx = ctx_small(shape.N);
        PackingLayout layout(shape.N, shape.n, 1, shape.m);
        for (int t = 0; t < 300; ++t) {
            auto h = random_matrix(rng, shape.m, shape.n, 257);
            auto z = random_centered_vec(rng, shape.n, 257);
            auto prod = ring_mul(pack_output_matrix(ctx, layout, h), pack_vector(ctx, layout, z));
            auto expect = dense_matvec_mod(h, z, 257);
            EXPECT_EQ(unpack_output(prod, layout), expect) << "N=" << shape.N << " n=" << shape.n << " m=" << shape.m;
        }
    }
}

// The two deployment shapes at full ring degree and the production modulus.
TEST(Packing, BenchmarkShapesAtFullDegree) {
    const u64 q = standard_q();
    auto ctx = RingContext::make(1u << 13, {q});
    CounterRng rng(1009);

    {
        PackingLayout layout(1u << 13, 8, 1, 1);
        auto g = random_matrix(rng, 8, 1, q);
        auto y = random_centered_vec(rng, 1, q);
        auto lhs = slot_project(ring_mul(pack_input_matrix(ctx, layout, g), pack_input(ctx, layout, y)), 8);
        EXPECT_TRUE(lhs == pack_vector(ctx, layout, dense_matvec_mod(g, y, q)));

        auto h = random_matrix(rng, 1, 8, q);
        auto z = random_centered_vec(rng, 8, q);
        auto prod = ring_mul(pack_output_matrix(ctx, layout, h), pack_vector(ctx, layout, z));
        EXPECT_EQ(unpack_output(prod, layout), dense_matvec_mod(h, z, q));
    }
    {
        PackingLayout layout(1u << 13, 4, 2, 2);
        auto g = random_matrix(rng, 4, 2, q);
        auto y = random_centered_vec(rng, 2, q);
        auto lhs = slot_project(ring_mul(pack_input_matrix(ctx, layout, g), pack_input(ctx, layout, y)), 4);
        EXPECT_TRUE(lhs == pack_vector(ctx, layout, dense_matvec_mod(g, y, q)));

        auto h = random_matrix(rng, 2, 4, q);
        auto z = random_centered_vec(rng, 4, q);
        auto prod = ring_mul(pack_output_matrix(ctx, layout, h), pack_vector(ctx, layout, z));
        EXPECT_EQ(unpack_output(prod, layout), dense_matvec_mod(h, z, q));
    }
}
