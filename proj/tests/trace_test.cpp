#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "encctl/packing.hpp"
#include "encctl/primes.hpp"
#include "encctl/ring.hpp"
#include "encctl/rlwe.hpp"
#include "encctl/rng.hpp"
#include "encctl/trace.hpp"
#include "test_util.hpp"

using namespace encctl;
using namespace encctl::testutil;

namespace {

u64 standard_q() {
    static const u64 q = find_ntt_prime(1ull << 56, 1u << 14);
    return q;
}
u64 standard_p() {
    static const u64 p = find_ntt_prime(1ull << 51, 1u << 14);
    return p;
}

EncParams params_at(u32 degree) {
    return EncParams::make(degree, standard_q(), standard_p(), standard_q());
}

AutoKeySet keys_for(u32 alpha, u32 beta, const SecretKey& sk, const EncParams& pr,
                    CounterRng& rng) {
    AutoKeySet keys;
    for (u64 theta : trace_exponents(alpha, beta))
        keys.emplace(theta % (2ull * pr.degree()), gen_automorphism_key(theta, sk, pr, rng));
    return keys;
}

Ciphertext random_ciphertext(const EncParams& pr, CounterRng& rng) {
    return {detail::sample_uniform(pr.ctx_q, rng), detail::sample_uniform(pr.ctx_q, rng)};
}

// Centered value at one coefficient position.
i64 coeff(const RingElement& e, u32 j) { return e.coeff_crt(j); }

}  // namespace

TEST(TraceExponents, CascadeAndKeySetContents) {
    EXPECT_EQ(trace_exponents(1, 8), (std::vector<u64>{9, 5, 3}));
    EXPECT_EQ(trace_exponents(8, 16), (std::vector<u64>{17}));
    EXPECT_EQ(trace_exponents(1, 2), (std::vector<u64>{3}));
    EXPECT_EQ(trace_exponents(1, 128).size(), 7u);
    EXPECT_EQ(trace_exponents(1, 128).front(), 129u);

    // Deployment key sets: union over both projections a controller performs.
    EXPECT_EQ(trace_key_exponents(8, 1), (std::vector<u64>{3, 5, 9}));
    EXPECT_EQ(trace_key_exponents(4, 2), (std::vector<u64>{3, 5, 9}));
    EXPECT_EQ(trace_key_exponents(4, 1), (std::vector<u64>{3, 5}));

    EXPECT_THROW(trace_exponents(8, 8), std::invalid_argument);
    EXPECT_THROW(trace_exponents(16, 8), std::invalid_argument);
    EXPECT_THROW(trace_exponents(3, 8), std::invalid_argument);
    EXPECT_THROW(trace_exponents(1, 12), std::invalid_argument);
}

// The reference cascade restricted to the N/beta grid must equal the
// N/alpha slot projection exactly, for every basis monomial and for random
// polynomials, across every valid (alpha, beta) pair at small degrees.
TEST(PlaintextTrace, GridEqualsSlotProjectionSmallRingsExhaustive) {
    for (u32 n : {4u, 8u, 16u, 32u, 64u}) {
        auto ctx = RingContext::make(n, {257});
        CounterRng rng(500 + n);
        for (u32 beta = 2; beta <= n; beta *= 2) {
            for (u32 alpha = 1; alpha < beta; alpha *= 2) {
                // All monomials X^j with a handful of values covers every
                // coefficient position exactly.
                for (u32 j = 0; j < n; ++j) {
                    for (i64 v : {1, -1, 57, -128}) {
                        auto a = RingElement::monomial(ctx, j, v);
                        auto tr = plaintext_trace(a, alpha, beta);
                        auto want = slot_project(a, alpha);
                        for (u32 m = 0; m < beta; ++m) {
                            u32 pos = m * (n / beta);
                            EXPECT_EQ(coeff(tr, pos), coeff(want, pos))
                                << "n=" << n << " a=" << alpha << " b=" << beta << " j=" << j;
                        }
                    }
                }
                for (int trial = 0; trial < 50; ++trial) {
                    auto a = RingElement::from_coeffs(ctx, random_centered_vec(rng, n, 257));
                    auto tr = plaintext_trace(a, alpha, beta);
                    auto want = slot_project(a, alpha);
                    for (u32 m = 0; m < beta; ++m) {
                        u32 pos = m * (n / beta);
                        EXPECT_EQ(coeff(tr, pos), coeff(want, pos));
                    }
                }
            }
        }
    }
}

TEST(PlaintextTrace, GridEqualsSlotProjectionFullDegree) {
    const u32 n = 1u << 13;
    auto ctx = RingContext::make(n, {standard_q()});
    CounterRng rng(77);
    for (auto [alpha, beta] : {std::pair<u32, u32>{1, 8}, {8, 16}, {1, 128}, {4, 4096}}) {
        auto a = RingElement::from_coeffs(ctx, random_centered_vec(rng, n, standard_q()));
        auto tr = plaintext_trace(a, alpha, beta);
        auto want = slot_project(a, alpha);
        for (u32 m = 0; m < beta; ++m) {
            u32 pos = m * (n / beta);
            ASSERT_EQ(coeff(tr, pos), coeff(want, pos)) << "a=" << alpha << " b=" << beta;
        }
    }
}

// Hoisting the per-level halvings into one up-front scalar is a pure
// refactoring of the polynomial map: the interleaved form produces the
// identical element.
TEST(PlaintextTrace, HoistedScalarMatchesInterleavedHalving) {
    const u32 n = 64;
    const u64 q = 257;
    auto ctx = RingContext::make(n, {q});
    CounterRng rng(11);
    const i64 half = static_cast<i64>((q + 1) / 2);
    for (auto [alpha, beta] : {std::pair<u32, u32>{1, 8}, {2, 32}, {1, 64}, {8, 16}}) {
        for (int trial = 0; trial < 100; ++trial) {
            auto a = RingElement::from_coeffs(ctx, random_centered_vec(rng, n, q));
            RingElement inter = a;
            for (u32 k = beta; k > alpha; k /= 2) {
                inter = scalar_mul(inter, half);
                inter = inter + plaintext_automorphism(inter, k + 1);
            }
            EXPECT_TRUE(inter == plaintext_trace(a, alpha, beta));
        }
    }
}

// Noise contract at production parameters, multi-level projection: for
// arbitrary ciphertexts the projected grid of the result stays within
// sigma_mult * log2(beta/alpha) of the input's alpha-grid. 100 trials, no
// violation allowed.
TEST(HomomorphicTrace, MultiLevelNoiseBoundFullDegree) {
    auto pr = params_at(1u << 13);
    CounterRng rng(900);
    auto sk = keygen(pr, 31);
    auto keys = keys_for(1, 8, sk, pr, rng);
    OpCounter ops;
    const u32 n = pr.degree();
    const double bound = pr.sigma_mult() * 3.0;  // log2(8/1) = 3
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        auto c = random_ciphertext(pr, rng);
        auto before = decrypt(c, sk);
        auto after = decrypt(homomorphic_trace(c, 1, 8, keys, ops), sk);
        for (u32 m = 0; m < 8; ++m) {
            u32 pos = m * (n / 8);
            i64 want = (pos == 0) ? coeff(before, 0) : 0;
            double dev = std::fabs(static_cast<double>(coeff(after, pos) - want));
            worst = std::max(worst, dev);
            ASSERT_LT(dev, bound) << "trial " << trial << " slot " << m;
        }
    }
    EXPECT_EQ(ops.value(), 300u);  // 3 keyed automorphisms per call
    RecordProperty("worst_dev", worst);
}

TEST(HomomorphicTrace, SingleLevelNoiseBoundFullDegree) {
    auto pr = params_at(1u << 13);
    CounterRng rng(901);
    auto sk = keygen(pr, 32);
    auto keys = keys_for(8, 16, sk, pr, rng);
    OpCounter ops;
    const u32 n = pr.degree();
    const double bound = pr.sigma_mult();  // log2(16/8) = 1
    for (int trial = 0; trial < 100; ++trial) {
        auto c = random_ciphertext(pr, rng);
        auto before = decrypt(c, sk);
        auto after = decrypt(homomorphic_trace(c, 8, 16, keys, ops), sk);
        for (u32 m = 0; m < 16; ++m) {
            u32 pos = m * (n / 16);
            i64 want = (pos % (n / 8) == 0) ? coeff(before, pos) : 0;
            ASSERT_LT(std::fabs(static_cast<double>(coeff(after, pos) - want)), bound)
                << "trial " << trial << " slot " << m;
        }
    }
    EXPECT_EQ(ops.value(), 100u);
}

// Deep cascade at a small ring: beta equal to the full degree, seven levels.
TEST(HomomorphicTrace, DeepCascadeSmallRing) {
    auto pr = params_at(1u << 7);
    CounterRng rng(902);
    auto sk = keygen(pr, 33);
    auto keys = keys_for(1, 128, sk, pr, rng);
    OpCounter ops;
    const double bound = pr.sigma_mult() * 7.0;  // log2(128) = 7
    for (int trial = 0; trial < 100; ++trial) {
        auto c = random_ciphertext(pr, rng);
        auto before = decrypt(c, sk);
        auto after = decrypt(homomorphic_trace(c, 1, 128, keys, ops), sk);
        for (u32 pos = 0; pos < 128; ++pos) {
            i64 want = (pos == 0) ? coeff(before, 0) : 0;
            ASSERT_LT(std::fabs(static_cast<double>(coeff(after, pos) - want)), bound)
                << "trial " << trial << " pos " << pos;
        }
    }
    EXPECT_EQ(ops.value(), 700u);
}

// A packed vector's first entry survives as the constant slot; the other
// packing slots are annihilated to within the noise budget.
TEST(HomomorphicTrace, PackedConstantSlotExtraction) {
    auto pr = params_at(1u << 13);
    PackingLayout layout(pr.degree(), 8, 1, 1);
    CounterRng rng(903);
    auto sk = keygen(pr, 34);
    auto keys = keys_for(1, 8, sk, pr, rng);
    OpCounter ops;
    const double bound = pr.sigma_mult() * 3.0;
    std::vector<i64> z = {123456789, -987654, 42, -1, 777777, -31415926, 27182818, -999};
    auto ct = encrypt(pack_vector(pr.ctx_q, layout, z), sk, pr, rng);
    auto out = decrypt(homomorphic_trace(ct, 1, 8, keys, ops), sk);
    EXPECT_LT(std::fabs(static_cast<double>(coeff(out, 0) - z[0])), bound);
    for (u32 m = 1; m < 8; ++m)
        EXPECT_LT(std::fabs(static_cast<double>(coeff(out, m * layout.state_gap()))), bound);
}

// With noise disabled every step of the projection is exact, so the result
// decrypts to precisely the reference cascade of the input message.
TEST(HomomorphicTrace, ZeroNoiseMatchesPlaintextTraceExactly) {
    auto pr = params_at(1u << 9);
    pr.zero_noise = true;
    CounterRng rng(904);
    auto sk = keygen(pr, 35);
    auto keys = keys_for(1, 8, sk, pr, rng);
    OpCounter ops;
    for (int trial = 0; trial < 20; ++trial) {
        auto m = RingElement::from_coeffs(
            pr.ctx_q, random_centered_vec(rng, pr.degree(), standard_q()));
        auto ct = encrypt(m, sk, pr, rng);
        auto hom = decrypt(homomorphic_trace(ct, 1, 8, keys, ops), sk);
        auto ref = plaintext_trace(m, 1, 8);
        EXPECT_TRUE(hom == ref);
        auto grid_want = slot_project(m, 1);
        for (u32 mm = 0; mm < 8; ++mm) {
            u32 pos = mm * (pr.degree() / 8);
            EXPECT_EQ(coeff(hom, pos), coeff(grid_want, pos));
        }
    }
}

TEST(HomomorphicTrace, CounterDeltaAndValidation) {
    auto pr = params_at(1u << 6);
    CounterRng rng(905);
    auto sk = keygen(pr, 36);
    auto keys = keys_for(1, 16, sk, pr, rng);
    OpCounter ops;
    auto c = random_ciphertext(pr, rng);

    homomorphic_trace(c, 1, 16, keys, ops);
    EXPECT_EQ(ops.value(), 4u);
    ops.reset();
    homomorphic_trace(c, 4, 16, keys, ops);
    EXPECT_EQ(ops.value(), 2u);
    ops.reset();
    homomorphic_trace(c, 8, 16, keys, ops);
    EXPECT_EQ(ops.value(), 1u);

    EXPECT_THROW(homomorphic_trace(c, 8, 8, keys, ops), std::invalid_argument);
    EXPECT_THROW(homomorphic_trace(c, 16, 8, keys, ops), std::invalid_argument);
    EXPECT_THROW(homomorphic_trace(c, 3, 16, keys, ops), std::invalid_argument);
    EXPECT_THROW(homomorphic_trace(c, 1, 12, keys, ops), std::invalid_argument);
    EXPECT_THROW(homomorphic_trace(c, 1, 128, keys, ops), std::invalid_argument);  // beta > N

    // Missing key: remove theta = 5 and ask for a cascade that needs it.
    keys.erase(5);
    ops.reset();
    EXPECT_THROW(homomorphic_trace(c, 1, 16, keys, ops), std::invalid_argument);
    EXPECT_EQ(ops.value(), 0u);  // validated before any work
}
