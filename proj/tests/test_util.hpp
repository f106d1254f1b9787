#pragma once

// Independent oracles used across the test suites. These deliberately avoid
// the library's fast paths: convolutions are schoolbook, matrix work is naive.

#include <cstdint>
#include <vector>

#include "encctl/primes.hpp"
#include "encctl/ring.hpp"
#include "encctl/rng.hpp"

namespace encctl::testutil {

// c_i = sum_{j<=i} a_{i-j} b_j - sum_{j>i} a_{N+i-j} b_j (mod q), centered.
inline std::vector<i64> schoolbook_negacyclic(const std::vector<i64>& a, const std::vector<i64>& b, u64 q) {
    const std::size_t n = a.size();
    std::vector<i64> c(n);
    for (std::size_t i = 0; i < n; ++i) {
        i128 acc = 0;
        for (std::size_t j = 0; j < n; ++j) {
            const i128 prod = static_cast<i128>(a[(i + n - j) % n]) * b[j];
            if (j <= i) {
                acc += prod;
            } else {
                acc -= prod;
            }
        }
        c[i] = reduce_center_i128(acc, q);
    }
    return c;
}

// Same product realized as a skew-circulant matrix acting on b.
inline std::vector<i64> skew_circulant_matvec(const std::vector<i64>& a, const std::vector<i64>& b, u64 q) {
    const std::size_t n = a.size();
    std::vector<i64> c(n);
    for (std::size_t i = 0; i < n; ++i) {
        i128 acc = 0;
        for (std::size_t j = 0; j < n; ++j) {
            i128 entry = j <= i ? static_cast<i128>(a[i - j]) : -static_cast<i128>(a[n + i - j]);
            acc += entry * b[j];
        }
        c[i] = reduce_center_i128(acc, q);
    }
    return c;
}

inline std::vector<i64> random_centered_vec(CounterRng& rng, std::size_t n, u64 q) {
    std::vector<i64> v(n);
    for (auto& x : v) x = center_u64(rng.uniform_below(q), q);
    return v;
}

// Dense y = M x over the centered integers mod q; M is row-major n x m.
inline std::vector<i64> dense_matvec_mod(const std::vector<std::vector<i64>>& m, const std::vector<i64>& x, u64 q) {
    std::vector<i64> y(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
        i128 acc = 0;
        for (std::size_t j = 0; j < x.size(); ++j) acc += static_cast<i128>(m[i][j]) * x[j];
        y[i] = reduce_center_i128(acc, q);
    }
    return y;
}

}  // namespace encctl::testutil
