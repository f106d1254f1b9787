#pragma once

// Deterministic primality testing and NTT-friendly modulus selection.

#include <cstdint>
#include <stdexcept>

namespace encctl {

using u32 = std::uint32_t;
using u64 = std::uint64_t;
using i64 = std::int64_t;
using u128 = unsigned __int128;
using i128 = __int128;

inline u64 mul_mod_u64(u64 a, u64 b, u64 q) {
    return static_cast<u64>((static_cast<u128>(a) * b) % q);
}

inline u64 pow_mod_u64(u64 base, u64 exp, u64 q) {
    u64 r = 1 % q;
    base %= q;
    while (exp) {
        if (exp & 1) r = mul_mod_u64(r, base, q);
        base = mul_mod_u64(base, base, q);
        exp >>= 1;
    }
    return r;
}

// Miller-Rabin with a base set that is deterministic for all 64-bit inputs.
inline bool is_prime_u64(u64 n) {
    if (n < 2) return false;
    for (u64 p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        if (n % p == 0) return n == p;
    }
    u64 d = n - 1;
    int s = 0;
    while ((d & 1) == 0) { d >>= 1; ++s; }
    for (u64 a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        u64 x = pow_mod_u64(a, d, n);
        if (x == 1 || x == n - 1) continue;
        bool composite = true;
        for (int i = 1; i < s; ++i) {
            x = mul_mod_u64(x, x, n);
            if (x == n - 1) { composite = false; break; }
        }
        if (composite) return false;
    }
    return true;
}

// Smallest prime p >= floor_value with p == 1 (mod two_n).
inline u64 find_ntt_prime(u64 floor_value, u64 two_n) {
    u64 p = ((floor_value + two_n - 2) / two_n) * two_n + 1;
    while (!is_prime_u64(p)) p += two_n;
    return p;
}

// Extended Euclid; requires gcd(a, q) == 1.
inline u64 inv_mod_u64(u64 a, u64 q) {
    i64 t = 0, new_t = 1;
    i64 r = static_cast<i64>(q), new_r = static_cast<i64>(a % q);
    while (new_r != 0) {
        i64 quot = r / new_r;
        i64 tmp = t - quot * new_t; t = new_t; new_t = tmp;
        tmp = r - quot * new_r; r = new_r; new_r = tmp;
    }
    if (r != 1) throw std::invalid_argument("inv_mod_u64: not invertible");
    if (t < 0) t += static_cast<i64>(q);
    return static_cast<u64>(t);
}

// Center x into [-q/2, q/2) for odd q: representative in [-(q-1)/2, (q-1)/2].
inline i64 center_u64(u64 x, u64 q) {
    return x > (q - 1) / 2 ? static_cast<i64>(x) - static_cast<i64>(q) : static_cast<i64>(x);
}

// Reduce any signed 128-bit value to the centered representative mod q.
inline i64 reduce_center_i128(i128 x, u64 q) {
    i128 r = x % static_cast<i128>(q);
    if (r < 0) r += static_cast<i128>(q);
    return center_u64(static_cast<u64>(r), q);
}

}  // namespace encctl
