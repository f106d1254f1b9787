#pragma once

// Counter-mode pseudorandom generator with derived substreams, plus the
// samplers the cryptosystem needs (uniform residues, ternary secrets, and a
// truncated discrete Gaussian). Reproducible given a seed; not hardened.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace encctl {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

class CounterRng {
public:
    explicit CounterRng(std::uint64_t key) : key_(key) {}

    std::uint64_t next_u64() { return splitmix64(splitmix64(key_) ^ splitmix64(counter_++)); }

    // Unbiased value in [0, bound) by rejection.
    std::uint64_t uniform_below(std::uint64_t bound) {
        if (bound == 0) throw std::invalid_argument("uniform_below: bound == 0");
        const std::uint64_t limit = bound * (UINT64_MAX / bound);
        std::uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % bound;
    }

    int sample_ternary() { return static_cast<int>(uniform_below(3)) - 1; }

    // Independent stream derived from this key and a label; counters start fresh.
    CounterRng fork(std::uint64_t label) const { return CounterRng(splitmix64(key_ ^ splitmix64(label * 0xd1342543de82ef95ull + 0x2545f4914f6cdd1dull))); }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

// Discrete Gaussian on the integers, probability ~ exp(-k^2 / (2 stddev^2)),
// rejection-truncated to |k| <= floor(bound). Sampled by CDF inversion on a
// fixed-point table so that draws are a pure function of the counter stream.
class GaussianTable {
public:
    GaussianTable(double stddev, double bound) : radius_(static_cast<int>(std::floor(bound))) {
        if (stddev < 0 || bound < 0) throw std::invalid_argument("GaussianTable: negative parameter");
        if (stddev == 0.0) {
            radius_ = 0;
            thresholds_.push_back(UINT64_MAX);
            return;
        }
        std::vector<double> weights;
        double total = 0;
        for (int k = -radius_; k <= radius_; ++k) {
            const double w = std::exp(-0.5 * (static_cast<double>(k) * k) / (stddev * stddev));
            weights.push_back(w);
            total += w;
        }
        double acc = 0;
        for (double w : weights) {
            acc += w / total;
            double clipped = acc < 1.0 ? acc : 1.0;
            thresholds_.push_back(static_cast<std::uint64_t>(clipped * 18446744073709549568.0));
        }
        thresholds_.back() = UINT64_MAX;
    }

    int sample(CounterRng& rng) const {
        const std::uint64_t u = rng.next_u64();
        int idx = 0;
        while (thresholds_[idx] < u) ++idx;
        return idx - radius_;
    }

    int radius() const { return radius_; }

private:
    int radius_;
    std::vector<std::uint64_t> thresholds_;
};

}  // namespace encctl
