#pragma once

#include <cstdint>
#include <random>

namespace dsm {

// Thin wrapper around mt19937_64 that avoids std distributions, whose
// output is implementation-defined. All draws below are reproducible
// across standard libraries for a fixed seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform index in [0, n). Rejection sampling, no modulo bias.
    std::size_t next_index(std::size_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return static_cast<std::size_t>(v % n);
    }

    // Uniform real in [0, 1) with 53 bits of entropy.
    double next_real() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[next_index(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace dsm
