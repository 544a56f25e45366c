#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "mtlre/tensor.hpp"

namespace mtlre {

// All randomness in the library flows through these helpers instead of
// std::<distribution> types, whose output is implementation-defined.  This
// keeps seeded runs reproducible across standard libraries.

// Hash-mixes a path of ids into a base seed so that independent consumers
// (per-epoch shuffles, per-fold models, dropout streams...) get decorrelated
// engines without sharing one stream.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path);

// Uniform double in [0, 1) using the top 53 bits of the engine output.
double uniform01(std::mt19937_64& rng);

// Uniform double in [lo, hi).
double uniform_range(std::mt19937_64& rng, double lo, double hi);

// Uniform integer in [0, n), unbiased (rejection sampling).  n must be > 0.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n);

// Standard normal via Box-Muller on uniform01.
double gaussian(std::mt19937_64& rng);

// Fisher-Yates shuffle driven by uniform_below.
template <class T>
void shuffle_inplace(std::vector<T>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(uniform_below(rng, i));
        std::swap(v[i - 1], v[j]);
    }
}

// Flat row-major buffer of `count` values ~ Uniform(±sqrt(6/(fan_in+fan_out))).
Vec glorot_uniform(Index fan_in, Index fan_out, Index count, std::mt19937_64& rng);

// Flat row-major rows x cols matrix with orthonormal rows or columns
// (whichever dimension is smaller), from the QR decomposition of a Gaussian
// draw with signs canonicalized so equal seeds give equal results.
Vec orthogonal(Index rows, Index cols, std::mt19937_64& rng);

}  // namespace mtlre
