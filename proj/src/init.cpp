#include "mtlre/init.hpp"

#include <cmath>

#include "mtlre/error.hpp"

namespace mtlre {

namespace {
// splitmix64 finalizer: good avalanche, cheap, stable.
std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}
}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = mix(base);
    for (std::uint64_t p : path) s = mix(s ^ mix(p));
    return s;
}

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform_range(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
    if (n == 0) throw ValidationError("uniform_below: n must be positive");
    // Rejection sampling over the largest multiple of n below 2^64.
    std::uint64_t limit = ~0ull - (~0ull % n);
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % n;
}

double gaussian(std::mt19937_64& rng) {
    double u1 = uniform01(rng);
    // Avoid log(0); remap 0 to the smallest step above it.
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

Vec glorot_uniform(Index fan_in, Index fan_out, Index count, std::mt19937_64& rng) {
    double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Vec v(count);
    for (Index i = 0; i < count; ++i) v[i] = uniform_range(rng, -limit, limit);
    return v;
}

Vec orthogonal(Index rows, Index cols, std::mt19937_64& rng) {
    // QR of a tall Gaussian matrix; transpose the draw when wide so Q always
    // has full column rank.
    bool wide = cols > rows;
    Index r = wide ? cols : rows;
    Index c = wide ? rows : cols;
    Eigen::MatrixXd a(r, c);
    for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < c; ++j) a(i, j) = gaussian(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(r, c);
    Eigen::MatrixXd rmat = qr.matrixQR().topRows(c).triangularView<Eigen::Upper>();
    // Fix the sign ambiguity of QR so results depend only on the draw.
    for (Index j = 0; j < c; ++j) {
        if (rmat(j, j) < 0) q.col(j) = -q.col(j);
    }
    Mat out = wide ? Mat(q.transpose()) : Mat(q);
    return Eigen::Map<const Vec>(out.data(), out.size());
}

}  // namespace mtlre
