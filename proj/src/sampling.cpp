#include "augkit/sampling.hpp"

#include <numeric>

namespace augkit::rng {

std::uint64_t bounded(std::mt19937_64& gen, std::uint64_t bound) {
    if (bound == 0) {
        return 0;
    }
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t draw = gen();
    while (draw >= limit) {
        draw = gen();
    }
    return draw % bound;
}

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::mt19937_64& gen) {
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < k && i < n; ++i) {
        std::size_t j = i + static_cast<std::size_t>(bounded(gen, n - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
}

std::uint64_t fnv1a(std::string_view bytes) noexcept {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t stage_seed(std::uint64_t global_seed, std::string_view stage) {
    // splitmix-style finalizer over (global ^ stage hash)
    std::uint64_t z = global_seed ^ fnv1a(stage);
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace augkit::rng
