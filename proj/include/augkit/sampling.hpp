#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace augkit::rng {

// std::uniform_int_distribution is implementation-defined, so every draw
// that must be reproducible across toolchains goes through these helpers.

// Uniform integer in [0, bound) via rejection sampling on mt19937_64.
std::uint64_t bounded(std::mt19937_64& gen, std::uint64_t bound);

// k distinct indices drawn uniformly from [0, n), returned sorted.
// Partial Fisher-Yates; deterministic for a fixed generator state.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::mt19937_64& gen);

// In-place Fisher-Yates shuffle driven by bounded().
template <typename T>
void shuffle(std::vector<T>& items, std::mt19937_64& gen) {
    for (std::size_t i = items.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(bounded(gen, i));
        std::swap(items[i - 1], items[j]);
    }
}

// Namespaces one global seed per pipeline stage so changing one stage's
// sampling cannot perturb another's.
std::uint64_t stage_seed(std::uint64_t global_seed, std::string_view stage);

// FNV-1a, used for stage seeding and mock-backend determinism.
std::uint64_t fnv1a(std::string_view bytes) noexcept;

} // namespace augkit::rng
