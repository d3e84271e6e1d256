#include "epidiv/rng.hpp"

namespace epidiv {

uint64_t fnv1a64(std::string_view data) {
    uint64_t hash = 14695981039346656037ull;
    for (unsigned char c : data) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    return hash;
}

uint64_t derive_seed(uint64_t run_seed, std::string_view stage, std::string_view cell_id) {
    std::string key;
    key.reserve(stage.size() + cell_id.size() + 24);
    key += std::to_string(run_seed);
    key += '\x1f';
    key += stage;
    key += '\x1f';
    key += cell_id;
    return fnv1a64(key);
}

namespace {

// splitmix64: full-period, passes BigCrush as a mixer, two lines of state-free code.
uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace

Rng::Rng(uint64_t seed) : state_(seed) {
    // Warm up so that nearby seeds diverge immediately.
    next_u64();
    next_u64();
}

uint64_t Rng::next_u64() {
    return splitmix64(state_);
}

double Rng::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

uint64_t Rng::next_below(uint64_t n) {
    if (n == 0) return 0;
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t value = next_u64();
    while (value >= limit) {
        value = next_u64();
    }
    return value % n;
}

}  // namespace epidiv
