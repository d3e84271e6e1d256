#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace epidiv {

// FNV-1a over bytes. Used for stable ids and seed derivation.
uint64_t fnv1a64(std::string_view data);

// Derives a stage/cell seed from the run seed. The parts are joined with
// a separator that cannot appear in ids, so distinct cells never collide
// by concatenation.
uint64_t derive_seed(uint64_t run_seed, std::string_view stage, std::string_view cell_id);

// Deterministic RNG with portable distributions. std:: distributions are
// implementation-defined, so bounded draws and shuffles are done by hand.
class Rng {
public:
    explicit Rng(uint64_t seed);

    uint64_t next_u64();

    // Uniform in [0, 1) with 53 bits of precision.
    double next_double();

    // Uniform in [0, n); unbiased via rejection sampling.
    uint64_t next_below(uint64_t n);

    template <typename T>
    void shuffle(std::vector<T>& items) {
        if (items.size() < 2) return;
        for (size_t i = items.size() - 1; i > 0; --i) {
            size_t j = static_cast<size_t>(next_below(i + 1));
            std::swap(items[i], items[j]);
        }
    }

private:
    uint64_t state_;
};

}  // namespace epidiv
