#include "dglcb/seeding.hpp"

#include <string>

namespace dglcb {

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (const unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::uint64_t run_seed(std::uint64_t master, std::uint64_t cell, std::uint64_t rep) {
    return fnv1a64(std::to_string(master) + "/" + std::to_string(cell) + "/" + std::to_string(rep));
}

Rng substream(std::uint64_t seed, std::string_view name) {
    const std::uint64_t salt = fnv1a64(name);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(salt), static_cast<std::uint32_t>(salt >> 32)};
    return Rng(seq);
}

}  // namespace dglcb
