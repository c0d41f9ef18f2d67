#pragma once

#include <cstdint>
#include <string_view>

#include "dglcb/types.hpp"

namespace dglcb {

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

/// Per-run seed: FNV-1a over the decimal string "master/cell/rep".
std::uint64_t run_seed(std::uint64_t master, std::uint64_t cell, std::uint64_t rep);

/// Independent named sub-stream of a run seed (contexts, rewards, delays, ...).
Rng substream(std::uint64_t seed, std::string_view name);

}  // namespace dglcb
