#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "core/text.hpp"

namespace core {

// Derives an independent generator for a named consumer from the run seed so
// that adding a new consumer never perturbs the draws of existing ones.
inline std::mt19937_64 rng_stream(std::uint64_t seed, std::string_view name) {
  return std::mt19937_64(text::splitmix64(seed ^ text::fnv1a64(name)));
}

}  // namespace core
