#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace icumort {

using Rng = std::mt19937_64;

/// Deterministic child seed for a named stage or substream of a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag, std::uint64_t index = 0);

/// Uniformly random permutation of 0..n-1.
std::vector<std::size_t> permutation(std::size_t n, Rng& rng);

/// 64-bit FNV-1a hash of a byte string.
std::uint64_t fnv1a64(std::string_view bytes);

} // namespace icumort
