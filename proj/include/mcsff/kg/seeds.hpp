#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mcsff/kg/types.hpp"

namespace mcsff::kg {

struct SeedSplit {
  std::vector<SeedAlignment> train;
  std::vector<SeedAlignment> test;
};

// Number of training seeds: round-half-up of fraction * count.
std::size_t train_size(std::size_t count, double train_fraction);

// Deterministic shuffle keyed by rng_seed; the first train_size() shuffled
// seeds train, the rest test. Needs at least 2 seeds, fraction in (0, 1) and
// a non-empty side on both halves.
SeedSplit split_seeds(std::span<const SeedAlignment> seeds, double train_fraction, std::uint64_t rng_seed);

}  // namespace mcsff::kg
