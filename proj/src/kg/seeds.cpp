#include "mcsff/kg/seeds.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "mcsff/error.hpp"

namespace mcsff::kg {

std::size_t train_size(std::size_t count, double train_fraction) {
  return static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(count) + 0.5));
}

SeedSplit split_seeds(std::span<const SeedAlignment> seeds, double train_fraction, std::uint64_t rng_seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train_fraction must lie in (0, 1), got " + std::to_string(train_fraction));
  }
  if (seeds.size() < 2) throw ConfigError("at least 2 seeds are required to split");
  const std::size_t n_train = train_size(seeds.size(), train_fraction);
  if (n_train == 0 || n_train == seeds.size()) {
    throw ConfigError("train_fraction " + std::to_string(train_fraction) + " leaves an empty split of " +
                      std::to_string(seeds.size()) + " seeds");
  }
  std::vector<std::size_t> order(seeds.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(rng_seed);
  std::shuffle(order.begin(), order.end(), rng);

  SeedSplit split;
  split.train.reserve(n_train);
  split.test.reserve(seeds.size() - n_train);
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_train ? split.train : split.test).push_back(seeds[order[i]]);
  }
  return split;
}

}  // namespace mcsff::kg
