#pragma once

#include <cstdint>

namespace perchomog {

// Stateless counter-based generator: every draw is a pure function of
// (master_seed, env_index, stream, counter). No sequential state exists, so
// sampling is bit-reproducible under any parallel schedule.
//
// Stream ids partition consumers so that no two draws share a counter tuple.
enum class RngStream : uint64_t {
  kEdgeOpen = 1,
  kEdgeValue = 2,
  kBoundaryData = 3,
  kBootstrap = 4,
  kCorpus = 5,
  kTrialData = 6,
};

uint64_t rng64(uint64_t master_seed, uint64_t env_index, uint64_t stream,
               uint64_t counter);

inline uint64_t rng64(uint64_t master_seed, uint64_t env_index, RngStream stream,
                      uint64_t counter) {
  return rng64(master_seed, env_index, static_cast<uint64_t>(stream), counter);
}

// Uniform in [0, 1) with 53 random bits.
double rng_uniform(uint64_t master_seed, uint64_t env_index, RngStream stream,
                   uint64_t counter);

// Uniform integer in [0, n).
uint64_t rng_below(uint64_t master_seed, uint64_t env_index, RngStream stream,
                   uint64_t counter, uint64_t n);

}  // namespace perchomog
