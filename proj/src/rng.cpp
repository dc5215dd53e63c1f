#include "perchomog/rng.hpp"

namespace perchomog {

namespace {
// splitmix64 finalizer; full-avalanche on 64 bits.
inline uint64_t mix(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace

uint64_t rng64(uint64_t master_seed, uint64_t env_index, uint64_t stream,
               uint64_t counter) {
  // Chain the four words through the finalizer; each word is absorbed after
  // the previous state has been fully mixed, so distinct tuples collide only
  // if splitmix64 itself collides.
  uint64_t h = mix(master_seed);
  h = mix(h ^ env_index);
  h = mix(h ^ stream);
  h = mix(h ^ counter);
  return h;
}

double rng_uniform(uint64_t master_seed, uint64_t env_index, RngStream stream,
                   uint64_t counter) {
  const uint64_t bits = rng64(master_seed, env_index, stream, counter);
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

uint64_t rng_below(uint64_t master_seed, uint64_t env_index, RngStream stream,
                   uint64_t counter, uint64_t n) {
  // Multiply-shift range reduction; bias is < 2^-64 * n, negligible for the
  // Monte Carlo uses here.
  const uint64_t bits = rng64(master_seed, env_index, stream, counter);
  unsigned __int128 wide = static_cast<unsigned __int128>(bits) * n;
  return static_cast<uint64_t>(wide >> 64);
}

}  // namespace perchomog
