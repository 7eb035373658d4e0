#include "entkit/rng.hpp"

namespace entkit {

uint64_t Rng::bounded(uint64_t bound) {
  // Rejection sampling on the top of the range keeps the draw unbiased.
  uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    uint64_t r = next();
    if (r >= threshold) return r % bound;
  }
}

Rng Rng::derive(std::string_view label) const {
  Rng child(state_ ^ fnv1a(label));
  child.next();
  return child;
}

uint64_t fnv1a(std::string_view data, uint64_t basis) {
  uint64_t h = basis;
  for (char c : data) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace entkit
