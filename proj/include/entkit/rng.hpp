#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace entkit {

// Deterministic splitmix64 generator. All randomness in the toolkit flows
// from one root seed; subcomponents get independent streams by deriving a
// child generator from a label, so stages can be re-run in isolation and
// still reproduce byte-identical output.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, bound) without modulo bias. bound must be > 0.
  uint64_t bounded(uint64_t bound);

  // Uniform double in [0, 1).
  double real() { return (next() >> 11) * (1.0 / 9007199254740992.0); }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (size_t i = items.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(bounded(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  // Independent child stream named by a label ("split.paragraphs", ...).
  Rng derive(std::string_view label) const;

 private:
  uint64_t state_;
};

// FNV-1a, used for label-derived seeds and file content hashes.
uint64_t fnv1a(std::string_view data, uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace entkit
