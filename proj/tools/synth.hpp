#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "entkit/corpus.hpp"
#include "entkit/lexicon.hpp"
#include "entkit/retrieval.hpp"

// Deterministic synthetic corpora for exercising the full pipeline. Alias
// name tokens are globally unique and never appear in filler or marker
// vocabulary, so the set of matches in a generated corpus is exactly the set
// of planted mentions; that makes construction-level ground truth exact.
namespace entkit::synth {

// One planted mention. kind "true" = the surrounding context genuinely
// belongs to the entity's types; "decoy" = the alias was planted into the
// context of unrelated types (a homonym-style false mention).
struct PlantedMention {
  std::string paragraph_id;
  uint32_t token_start = 0;
  uint32_t token_end = 0;
  std::string entity_id;
  std::set<std::string> type_ids;  // hierarchy-closed declared types
  bool decoy = false;
};

struct MiniCorpus {
  Lexicon lexicon;
  std::vector<Paragraph> corpus;
  LinkGraph linkgraph;
  std::vector<PlantedMention> mentions;  // true and decoy, in corpus order
  DenseVectorStore paragraph_vectors;
  DenseVectorStore query_vectors;  // one per type, keyed by type_id
};

// Twenty types with a four-level hierarchy chain and two intersectional
// types, ~5k paragraphs. Byte-reproducible for a fixed seed.
MiniCorpus make_mini_corpus(uint64_t seed);

// Writes lexicon/corpus/linkgraph/vector files plus the planted-mention
// ground truth into a directory.
void write_mini_corpus(const MiniCorpus& mini, const std::string& dir);

std::vector<PlantedMention> load_mentions(const std::string& path);

// Two context classes with disjoint marker vocabularies and one entity
// mention per paragraph; a fifth of each class additionally carries a decoy
// alias from the other class. Linearly separable by construction.
struct SeparableCorpus {
  Lexicon lexicon;
  std::vector<Paragraph> corpus;        // class A first, then class B
  std::vector<PlantedMention> mentions; // decoy flag marks cross-class plants
  std::string type_a, type_b;
  size_t per_class = 0;
};

SeparableCorpus make_separable_corpus(uint64_t seed, size_t per_class = 500);

}  // namespace entkit::synth
