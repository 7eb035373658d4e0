#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "entkit/corpus.hpp"
#include "entkit/matcher.hpp"
#include "entkit/rng.hpp"

namespace entkit {

// Bag-of-words vocabulary with smoothed idf. Feature indices are dense
// 0..V-1 in lexicographic token order, so builds are reproducible.
class TfidfVocabulary {
 public:
  struct Entry {
    uint32_t index;
    uint32_t df;
  };

  // Builds over case-folded tokens of the given paragraphs. Tokens seen in
  // fewer than min_df documents are dropped.
  static TfidfVocabulary build(const std::vector<Paragraph>& paragraphs,
                               uint32_t min_df = 2);

  size_t size() const { return tokens_.size(); }
  uint32_t documents() const { return documents_; }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::optional<Entry> find(const std::string& folded_token) const;
  uint32_t df(uint32_t index) const { return dfs_[index]; }

  // idf(t) = ln((1+N)/(1+df)) + 1
  double idf(uint32_t index) const;

  // Content hash; models record it so a model is never scored against a
  // different vocabulary.
  uint64_t hash() const;

  void save(const std::string& path) const;
  static TfidfVocabulary load(const std::string& path);

 private:
  std::vector<std::string> tokens_;   // index -> token
  std::vector<uint32_t> dfs_;         // index -> document frequency
  std::unordered_map<std::string, uint32_t> index_;
  uint32_t documents_ = 0;
};

// Sparse L2-normalized tf-idf vector, indices ascending.
using SparseVector = std::vector<std::pair<uint32_t, double>>;

// tf = raw count, weight = tf * idf, then L2 normalization. Out-of-vocabulary
// tokens are ignored; an all-OOV paragraph yields the zero vector.
SparseVector featurize(const Paragraph& paragraph, const TfidfVocabulary& vocab);

struct FilterConfig {
  double lambda = 1e-4;  // L2 regularization
  uint32_t epochs = 10;
  double threshold = 0.0;  // decision threshold on the margin
  uint64_t seed = 0;
};

// Per-type linear SVM over tf-idf features, trained by subgradient descent
// on hinge loss with learning rate 1/(lambda*t).
struct TypeFilterModel {
  std::string type_id;
  uint64_t vocab_hash = 0;
  std::vector<double> weights;  // dense, length = vocabulary size
  double bias = 0.0;
  FilterConfig config;
  uint32_t positive_count = 0;
  uint32_t negative_count = 0;

  void save(const std::string& path) const;
  static TypeFilterModel load(const std::string& path);
};

// Both sets must be non-empty and disjoint. Deterministic given the seed.
TypeFilterModel train_type_filter(const std::string& type_id,
                                  const std::vector<Paragraph>& positives,
                                  const std::vector<Paragraph>& negatives,
                                  const TfidfVocabulary& vocab,
                                  const FilterConfig& config);

// Seeded selection of filter training data from raw matches. A holdout
// fraction of the matched paragraphs becomes the training pool; positives
// for a type are the pool paragraphs matched by an entity declaring it,
// negatives an equal-sized seeded sample of pool paragraphs matched only to
// other types. The holdout list lets downstream stages keep training
// paragraphs out of the assembled dataset.
struct TrainingSets {
  std::vector<std::string> holdout;                           // sorted
  std::map<std::string, std::vector<std::string>> positives;  // type -> sorted ids
  std::map<std::string, std::vector<std::string>> negatives;  // type -> sorted ids
};
TrainingSets plan_training(const std::vector<RawMatch>& matches,
                           const Lexicon& lexicon, double holdout_fraction,
                           uint64_t seed);

// w.x + b for a featurized paragraph.
double score(const TypeFilterModel& model, const SparseVector& features);
double score(const TypeFilterModel& model, const Paragraph& paragraph,
             const TfidfVocabulary& vocab);

// A raw match annotated with the subset of the entity's declared types whose
// filter accepted the paragraph.
struct FilteredMatch {
  RawMatch match;
  std::vector<std::string> surviving_types;  // sorted
};

// A match survives for type t iff score under model(t) is >= threshold;
// matches surviving zero types are dropped. Every declared type of every
// matched entity must have a model. Paragraphs are looked up by id.
std::vector<FilteredMatch> filter_matches(
    const std::vector<RawMatch>& matches,
    const std::map<std::string, TypeFilterModel>& models,
    const std::vector<Paragraph>& corpus, const Lexicon& lexicon,
    const TfidfVocabulary& vocab, double threshold);

void save_filtered_matches(const std::vector<FilteredMatch>& matches,
                           const std::string& path);
std::vector<FilteredMatch> load_filtered_matches(const std::string& path);

}  // namespace entkit
