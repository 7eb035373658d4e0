#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "entkit/lexicon.hpp"
#include "entkit/text.hpp"

namespace entkit {

// A text unit with its deterministic tokenization. Paragraph ids are
// caller-supplied strings so corpora can be filtered or reshuffled without
// invalidating link graphs.
struct Paragraph {
  std::string paragraph_id;
  std::string text;
  std::vector<Token> tokens;

  static Paragraph make(std::string id, std::string text);
};

// Token-range annotation. token_end is exclusive; type_ids is the closed
// type set of the mention.
struct MentionSpan {
  uint32_t token_start = 0;
  uint32_t token_end = 0;
  std::string entity_id;
  std::set<std::string> type_ids;

  bool operator==(const MentionSpan&) const = default;
};

struct AnnotatedParagraph {
  Paragraph paragraph;
  std::vector<MentionSpan> spans;
};

using SilverDataset = std::vector<AnnotatedParagraph>;

// entity_id -> candidate paragraph ids. An entity is only ever searched in
// its listed paragraphs when a link graph is applied.
struct LinkGraph {
  std::unordered_map<std::string, std::set<std::string>> candidates;

  const std::set<std::string>* for_entity(const std::string& entity_id) const {
    auto it = candidates.find(entity_id);
    return it == candidates.end() ? nullptr : &it->second;
  }
};

// Streams {"paragraph_id","text"} records without holding the corpus in
// memory. Extra fields (e.g. "spans" in annotated files) are ignored, so a
// dataset file is also a valid corpus source.
class CorpusReader {
 public:
  explicit CorpusReader(const std::string& path);
  ~CorpusReader();
  CorpusReader(CorpusReader&&) noexcept;
  CorpusReader& operator=(CorpusReader&&) noexcept;

  // Tokenizes on the fly; returns nullopt at end of file. Throws Error with
  // file:line context on malformed records or duplicate ids.
  std::optional<Paragraph> next();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::vector<Paragraph> load_corpus(const std::string& path);
void save_corpus(const std::vector<Paragraph>& corpus, const std::string& path);

LinkGraph load_linkgraph(const std::string& path);
void save_linkgraph(const LinkGraph& graph, const std::string& path);

// Annotated-dataset files: {"paragraph_id","text","spans":[...]} per line.
// Span invariants (range bounds, non-empty type sets) are enforced on load.
SilverDataset load_dataset(const std::string& path);
void save_dataset(const SilverDataset& dataset, const std::string& path);

}  // namespace entkit
