#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "entkit/corpus.hpp"
#include "entkit/lexicon.hpp"

namespace entkit {

// One occurrence of an alias in a paragraph. The span runs from the first to
// the last matched alias token; intervening tokens are inside the span.
// gap_count = (token_end - token_start) - alias token length.
struct RawMatch {
  std::string paragraph_id;
  uint32_t token_start = 0;
  uint32_t token_end = 0;
  std::string entity_id;
  std::string alias;
  uint32_t gap_count = 0;

  bool operator==(const RawMatch&) const = default;
};

// Multi-pattern structure over all lexicon aliases: case-folded token
// sequences bucketed by first token for single-pass scanning. Immutable
// after compile; safe to share across scan workers.
class PatternSet {
 public:
  struct Pattern {
    uint32_t entity = 0;       // index into entity_ids()
    std::string alias;         // original alias string
    std::vector<std::string> tokens;  // case-folded alias tokens
  };

  static PatternSet compile(const Lexicon& lexicon);

  bool empty() const { return patterns_.empty(); }
  size_t size() const { return patterns_.size(); }
  const std::vector<Pattern>& patterns() const { return patterns_; }
  const std::vector<std::string>& entity_ids() const { return entity_ids_; }

  // Pattern indices whose first folded token equals the argument.
  const std::vector<uint32_t>* candidates(const std::string& folded_token) const;

  // Index of an entity_id in entity_ids(), or npos.
  size_t entity_index(const std::string& entity_id) const;
  static constexpr size_t npos = static_cast<size_t>(-1);

 private:
  std::vector<Pattern> patterns_;
  std::vector<std::string> entity_ids_;
  std::unordered_map<std::string, size_t> entity_index_;
  std::unordered_map<std::string, std::vector<uint32_t>> first_token_;
};

// All matches in one paragraph: every position where all alias tokens occur
// in order, case-folded-equal, with at most `slop` intervening tokens in
// total. Within one (entity, alias) overlapping candidates are reduced to
// leftmost-then-minimal-gap. `allowed_entities`, when non-null, restricts
// which entities are searched (link-graph semantics).
std::vector<RawMatch> scan(const Paragraph& paragraph, const PatternSet& patterns,
                           uint32_t slop = 5,
                           const std::unordered_set<uint32_t>* allowed_entities = nullptr);

struct ScanOptions {
  uint32_t slop = 5;
  const LinkGraph* linkgraph = nullptr;  // optional candidate restriction
  int threads = 1;                       // worker fan-out; output order is fixed
};

using ParagraphSource = std::function<std::optional<Paragraph>()>;
using MatchSink = std::function<void(const RawMatch&)>;
using DiagnosticSink = std::function<void(const std::string&)>;

// Scans a whole corpus in stream order. Output is deterministic: corpus
// order, then token_start, then entity_id, regardless of thread count. With
// a link graph, entity e is only searched in paragraphs listed for e;
// link-graph paragraphs missing from the corpus produce a warning diagnostic.
void scan_corpus(const ParagraphSource& source, const PatternSet& patterns,
                 const ScanOptions& options, const MatchSink& sink,
                 const DiagnosticSink& warn = nullptr);

std::vector<RawMatch> scan_corpus(const std::vector<Paragraph>& corpus,
                                  const PatternSet& patterns,
                                  const ScanOptions& options = {},
                                  const DiagnosticSink& warn = nullptr);

// Raw-match dump: one JSON record per match.
void save_matches(const std::vector<RawMatch>& matches, const std::string& path);
std::vector<RawMatch> load_matches(const std::string& path);

}  // namespace entkit
