#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "entkit/corpus.hpp"
#include "entkit/filter.hpp"
#include "entkit/lexicon.hpp"
#include "entkit/matcher.hpp"

namespace entkit {

struct AssemblyConfig {
  uint32_t slop = 5;
  double threshold = 0.0;          // filter decision threshold
  uint32_t min_distinct_types = 2; // per selected paragraph, before closure
  uint64_t max_paragraphs = 0;     // 0 = no cap
  int threads = 1;
};

using WarnSink = std::function<void(const std::string&)>;

// Selection and span construction over pre-filtered matches: spans deduped
// by (start, end, entity) with type sets unioned, then hierarchy-closed;
// paragraphs kept when they carry at least min_distinct_types distinct
// surviving types (counted before closure, so depth alone cannot qualify a
// paragraph). A cap keeps the best paragraphs by (distinct type count desc,
// distinct entity count desc, paragraph_id asc); survivors stay in corpus
// order. Empty selection is an error.
SilverDataset assemble_from_filtered(const std::vector<Paragraph>& corpus,
                                     const Lexicon& lexicon,
                                     const std::vector<FilteredMatch>& matches,
                                     const AssemblyConfig& config);

// Full path: scan_corpus + filter_matches + assemble_from_filtered. Every
// type of every matched entity must have a model in `models`.
SilverDataset assemble(const std::vector<Paragraph>& corpus, const Lexicon& lexicon,
                       const LinkGraph* linkgraph,
                       const std::map<std::string, TypeFilterModel>& models,
                       const TfidfVocabulary& vocab, const AssemblyConfig& config,
                       const WarnSink& warn = nullptr);

enum class Split : uint8_t { train, test };
const char* split_name(Split split);

struct SplitAssignment {
  std::map<std::string, Split> paragraphs;
  std::map<std::string, Split> types;
};

// Greedy stratified paragraph split plus an independent seeded type
// partition. Paragraphs are visited in seeded random order; each goes to the
// side that keeps every affected type's train share of mentions closest to
// paragraph_fraction (ties go to train). Types with a single paragraph are
// reported through `warn`: their proportion is unsatisfiable. The type
// partition puts llround(fraction * n) types in train unless an explicit
// test-type list overrides it.
SplitAssignment split_dataset(const SilverDataset& dataset,
                              double paragraph_fraction, double type_fraction,
                              uint64_t seed, const WarnSink& warn = nullptr,
                              const std::set<std::string>* test_type_override = nullptr);

// Paragraphs of the dataset assigned to one side, in dataset order.
SilverDataset select_split(const SilverDataset& dataset,
                           const SplitAssignment& assignment, Split side);

void save_paragraph_split(const SplitAssignment& assignment, const std::string& path);
void save_type_split(const SplitAssignment& assignment, const std::string& path);
SplitAssignment load_split_assignment(const std::string& paragraph_path,
                                      const std::string& type_path);
std::map<std::string, Split> load_type_split(const std::string& path);

// Round-robin over types in seeded order, drawing a previously unseen
// paragraph containing each type until n are collected, so per-type counts
// differ by at most one when supply allows. Returns dataset indices in draw
// order. n must be in [1, dataset size] and reachable through typed spans.
std::vector<size_t> stratified_sample(const SilverDataset& dataset, size_t n,
                                      uint64_t seed);

// One row per typed mention (a span contributes one row per type it
// carries). judgment is left empty for the reviewer.
struct AuditRow {
  std::string paragraph_id;
  uint32_t token_start = 0;
  uint32_t token_end = 0;
  std::string entity_id;
  std::string type_id;
  std::string span_text;
  std::string paragraph_text;
  std::string judgment;
};

struct AuditWorksheet {
  std::vector<AuditRow> rows;
};

// Uniform seeded sample of min(n, size) paragraphs, rows emitted in dataset
// order. The row count is the sample's typed-mention total.
AuditWorksheet audit_sample(const SilverDataset& dataset, size_t n, uint64_t seed);

// Tab-separated, one typed mention per row, header line first. Text columns
// have tabs/newlines replaced by spaces; the id + token range columns are
// the mention's identity.
void save_worksheet(const AuditWorksheet& worksheet, const std::string& path);
AuditWorksheet load_worksheet(const std::string& path);

// Fraction of judged rows marked "correct". Throws if nothing is judged.
struct AuditSummary {
  size_t total_rows = 0;
  size_t judged = 0;
  size_t correct = 0;
  double accuracy = 0.0;
};
AuditSummary audit_accuracy(const AuditWorksheet& worksheet);

}  // namespace entkit
