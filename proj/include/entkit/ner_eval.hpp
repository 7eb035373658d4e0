#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "entkit/corpus.hpp"

namespace entkit {

// One predicted mention: a surface string plus a type. Span-form input is
// resolved to its surface text at load time, so matching has one code path.
struct Prediction {
  std::string surface;
  std::string type_id;
};

// paragraph_id -> predictions in input order. Identical (surface, type)
// repeats within a paragraph are dropped on insertion.
struct PredictionSet {
  std::map<std::string, std::vector<Prediction>> by_paragraph;

  void add(const std::string& paragraph_id, Prediction prediction);
};

// {"paragraph_id","predictions":[{"token_start","token_end","type_id"}]}.
// Token ranges are resolved against the gold paragraphs. With skip_unknown,
// records whose paragraph is absent from gold are dropped instead of fatal.
PredictionSet load_span_predictions(const std::string& path, const SilverDataset& gold,
                                    bool skip_unknown = false);

// {"paragraph_id","entities":[{"entity_type","entities":"a, b, c"}]} with
// the comma-separated value split into individual surface strings.
PredictionSet load_string_predictions(const std::string& path);

// Dispatches on the first record's fields.
PredictionSet load_predictions(const std::string& path, const SilverDataset& gold,
                               bool skip_unknown = false);

struct MatchCounts {
  uint64_t tp = 0;
  uint64_t fp = 0;
  uint64_t fn = 0;

  MatchCounts& operator+=(const MatchCounts& o) {
    tp += o.tp, fp += o.fp, fn += o.fn;
    return *this;
  }
  bool operator==(const MatchCounts&) const = default;
};

// Per-type counts for one paragraph. Exact: prediction matches an unconsumed
// gold mention when their case-folded surface strings and types are equal.
// Relaxed: the strings need only share one case-folded token. Both consume
// one-to-one greedily in input order; leftovers are FP / FN. A gold span
// carrying k types counts as one mention for each of the k types.
std::map<std::string, MatchCounts> match_exact(const AnnotatedParagraph& gold,
                                               const std::vector<Prediction>& predictions);
std::map<std::string, MatchCounts> match_relaxed(const AnnotatedParagraph& gold,
                                                 const std::vector<Prediction>& predictions);

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool degenerate = false;  // some ratio had a zero denominator
};

PRF prf(const MatchCounts& counts);

struct NerTypeResult {
  std::string type_id;
  MatchCounts exact;
  MatchCounts relaxed;
};

struct NerReport {
  std::vector<NerTypeResult> per_type;  // sorted by type_id
  PRF exact_micro, relaxed_micro;       // pooled counts
  PRF exact_macro, relaxed_macro;       // unweighted mean of per-type P/R/F1
};

// Scores predictions against the gold dataset per type, then aggregates.
// The type universe is everything seen in gold spans or predictions,
// intersected with `types` when given. Predictions for unknown paragraphs
// are an error.
NerReport evaluate_ner(const SilverDataset& gold, const PredictionSet& predictions,
                       const std::set<std::string>* types = nullptr);

// Fraction of the given paragraphs (all known to contain no mention of
// type_id) where at least one mention of type_id is predicted. Duplicate
// predictions cannot change the outcome; the paragraph list must be
// non-empty.
double fp_rate(const PredictionSet& predictions, const std::string& type_id,
               const std::vector<std::string>& paragraph_ids);

// TSV: per-type rows with exact and relaxed counts and P/R/F1, then micro
// and macro summary rows.
void save_ner_report(const NerReport& report, const std::string& path);

}  // namespace entkit
