#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "entkit/corpus.hpp"

namespace entkit {

// Term -> (document, term frequency) postings over case-folded tokens.
// Documents are indexed positionally; ids() maps back to paragraph ids.
class InvertedIndex {
 public:
  struct Posting {
    uint32_t doc = 0;
    uint32_t tf = 0;
  };

  static InvertedIndex build(const std::vector<Paragraph>& corpus);

  size_t document_count() const { return doc_ids_.size(); }
  double average_length() const { return average_length_; }
  const std::vector<std::string>& ids() const { return doc_ids_; }
  const std::vector<uint32_t>& lengths() const { return lengths_; }
  const std::map<std::string, std::vector<Posting>>& postings() const {
    return postings_;
  }
  const std::vector<Posting>* postings_for(const std::string& folded_term) const;

  void save(const std::string& path) const;
  static InvertedIndex load(const std::string& path);

 private:
  std::vector<std::string> doc_ids_;
  std::vector<uint32_t> lengths_;
  std::map<std::string, std::vector<Posting>> postings_;
  double average_length_ = 0.0;
};

struct ScoredDoc {
  std::string paragraph_id;
  double score = 0.0;
};

// One query's full ranking: scores non-increasing, ties ordered by ascending
// paragraph id. Exhaustive: every nonzero-scoring document is present.
struct RankedRun {
  std::string type_id;
  std::vector<ScoredDoc> ranking;
};

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

// Okapi BM25 with idf(t) = ln(1 + (N - df + 0.5)/(df + 0.5)). The query is
// tokenized, case-folded, and deduplicated; repeating a term does not boost
// it. Returns every document matching at least one query term.
RankedRun bm25_rank(const InvertedIndex& index, const std::string& type_id,
                    const std::string& query_text, const Bm25Params& params = {});

// Fixed-dimension vectors keyed by paragraph (or type, for query files).
class DenseVectorStore {
 public:
  size_t dimension() const { return dimension_; }
  size_t count() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  // Row view into the flat storage, length = dimension().
  const double* vector(size_t row) const { return data_.data() + row * dimension_; }
  const double* vector_for(const std::string& id) const;

  void add(const std::string& id, const std::vector<double>& values);

  void save(const std::string& path) const;
  static DenseVectorStore load(const std::string& path);

  static DenseVectorStore with_dimension(size_t d);

 private:
  size_t dimension_ = 0;
  std::vector<std::string> ids_;
  std::vector<double> data_;
  std::map<std::string, size_t> index_;
};

// Cosine similarity ranking of every stored vector against the query. The
// query must be nonzero and of matching dimension; a zero stored vector
// scores 0.
RankedRun dense_rank(const DenseVectorStore& store, const std::string& type_id,
                     const std::vector<double>& query);

// type_id -> paragraphs containing at least one span of that type.
std::map<std::string, std::set<std::string>> relevance_sets(const SilverDataset& dataset);

// |top-|REL| of run ∩ relevant| / |REL|. Runs shorter than |REL| count the
// missing slots as misses. relevant must be non-empty.
double recall_at_rel(const RankedRun& run, const std::set<std::string>& relevant);

struct RetrievalQueryResult {
  std::string type_id;
  size_t rel_size = 0;
  double recall = 0.0;
};

struct RetrievalReport {
  std::vector<RetrievalQueryResult> per_type;  // sorted by type_id
  double mean = 0.0;
  double stddev = 0.0;  // population
  double pearson = 0.0; // between |REL| and recall
  bool pearson_defined = false;
};

// Every relevance set must have a run and vice versa.
RetrievalReport evaluate_runs(const std::vector<RankedRun>& runs,
                              const std::map<std::string, std::set<std::string>>& relevance);

// TSV rows: type_id, rank (1-based), paragraph_id, score. Loading validates
// the RankedRun ordering invariant, so third-party runs are checked before
// they are scored.
void save_runs(const std::vector<RankedRun>& runs, const std::string& path);
std::vector<RankedRun> load_runs(const std::string& path);

void save_retrieval_report(const RetrievalReport& report, const std::string& path);

}  // namespace entkit
