#include "entkit/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "entkit/error.hpp"
#include "entkit/io.hpp"
#include "entkit/text.hpp"

namespace entkit {

InvertedIndex InvertedIndex::build(const std::vector<Paragraph>& corpus) {
  if (corpus.empty())
    throw Error(ErrorKind::empty_result, "cannot index an empty corpus");
  InvertedIndex index;
  index.doc_ids_.reserve(corpus.size());
  index.lengths_.reserve(corpus.size());
  uint64_t total_length = 0;
  for (uint32_t doc = 0; doc < corpus.size(); ++doc) {
    index.doc_ids_.push_back(corpus[doc].paragraph_id);
    index.lengths_.push_back(static_cast<uint32_t>(corpus[doc].tokens.size()));
    total_length += corpus[doc].tokens.size();
    std::map<std::string, uint32_t> tf;
    for (const auto& token : corpus[doc].tokens) ++tf[fold_case(token.text)];
    for (const auto& [term, count] : tf)
      index.postings_[term].push_back({doc, count});
  }
  index.average_length_ =
      static_cast<double>(total_length) / static_cast<double>(corpus.size());
  return index;
}

const std::vector<InvertedIndex::Posting>* InvertedIndex::postings_for(
    const std::string& folded_term) const {
  auto it = postings_.find(folded_term);
  return it == postings_.end() ? nullptr : &it->second;
}

void InvertedIndex::save(const std::string& path) const {
  std::ofstream out = open_output(path);
  OrderedJson header;
  header["kind"] = "inverted-index";
  header["documents"] = doc_ids_.size();
  header["terms"] = postings_.size();
  out << header.dump() << '\n';
  for (size_t i = 0; i < doc_ids_.size(); ++i) {
    OrderedJson record;
    record["paragraph_id"] = doc_ids_[i];
    record["length"] = lengths_[i];
    out << record.dump() << '\n';
  }
  for (const auto& [term, postings] : postings_) {
    OrderedJson record;
    record["term"] = term;
    auto& list = record["postings"] = OrderedJson::array();
    for (const auto& p : postings) list.push_back({p.doc, p.tf});
    out << record.dump() << '\n';
  }
}

InvertedIndex InvertedIndex::load(const std::string& path) {
  InvertedIndex index;
  bool have_header = false;
  size_t documents = 0;
  uint64_t total_length = 0;
  for_each_json_line(path, [&](size_t, const Json& record) {
    if (!have_header) {
      if (require_string(record, "kind") != "inverted-index")
        throw Error(ErrorKind::parse, "not an index file");
      documents = require_field(record, "documents").get<size_t>();
      have_header = true;
      return;
    }
    if (record.contains("paragraph_id")) {
      if (index.doc_ids_.size() == documents)
        throw Error(ErrorKind::parse, "more document records than declared");
      index.doc_ids_.push_back(require_string(record, "paragraph_id"));
      index.lengths_.push_back(require_field(record, "length").get<uint32_t>());
      total_length += index.lengths_.back();
      return;
    }
    std::string term = require_string(record, "term");
    auto& list = index.postings_[term];
    for (const auto& pair : require_field(record, "postings")) {
      uint32_t doc = pair.at(0).get<uint32_t>();
      uint32_t tf = pair.at(1).get<uint32_t>();
      if (doc >= documents)
        throw Error(ErrorKind::invariant, "posting references unknown document");
      if (tf == 0) throw Error(ErrorKind::invariant, "zero term frequency");
      list.push_back({doc, tf});
    }
  });
  if (!have_header) throw Error(ErrorKind::parse, "empty index file");
  if (index.doc_ids_.size() != documents)
    throw Error(ErrorKind::parse, "document record count mismatch");
  if (documents == 0)
    throw Error(ErrorKind::empty_result, "index holds no documents");
  index.average_length_ =
      static_cast<double>(total_length) / static_cast<double>(documents);
  return index;
}

namespace {

// Sort by score descending, paragraph_id ascending at ties.
void canonical_order(std::vector<ScoredDoc>& ranking) {
  std::sort(ranking.begin(), ranking.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.paragraph_id < b.paragraph_id;
  });
}

}  // namespace

RankedRun bm25_rank(const InvertedIndex& index, const std::string& type_id,
                    const std::string& query_text, const Bm25Params& params) {
  std::set<std::string> terms;
  for (const auto& token : tokenize(query_text)) terms.insert(fold_case(token.text));
  if (terms.empty())
    throw Error(ErrorKind::invariant, "query is empty after tokenization");

  const double n = static_cast<double>(index.document_count());
  std::unordered_map<uint32_t, double> scores;
  for (const auto& term : terms) {
    const auto* postings = index.postings_for(term);
    if (!postings) continue;
    const double df = static_cast<double>(postings->size());
    const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
    for (const auto& p : *postings) {
      const double tf = static_cast<double>(p.tf);
      const double norm =
          params.k1 * (1.0 - params.b +
                       params.b * index.lengths()[p.doc] / index.average_length());
      scores[p.doc] += idf * (tf * (params.k1 + 1.0)) / (tf + norm);
    }
  }

  RankedRun run;
  run.type_id = type_id;
  run.ranking.reserve(scores.size());
  for (const auto& [doc, score] : scores)
    if (score != 0.0) run.ranking.push_back({index.ids()[doc], score});
  canonical_order(run.ranking);
  return run;
}

const double* DenseVectorStore::vector_for(const std::string& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : vector(it->second);
}

void DenseVectorStore::add(const std::string& id, const std::vector<double>& values) {
  if (ids_.empty() && dimension_ == 0) dimension_ = values.size();
  if (values.size() != dimension_)
    throw Error(ErrorKind::invariant, "vector dimension mismatch for \"" + id + "\"");
  if (dimension_ == 0)
    throw Error(ErrorKind::invariant, "vectors must have positive dimension");
  for (double v : values)
    if (!std::isfinite(v))
      throw Error(ErrorKind::invariant, "non-finite vector entry for \"" + id + "\"");
  if (!index_.emplace(id, ids_.size()).second)
    throw Error(ErrorKind::duplicate_id, "duplicate vector id \"" + id + "\"");
  ids_.push_back(id);
  data_.insert(data_.end(), values.begin(), values.end());
}

DenseVectorStore DenseVectorStore::with_dimension(size_t d) {
  DenseVectorStore store;
  store.dimension_ = d;
  return store;
}

void DenseVectorStore::save(const std::string& path) const {
  std::ofstream out = open_output(path);
  OrderedJson header;
  header["dimension"] = dimension_;
  header["count"] = ids_.size();
  out << header.dump() << '\n';
  for (size_t row = 0; row < ids_.size(); ++row) {
    out << ids_[row];
    const double* v = vector(row);
    for (size_t i = 0; i < dimension_; ++i) out << ' ' << format_double(v[i]);
    out << '\n';
  }
}

DenseVectorStore DenseVectorStore::load(const std::string& path) {
  std::ifstream in = open_input(path);
  std::string line;
  if (!std::getline(in, line))
    throw Error(ErrorKind::parse, path + ": empty vector file");
  Json header = Json::parse(line, nullptr, false);
  if (header.is_discarded())
    throw Error(ErrorKind::parse, path + ":1: malformed header");
  const size_t dimension = require_field(header, "dimension").get<size_t>();
  const size_t count = require_field(header, "count").get<size_t>();
  if (dimension == 0)
    throw Error(ErrorKind::invariant, path + ": dimension must be positive");
  DenseVectorStore store = with_dimension(dimension);
  size_t lineno = 1;
  std::vector<double> values(dimension);
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    size_t space = line.find(' ');
    if (space == std::string::npos || space == 0)
      fail_at(ErrorKind::parse, path, lineno, "expected \"id v1 .. vd\"");
    std::string id = line.substr(0, space);
    size_t pos = space + 1;
    for (size_t i = 0; i < dimension; ++i) {
      size_t next = 0;
      try {
        values[i] = std::stod(line.substr(pos), &next);
      } catch (const std::logic_error&) {
        fail_at(ErrorKind::parse, path, lineno, "malformed vector entry");
      }
      pos += next;
    }
    if (pos < line.size())
      fail_at(ErrorKind::parse, path, lineno, "too many vector entries");
    try {
      store.add(id, values);
    } catch (const Error& e) {
      fail_at(e.kind(), path, lineno, e.what());
    }
  }
  if (store.count() != count)
    throw Error(ErrorKind::parse, path + ": vector count mismatch with header");
  return store;
}

RankedRun dense_rank(const DenseVectorStore& store, const std::string& type_id,
                     const std::vector<double>& query) {
  if (query.size() != store.dimension())
    throw Error(ErrorKind::invariant, "query dimension mismatch");
  double query_norm = 0.0;
  for (double v : query) query_norm += v * v;
  query_norm = std::sqrt(query_norm);
  if (query_norm == 0.0)
    throw Error(ErrorKind::invariant, "query vector must be nonzero");

  RankedRun run;
  run.type_id = type_id;
  run.ranking.reserve(store.count());
  for (size_t row = 0; row < store.count(); ++row) {
    const double* v = store.vector(row);
    double dot = 0.0, norm = 0.0;
    for (size_t i = 0; i < query.size(); ++i) {
      dot += v[i] * query[i];
      norm += v[i] * v[i];
    }
    const double denom = std::sqrt(norm) * query_norm;
    run.ranking.push_back({store.ids()[row], denom == 0.0 ? 0.0 : dot / denom});
  }
  canonical_order(run.ranking);
  return run;
}

std::map<std::string, std::set<std::string>> relevance_sets(const SilverDataset& dataset) {
  std::map<std::string, std::set<std::string>> rel;
  for (const auto& ap : dataset)
    for (const auto& span : ap.spans)
      for (const auto& t : span.type_ids) rel[t].insert(ap.paragraph.paragraph_id);
  return rel;
}

double recall_at_rel(const RankedRun& run, const std::set<std::string>& relevant) {
  if (relevant.empty())
    throw Error(ErrorKind::empty_result, "relevance set is empty");
  const size_t k = std::min(relevant.size(), run.ranking.size());
  size_t hits = 0;
  for (size_t i = 0; i < k; ++i)
    if (relevant.count(run.ranking[i].paragraph_id)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(relevant.size());
}

RetrievalReport evaluate_runs(const std::vector<RankedRun>& runs,
                              const std::map<std::string, std::set<std::string>>& relevance) {
  if (relevance.empty())
    throw Error(ErrorKind::empty_result, "no relevance sets to evaluate");
  std::map<std::string, const RankedRun*> by_type;
  for (const auto& run : runs) {
    if (!by_type.emplace(run.type_id, &run).second)
      throw Error(ErrorKind::duplicate_id, "duplicate run for type \"" + run.type_id + "\"");
    if (!relevance.count(run.type_id))
      throw Error(ErrorKind::dangling_reference,
                  "run for type \"" + run.type_id + "\" has no relevance set");
  }

  RetrievalReport report;
  for (const auto& [type_id, relevant] : relevance) {
    auto it = by_type.find(type_id);
    if (it == by_type.end())
      throw Error(ErrorKind::missing_input, "no run for type \"" + type_id + "\"");
    report.per_type.push_back(
        {type_id, relevant.size(), recall_at_rel(*it->second, relevant)});
  }

  const double n = static_cast<double>(report.per_type.size());
  double sum = 0.0;
  for (const auto& r : report.per_type) sum += r.recall;
  report.mean = sum / n;
  double var = 0.0;
  for (const auto& r : report.per_type) {
    const double d = r.recall - report.mean;
    var += d * d;
  }
  report.stddev = std::sqrt(var / n);

  double rel_mean = 0.0;
  for (const auto& r : report.per_type) rel_mean += static_cast<double>(r.rel_size);
  rel_mean /= n;
  double cov = 0.0, var_rel = 0.0, var_recall = 0.0;
  for (const auto& r : report.per_type) {
    const double dr = static_cast<double>(r.rel_size) - rel_mean;
    const double dc = r.recall - report.mean;
    cov += dr * dc;
    var_rel += dr * dr;
    var_recall += dc * dc;
  }
  if (var_rel > 0.0 && var_recall > 0.0) {
    report.pearson = cov / std::sqrt(var_rel * var_recall);
    report.pearson_defined = true;
  }
  return report;
}

void save_runs(const std::vector<RankedRun>& runs, const std::string& path) {
  std::ofstream out = open_output(path);
  for (const auto& run : runs) {
    size_t rank = 0;
    for (const auto& doc : run.ranking)
      out << run.type_id << '\t' << ++rank << '\t' << doc.paragraph_id << '\t'
          << format_double(doc.score) << '\n';
  }
}

std::vector<RankedRun> load_runs(const std::string& path) {
  std::ifstream in = open_input(path);
  std::vector<RankedRun> runs;
  std::unordered_map<std::string, size_t> run_index;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    size_t start = 0;
    for (size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == '\t') {
        cells.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    }
    if (cells.size() != 4)
      fail_at(ErrorKind::parse, path, lineno, "expected 4 tab-separated columns");
    size_t rank = 0;
    double score = 0.0;
    try {
      rank = std::stoull(cells[1]);
      score = std::stod(cells[3]);
    } catch (const std::logic_error&) {
      fail_at(ErrorKind::parse, path, lineno, "malformed rank or score");
    }
    auto [it, fresh] = run_index.emplace(cells[0], runs.size());
    if (fresh) runs.push_back({cells[0], {}});
    RankedRun& run = runs[it->second];
    if (rank != run.ranking.size() + 1)
      fail_at(ErrorKind::invariant, path, lineno, "ranks must be 1,2,... per type");
    if (!run.ranking.empty()) {
      const ScoredDoc& prev = run.ranking.back();
      if (score > prev.score)
        fail_at(ErrorKind::invariant, path, lineno, "scores must be non-increasing");
      if (score == prev.score && cells[2] <= prev.paragraph_id)
        fail_at(ErrorKind::invariant, path, lineno,
                "ties must be ordered by ascending paragraph id");
    }
    run.ranking.push_back({cells[2], score});
  }
  for (const auto& run : runs) {
    std::unordered_set<std::string> seen;
    for (const auto& doc : run.ranking)
      if (!seen.insert(doc.paragraph_id).second)
        throw Error(ErrorKind::duplicate_id, "run for type \"" + run.type_id +
                                                 "\" lists \"" + doc.paragraph_id +
                                                 "\" twice");
  }
  return runs;
}

void save_retrieval_report(const RetrievalReport& report, const std::string& path) {
  std::ofstream out = open_output(path);
  out << "type_id\trel_size\trecall\n";
  for (const auto& r : report.per_type)
    out << r.type_id << '\t' << r.rel_size << '\t' << format_double(r.recall) << '\n';
  out << "mean\t\t" << format_double(report.mean) << '\n';
  out << "stddev\t\t" << format_double(report.stddev) << '\n';
  out << "pearson\t\t" << (report.pearson_defined ? format_double(report.pearson) : "NA")
      << '\n';
}

}  // namespace entkit
