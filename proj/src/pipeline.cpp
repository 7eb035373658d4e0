#include "entkit/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "entkit/error.hpp"
#include "entkit/io.hpp"
#include "entkit/rng.hpp"

namespace entkit {

namespace {

void validate_assembly_config(const AssemblyConfig& config) {
  if (config.min_distinct_types < 1)
    throw Error(ErrorKind::config, "min_distinct_types must be at least 1");
}

}  // namespace

SilverDataset assemble_from_filtered(const std::vector<Paragraph>& corpus,
                                     const Lexicon& lexicon,
                                     const std::vector<FilteredMatch>& matches,
                                     const AssemblyConfig& config) {
  validate_assembly_config(config);

  std::unordered_map<std::string, size_t> corpus_index;
  for (size_t i = 0; i < corpus.size(); ++i)
    corpus_index[corpus[i].paragraph_id] = i;

  // (start, end, entity) -> union of surviving types, grouped by paragraph.
  struct SpanKey {
    uint32_t start, end;
    std::string entity_id;
    bool operator<(const SpanKey& o) const {
      return std::tie(start, end, entity_id) < std::tie(o.start, o.end, o.entity_id);
    }
  };
  std::unordered_map<size_t, std::map<SpanKey, std::set<std::string>>> grouped;
  for (const auto& fm : matches) {
    auto it = corpus_index.find(fm.match.paragraph_id);
    if (it == corpus_index.end())
      throw Error(ErrorKind::dangling_reference,
                  "match references unknown paragraph \"" + fm.match.paragraph_id + "\"");
    if (fm.match.token_end > corpus[it->second].tokens.size() ||
        fm.match.token_start >= fm.match.token_end)
      throw Error(ErrorKind::invariant,
                  "match span out of range in \"" + fm.match.paragraph_id + "\"");
    auto& types = grouped[it->second][{fm.match.token_start, fm.match.token_end,
                                       fm.match.entity_id}];
    types.insert(fm.surviving_types.begin(), fm.surviving_types.end());
  }

  struct Candidate {
    size_t corpus_pos;
    size_t distinct_types;
    size_t distinct_entities;
  };
  std::vector<Candidate> selected;
  for (const auto& [pos, spans] : grouped) {
    std::set<std::string> types, entities;
    for (const auto& [key, span_types] : spans) {
      entities.insert(key.entity_id);
      types.insert(span_types.begin(), span_types.end());
    }
    if (types.size() >= config.min_distinct_types)
      selected.push_back({pos, types.size(), entities.size()});
  }

  if (config.max_paragraphs > 0 && selected.size() > config.max_paragraphs) {
    std::sort(selected.begin(), selected.end(), [&](const Candidate& a, const Candidate& b) {
      if (a.distinct_types != b.distinct_types) return a.distinct_types > b.distinct_types;
      if (a.distinct_entities != b.distinct_entities)
        return a.distinct_entities > b.distinct_entities;
      return corpus[a.corpus_pos].paragraph_id < corpus[b.corpus_pos].paragraph_id;
    });
    selected.resize(config.max_paragraphs);
  }
  std::sort(selected.begin(), selected.end(),
            [](const Candidate& a, const Candidate& b) { return a.corpus_pos < b.corpus_pos; });

  SilverDataset dataset;
  dataset.reserve(selected.size());
  for (const auto& c : selected) {
    AnnotatedParagraph ap;
    ap.paragraph = corpus[c.corpus_pos];
    for (const auto& [key, types] : grouped.at(c.corpus_pos)) {
      MentionSpan span;
      span.token_start = key.start;
      span.token_end = key.end;
      span.entity_id = key.entity_id;
      span.type_ids = hierarchy_closure(lexicon, types);
      ap.spans.push_back(std::move(span));
    }
    dataset.push_back(std::move(ap));
  }
  if (dataset.empty())
    throw Error(ErrorKind::empty_result, "assembly selected no paragraphs");
  return dataset;
}

SilverDataset assemble(const std::vector<Paragraph>& corpus, const Lexicon& lexicon,
                       const LinkGraph* linkgraph,
                       const std::map<std::string, TypeFilterModel>& models,
                       const TfidfVocabulary& vocab, const AssemblyConfig& config,
                       const WarnSink& warn) {
  validate_assembly_config(config);
  PatternSet patterns = PatternSet::compile(lexicon);
  ScanOptions scan_options;
  scan_options.slop = config.slop;
  scan_options.linkgraph = linkgraph;
  scan_options.threads = config.threads;
  std::vector<RawMatch> raw = scan_corpus(corpus, patterns, scan_options, warn);
  std::vector<FilteredMatch> filtered =
      filter_matches(raw, models, corpus, lexicon, vocab, config.threshold);
  return assemble_from_filtered(corpus, lexicon, filtered, config);
}

const char* split_name(Split split) {
  return split == Split::train ? "train" : "test";
}

SplitAssignment split_dataset(const SilverDataset& dataset,
                              double paragraph_fraction, double type_fraction,
                              uint64_t seed, const WarnSink& warn,
                              const std::set<std::string>* test_type_override) {
  if (dataset.empty())
    throw Error(ErrorKind::empty_result, "cannot split an empty dataset");
  if (paragraph_fraction < 0.0 || paragraph_fraction > 1.0 ||
      type_fraction < 0.0 || type_fraction > 1.0)
    throw Error(ErrorKind::config, "split fractions must lie in [0, 1]");

  // Typed-mention counts per paragraph; the stratification balances mention
  // proportions, not paragraph counts.
  std::vector<std::map<std::string, uint64_t>> mention_counts(dataset.size());
  std::map<std::string, uint64_t> type_paragraphs;
  for (size_t i = 0; i < dataset.size(); ++i) {
    for (const auto& span : dataset[i].spans)
      for (const auto& t : span.type_ids) ++mention_counts[i][t];
    for (const auto& [t, _] : mention_counts[i]) ++type_paragraphs[t];
  }
  if (warn)
    for (const auto& [t, n] : type_paragraphs)
      if (n == 1)
        warn("type \"" + t + "\" occurs in a single paragraph; its split "
             "proportion cannot match the target fraction");

  std::vector<size_t> order(dataset.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng(seed).derive("split.paragraphs").shuffle(order);

  SplitAssignment assignment;
  std::map<std::string, uint64_t> train_mentions, assigned_mentions;
  for (size_t idx : order) {
    const auto& counts = mention_counts[idx];
    // Deviation from the target share, summed over this paragraph's types,
    // for each hypothetical placement. Types untouched by the paragraph
    // contribute identically to both sides.
    double if_train = 0.0, if_test = 0.0;
    for (const auto& [t, m] : counts) {
      const double denom = static_cast<double>(assigned_mentions[t] + m);
      if_train += std::abs((train_mentions[t] + m) / denom - paragraph_fraction);
      if_test += std::abs(train_mentions[t] / denom - paragraph_fraction);
    }
    const Split side = if_train <= if_test ? Split::train : Split::test;
    assignment.paragraphs[dataset[idx].paragraph.paragraph_id] = side;
    for (const auto& [t, m] : counts) {
      assigned_mentions[t] += m;
      if (side == Split::train) train_mentions[t] += m;
    }
  }

  std::vector<std::string> type_ids;
  for (const auto& [t, _] : type_paragraphs) type_ids.push_back(t);
  if (test_type_override) {
    for (const auto& t : *test_type_override)
      if (!type_paragraphs.count(t))
        throw Error(ErrorKind::dangling_reference,
                    "test-type override names unknown type \"" + t + "\"");
    for (const auto& t : type_ids)
      assignment.types[t] =
          test_type_override->count(t) ? Split::test : Split::train;
  } else {
    Rng(seed).derive("split.types").shuffle(type_ids);
    const size_t train_count = static_cast<size_t>(
        std::llround(type_fraction * static_cast<double>(type_ids.size())));
    for (size_t i = 0; i < type_ids.size(); ++i)
      assignment.types[type_ids[i]] = i < train_count ? Split::train : Split::test;
  }
  return assignment;
}

SilverDataset select_split(const SilverDataset& dataset,
                           const SplitAssignment& assignment, Split side) {
  SilverDataset out;
  for (const auto& ap : dataset) {
    auto it = assignment.paragraphs.find(ap.paragraph.paragraph_id);
    if (it == assignment.paragraphs.end())
      throw Error(ErrorKind::dangling_reference,
                  "paragraph \"" + ap.paragraph.paragraph_id + "\" has no split assignment");
    if (it->second == side) out.push_back(ap);
  }
  return out;
}

namespace {

void save_split_file(const std::map<std::string, Split>& items,
                     const char* id_field, const std::string& path) {
  std::ofstream out = open_output(path);
  for (const auto& [id, side] : items) {
    OrderedJson record;
    record[id_field] = id;
    record["split"] = split_name(side);
    out << record.dump() << '\n';
  }
}

void load_split_file(const std::string& path, const char* id_field,
                     std::map<std::string, Split>& items) {
  for_each_json_line(path, [&](size_t, const Json& record) {
    std::string id = require_string(record, id_field);
    std::string side = require_string(record, "split");
    if (side != "train" && side != "test")
      throw Error(ErrorKind::parse, "split must be \"train\" or \"test\"");
    if (!items.emplace(id, side == "train" ? Split::train : Split::test).second)
      throw Error(ErrorKind::duplicate_id, "duplicate split entry \"" + id + "\"");
  });
}

}  // namespace

void save_paragraph_split(const SplitAssignment& assignment, const std::string& path) {
  save_split_file(assignment.paragraphs, "paragraph_id", path);
}

void save_type_split(const SplitAssignment& assignment, const std::string& path) {
  save_split_file(assignment.types, "type_id", path);
}

SplitAssignment load_split_assignment(const std::string& paragraph_path,
                                      const std::string& type_path) {
  SplitAssignment assignment;
  load_split_file(paragraph_path, "paragraph_id", assignment.paragraphs);
  load_split_file(type_path, "type_id", assignment.types);
  return assignment;
}

std::map<std::string, Split> load_type_split(const std::string& path) {
  std::map<std::string, Split> types;
  load_split_file(path, "type_id", types);
  return types;
}

std::vector<size_t> stratified_sample(const SilverDataset& dataset, size_t n,
                                      uint64_t seed) {
  if (n == 0) throw Error(ErrorKind::config, "sample size must be positive");
  if (n > dataset.size())
    throw Error(ErrorKind::config, "sample size exceeds dataset size");

  std::map<std::string, std::vector<size_t>> by_type;
  for (size_t i = 0; i < dataset.size(); ++i) {
    std::set<std::string> types;
    for (const auto& span : dataset[i].spans)
      types.insert(span.type_ids.begin(), span.type_ids.end());
    for (const auto& t : types) by_type[t].push_back(i);
  }

  Rng root = Rng(seed).derive("sample");
  std::vector<std::string> type_order;
  for (const auto& [t, _] : by_type) type_order.push_back(t);
  root.derive("types").shuffle(type_order);
  std::map<std::string, size_t> cursor;
  for (auto& [t, list] : by_type) {
    root.derive("type." + t).shuffle(list);
    cursor[t] = 0;
  }

  std::vector<size_t> sample;
  std::unordered_set<size_t> taken;
  while (sample.size() < n) {
    bool drew = false;
    for (const auto& t : type_order) {
      if (sample.size() == n) break;
      auto& pos = cursor[t];
      const auto& list = by_type[t];
      while (pos < list.size() && taken.count(list[pos])) ++pos;
      if (pos == list.size()) continue;
      taken.insert(list[pos]);
      sample.push_back(list[pos]);
      ++pos;
      drew = true;
    }
    if (!drew)
      throw Error(ErrorKind::empty_result,
                  "not enough paragraphs with typed spans to sample");
  }
  return sample;
}

AuditWorksheet audit_sample(const SilverDataset& dataset, size_t n, uint64_t seed) {
  std::vector<size_t> order(dataset.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng(seed).derive("audit").shuffle(order);
  order.resize(std::min(n, order.size()));
  std::sort(order.begin(), order.end());

  AuditWorksheet worksheet;
  for (size_t idx : order) {
    const auto& ap = dataset[idx];
    for (const auto& span : ap.spans) {
      const auto& tokens = ap.paragraph.tokens;
      const std::string text = ap.paragraph.text.substr(
          tokens[span.token_start].char_start,
          tokens[span.token_end - 1].char_end - tokens[span.token_start].char_start);
      for (const auto& t : span.type_ids) {
        AuditRow row;
        row.paragraph_id = ap.paragraph.paragraph_id;
        row.token_start = span.token_start;
        row.token_end = span.token_end;
        row.entity_id = span.entity_id;
        row.type_id = t;
        row.span_text = text;
        row.paragraph_text = ap.paragraph.text;
        worksheet.rows.push_back(std::move(row));
      }
    }
  }
  return worksheet;
}

namespace {

std::string sanitize_cell(std::string value) {
  for (char& c : value)
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  return value;
}

}  // namespace

void save_worksheet(const AuditWorksheet& worksheet, const std::string& path) {
  std::ofstream out = open_output(path);
  out << "paragraph_id\ttoken_start\ttoken_end\tentity_id\ttype_id\tspan_text"
         "\tparagraph_text\tjudgment\n";
  for (const auto& row : worksheet.rows) {
    out << sanitize_cell(row.paragraph_id) << '\t' << row.token_start << '\t'
        << row.token_end << '\t' << sanitize_cell(row.entity_id) << '\t'
        << sanitize_cell(row.type_id) << '\t' << sanitize_cell(row.span_text)
        << '\t' << sanitize_cell(row.paragraph_text) << '\t'
        << sanitize_cell(row.judgment) << '\n';
  }
}

AuditWorksheet load_worksheet(const std::string& path) {
  std::ifstream in = open_input(path);
  AuditWorksheet worksheet;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1 || line.empty()) continue;
    std::vector<std::string> cells;
    size_t start = 0;
    for (size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == '\t') {
        cells.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    }
    if (cells.size() != 8)
      fail_at(ErrorKind::parse, path, lineno, "expected 8 tab-separated columns");
    AuditRow row;
    row.paragraph_id = cells[0];
    try {
      row.token_start = static_cast<uint32_t>(std::stoul(cells[1]));
      row.token_end = static_cast<uint32_t>(std::stoul(cells[2]));
    } catch (const std::logic_error&) {
      fail_at(ErrorKind::parse, path, lineno, "malformed token range");
    }
    row.entity_id = cells[3];
    row.type_id = cells[4];
    row.span_text = cells[5];
    row.paragraph_text = cells[6];
    row.judgment = cells[7];
    worksheet.rows.push_back(std::move(row));
  }
  return worksheet;
}

AuditSummary audit_accuracy(const AuditWorksheet& worksheet) {
  AuditSummary summary;
  summary.total_rows = worksheet.rows.size();
  for (const auto& row : worksheet.rows) {
    if (row.judgment.empty()) continue;
    ++summary.judged;
    if (row.judgment == "correct") ++summary.correct;
  }
  if (summary.judged == 0)
    throw Error(ErrorKind::empty_result, "worksheet has no judged rows");
  summary.accuracy =
      static_cast<double>(summary.correct) / static_cast<double>(summary.judged);
  return summary;
}

}  // namespace entkit
