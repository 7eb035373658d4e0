#include "entkit/corpus.hpp"

#include <unordered_set>

#include "entkit/error.hpp"
#include "entkit/io.hpp"

namespace entkit {

Paragraph Paragraph::make(std::string id, std::string text) {
  Paragraph p;
  p.paragraph_id = std::move(id);
  p.text = std::move(text);
  p.tokens = tokenize(p.text);
  return p;
}

struct CorpusReader::Impl {
  std::ifstream in;
  std::string path;
  size_t lineno = 0;
  std::unordered_set<std::string> seen_ids;
};

CorpusReader::CorpusReader(const std::string& path) : impl_(new Impl) {
  impl_->in = open_input(path);
  impl_->path = path;
}

CorpusReader::~CorpusReader() = default;
CorpusReader::CorpusReader(CorpusReader&&) noexcept = default;
CorpusReader& CorpusReader::operator=(CorpusReader&&) noexcept = default;

std::optional<Paragraph> CorpusReader::next() {
  std::string line;
  while (std::getline(impl_->in, line)) {
    ++impl_->lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    Json record = Json::parse(line, nullptr, false);
    if (record.is_discarded())
      fail_at(ErrorKind::parse, impl_->path, impl_->lineno, "malformed JSON record");
    std::string id, text;
    try {
      id = require_string(record, "paragraph_id");
      text = require_string(record, "text");
    } catch (const Error& e) {
      fail_at(e.kind(), impl_->path, impl_->lineno, e.what());
    }
    if (!impl_->seen_ids.insert(id).second)
      fail_at(ErrorKind::duplicate_id, impl_->path, impl_->lineno,
              "duplicate paragraph_id \"" + id + "\"");
    return Paragraph::make(std::move(id), std::move(text));
  }
  return std::nullopt;
}

std::vector<Paragraph> load_corpus(const std::string& path) {
  std::vector<Paragraph> corpus;
  CorpusReader reader(path);
  while (auto p = reader.next()) corpus.push_back(std::move(*p));
  return corpus;
}

void save_corpus(const std::vector<Paragraph>& corpus, const std::string& path) {
  std::ofstream out = open_output(path);
  for (const auto& p : corpus) {
    OrderedJson record;
    record["paragraph_id"] = p.paragraph_id;
    record["text"] = p.text;
    out << record.dump() << '\n';
  }
}

LinkGraph load_linkgraph(const std::string& path) {
  LinkGraph graph;
  for_each_json_line(path, [&](size_t, const Json& record) {
    std::string entity_id = require_string(record, "entity_id");
    if (graph.candidates.count(entity_id))
      throw Error(ErrorKind::duplicate_id,
                  "duplicate entity_id \"" + entity_id + "\"");
    auto& set = graph.candidates[entity_id];
    for (const auto& pid : require_field(record, "paragraph_ids"))
      set.insert(pid.get<std::string>());
  });
  return graph;
}

void save_linkgraph(const LinkGraph& graph, const std::string& path) {
  std::ofstream out = open_output(path);
  std::vector<std::string> ids;
  ids.reserve(graph.candidates.size());
  for (const auto& [id, _] : graph.candidates) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  for (const auto& id : ids) {
    OrderedJson record;
    record["entity_id"] = id;
    record["paragraph_ids"] = graph.candidates.at(id);
    out << record.dump() << '\n';
  }
}

SilverDataset load_dataset(const std::string& path) {
  SilverDataset dataset;
  std::unordered_set<std::string> seen;
  for_each_json_line(path, [&](size_t, const Json& record) {
    AnnotatedParagraph ap;
    ap.paragraph = Paragraph::make(require_string(record, "paragraph_id"),
                                   require_string(record, "text"));
    if (!seen.insert(ap.paragraph.paragraph_id).second)
      throw Error(ErrorKind::duplicate_id, "duplicate paragraph_id \"" +
                                               ap.paragraph.paragraph_id + "\"");
    const size_t token_count = ap.paragraph.tokens.size();
    for (const auto& s : require_field(record, "spans")) {
      MentionSpan span;
      span.token_start = require_field(s, "token_start").get<uint32_t>();
      span.token_end = require_field(s, "token_end").get<uint32_t>();
      span.entity_id = require_string(s, "entity_id");
      for (const auto& t : require_field(s, "type_ids"))
        span.type_ids.insert(t.get<std::string>());
      if (span.token_start >= span.token_end || span.token_end > token_count)
        throw Error(ErrorKind::invariant,
                    "span range [" + std::to_string(span.token_start) + "," +
                        std::to_string(span.token_end) + ") out of bounds");
      if (span.type_ids.empty())
        throw Error(ErrorKind::invariant, "span with empty type set");
      ap.spans.push_back(std::move(span));
    }
    dataset.push_back(std::move(ap));
  });
  return dataset;
}

void save_dataset(const SilverDataset& dataset, const std::string& path) {
  std::ofstream out = open_output(path);
  for (const auto& ap : dataset) {
    OrderedJson record;
    record["paragraph_id"] = ap.paragraph.paragraph_id;
    record["text"] = ap.paragraph.text;
    OrderedJson spans = OrderedJson::array();
    for (const auto& span : ap.spans) {
      OrderedJson s;
      s["token_start"] = span.token_start;
      s["token_end"] = span.token_end;
      s["entity_id"] = span.entity_id;
      s["type_ids"] = span.type_ids;
      spans.push_back(std::move(s));
    }
    record["spans"] = std::move(spans);
    out << record.dump() << '\n';
  }
}

}  // namespace entkit
