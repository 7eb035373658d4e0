// Relaxed multi-pattern phrase matching. Patterns are bucketed by their
// case-folded first token; each bucket hit triggers a bounded forward
// verification that matches the remaining alias tokens in order, spending at
// most `slop` intervening tokens in total. Matching each alias token at its
// earliest possible position minimizes the end index for a given start, so
// the per-start candidate is unique and the leftmost-then-minimal-gap
// reduction is a single left-to-right sweep.

#include "entkit/matcher.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include "entkit/error.hpp"
#include "entkit/io.hpp"

namespace entkit {

PatternSet PatternSet::compile(const Lexicon& lexicon) {
  PatternSet set;
  for (const auto& entity : lexicon.entities()) {
    uint32_t entity_idx = static_cast<uint32_t>(set.entity_ids_.size());
    set.entity_ids_.push_back(entity.entity_id);
    set.entity_index_[entity.entity_id] = entity_idx;
    for (const auto& alias : entity.aliases) {
      std::vector<Token> toks = tokenize(alias);
      if (toks.empty())
        throw Error(ErrorKind::invariant,
                    "alias \"" + alias + "\" of entity \"" + entity.entity_id +
                        "\" has no tokens");
      Pattern p;
      p.entity = entity_idx;
      p.alias = alias;
      p.tokens = folded_token_texts(toks);
      uint32_t id = static_cast<uint32_t>(set.patterns_.size());
      set.first_token_[p.tokens[0]].push_back(id);
      set.patterns_.push_back(std::move(p));
    }
  }
  return set;
}

const std::vector<uint32_t>* PatternSet::candidates(
    const std::string& folded_token) const {
  auto it = first_token_.find(folded_token);
  return it == first_token_.end() ? nullptr : &it->second;
}

size_t PatternSet::entity_index(const std::string& entity_id) const {
  auto it = entity_index_.find(entity_id);
  return it == entity_index_.end() ? npos : it->second;
}

namespace {

struct Candidate {
  uint32_t pattern;
  uint32_t start;
  uint32_t end;
};

// Earliest in-order match of tokens[1..] after `start`, total gap <= slop.
// Returns the exclusive end index, or 0 if no match fits the budget.
uint32_t verify(const std::vector<std::string>& folded, uint32_t start,
                const std::vector<std::string>& alias_tokens, uint32_t slop) {
  uint32_t pos = start + 1;
  uint32_t budget = slop;
  for (size_t k = 1; k < alias_tokens.size(); ++k) {
    const std::string& want = alias_tokens[k];
    uint32_t limit = pos + budget;  // furthest index this token may sit at
    uint32_t found = UINT32_MAX;
    for (uint32_t i = pos; i <= limit && i < folded.size(); ++i) {
      if (folded[i] == want) {
        found = i;
        break;
      }
    }
    if (found == UINT32_MAX) return 0;
    budget -= found - pos;
    pos = found + 1;
  }
  return pos;
}

}  // namespace

std::vector<RawMatch> scan(const Paragraph& paragraph, const PatternSet& patterns,
                           uint32_t slop,
                           const std::unordered_set<uint32_t>* allowed_entities) {
  std::vector<RawMatch> out;
  if (patterns.empty() || paragraph.tokens.empty()) return out;
  const std::vector<std::string> folded = folded_token_texts(paragraph.tokens);

  std::vector<Candidate> candidates;
  for (uint32_t i = 0; i < folded.size(); ++i) {
    const auto* bucket = patterns.candidates(folded[i]);
    if (!bucket) continue;
    for (uint32_t pid : *bucket) {
      const auto& pattern = patterns.patterns()[pid];
      if (allowed_entities && !allowed_entities->count(pattern.entity)) continue;
      uint32_t end = pattern.tokens.size() == 1
                         ? i + 1
                         : verify(folded, i, pattern.tokens, slop);
      if (end != 0) candidates.push_back({pid, i, end});
    }
  }

  // Candidates for one pattern arrive in ascending start order with the
  // minimal end per start; drop any that overlap the previously kept one.
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) {
                     if (a.pattern != b.pattern) return a.pattern < b.pattern;
                     return a.start < b.start;
                   });
  std::unordered_map<uint32_t, uint32_t> last_end;  // pattern -> kept end
  for (const auto& c : candidates) {
    auto it = last_end.find(c.pattern);
    if (it != last_end.end() && c.start < it->second) continue;
    last_end[c.pattern] = c.end;
    const auto& pattern = patterns.patterns()[c.pattern];
    RawMatch m;
    m.paragraph_id = paragraph.paragraph_id;
    m.token_start = c.start;
    m.token_end = c.end;
    m.entity_id = patterns.entity_ids()[pattern.entity];
    m.alias = pattern.alias;
    m.gap_count = (c.end - c.start) - static_cast<uint32_t>(pattern.tokens.size());
    out.push_back(std::move(m));
  }

  std::sort(out.begin(), out.end(), [](const RawMatch& a, const RawMatch& b) {
    if (a.token_start != b.token_start) return a.token_start < b.token_start;
    if (a.entity_id != b.entity_id) return a.entity_id < b.entity_id;
    if (a.alias != b.alias) return a.alias < b.alias;
    return a.token_end < b.token_end;
  });
  return out;
}

namespace {

// Paragraph-id -> allowed entity indices, inverted from the link graph.
struct Restriction {
  std::unordered_map<std::string, std::unordered_set<uint32_t>> allowed;
  std::unordered_set<std::string> referenced;  // all paragraph ids in the graph

  Restriction(const LinkGraph& graph, const PatternSet& patterns) {
    for (const auto& [entity_id, paragraph_ids] : graph.candidates) {
      size_t idx = patterns.entity_index(entity_id);
      if (idx == PatternSet::npos) continue;  // entity not in this lexicon
      for (const auto& pid : paragraph_ids) {
        allowed[pid].insert(static_cast<uint32_t>(idx));
        referenced.insert(pid);
      }
    }
  }
};

}  // namespace

void scan_corpus(const ParagraphSource& source, const PatternSet& patterns,
                 const ScanOptions& options, const MatchSink& sink,
                 const DiagnosticSink& warn) {
  std::unique_ptr<Restriction> restriction;
  if (options.linkgraph)
    restriction = std::make_unique<Restriction>(*options.linkgraph, patterns);

  const int threads = std::max(1, options.threads);
  const size_t chunk_size = static_cast<size_t>(threads) * 64;

  auto scan_one = [&](const Paragraph& p) -> std::vector<RawMatch> {
    const std::unordered_set<uint32_t>* allowed = nullptr;
    if (restriction) {
      auto it = restriction->allowed.find(p.paragraph_id);
      if (it == restriction->allowed.end()) return {};  // nothing listed here
      allowed = &it->second;
    }
    return scan(p, patterns, options.slop, allowed);
  };

  std::vector<Paragraph> chunk;
  chunk.reserve(chunk_size);
  bool done = false;
  while (!done) {
    chunk.clear();
    while (chunk.size() < chunk_size) {
      auto p = source();
      if (!p) {
        done = true;
        break;
      }
      if (restriction) restriction->referenced.erase(p->paragraph_id);
      chunk.push_back(std::move(*p));
    }
    if (chunk.empty()) break;
    std::vector<std::vector<RawMatch>> results(chunk.size());
    if (threads == 1 || chunk.size() == 1) {
      for (size_t i = 0; i < chunk.size(); ++i) results[i] = scan_one(chunk[i]);
    } else {
      std::atomic<size_t> cursor{0};
      auto worker = [&]() {
        for (;;) {
          size_t i = cursor.fetch_add(1);
          if (i >= chunk.size()) return;
          results[i] = scan_one(chunk[i]);
        }
      };
      std::vector<std::thread> pool;
      for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }
    for (const auto& matches : results)
      for (const auto& m : matches) sink(m);
  }

  if (restriction && warn) {
    std::vector<std::string> missing(restriction->referenced.begin(),
                                     restriction->referenced.end());
    std::sort(missing.begin(), missing.end());
    for (const auto& pid : missing)
      warn("link graph references paragraph \"" + pid +
           "\" which is absent from the corpus");
  }
}

std::vector<RawMatch> scan_corpus(const std::vector<Paragraph>& corpus,
                                  const PatternSet& patterns,
                                  const ScanOptions& options,
                                  const DiagnosticSink& warn) {
  std::vector<RawMatch> out;
  size_t i = 0;
  scan_corpus(
      [&]() -> std::optional<Paragraph> {
        if (i == corpus.size()) return std::nullopt;
        return corpus[i++];
      },
      patterns, options, [&](const RawMatch& m) { out.push_back(m); }, warn);
  return out;
}

void save_matches(const std::vector<RawMatch>& matches, const std::string& path) {
  std::ofstream out = open_output(path);
  for (const auto& m : matches) {
    OrderedJson record;
    record["paragraph_id"] = m.paragraph_id;
    record["token_start"] = m.token_start;
    record["token_end"] = m.token_end;
    record["entity_id"] = m.entity_id;
    record["alias"] = m.alias;
    record["gap_count"] = m.gap_count;
    out << record.dump() << '\n';
  }
}

std::vector<RawMatch> load_matches(const std::string& path) {
  std::vector<RawMatch> matches;
  for_each_json_line(path, [&](size_t, const Json& record) {
    RawMatch m;
    m.paragraph_id = require_string(record, "paragraph_id");
    m.token_start = require_field(record, "token_start").get<uint32_t>();
    m.token_end = require_field(record, "token_end").get<uint32_t>();
    m.entity_id = require_string(record, "entity_id");
    m.alias = require_string(record, "alias");
    m.gap_count = require_field(record, "gap_count").get<uint32_t>();
    matches.push_back(std::move(m));
  });
  return matches;
}

}  // namespace entkit
