#include "entkit/filter.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "entkit/error.hpp"
#include "entkit/io.hpp"

namespace entkit {

TfidfVocabulary TfidfVocabulary::build(const std::vector<Paragraph>& paragraphs,
                                       uint32_t min_df) {
  std::unordered_map<std::string, uint32_t> df;
  for (const auto& p : paragraphs) {
    std::set<std::string> seen;
    for (const auto& t : p.tokens) seen.insert(fold_case(t.text));
    for (const auto& tok : seen) ++df[tok];
  }
  TfidfVocabulary vocab;
  vocab.documents_ = static_cast<uint32_t>(paragraphs.size());
  for (const auto& [tok, count] : df)
    if (count >= min_df) vocab.tokens_.push_back(tok);
  std::sort(vocab.tokens_.begin(), vocab.tokens_.end());
  vocab.dfs_.resize(vocab.tokens_.size());
  for (uint32_t i = 0; i < vocab.tokens_.size(); ++i) {
    vocab.dfs_[i] = df.at(vocab.tokens_[i]);
    vocab.index_[vocab.tokens_[i]] = i;
  }
  return vocab;
}

std::optional<TfidfVocabulary::Entry> TfidfVocabulary::find(
    const std::string& folded_token) const {
  auto it = index_.find(folded_token);
  if (it == index_.end()) return std::nullopt;
  return Entry{it->second, dfs_[it->second]};
}

double TfidfVocabulary::idf(uint32_t index) const {
  return std::log((1.0 + documents_) / (1.0 + dfs_[index])) + 1.0;
}

uint64_t TfidfVocabulary::hash() const {
  uint64_t h = fnv1a(std::to_string(documents_));
  for (uint32_t i = 0; i < tokens_.size(); ++i) {
    h = fnv1a(tokens_[i], h);
    h = fnv1a(std::to_string(dfs_[i]), h);
  }
  return h;
}

void TfidfVocabulary::save(const std::string& path) const {
  std::ofstream out = open_output(path);
  OrderedJson header;
  header["kind"] = "vocabulary";
  header["documents"] = documents_;
  header["size"] = tokens_.size();
  out << header.dump() << '\n';
  for (uint32_t i = 0; i < tokens_.size(); ++i) {
    OrderedJson record;
    record["token"] = tokens_[i];
    record["index"] = i;
    record["df"] = dfs_[i];
    out << record.dump() << '\n';
  }
}

TfidfVocabulary TfidfVocabulary::load(const std::string& path) {
  TfidfVocabulary vocab;
  bool have_header = false;
  for_each_json_line(path, [&](size_t, const Json& record) {
    if (!have_header) {
      if (require_string(record, "kind") != "vocabulary")
        throw Error(ErrorKind::parse, "not a vocabulary file");
      vocab.documents_ = require_field(record, "documents").get<uint32_t>();
      have_header = true;
      return;
    }
    uint32_t index = require_field(record, "index").get<uint32_t>();
    if (index != vocab.tokens_.size())
      throw Error(ErrorKind::invariant, "vocabulary indices must be dense");
    vocab.tokens_.push_back(require_string(record, "token"));
    vocab.dfs_.push_back(require_field(record, "df").get<uint32_t>());
    if (vocab.dfs_.back() < 1 || vocab.dfs_.back() > vocab.documents_)
      throw Error(ErrorKind::invariant, "document frequency out of range");
    vocab.index_[vocab.tokens_.back()] = index;
  });
  if (!have_header) throw Error(ErrorKind::parse, "empty vocabulary file");
  return vocab;
}

SparseVector featurize(const Paragraph& paragraph, const TfidfVocabulary& vocab) {
  std::map<uint32_t, double> counts;
  for (const auto& t : paragraph.tokens) {
    auto entry = vocab.find(fold_case(t.text));
    if (entry) counts[entry->index] += 1.0;
  }
  SparseVector features;
  features.reserve(counts.size());
  double norm_sq = 0.0;
  for (const auto& [index, tf] : counts) {
    double w = tf * vocab.idf(index);
    features.emplace_back(index, w);
    norm_sq += w * w;
  }
  if (norm_sq > 0.0) {
    double inv = 1.0 / std::sqrt(norm_sq);
    for (auto& [_, w] : features) w *= inv;
  }
  return features;
}

TypeFilterModel train_type_filter(const std::string& type_id,
                                  const std::vector<Paragraph>& positives,
                                  const std::vector<Paragraph>& negatives,
                                  const TfidfVocabulary& vocab,
                                  const FilterConfig& config) {
  if (positives.empty() || negatives.empty())
    throw Error(ErrorKind::invariant,
                "filter for \"" + type_id + "\": both classes must be non-empty");
  {
    std::set<std::string> pos_ids, overlap;
    for (const auto& p : positives) pos_ids.insert(p.paragraph_id);
    for (const auto& p : negatives)
      if (pos_ids.count(p.paragraph_id)) overlap.insert(p.paragraph_id);
    if (!overlap.empty())
      throw Error(ErrorKind::invariant,
                  "filter for \"" + type_id + "\": positives and negatives overlap (" +
                      *overlap.begin() + ")");
  }

  std::vector<SparseVector> samples;
  std::vector<double> labels;
  samples.reserve(positives.size() + negatives.size());
  for (const auto& p : positives) {
    samples.push_back(featurize(p, vocab));
    labels.push_back(1.0);
  }
  for (const auto& p : negatives) {
    samples.push_back(featurize(p, vocab));
    labels.push_back(-1.0);
  }

  // Primal subgradient descent with the usual scale-factor trick: the dense
  // weight vector is scale * v, so the L2 decay is O(1) per step and margin
  // violations touch only the sample's nonzeros.
  std::vector<double> v(vocab.size(), 0.0);
  double scale = 1.0;
  double bias = 0.0;
  const double lambda = config.lambda;
  uint64_t t = 0;

  Rng rng = Rng(config.seed).derive("filter.train." + type_id);
  std::vector<size_t> order(samples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (size_t idx : order) {
      ++t;
      const double eta = 1.0 / (lambda * static_cast<double>(t));
      const SparseVector& x = samples[idx];
      const double y = labels[idx];
      double dot = 0.0;
      for (const auto& [i, w] : x) dot += v[i] * w;
      const double margin = y * (scale * dot + bias);
      const double decay = 1.0 - eta * lambda;
      if (decay <= 0.0) {
        std::fill(v.begin(), v.end(), 0.0);
        scale = 1.0;
      } else {
        scale *= decay;
        if (scale < 1e-9) {
          for (auto& w : v) w *= scale;
          scale = 1.0;
        }
      }
      if (margin < 1.0) {
        const double step = eta * y / scale;
        for (const auto& [i, w] : x) v[i] += step * w;
        bias += eta * y;
      }
    }
  }

  TypeFilterModel model;
  model.type_id = type_id;
  model.vocab_hash = vocab.hash();
  model.weights.resize(vocab.size());
  for (size_t i = 0; i < v.size(); ++i) {
    model.weights[i] = scale * v[i];
    if (!std::isfinite(model.weights[i]))
      throw Error(ErrorKind::internal, "non-finite weight during training");
  }
  model.bias = bias;
  model.config = config;
  model.positive_count = static_cast<uint32_t>(positives.size());
  model.negative_count = static_cast<uint32_t>(negatives.size());
  return model;
}

TrainingSets plan_training(const std::vector<RawMatch>& matches,
                           const Lexicon& lexicon, double holdout_fraction,
                           uint64_t seed) {
  if (holdout_fraction <= 0.0 || holdout_fraction > 1.0)
    throw Error(ErrorKind::config, "holdout fraction must lie in (0, 1]");
  if (matches.empty())
    throw Error(ErrorKind::empty_result, "no matches to plan training from");

  std::map<std::string, std::set<std::string>> matched_by_type;  // type -> pids
  std::set<std::string> matched_paragraphs;
  for (const auto& m : matches) {
    const EntityEntry* entity = lexicon.find_entity(m.entity_id);
    if (!entity)
      throw Error(ErrorKind::dangling_reference,
                  "match references unknown entity \"" + m.entity_id + "\"");
    matched_paragraphs.insert(m.paragraph_id);
    for (const auto& t : entity->type_ids) matched_by_type[t].insert(m.paragraph_id);
  }

  std::vector<std::string> pool(matched_paragraphs.begin(), matched_paragraphs.end());
  Rng root(seed);
  root.derive("filter.holdout").shuffle(pool);
  const size_t holdout_size = static_cast<size_t>(
      std::llround(holdout_fraction * static_cast<double>(pool.size())));
  if (holdout_size == 0)
    throw Error(ErrorKind::config, "holdout fraction selects zero paragraphs");
  pool.resize(holdout_size);
  std::sort(pool.begin(), pool.end());

  TrainingSets sets;
  sets.holdout = pool;
  const std::set<std::string> holdout_set(pool.begin(), pool.end());
  for (const auto& [type_id, pids] : matched_by_type) {
    std::vector<std::string> positives, candidates;
    for (const auto& pid : pool) {
      if (pids.count(pid))
        positives.push_back(pid);
      else
        candidates.push_back(pid);
    }
    if (positives.empty()) continue;  // callers warn; the type cannot be trained
    if (candidates.empty())
      throw Error(ErrorKind::empty_result,
                  "no negative paragraphs available for type \"" + type_id + "\"");
    root.derive("filter.negatives." + type_id).shuffle(candidates);
    candidates.resize(std::min(candidates.size(), positives.size()));
    std::sort(candidates.begin(), candidates.end());
    sets.positives[type_id] = std::move(positives);
    sets.negatives[type_id] = std::move(candidates);
  }
  if (sets.positives.empty())
    throw Error(ErrorKind::empty_result, "holdout contains no positives for any type");
  return sets;
}

double score(const TypeFilterModel& model, const SparseVector& features) {
  double dot = 0.0;
  for (const auto& [i, w] : features)
    if (i < model.weights.size()) dot += model.weights[i] * w;
  return dot + model.bias;
}

double score(const TypeFilterModel& model, const Paragraph& paragraph,
             const TfidfVocabulary& vocab) {
  if (model.vocab_hash != vocab.hash())
    throw Error(ErrorKind::invariant,
                "model \"" + model.type_id + "\" was trained on a different vocabulary");
  return score(model, featurize(paragraph, vocab));
}

void TypeFilterModel::save(const std::string& path) const {
  std::ofstream out = open_output(path);
  OrderedJson header;
  header["kind"] = "type-filter";
  header["type_id"] = type_id;
  header["vocab_hash"] = vocab_hash;
  header["dimension"] = weights.size();
  header["threshold"] = config.threshold;
  header["lambda"] = config.lambda;
  header["epochs"] = config.epochs;
  header["seed"] = config.seed;
  header["positives"] = positive_count;
  header["negatives"] = negative_count;
  header["bias"] = bias;
  out << header.dump() << '\n';
  for (size_t i = 0; i < weights.size(); ++i)
    if (weights[i] != 0.0)
      out << i << ' ' << format_double(weights[i]) << '\n';
}

TypeFilterModel TypeFilterModel::load(const std::string& path) {
  std::ifstream in = open_input(path);
  std::string line;
  if (!std::getline(in, line))
    throw Error(ErrorKind::parse, path + ": empty model file");
  Json header = Json::parse(line, nullptr, false);
  if (header.is_discarded() || header.value("kind", "") != "type-filter")
    throw Error(ErrorKind::parse, path + ": not a type-filter model file");
  TypeFilterModel model;
  model.type_id = require_string(header, "type_id");
  model.vocab_hash = require_field(header, "vocab_hash").get<uint64_t>();
  const size_t dimension = require_field(header, "dimension").get<size_t>();
  model.config.threshold = require_field(header, "threshold").get<double>();
  model.config.lambda = require_field(header, "lambda").get<double>();
  model.config.epochs = require_field(header, "epochs").get<uint32_t>();
  model.config.seed = require_field(header, "seed").get<uint64_t>();
  model.positive_count = require_field(header, "positives").get<uint32_t>();
  model.negative_count = require_field(header, "negatives").get<uint32_t>();
  model.bias = require_field(header, "bias").get<double>();
  model.weights.assign(dimension, 0.0);
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    size_t space = line.find(' ');
    if (space == std::string::npos)
      fail_at(ErrorKind::parse, path, lineno, "expected \"index weight\"");
    try {
      size_t index = std::stoull(line.substr(0, space));
      double weight = std::stod(line.substr(space + 1));
      if (index >= dimension)
        fail_at(ErrorKind::invariant, path, lineno, "weight index out of range");
      if (!std::isfinite(weight))
        fail_at(ErrorKind::invariant, path, lineno, "non-finite weight");
      model.weights[index] = weight;
    } catch (const std::logic_error&) {
      fail_at(ErrorKind::parse, path, lineno, "malformed weight record");
    }
  }
  return model;
}

std::vector<FilteredMatch> filter_matches(
    const std::vector<RawMatch>& matches,
    const std::map<std::string, TypeFilterModel>& models,
    const std::vector<Paragraph>& corpus, const Lexicon& lexicon,
    const TfidfVocabulary& vocab, double threshold) {
  std::unordered_map<std::string, const Paragraph*> by_id;
  for (const auto& p : corpus) by_id[p.paragraph_id] = &p;

  const uint64_t vocab_hash = vocab.hash();
  for (const auto& [type_id, model] : models) {
    if (model.vocab_hash != vocab_hash)
      throw Error(ErrorKind::invariant, "model \"" + type_id +
                                            "\" was trained on a different vocabulary");
  }

  // One featurize + one dot product per (paragraph, type) actually needed.
  std::unordered_map<std::string, SparseVector> features;
  std::unordered_map<std::string, std::unordered_map<std::string, bool>> accepted;

  auto paragraph_accepts = [&](const std::string& pid,
                               const std::string& type_id) -> bool {
    auto& cache = accepted[pid];
    auto hit = cache.find(type_id);
    if (hit != cache.end()) return hit->second;
    auto model_it = models.find(type_id);
    if (model_it == models.end())
      throw Error(ErrorKind::missing_input,
                  "no filter model for type \"" + type_id + "\"");
    auto feat_it = features.find(pid);
    if (feat_it == features.end()) {
      auto par_it = by_id.find(pid);
      if (par_it == by_id.end())
        throw Error(ErrorKind::dangling_reference,
                    "match references unknown paragraph \"" + pid + "\"");
      feat_it = features.emplace(pid, featurize(*par_it->second, vocab)).first;
    }
    bool ok = score(model_it->second, feat_it->second) >= threshold;
    cache[type_id] = ok;
    return ok;
  };

  std::vector<FilteredMatch> out;
  for (const auto& m : matches) {
    const EntityEntry* entity = lexicon.find_entity(m.entity_id);
    if (!entity)
      throw Error(ErrorKind::dangling_reference,
                  "match references unknown entity \"" + m.entity_id + "\"");
    FilteredMatch fm;
    fm.match = m;
    for (const auto& type_id : entity->type_ids)
      if (paragraph_accepts(m.paragraph_id, type_id))
        fm.surviving_types.push_back(type_id);
    if (!fm.surviving_types.empty()) out.push_back(std::move(fm));
  }
  return out;
}

void save_filtered_matches(const std::vector<FilteredMatch>& matches,
                           const std::string& path) {
  std::ofstream out = open_output(path);
  for (const auto& fm : matches) {
    OrderedJson record;
    record["paragraph_id"] = fm.match.paragraph_id;
    record["token_start"] = fm.match.token_start;
    record["token_end"] = fm.match.token_end;
    record["entity_id"] = fm.match.entity_id;
    record["alias"] = fm.match.alias;
    record["gap_count"] = fm.match.gap_count;
    record["type_ids"] = fm.surviving_types;
    out << record.dump() << '\n';
  }
}

std::vector<FilteredMatch> load_filtered_matches(const std::string& path) {
  std::vector<FilteredMatch> matches;
  for_each_json_line(path, [&](size_t, const Json& record) {
    FilteredMatch fm;
    fm.match.paragraph_id = require_string(record, "paragraph_id");
    fm.match.token_start = require_field(record, "token_start").get<uint32_t>();
    fm.match.token_end = require_field(record, "token_end").get<uint32_t>();
    fm.match.entity_id = require_string(record, "entity_id");
    fm.match.alias = require_string(record, "alias");
    fm.match.gap_count = require_field(record, "gap_count").get<uint32_t>();
    for (const auto& t : require_field(record, "type_ids"))
      fm.surviving_types.push_back(t.get<std::string>());
    if (fm.surviving_types.empty())
      throw Error(ErrorKind::invariant, "filtered match with no surviving types");
    matches.push_back(std::move(fm));
  });
  return matches;
}

}  // namespace entkit
