#include "entkit/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include <CLI11.hpp>

#include "entkit/corpus.hpp"
#include "entkit/error.hpp"
#include "entkit/filter.hpp"
#include "entkit/io.hpp"
#include "entkit/lexicon.hpp"
#include "entkit/matcher.hpp"
#include "entkit/ner_eval.hpp"
#include "entkit/pipeline.hpp"
#include "entkit/retrieval.hpp"

namespace entkit::cli {
namespace {

namespace fs = std::filesystem;

int default_threads() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

// Every run leaves a replayable record of its resolved parameters next to
// its primary output.
void write_snapshot(const std::string& anchor, bool anchor_is_dir,
                    const OrderedJson& config) {
  const std::string path =
      anchor_is_dir ? (fs::path(anchor) / "config.json").string()
                    : anchor + ".config.json";
  std::ofstream out = open_output(path);
  out << config.dump(2) << '\n';
}

void warn_to_stderr(const std::string& message) {
  std::cerr << "warning: " << message << '\n';
}

std::string sanitize_filename(const std::string& name) {
  std::string out;
  for (char c : name)
    out += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_'
               ? c
               : '_';
  return out.empty() ? std::string("type") : out;
}

std::unordered_map<std::string, const Paragraph*> index_corpus(
    const std::vector<Paragraph>& corpus) {
  std::unordered_map<std::string, const Paragraph*> by_id;
  for (const auto& p : corpus) by_id[p.paragraph_id] = &p;
  return by_id;
}

// Runs fn(0..count) across up to `threads` workers, rethrowing the first
// failure. fn must only touch its own slot.
template <typename Fn>
void parallel_for(size_t count, int threads, Fn&& fn) {
  threads = std::max(1, std::min<int>(threads, static_cast<int>(count)));
  if (threads <= 1) {
    for (size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<size_t> cursor{0};
  std::mutex mutex;
  std::exception_ptr failure;
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (size_t i; (i = cursor.fetch_add(1)) < count;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mutex);
          if (!failure) failure = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

// Type selection shared by the retrieve/eval commands: the type-split file
// restricts work to one side of the split ("all" takes both).
std::set<std::string> side_types(const std::string& split_path,
                                 const std::string& side) {
  if (side != "train" && side != "test" && side != "all")
    throw Error(ErrorKind::config, "side must be train, test, or all");
  std::set<std::string> selected;
  for (const auto& [type_id, split] : load_type_split(split_path)) {
    if (side == "all" || split_name(split) == side) selected.insert(type_id);
  }
  if (selected.empty())
    throw Error(ErrorKind::empty_result,
                "type split selects no types for side \"" + side + "\"");
  return selected;
}

// ---- subcommand option blocks ----

struct IngestOpts {
  std::string lexicon, out;
};

void run_ingest(const IngestOpts& o) {
  Lexicon lexicon = load_lexicon(o.lexicon);
  save_lexicon(lexicon, o.out);
  OrderedJson cfg;
  cfg["command"] = "ingest-lexicon";
  cfg["lexicon"] = o.lexicon;
  cfg["out"] = o.out;
  write_snapshot(o.out, false, cfg);
  std::cerr << "ingested " << lexicon.types().size() << " types, "
            << lexicon.entities().size() << " entities\n";
}

struct MatchOpts {
  std::string lexicon, corpus, linkgraph, out;
  uint32_t slop = 5;
  int threads = default_threads();
};

void run_match(const MatchOpts& o) {
  Lexicon lexicon = load_lexicon(o.lexicon);
  PatternSet patterns = PatternSet::compile(lexicon);
  std::optional<LinkGraph> graph;
  if (!o.linkgraph.empty()) graph = load_linkgraph(o.linkgraph);

  ScanOptions options;
  options.slop = o.slop;
  options.linkgraph = graph ? &*graph : nullptr;
  options.threads = o.threads;

  CorpusReader reader(o.corpus);
  std::vector<RawMatch> matches;
  scan_corpus([&] { return reader.next(); }, patterns, options,
              [&](const RawMatch& m) { matches.push_back(m); }, warn_to_stderr);
  save_matches(matches, o.out);

  OrderedJson cfg;
  cfg["command"] = "match";
  cfg["lexicon"] = o.lexicon;
  cfg["corpus"] = o.corpus;
  cfg["linkgraph"] = o.linkgraph;
  cfg["slop"] = o.slop;
  cfg["threads"] = o.threads;
  cfg["out"] = o.out;
  write_snapshot(o.out, false, cfg);
  std::cerr << "matched " << matches.size() << " spans\n";
}

struct TrainFiltersOpts {
  std::string lexicon, corpus, matches, out_dir;
  double holdout_fraction = 0.2;
  uint32_t min_df = 2;
  double lambda = 1e-4;
  uint32_t epochs = 10;
  double threshold = 0.0;
  uint64_t seed = 0;
};

void run_train_filters(const TrainFiltersOpts& o) {
  Lexicon lexicon = load_lexicon(o.lexicon);
  std::vector<Paragraph> corpus = load_corpus(o.corpus);
  std::vector<RawMatch> matches = load_matches(o.matches);
  TrainingSets plan = plan_training(matches, lexicon, o.holdout_fraction, o.seed);

  auto by_id = index_corpus(corpus);
  auto paragraphs_for = [&](const std::vector<std::string>& ids) {
    std::vector<Paragraph> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
      auto it = by_id.find(id);
      if (it == by_id.end())
        throw Error(ErrorKind::dangling_reference,
                    "match references unknown paragraph \"" + id + "\"");
      out.push_back(*it->second);
    }
    return out;
  };

  std::vector<Paragraph> pool = paragraphs_for(plan.holdout);
  TfidfVocabulary vocab = TfidfVocabulary::build(pool, o.min_df);
  fs::create_directories(o.out_dir);
  const fs::path dir(o.out_dir);
  vocab.save((dir / "vocabulary.jsonl").string());
  {
    std::ofstream holdout = open_output((dir / "holdout.jsonl").string());
    for (const auto& id : plan.holdout) {
      OrderedJson record;
      record["paragraph_id"] = id;
      holdout << record.dump() << '\n';
    }
  }

  // Types whose entities matched somewhere but drew no holdout positive
  // cannot be trained in this run.
  std::set<std::string> matched_types;
  for (const auto& m : matches)
    for (const auto& t : lexicon.find_entity(m.entity_id)->type_ids)
      matched_types.insert(t);
  for (const auto& t : matched_types)
    if (!plan.positives.count(t))
      warn_to_stderr("type \"" + t +
                     "\" has matches but no holdout positives; no model trained");

  FilterConfig config;
  config.lambda = o.lambda;
  config.epochs = o.epochs;
  config.threshold = o.threshold;
  config.seed = o.seed;

  std::ofstream manifest = open_output((dir / "models.jsonl").string());
  std::set<std::string> used_names;
  for (const auto& [type_id, positive_ids] : plan.positives) {
    TypeFilterModel model =
        train_type_filter(type_id, paragraphs_for(positive_ids),
                          paragraphs_for(plan.negatives.at(type_id)), vocab, config);
    std::string base = "model_" + sanitize_filename(type_id);
    std::string name = base + ".jsonl";
    for (int i = 2; used_names.count(name); ++i)
      name = base + "_" + std::to_string(i) + ".jsonl";
    used_names.insert(name);
    model.save((dir / name).string());
    OrderedJson record;
    record["type_id"] = type_id;
    record["file"] = name;
    record["positives"] = model.positive_count;
    record["negatives"] = model.negative_count;
    manifest << record.dump() << '\n';
  }

  OrderedJson cfg;
  cfg["command"] = "train-filters";
  cfg["lexicon"] = o.lexicon;
  cfg["corpus"] = o.corpus;
  cfg["matches"] = o.matches;
  cfg["holdout_fraction"] = o.holdout_fraction;
  cfg["min_df"] = o.min_df;
  cfg["lambda"] = o.lambda;
  cfg["epochs"] = o.epochs;
  cfg["threshold"] = o.threshold;
  cfg["seed"] = o.seed;
  cfg["out_dir"] = o.out_dir;
  write_snapshot(o.out_dir, true, cfg);
  std::cerr << "trained " << plan.positives.size() << " filters over "
            << plan.holdout.size() << " holdout paragraphs (vocabulary "
            << vocab.size() << " tokens)\n";
}

std::map<std::string, TypeFilterModel> load_model_set(const std::string& dir_path) {
  const fs::path dir(dir_path);
  std::map<std::string, TypeFilterModel> models;
  for_each_json_line((dir / "models.jsonl").string(), [&](size_t, const Json& record) {
    const std::string type_id = require_string(record, "type_id");
    const std::string file = require_string(record, "file");
    TypeFilterModel model = TypeFilterModel::load((dir / file).string());
    if (model.type_id != type_id)
      throw Error(ErrorKind::invariant, "manifest names type \"" + type_id +
                                            "\" but " + file + " holds \"" +
                                            model.type_id + "\"");
    if (!models.emplace(type_id, std::move(model)).second)
      throw Error(ErrorKind::duplicate_id,
                  "manifest lists type \"" + type_id + "\" twice");
  });
  if (models.empty())
    throw Error(ErrorKind::empty_result, "model manifest is empty");
  return models;
}

struct ApplyFiltersOpts {
  std::string lexicon, corpus, matches, models_dir, exclude, out;
  double threshold = 0.0;
};

void run_apply_filters(const ApplyFiltersOpts& o) {
  Lexicon lexicon = load_lexicon(o.lexicon);
  std::vector<Paragraph> corpus = load_corpus(o.corpus);
  std::vector<RawMatch> matches = load_matches(o.matches);
  TfidfVocabulary vocab =
      TfidfVocabulary::load((fs::path(o.models_dir) / "vocabulary.jsonl").string());
  std::map<std::string, TypeFilterModel> models = load_model_set(o.models_dir);

  if (!o.exclude.empty()) {
    std::unordered_set<std::string> excluded;
    for_each_json_line(o.exclude, [&](size_t, const Json& record) {
      excluded.insert(require_string(record, "paragraph_id"));
    });
    const size_t before = matches.size();
    std::erase_if(matches, [&](const RawMatch& m) {
      return excluded.count(m.paragraph_id) > 0;
    });
    std::cerr << "excluded " << before - matches.size()
              << " matches in held-out paragraphs\n";
  }

  std::vector<FilteredMatch> filtered =
      filter_matches(matches, models, corpus, lexicon, vocab, o.threshold);
  save_filtered_matches(filtered, o.out);

  OrderedJson cfg;
  cfg["command"] = "apply-filters";
  cfg["lexicon"] = o.lexicon;
  cfg["corpus"] = o.corpus;
  cfg["matches"] = o.matches;
  cfg["models"] = o.models_dir;
  cfg["exclude"] = o.exclude;
  cfg["threshold"] = o.threshold;
  cfg["out"] = o.out;
  write_snapshot(o.out, false, cfg);
  std::cerr << "kept " << filtered.size() << " of " << matches.size()
            << " matches\n";
}

struct AssembleOpts {
  std::string lexicon, corpus, filtered, out;
  uint32_t min_types = 2;
  uint64_t max_paragraphs = 0;
};

void run_assemble(const AssembleOpts& o) {
  Lexicon lexicon = load_lexicon(o.lexicon);
  std::vector<Paragraph> corpus = load_corpus(o.corpus);
  std::vector<FilteredMatch> filtered = load_filtered_matches(o.filtered);

  AssemblyConfig config;
  config.min_distinct_types = o.min_types;
  config.max_paragraphs = o.max_paragraphs;
  SilverDataset dataset = assemble_from_filtered(corpus, lexicon, filtered, config);
  save_dataset(dataset, o.out);

  size_t spans = 0;
  for (const auto& ap : dataset) spans += ap.spans.size();
  OrderedJson cfg;
  cfg["command"] = "assemble";
  cfg["lexicon"] = o.lexicon;
  cfg["corpus"] = o.corpus;
  cfg["filtered"] = o.filtered;
  cfg["min_types"] = o.min_types;
  cfg["max_paragraphs"] = o.max_paragraphs;
  cfg["out"] = o.out;
  write_snapshot(o.out, false, cfg);
  std::cerr << "assembled " << dataset.size() << " paragraphs carrying " << spans
            << " spans\n";
}

struct SplitOpts {
  std::string dataset, test_types, out_paragraphs, out_types;
  double paragraph_fraction = 0.8;
  double type_fraction = 0.8;
  uint64_t seed = 0;
};

void run_split(const SplitOpts& o) {
  SilverDataset dataset = load_dataset(o.dataset);
  std::optional<std::set<std::string>> override_types;
  if (!o.test_types.empty()) {
    override_types.emplace();
    std::ifstream in = open_input(o.test_types);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) override_types->insert(line);
    }
  }
  SplitAssignment assignment = split_dataset(
      dataset, o.paragraph_fraction, o.type_fraction, o.seed, warn_to_stderr,
      override_types ? &*override_types : nullptr);
  save_paragraph_split(assignment, o.out_paragraphs);
  save_type_split(assignment, o.out_types);

  size_t train_paragraphs = 0, train_types = 0;
  for (const auto& [_, s] : assignment.paragraphs)
    train_paragraphs += s == Split::train;
  for (const auto& [_, s] : assignment.types) train_types += s == Split::train;
  OrderedJson cfg;
  cfg["command"] = "split";
  cfg["dataset"] = o.dataset;
  cfg["paragraph_fraction"] = o.paragraph_fraction;
  cfg["type_fraction"] = o.type_fraction;
  cfg["seed"] = o.seed;
  cfg["test_types"] = o.test_types;
  cfg["out_paragraphs"] = o.out_paragraphs;
  cfg["out_types"] = o.out_types;
  write_snapshot(o.out_paragraphs, false, cfg);
  std::cerr << "paragraphs: " << train_paragraphs << " train / "
            << assignment.paragraphs.size() - train_paragraphs << " test; types: "
            << train_types << " train / "
            << assignment.types.size() - train_types << " test\n";
}

struct SampleOpts {
  std::string dataset, out;
  size_t n = 0;
  uint64_t seed = 0;
};

void run_sample(const SampleOpts& o) {
  SilverDataset dataset = load_dataset(o.dataset);
  std::vector<size_t> picks = stratified_sample(dataset, o.n, o.seed);
  SilverDataset sample;
  sample.reserve(picks.size());
  for (size_t i : picks) sample.push_back(dataset[i]);
  save_dataset(sample, o.out);

  OrderedJson cfg;
  cfg["command"] = "sample";
  cfg["dataset"] = o.dataset;
  cfg["n"] = o.n;
  cfg["seed"] = o.seed;
  cfg["out"] = o.out;
  write_snapshot(o.out, false, cfg);
  std::cerr << "sampled " << sample.size() << " paragraphs\n";
}

struct AuditOpts {
  std::string dataset, score, out;
  size_t n = 150;
  uint64_t seed = 0;
};

void run_audit(const AuditOpts& o) {
  if (!o.score.empty() && !o.dataset.empty())
    throw Error(ErrorKind::config, "--dataset and --score are mutually exclusive");
  OrderedJson cfg;
  cfg["command"] = "audit";
  if (!o.score.empty()) {
    AuditWorksheet worksheet = load_worksheet(o.score);
    AuditSummary summary = audit_accuracy(worksheet);
    OrderedJson result;
    result["worksheet"] = o.score;
    result["rows"] = summary.total_rows;
    result["judged"] = summary.judged;
    result["correct"] = summary.correct;
    result["accuracy"] = summary.accuracy;
    std::ofstream out = open_output(o.out);
    out << result.dump(2) << '\n';
    cfg["score"] = o.score;
    cfg["out"] = o.out;
    write_snapshot(o.out, false, cfg);
    std::cerr << "accuracy " << summary.accuracy << " over " << summary.judged
              << " judged rows\n";
    return;
  }
  if (o.dataset.empty())
    throw Error(ErrorKind::config, "one of --dataset or --score is required");
  SilverDataset dataset = load_dataset(o.dataset);
  AuditWorksheet worksheet = audit_sample(dataset, o.n, o.seed);
  save_worksheet(worksheet, o.out);
  cfg["dataset"] = o.dataset;
  cfg["n"] = o.n;
  cfg["seed"] = o.seed;
  cfg["out"] = o.out;
  write_snapshot(o.out, false, cfg);
  std::cerr << "worksheet rows: " << worksheet.rows.size() << '\n';
}

struct IndexOpts {
  std::string corpus, out;
};

void run_index(const IndexOpts& o) {
  std::vector<Paragraph> corpus = load_corpus(o.corpus);
  InvertedIndex index = InvertedIndex::build(corpus);
  index.save(o.out);
  OrderedJson cfg;
  cfg["command"] = "index";
  cfg["corpus"] = o.corpus;
  cfg["out"] = o.out;
  write_snapshot(o.out, false, cfg);
  std::cerr << "indexed " << index.document_count() << " paragraphs, "
            << index.postings().size() << " terms\n";
}

struct RetrieveBm25Opts {
  std::string index, lexicon, type_split, side = "all", out;
  double k1 = 1.2;
  double b = 0.75;
  int threads = default_threads();
};

void run_retrieve_bm25(const RetrieveBm25Opts& o) {
  InvertedIndex index = InvertedIndex::load(o.index);
  Lexicon lexicon = load_lexicon(o.lexicon);

  std::vector<std::string> queries;
  if (!o.type_split.empty()) {
    for (const auto& t : side_types(o.type_split, o.side)) queries.push_back(t);
  } else {
    queries = lexicon.type_ids();
  }

  Bm25Params params{o.k1, o.b};
  std::vector<RankedRun> runs(queries.size());
  parallel_for(queries.size(), o.threads, [&](size_t i) {
    const EntityType* type = lexicon.find_type(queries[i]);
    if (!type)
      throw Error(ErrorKind::dangling_reference,
                  "type split names unknown type \"" + queries[i] + "\"");
    runs[i] = bm25_rank(index, type->type_id, type->label, params);
  });
  save_runs(runs, o.out);

  OrderedJson cfg;
  cfg["command"] = "retrieve-bm25";
  cfg["index"] = o.index;
  cfg["lexicon"] = o.lexicon;
  cfg["type_split"] = o.type_split;
  cfg["side"] = o.side;
  cfg["k1"] = o.k1;
  cfg["b"] = o.b;
  cfg["threads"] = o.threads;
  cfg["out"] = o.out;
  write_snapshot(o.out, false, cfg);
  std::cerr << "ranked " << runs.size() << " queries\n";
}

struct RetrieveDenseOpts {
  std::string vectors, queries, type_split, side = "all", out;
  int threads = default_threads();
};

void run_retrieve_dense(const RetrieveDenseOpts& o) {
  DenseVectorStore store = DenseVectorStore::load(o.vectors);
  DenseVectorStore query_store = DenseVectorStore::load(o.queries);

  std::vector<std::string> queries;
  if (!o.type_split.empty()) {
    for (const auto& t : side_types(o.type_split, o.side)) queries.push_back(t);
  } else {
    queries.assign(query_store.ids().begin(), query_store.ids().end());
    std::sort(queries.begin(), queries.end());
  }

  std::vector<RankedRun> runs(queries.size());
  parallel_for(queries.size(), o.threads, [&](size_t i) {
    const double* q = query_store.vector_for(queries[i]);
    if (!q)
      throw Error(ErrorKind::dangling_reference,
                  "no query vector for type \"" + queries[i] + "\"");
    runs[i] = dense_rank(store, queries[i],
                         std::vector<double>(q, q + query_store.dimension()));
  });
  save_runs(runs, o.out);

  OrderedJson cfg;
  cfg["command"] = "retrieve-dense";
  cfg["vectors"] = o.vectors;
  cfg["queries"] = o.queries;
  cfg["type_split"] = o.type_split;
  cfg["side"] = o.side;
  cfg["threads"] = o.threads;
  cfg["out"] = o.out;
  write_snapshot(o.out, false, cfg);
  std::cerr << "ranked " << runs.size() << " queries\n";
}

struct EvalRetrievalOpts {
  std::string runs, dataset, type_split, side = "all", out;
};

void run_eval_retrieval(const EvalRetrievalOpts& o) {
  std::vector<RankedRun> runs = load_runs(o.runs);
  SilverDataset dataset = load_dataset(o.dataset);
  auto all_relevance = relevance_sets(dataset);

  std::set<std::string> selected;
  if (!o.type_split.empty()) {
    selected = side_types(o.type_split, o.side);
    std::erase_if(runs, [&](const RankedRun& run) {
      return selected.count(run.type_id) == 0;
    });
  } else {
    for (const auto& run : runs) selected.insert(run.type_id);
  }

  std::map<std::string, std::set<std::string>> relevance;
  for (const auto& t : selected) {
    auto it = all_relevance.find(t);
    if (it == all_relevance.end() || it->second.empty())
      throw Error(ErrorKind::empty_result,
                  "no relevant paragraphs for type \"" + t + "\"");
    relevance[t] = it->second;
  }

  RetrievalReport report = evaluate_runs(runs, relevance);
  save_retrieval_report(report, o.out);

  OrderedJson cfg;
  cfg["command"] = "eval-retrieval";
  cfg["runs"] = o.runs;
  cfg["dataset"] = o.dataset;
  cfg["type_split"] = o.type_split;
  cfg["side"] = o.side;
  cfg["out"] = o.out;
  write_snapshot(o.out, false, cfg);
  std::cerr << "recall mean " << report.mean << " +/- " << report.stddev << " over "
            << report.per_type.size() << " types\n";
}

struct EvalNerOpts {
  std::string dataset, predictions, type_split, side = "all", out;
};

void run_eval_ner(const EvalNerOpts& o) {
  SilverDataset gold = load_dataset(o.dataset);
  PredictionSet predictions = load_predictions(o.predictions, gold);
  std::optional<std::set<std::string>> types;
  if (!o.type_split.empty()) types = side_types(o.type_split, o.side);

  NerReport report = evaluate_ner(gold, predictions, types ? &*types : nullptr);
  save_ner_report(report, o.out);

  OrderedJson cfg;
  cfg["command"] = "eval-ner";
  cfg["dataset"] = o.dataset;
  cfg["predictions"] = o.predictions;
  cfg["type_split"] = o.type_split;
  cfg["side"] = o.side;
  cfg["out"] = o.out;
  write_snapshot(o.out, false, cfg);
  std::cerr << "exact micro F1 " << report.exact_micro.f1 << ", relaxed micro F1 "
            << report.relaxed_micro.f1 << '\n';
}

struct FpRateOpts {
  std::string predictions, type, paragraphs, gold, out;
};

void run_fp_rate(const FpRateOpts& o) {
  std::vector<Paragraph> paragraphs = load_corpus(o.paragraphs);
  std::vector<std::string> ids;
  ids.reserve(paragraphs.size());
  for (const auto& p : paragraphs) ids.push_back(p.paragraph_id);

  SilverDataset resolve;
  std::unordered_set<std::string> known;
  if (!o.gold.empty()) {
    resolve = load_dataset(o.gold);
    std::unordered_set<std::string> listed(ids.begin(), ids.end());
    for (const auto& ap : resolve) {
      known.insert(ap.paragraph.paragraph_id);
      if (!listed.count(ap.paragraph.paragraph_id)) continue;
      for (const auto& span : ap.spans)
        if (span.type_ids.count(o.type))
          throw Error(ErrorKind::invariant,
                      "paragraph \"" + ap.paragraph.paragraph_id +
                          "\" contains a gold mention of type \"" + o.type + "\"");
    }
  }
  // listed paragraphs resolve span predictions even when absent from gold;
  // predictions for paragraphs known to neither source are irrelevant here
  for (auto& p : paragraphs) {
    if (known.insert(p.paragraph_id).second) resolve.push_back({p, {}});
  }

  PredictionSet predictions =
      load_predictions(o.predictions, resolve, /*skip_unknown=*/true);
  const double rate = fp_rate(predictions, o.type, ids);

  OrderedJson result;
  result["type_id"] = o.type;
  result["paragraphs"] = ids.size();
  result["fp_rate"] = rate;
  std::ofstream out = open_output(o.out);
  out << result.dump(2) << '\n';

  OrderedJson cfg;
  cfg["command"] = "fp-rate";
  cfg["predictions"] = o.predictions;
  cfg["type"] = o.type;
  cfg["paragraphs"] = o.paragraphs;
  cfg["gold"] = o.gold;
  cfg["out"] = o.out;
  write_snapshot(o.out, false, cfg);
  std::cerr << "fp rate " << rate << " over " << ids.size() << " paragraphs\n";
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::missing_input:
      return 3;
    case ErrorKind::internal:
      return 5;
    default:
      return 4;
  }
}

void print_error(const std::string& kind, const std::string& message) {
  OrderedJson line;
  line["error"] = kind;
  line["message"] = message;
  std::cerr << line.dump() << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Silver NER corpus construction and retrieval evaluation toolkit"};
  app.require_subcommand(1);

  auto ingest = std::make_shared<IngestOpts>();
  {
    auto* cmd = app.add_subcommand("ingest-lexicon", "Validate and normalize a lexicon");
    cmd->add_option("--lexicon", ingest->lexicon, "Lexicon file")
        ->required()
        ->envname("ENTKIT_LEXICON");
    cmd->add_option("--out", ingest->out, "Normalized lexicon output")->required();
    cmd->callback([ingest] { run_ingest(*ingest); });
  }

  auto match = std::make_shared<MatchOpts>();
  {
    auto* cmd = app.add_subcommand("match", "Scan a corpus for lexicon aliases");
    cmd->add_option("--lexicon", match->lexicon, "Lexicon file")
        ->required()
        ->envname("ENTKIT_LEXICON");
    cmd->add_option("--corpus", match->corpus, "Corpus file")
        ->required()
        ->envname("ENTKIT_CORPUS");
    cmd->add_option("--linkgraph", match->linkgraph,
                    "Candidate-paragraph restriction file")
        ->envname("ENTKIT_LINKGRAPH");
    cmd->add_option("--slop", match->slop, "Max total intervening tokens");
    cmd->add_option("--threads", match->threads, "Worker threads");
    cmd->add_option("--out", match->out, "Raw matches output")->required();
    cmd->callback([match] { run_match(*match); });
  }

  auto train = std::make_shared<TrainFiltersOpts>();
  {
    auto* cmd = app.add_subcommand("train-filters",
                                   "Train per-type context filters on a holdout");
    cmd->add_option("--lexicon", train->lexicon, "Lexicon file")
        ->required()
        ->envname("ENTKIT_LEXICON");
    cmd->add_option("--corpus", train->corpus, "Corpus file")
        ->required()
        ->envname("ENTKIT_CORPUS");
    cmd->add_option("--matches", train->matches, "Raw matches file")->required();
    cmd->add_option("--holdout-fraction", train->holdout_fraction,
                    "Fraction of matched paragraphs used for training");
    cmd->add_option("--min-df", train->min_df, "Vocabulary min document frequency");
    cmd->add_option("--lambda", train->lambda, "L2 regularization");
    cmd->add_option("--epochs", train->epochs, "Training epochs");
    cmd->add_option("--threshold", train->threshold, "Recorded decision threshold");
    cmd->add_option("--seed", train->seed, "Random seed");
    cmd->add_option("--out-dir", train->out_dir, "Model output directory")->required();
    cmd->callback([train] { run_train_filters(*train); });
  }

  auto apply = std::make_shared<ApplyFiltersOpts>();
  {
    auto* cmd = app.add_subcommand("apply-filters",
                                   "Filter raw matches with trained models");
    cmd->add_option("--lexicon", apply->lexicon, "Lexicon file")
        ->required()
        ->envname("ENTKIT_LEXICON");
    cmd->add_option("--corpus", apply->corpus, "Corpus file")
        ->required()
        ->envname("ENTKIT_CORPUS");
    cmd->add_option("--matches", apply->matches, "Raw matches file")->required();
    cmd->add_option("--models", apply->models_dir,
                    "Directory written by train-filters")
        ->required();
    cmd->add_option("--exclude", apply->exclude,
                    "Paragraph-id file to drop before filtering (holdout)");
    cmd->add_option("--threshold", apply->threshold, "Decision threshold");
    cmd->add_option("--out", apply->out, "Filtered matches output")->required();
    cmd->callback([apply] { run_apply_filters(*apply); });
  }

  auto assemble = std::make_shared<AssembleOpts>();
  {
    auto* cmd = app.add_subcommand("assemble",
                                   "Build an annotated dataset from filtered matches");
    cmd->add_option("--lexicon", assemble->lexicon, "Lexicon file")
        ->required()
        ->envname("ENTKIT_LEXICON");
    cmd->add_option("--corpus", assemble->corpus, "Corpus file")
        ->required()
        ->envname("ENTKIT_CORPUS");
    cmd->add_option("--filtered", assemble->filtered, "Filtered matches file")
        ->required();
    cmd->add_option("--min-types", assemble->min_types,
                    "Min distinct types per kept paragraph");
    cmd->add_option("--max-paragraphs", assemble->max_paragraphs,
                    "Keep only the best N paragraphs (0 = all)");
    cmd->add_option("--out", assemble->out, "Dataset output")->required();
    cmd->callback([assemble] { run_assemble(*assemble); });
  }

  auto split = std::make_shared<SplitOpts>();
  {
    auto* cmd = app.add_subcommand("split", "Assign paragraph and type splits");
    cmd->add_option("--dataset", split->dataset, "Annotated dataset")
        ->required()
        ->envname("ENTKIT_DATASET");
    cmd->add_option("--paragraph-fraction", split->paragraph_fraction,
                    "Train fraction of paragraphs");
    cmd->add_option("--type-fraction", split->type_fraction,
                    "Train fraction of types");
    cmd->add_option("--seed", split->seed, "Random seed");
    cmd->add_option("--test-types", split->test_types,
                    "File of type ids forced into the test side");
    cmd->add_option("--out-paragraphs", split->out_paragraphs,
                    "Paragraph split output")
        ->required();
    cmd->add_option("--out-types", split->out_types, "Type split output")->required();
    cmd->callback([split] { run_split(*split); });
  }

  auto sample = std::make_shared<SampleOpts>();
  {
    auto* cmd = app.add_subcommand("sample", "Type-stratified paragraph sample");
    cmd->add_option("--dataset", sample->dataset, "Annotated dataset")
        ->required()
        ->envname("ENTKIT_DATASET");
    cmd->add_option("--n", sample->n, "Sample size")->required();
    cmd->add_option("--seed", sample->seed, "Random seed");
    cmd->add_option("--out", sample->out, "Sampled dataset output")->required();
    cmd->callback([sample] { run_sample(*sample); });
  }

  auto audit = std::make_shared<AuditOpts>();
  {
    auto* cmd = app.add_subcommand(
        "audit", "Write a review worksheet, or score a judged one");
    cmd->add_option("--dataset", audit->dataset, "Annotated dataset")
        ->envname("ENTKIT_DATASET");
    cmd->add_option("--n", audit->n, "Paragraphs to sample");
    cmd->add_option("--seed", audit->seed, "Random seed");
    cmd->add_option("--score", audit->score, "Judged worksheet to score");
    cmd->add_option("--out", audit->out, "Worksheet or summary output")->required();
    cmd->callback([audit] { run_audit(*audit); });
  }

  auto index = std::make_shared<IndexOpts>();
  {
    auto* cmd = app.add_subcommand("index", "Build an inverted index");
    cmd->add_option("--corpus", index->corpus, "Corpus file")
        ->required()
        ->envname("ENTKIT_CORPUS");
    cmd->add_option("--out", index->out, "Index output")->required();
    cmd->callback([index] { run_index(*index); });
  }

  auto bm25 = std::make_shared<RetrieveBm25Opts>();
  {
    auto* cmd = app.add_subcommand("retrieve-bm25",
                                   "Rank paragraphs for type labels with BM25");
    cmd->add_option("--index", bm25->index, "Index file")->required();
    cmd->add_option("--lexicon", bm25->lexicon, "Lexicon file (query labels)")
        ->required()
        ->envname("ENTKIT_LEXICON");
    cmd->add_option("--type-split", bm25->type_split, "Type split file");
    cmd->add_option("--side", bm25->side, "train, test, or all");
    cmd->add_option("--k1", bm25->k1, "BM25 k1");
    cmd->add_option("--b", bm25->b, "BM25 b");
    cmd->add_option("--threads", bm25->threads, "Worker threads");
    cmd->add_option("--out", bm25->out, "Run file output")->required();
    cmd->callback([bm25] { run_retrieve_bm25(*bm25); });
  }

  auto dense = std::make_shared<RetrieveDenseOpts>();
  {
    auto* cmd = app.add_subcommand("retrieve-dense",
                                   "Rank paragraphs by cosine similarity");
    cmd->add_option("--vectors", dense->vectors, "Paragraph vector file")
        ->required()
        ->envname("ENTKIT_VECTORS");
    cmd->add_option("--queries", dense->queries, "Query vector file (by type id)")
        ->required();
    cmd->add_option("--type-split", dense->type_split, "Type split file");
    cmd->add_option("--side", dense->side, "train, test, or all");
    cmd->add_option("--threads", dense->threads, "Worker threads");
    cmd->add_option("--out", dense->out, "Run file output")->required();
    cmd->callback([dense] { run_retrieve_dense(*dense); });
  }

  auto evalret = std::make_shared<EvalRetrievalOpts>();
  {
    auto* cmd = app.add_subcommand("eval-retrieval",
                                   "Score runs with Recall@|REL|");
    cmd->add_option("--runs", evalret->runs, "Run file")->required();
    cmd->add_option("--dataset", evalret->dataset,
                    "Annotated dataset (relevance source)")
        ->required()
        ->envname("ENTKIT_DATASET");
    cmd->add_option("--type-split", evalret->type_split, "Type split file");
    cmd->add_option("--side", evalret->side, "train, test, or all");
    cmd->add_option("--out", evalret->out, "Report output")->required();
    cmd->callback([evalret] { run_eval_retrieval(*evalret); });
  }

  auto evalner = std::make_shared<EvalNerOpts>();
  {
    auto* cmd = app.add_subcommand("eval-ner",
                                   "Score span predictions against gold");
    cmd->add_option("--dataset", evalner->dataset, "Gold dataset")
        ->required()
        ->envname("ENTKIT_DATASET");
    cmd->add_option("--predictions", evalner->predictions, "Prediction file")
        ->required();
    cmd->add_option("--type-split", evalner->type_split, "Type split file");
    cmd->add_option("--side", evalner->side, "train, test, or all");
    cmd->add_option("--out", evalner->out, "Report output")->required();
    cmd->callback([evalner] { run_eval_ner(*evalner); });
  }

  auto fprate = std::make_shared<FpRateOpts>();
  {
    auto* cmd = app.add_subcommand(
        "fp-rate", "Out-of-type false-positive rate of a prediction file");
    cmd->add_option("--predictions", fprate->predictions, "Prediction file")
        ->required();
    cmd->add_option("--type", fprate->type, "Target type id")->required();
    cmd->add_option("--paragraphs", fprate->paragraphs,
                    "Corpus file of paragraphs lacking the type")
        ->required();
    cmd->add_option("--gold", fprate->gold,
                    "Gold dataset used to verify the paragraphs");
    cmd->add_option("--out", fprate->out, "Summary output")->required();
    cmd->callback([fprate] { run_fp_rate(*fprate); });
  }

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("entkit");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what());
    return 2;
  } catch (const Error& e) {
    print_error(error_kind_name(e.kind()), e.what());
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return 5;
  }
  return 0;
}

}  // namespace entkit::cli
