#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "entkit/error.hpp"
#include "entkit/retrieval.hpp"
#include "entkit/rng.hpp"

using namespace entkit;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("entkit_r_" + name))
      .string();
}

std::vector<Paragraph> fish_corpus() {
  return {
      Paragraph::make("d1", "red fish swims"),
      Paragraph::make("d2", "red red crab"),
      Paragraph::make("d3", "blue whale swims deep sea"),
  };
}

double score_of(const RankedRun& run, const std::string& pid) {
  for (const auto& sd : run.ranking) {
    if (sd.paragraph_id == pid) return sd.score;
  }
  FAIL("paragraph " << pid << " not in run");
  return 0.0;
}

bool run_has(const RankedRun& run, const std::string& pid) {
  for (const auto& sd : run.ranking) {
    if (sd.paragraph_id == pid) return true;
  }
  return false;
}

// recall_at_rel restated directly from its definition
double slow_recall(const RankedRun& run, const std::set<std::string>& rel) {
  size_t hits = 0;
  for (size_t i = 0; i < run.ranking.size() && i < rel.size(); ++i) {
    hits += rel.count(run.ranking[i].paragraph_id);
  }
  return static_cast<double>(hits) / static_cast<double>(rel.size());
}

}  // namespace

TEST_CASE("index build records postings, lengths, and average length") {
  InvertedIndex index = InvertedIndex::build(fish_corpus());
  CHECK(index.document_count() == 3);
  CHECK(index.ids() == std::vector<std::string>{"d1", "d2", "d3"});
  CHECK(index.lengths() == std::vector<uint32_t>{3, 3, 5});
  CHECK(index.average_length() ==
        doctest::Approx(3.6666666666666665).epsilon(1e-12));

  const auto* red = index.postings_for("red");
  REQUIRE(red != nullptr);
  REQUIRE(red->size() == 2);
  CHECK((*red)[0].doc == 0);
  CHECK((*red)[0].tf == 1);
  CHECK((*red)[1].doc == 1);
  CHECK((*red)[1].tf == 2);

  const auto* swims = index.postings_for("swims");
  REQUIRE(swims != nullptr);
  REQUIRE(swims->size() == 2);
  CHECK((*swims)[0].doc == 0);
  CHECK((*swims)[1].doc == 2);

  CHECK(index.postings_for("plankton") == nullptr);
}

TEST_CASE("index terms are case-folded") {
  InvertedIndex index = InvertedIndex::build(
      {Paragraph::make("p", "Red RED red")});
  const auto* red = index.postings_for("red");
  REQUIRE(red != nullptr);
  CHECK((*red)[0].tf == 3);
  CHECK(index.postings_for("Red") == nullptr);
}

TEST_CASE("an empty corpus cannot be indexed") {
  CHECK_THROWS_AS(InvertedIndex::build({}), Error);
}

TEST_CASE("bm25 scores match the hand-computed table") {
  InvertedIndex index = InvertedIndex::build(fish_corpus());
  RankedRun run = bm25_rank(index, "t", "red swims");
  CHECK(run.type_id == "t");
  REQUIRE(run.ranking.size() == 3);
  CHECK(run.ranking[0].paragraph_id == "d1");
  CHECK(run.ranking[1].paragraph_id == "d2");
  CHECK(run.ranking[2].paragraph_id == "d3");
  CHECK(score_of(run, "d1") == doctest::Approx(1.0155435560488217).epsilon(1e-9));
  CHECK(score_of(run, "d2") == doctest::Approx(0.6810831034578925).epsilon(1e-9));
  CHECK(score_of(run, "d3") == doctest::Approx(0.40913984991894975).epsilon(1e-9));
}

TEST_CASE("repeated query terms score once") {
  InvertedIndex index = InvertedIndex::build(fish_corpus());
  RankedRun once = bm25_rank(index, "t", "red");
  RankedRun twice = bm25_rank(index, "t", "red red");
  REQUIRE(once.ranking.size() == 2);
  REQUIRE(twice.ranking.size() == 2);
  for (size_t i = 0; i < once.ranking.size(); ++i) {
    CHECK(twice.ranking[i].paragraph_id == once.ranking[i].paragraph_id);
    CHECK(twice.ranking[i].score == once.ranking[i].score);
  }
  // document tf still matters: d2 holds two "red"s and outranks d1
  CHECK(once.ranking[0].paragraph_id == "d2");
  CHECK(score_of(once, "d2") == doctest::Approx(0.6810831034578925).epsilon(1e-9));
  CHECK(score_of(once, "d1") == doctest::Approx(0.5077717780244109).epsilon(1e-9));
}

TEST_CASE("query terms absent from the corpus contribute nothing") {
  InvertedIndex index = InvertedIndex::build(fish_corpus());
  CHECK(bm25_rank(index, "t", "plankton").ranking.empty());
  // mixing in an absent term leaves present-term scores untouched
  RankedRun mixed = bm25_rank(index, "t", "plankton swims");
  RankedRun plain = bm25_rank(index, "t", "swims");
  REQUIRE(mixed.ranking.size() == plain.ranking.size());
  for (size_t i = 0; i < plain.ranking.size(); ++i) {
    CHECK(mixed.ranking[i].score == plain.ranking[i].score);
  }
  CHECK_THROWS_AS(bm25_rank(index, "t", "  "), Error);
}

TEST_CASE("every document sharing a query term appears in the run") {
  std::vector<Paragraph> corpus;
  for (int i = 0; i < 40; ++i) {
    std::string text = (i % 3 == 0) ? "shared filler" : "filler only";
    corpus.push_back(Paragraph::make("p" + std::to_string(i), text));
  }
  InvertedIndex index = InvertedIndex::build(corpus);
  RankedRun run = bm25_rank(index, "t", "shared");
  size_t expected = 0;
  for (int i = 0; i < 40; ++i) expected += (i % 3 == 0);
  CHECK(run.ranking.size() == expected);
  for (int i = 0; i < 40; ++i) {
    CHECK(run_has(run, "p" + std::to_string(i)) == (i % 3 == 0));
  }
}

TEST_CASE("ties break by ascending paragraph id") {
  std::vector<Paragraph> corpus = {
      Paragraph::make("zed", "red herring"),
      Paragraph::make("abe", "red herring"),
      Paragraph::make("mid", "red herring"),
  };
  RankedRun run = bm25_rank(InvertedIndex::build(corpus), "t", "red");
  REQUIRE(run.ranking.size() == 3);
  CHECK(run.ranking[0].paragraph_id == "abe");
  CHECK(run.ranking[1].paragraph_id == "mid");
  CHECK(run.ranking[2].paragraph_id == "zed");
  CHECK(run.ranking[0].score == run.ranking[2].score);
}

TEST_CASE("more occurrences score higher at equal length") {
  std::vector<Paragraph> corpus = {
      Paragraph::make("single", "red pad pad"),
      Paragraph::make("double", "red red pad"),
  };
  RankedRun run = bm25_rank(InvertedIndex::build(corpus), "t", "red");
  CHECK(score_of(run, "double") > score_of(run, "single"));
}

TEST_CASE("adding documents that share a term lowers its idf") {
  std::vector<Paragraph> small = {
      Paragraph::make("d1", "red fish"),
      Paragraph::make("d2", "blue fish"),
  };
  std::vector<Paragraph> grown = small;
  grown.push_back(Paragraph::make("d3", "red tide"));
  grown.push_back(Paragraph::make("d4", "red dawn"));
  double before = score_of(bm25_rank(InvertedIndex::build(small), "t", "red"), "d1");
  double after = score_of(bm25_rank(InvertedIndex::build(grown), "t", "red"), "d1");
  CHECK(after < before);
}

TEST_CASE("index files round trip") {
  InvertedIndex index = InvertedIndex::build(fish_corpus());
  std::string path = temp_path("index.txt");
  index.save(path);
  InvertedIndex loaded = InvertedIndex::load(path);
  CHECK(loaded.ids() == index.ids());
  CHECK(loaded.lengths() == index.lengths());
  CHECK(loaded.average_length() == index.average_length());
  RankedRun a = bm25_rank(index, "t", "red swims");
  RankedRun b = bm25_rank(loaded, "t", "red swims");
  REQUIRE(a.ranking.size() == b.ranking.size());
  for (size_t i = 0; i < a.ranking.size(); ++i) {
    CHECK(a.ranking[i].paragraph_id == b.ranking[i].paragraph_id);
    CHECK(a.ranking[i].score == b.ranking[i].score);
  }
}

TEST_CASE("dense ranking matches the hand-computed cosine table") {
  DenseVectorStore store = DenseVectorStore::with_dimension(3);
  store.add("d1", {1.0, 0.0, 0.0});
  store.add("d2", {0.0, 1.0, 0.0});
  store.add("d3", {1.0, 1.0, 0.0});
  store.add("d4", {0.5, 0.5, 0.5});
  store.add("d5", {2.0, 0.0, 1.0});

  RankedRun run = dense_rank(store, "t", {1.0, 2.0, 0.0});
  REQUIRE(run.ranking.size() == 5);
  CHECK(run.ranking[0].paragraph_id == "d3");
  CHECK(run.ranking[1].paragraph_id == "d2");
  CHECK(run.ranking[2].paragraph_id == "d4");
  CHECK(run.ranking[3].paragraph_id == "d1");
  CHECK(run.ranking[4].paragraph_id == "d5");
  CHECK(run.ranking[0].score == doctest::Approx(0.9486832980505138).epsilon(1e-12));
  CHECK(run.ranking[1].score == doctest::Approx(0.8944271909999159).epsilon(1e-12));
  CHECK(run.ranking[2].score == doctest::Approx(0.7745966692414834).epsilon(1e-12));
  CHECK(run.ranking[3].score == doctest::Approx(0.4472135954999579).epsilon(1e-12));
  CHECK(run.ranking[4].score == doctest::Approx(0.3999999999999999).epsilon(1e-12));
}

TEST_CASE("a stored copy of the query ranks first with similarity one") {
  DenseVectorStore store = DenseVectorStore::with_dimension(4);
  store.add("match", {0.3, -0.1, 0.7, 0.2});
  store.add("other", {1.0, 1.0, 0.0, 0.0});
  RankedRun run = dense_rank(store, "t", {0.3, -0.1, 0.7, 0.2});
  CHECK(run.ranking[0].paragraph_id == "match");
  CHECK(run.ranking[0].score == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("orthogonal vectors score zero and zero vectors stay last") {
  DenseVectorStore store = DenseVectorStore::with_dimension(3);
  store.add("ortho", {0.0, 0.0, 5.0});
  store.add("zero", {0.0, 0.0, 0.0});
  store.add("align", {2.0, 0.0, 0.0});
  RankedRun run = dense_rank(store, "t", {1.0, 0.0, 0.0});
  REQUIRE(run.ranking.size() == 3);
  CHECK(run.ranking[0].paragraph_id == "align");
  CHECK(score_of(run, "ortho") == doctest::Approx(0.0));
  CHECK(score_of(run, "zero") == doctest::Approx(0.0));
}

TEST_CASE("cosine ignores positive rescaling of the query") {
  DenseVectorStore store = DenseVectorStore::with_dimension(3);
  store.add("a", {1.0, 2.0, 3.0});
  store.add("b", {3.0, 2.0, 1.0});
  RankedRun base = dense_rank(store, "t", {0.5, 0.25, 1.0});
  RankedRun scaled = dense_rank(store, "t", {2.0, 1.0, 4.0});
  REQUIRE(base.ranking.size() == scaled.ranking.size());
  for (size_t i = 0; i < base.ranking.size(); ++i) {
    CHECK(scaled.ranking[i].paragraph_id == base.ranking[i].paragraph_id);
    CHECK(scaled.ranking[i].score ==
          doctest::Approx(base.ranking[i].score).epsilon(1e-12));
  }
}

TEST_CASE("dense queries are validated") {
  DenseVectorStore store = DenseVectorStore::with_dimension(3);
  store.add("a", {1.0, 0.0, 0.0});
  CHECK_THROWS_AS(dense_rank(store, "t", {1.0, 0.0}), Error);
  CHECK_THROWS_AS(dense_rank(store, "t", {0.0, 0.0, 0.0}), Error);
  CHECK_THROWS_AS(store.add("b", {1.0}), Error);
  CHECK_THROWS_AS(store.add("a", {0.0, 1.0, 0.0}), Error);
}

TEST_CASE("vector stores round trip") {
  DenseVectorStore store = DenseVectorStore::with_dimension(3);
  store.add("a", {0.125, -2.5, 0.0});
  store.add("b", {1e-9, 3.0, 7.75});
  std::string path = temp_path("vectors.txt");
  store.save(path);
  DenseVectorStore loaded = DenseVectorStore::load(path);
  CHECK(loaded.dimension() == 3);
  CHECK(loaded.ids() == store.ids());
  for (size_t row = 0; row < store.count(); ++row) {
    for (size_t d = 0; d < 3; ++d) {
      CHECK(loaded.vector(row)[d] == store.vector(row)[d]);
    }
  }
}

TEST_CASE("recall counts relevant hits in the top rel-size slots") {
  RankedRun run;
  run.type_id = "t";
  for (const char* pid : {"a", "b", "c", "d", "e", "f"}) {
    run.ranking.push_back({pid, 1.0 - run.ranking.size() * 0.1});
  }
  SUBCASE("perfect run") {
    CHECK(recall_at_rel(run, {"a", "b", "c"}) == doctest::Approx(1.0));
  }
  SUBCASE("disjoint run") {
    CHECK(recall_at_rel(run, {"x", "y"}) == doctest::Approx(0.0));
  }
  SUBCASE("half of four relevant in the top four") {
    // top-4 = {a,b,c,d}; relevant = {a,c,x,y}
    CHECK(recall_at_rel(run, {"a", "c", "x", "y"}) == doctest::Approx(0.5));
  }
  SUBCASE("relevant docs ranked below rel-size are misses") {
    // top-2 = {a,b}; e is relevant but ranked fifth
    CHECK(recall_at_rel(run, {"a", "e"}) == doctest::Approx(0.5));
  }
  SUBCASE("runs shorter than rel-size treat missing slots as misses") {
    RankedRun short_run;
    short_run.type_id = "t";
    short_run.ranking.push_back({"a", 1.0});
    CHECK(recall_at_rel(short_run, {"a", "b", "c", "d"}) == doctest::Approx(0.25));
  }
  SUBCASE("an empty relevance set is rejected") {
    CHECK_THROWS_AS(recall_at_rel(run, {}), Error);
  }
}

TEST_CASE("recall agrees with its direct restatement on random runs") {
  Rng rng(12021);
  for (int iter = 0; iter < 300; ++iter) {
    size_t universe = 1 + rng.bounded(30);
    std::vector<std::string> pids;
    for (size_t i = 0; i < universe; ++i) pids.push_back("p" + std::to_string(i));
    rng.shuffle(pids);

    RankedRun run;
    run.type_id = "t";
    size_t run_len = rng.bounded(universe + 1);
    for (size_t i = 0; i < run_len; ++i) {
      run.ranking.push_back({pids[i], 1.0 - static_cast<double>(i) * 0.01});
    }
    std::set<std::string> rel;
    size_t rel_size = 1 + rng.bounded(universe);
    for (size_t i = 0; i < rel_size; ++i) {
      rel.insert("p" + std::to_string(rng.bounded(universe)));
    }
    CAPTURE(iter);
    CHECK(recall_at_rel(run, rel) == doctest::Approx(slow_recall(run, rel)).epsilon(1e-12));
  }
}

TEST_CASE("evaluation aggregates mean, spread, and size correlation") {
  auto make_run = [](const std::string& type, std::vector<std::string> pids) {
    RankedRun run;
    run.type_id = type;
    for (const auto& pid : pids) {
      run.ranking.push_back({pid, 1.0 - run.ranking.size() * 0.01});
    }
    return run;
  };

  SUBCASE("two recalls average with population spread") {
    // t1: |REL|=5, 1 hit in top 5 -> 0.2; t2: |REL|=5, 2 hits -> 0.4
    std::map<std::string, std::set<std::string>> rel = {
        {"t1", {"a", "b", "c", "d", "e"}},
        {"t2", {"a", "b", "c", "d", "e"}},
    };
    std::vector<RankedRun> runs = {
        make_run("t1", {"a", "x1", "x2", "x3", "x4"}),
        make_run("t2", {"a", "b", "x1", "x2", "x3"}),
    };
    RetrievalReport report = evaluate_runs(runs, rel);
    REQUIRE(report.per_type.size() == 2);
    CHECK(report.per_type[0].recall == doctest::Approx(0.2));
    CHECK(report.per_type[1].recall == doctest::Approx(0.4));
    CHECK(report.mean == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(report.stddev == doctest::Approx(0.1).epsilon(1e-12));
  }

  SUBCASE("uniform perfect recall has zero spread and no correlation") {
    std::map<std::string, std::set<std::string>> rel = {
        {"t1", {"a"}},
        {"t2", {"b", "c"}},
    };
    std::vector<RankedRun> runs = {
        make_run("t1", {"a"}),
        make_run("t2", {"b", "c"}),
    };
    RetrievalReport report = evaluate_runs(runs, rel);
    CHECK(report.mean == doctest::Approx(1.0));
    CHECK(report.stddev == doctest::Approx(0.0));
    CHECK_FALSE(report.pearson_defined);  // recall variance is zero
  }

  SUBCASE("correlation between rel size and recall matches the frozen value") {
    // sizes (2, 4, 6) with recalls (0.5, 0.25, 1.0)
    std::map<std::string, std::set<std::string>> rel = {
        {"t1", {"a", "b"}},
        {"t2", {"a", "b", "c", "d"}},
        {"t3", {"a", "b", "c", "d", "e", "f"}},
    };
    std::vector<RankedRun> runs = {
        make_run("t1", {"a", "x1"}),
        make_run("t2", {"a", "x1", "x2", "x3"}),
        make_run("t3", {"a", "b", "c", "d", "e", "f"}),
    };
    RetrievalReport report = evaluate_runs(runs, rel);
    REQUIRE(report.pearson_defined);
    CHECK(report.pearson == doctest::Approx(0.6546536707079772).epsilon(1e-12));
  }

  SUBCASE("runs and relevance sets must pair up") {
    std::map<std::string, std::set<std::string>> rel = {{"t1", {"a"}}};
    CHECK_THROWS_AS(evaluate_runs({}, rel), Error);
    std::vector<RankedRun> extra = {make_run("t1", {"a"}), make_run("tX", {"a"})};
    CHECK_THROWS_AS(evaluate_runs(extra, rel), Error);
    std::vector<RankedRun> dup = {make_run("t1", {"a"}), make_run("t1", {"b"})};
    CHECK_THROWS_AS(evaluate_runs(dup, rel), Error);
    CHECK_THROWS_AS(evaluate_runs({}, {}), Error);
  }
}

TEST_CASE("run files round trip and enforce the ranking invariant") {
  RankedRun r1;
  r1.type_id = "alpha";
  r1.ranking = {{"p2", 0.9}, {"p1", 0.5}, {"p9", 0.5}};
  RankedRun r2;
  r2.type_id = "beta";
  r2.ranking = {{"p7", 1.25}};
  std::string path = temp_path("runs.tsv");
  save_runs({r1, r2}, path);
  std::vector<RankedRun> loaded = load_runs(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].type_id == "alpha");
  REQUIRE(loaded[0].ranking.size() == 3);
  CHECK(loaded[0].ranking[0].paragraph_id == "p2");
  CHECK(loaded[0].ranking[0].score == 0.9);
  CHECK(loaded[0].ranking[2].paragraph_id == "p9");
  CHECK(loaded[1].type_id == "beta");

  auto write_and_load = [&](const std::string& body) {
    std::string bad = temp_path("bad_runs.tsv");
    std::ofstream out(bad);
    out << body;
    out.close();
    return load_runs(bad);
  };
  // ranks must count 1,2,... within a type
  CHECK_THROWS_AS(write_and_load("t\t1\tp1\t0.9\nt\t3\tp2\t0.8\n"), Error);
  // scores must be non-increasing
  CHECK_THROWS_AS(write_and_load("t\t1\tp1\t0.5\nt\t2\tp2\t0.9\n"), Error);
  // equal scores must list ascending paragraph ids
  CHECK_THROWS_AS(write_and_load("t\t1\tp9\t0.5\nt\t2\tp1\t0.5\n"), Error);
  // a paragraph appears at most once per run
  CHECK_THROWS_AS(write_and_load("t\t1\tp1\t0.9\nt\t2\tp1\t0.8\n"), Error);
  // malformed column count
  CHECK_THROWS_AS(write_and_load("t\t1\tp1\n"), Error);
}

TEST_CASE("report files carry per-type rows and the aggregates") {
  RetrievalReport report;
  report.per_type = {{"t1", 2, 0.5}, {"t2", 4, 0.25}};
  report.mean = 0.375;
  report.stddev = 0.125;
  report.pearson = -1.0;
  report.pearson_defined = true;
  std::string path = temp_path("report.tsv");
  save_retrieval_report(report, path);
  std::ifstream in(path);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  REQUIRE(lines.size() >= 4);
  CHECK(lines[0].find("type_id") != std::string::npos);  // header first
  CHECK(lines[1].find("t1") != std::string::npos);
  CHECK(lines[1].find("0.5") != std::string::npos);
  bool has_mean = false, has_pearson = false;
  for (const auto& l : lines) {
    if (l.find("mean") != std::string::npos) has_mean = true;
    if (l.find("pearson") != std::string::npos) has_pearson = true;
  }
  CHECK(has_mean);
  CHECK(has_pearson);
}
