#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "entkit/error.hpp"
#include "entkit/ner_eval.hpp"
#include "entkit/rng.hpp"

using namespace entkit;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("entkit_n_" + name))
      .string();
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path);
  out << body;
}

AnnotatedParagraph sax_paragraph() {
  AnnotatedParagraph ap;
  ap.paragraph = Paragraph::make(
      "p_sax", "Jimmy Dorsey played beside Lester Young and Charlie Parker");
  // tokens: Jimmy Dorsey played beside Lester Young and Charlie Parker
  ap.spans.push_back({0, 2, "e_dorsey", {"saxophonist"}});
  ap.spans.push_back({4, 6, "e_young", {"saxophonist"}});
  ap.spans.push_back({7, 9, "e_parker", {"saxophonist"}});
  return ap;
}

MatchCounts only(const std::map<std::string, MatchCounts>& counts,
                 const std::string& type_id) {
  auto it = counts.find(type_id);
  REQUIRE(it != counts.end());
  return it->second;
}

}  // namespace

TEST_CASE("a partial surface misses exactly but matches relaxed") {
  AnnotatedParagraph gold = sax_paragraph();
  std::vector<Prediction> predictions = {
      {"Jimmy Dorsey", "saxophonist"},
      {"Young", "saxophonist"},
      {"Charlie Parker", "saxophonist"},
  };
  MatchCounts exact = only(match_exact(gold, predictions), "saxophonist");
  CHECK(exact == MatchCounts{2, 1, 1});
  MatchCounts relaxed = only(match_relaxed(gold, predictions), "saxophonist");
  CHECK(relaxed == MatchCounts{3, 0, 0});
}

TEST_CASE("exact matching folds case") {
  AnnotatedParagraph gold = sax_paragraph();
  std::vector<Prediction> predictions = {{"lester young", "saxophonist"}};
  MatchCounts exact = only(match_exact(gold, predictions), "saxophonist");
  CHECK(exact == MatchCounts{1, 0, 2});
}

TEST_CASE("predicting every gold surface scores perfectly") {
  AnnotatedParagraph gold = sax_paragraph();
  std::vector<Prediction> predictions = {
      {"Jimmy Dorsey", "saxophonist"},
      {"Lester Young", "saxophonist"},
      {"Charlie Parker", "saxophonist"},
  };
  MatchCounts exact = only(match_exact(gold, predictions), "saxophonist");
  CHECK(exact == MatchCounts{3, 0, 0});
  PRF scores = prf(exact);
  CHECK(scores.precision == doctest::Approx(1.0));
  CHECK(scores.recall == doctest::Approx(1.0));
  CHECK(scores.f1 == doctest::Approx(1.0));
  CHECK_FALSE(scores.degenerate);
}

TEST_CASE("no predictions leaves recall zero and precision undefined") {
  AnnotatedParagraph gold = sax_paragraph();
  MatchCounts exact = only(match_exact(gold, {}), "saxophonist");
  CHECK(exact == MatchCounts{0, 0, 3});
  PRF scores = prf(exact);
  CHECK(scores.precision == 0.0);
  CHECK(scores.recall == 0.0);
  CHECK(scores.f1 == 0.0);
  CHECK(scores.degenerate);
}

TEST_CASE("the right string under the wrong type never matches") {
  AnnotatedParagraph gold = sax_paragraph();
  std::vector<Prediction> predictions = {{"Lester Young", "trumpeter"}};
  auto exact = match_exact(gold, predictions);
  CHECK(only(exact, "saxophonist") == MatchCounts{0, 0, 3});
  CHECK(only(exact, "trumpeter") == MatchCounts{0, 1, 0});
  auto relaxed = match_relaxed(gold, predictions);
  CHECK(only(relaxed, "saxophonist") == MatchCounts{0, 0, 3});
  CHECK(only(relaxed, "trumpeter") == MatchCounts{0, 1, 0});
}

TEST_CASE("each gold mention is consumed at most once") {
  AnnotatedParagraph ap;
  ap.paragraph = Paragraph::make("p", "Mercury orbits fast");
  ap.spans.push_back({0, 1, "e_planet", {"planet"}});
  std::vector<Prediction> predictions = {
      {"Mercury", "planet"},
      {"Mercury", "planet"},  // dropped by PredictionSet, kept in a raw list
  };
  MatchCounts exact = only(match_exact(ap, predictions), "planet");
  // the second copy finds the mention consumed and counts as FP
  CHECK(exact == MatchCounts{1, 1, 0});
}

TEST_CASE("relaxed consumption is greedy in input order") {
  // gold mentions "alpha beta" then "alpha"; predictions "alpha" then "beta".
  // greedy: "alpha" consumes "alpha beta" (shares a token), "beta" finds
  // only "alpha" left and misses. An optimal assignment would pair
  // "alpha"->"alpha" and "beta"->"alpha beta" for two TPs; the greedy
  // criterion settles for one, and this pin guards that choice.
  AnnotatedParagraph ap;
  ap.paragraph = Paragraph::make("p", "alpha beta then alpha");
  ap.spans.push_back({0, 2, "e1", {"t"}});
  ap.spans.push_back({3, 4, "e2", {"t"}});
  std::vector<Prediction> predictions = {{"alpha", "t"}, {"beta", "t"}};
  MatchCounts relaxed = only(match_relaxed(ap, predictions), "t");
  CHECK(relaxed == MatchCounts{1, 1, 1});
  // exact pairing is immune here: "alpha" only equals the second mention
  MatchCounts exact = only(match_exact(ap, predictions), "t");
  CHECK(exact == MatchCounts{1, 1, 1});
}

TEST_CASE("a multi-type gold span is owed once per type") {
  AnnotatedParagraph ap;
  ap.paragraph = Paragraph::make("p", "Aristotelia devexella rests");
  ap.spans.push_back({0, 2, "e_moth", {"moth", "insect"}});
  std::vector<Prediction> predictions = {{"Aristotelia devexella", "moth"}};
  auto exact = match_exact(ap, predictions);
  CHECK(only(exact, "moth") == MatchCounts{1, 0, 0});
  CHECK(only(exact, "insect") == MatchCounts{0, 0, 1});
}

TEST_CASE("relaxed true positives never fall below exact ones") {
  Rng rng(4242);
  const std::vector<std::string> words = {"ada", "bix", "cor", "dun", "eel"};
  for (int iter = 0; iter < 200; ++iter) {
    std::string text;
    for (int i = 0; i < 12; ++i) {
      if (i) text += ' ';
      text += words[rng.bounded(words.size())];
    }
    AnnotatedParagraph ap;
    ap.paragraph = Paragraph::make("p", text);
    size_t span_count = 1 + rng.bounded(4);
    for (size_t s = 0; s < span_count; ++s) {
      uint32_t start = static_cast<uint32_t>(rng.bounded(11));
      uint32_t end = start + 1 + static_cast<uint32_t>(rng.bounded(2));
      ap.spans.push_back({start, end, "e", {"t"}});
    }
    std::vector<Prediction> predictions;
    size_t pred_count = rng.bounded(5);
    for (size_t p = 0; p < pred_count; ++p) {
      std::string surface = words[rng.bounded(words.size())];
      if (rng.bounded(2)) surface += " " + words[rng.bounded(words.size())];
      predictions.push_back({surface, "t"});
    }
    MatchCounts exact = match_exact(ap, predictions)["t"];
    MatchCounts relaxed = match_relaxed(ap, predictions)["t"];
    CAPTURE(iter);
    CAPTURE(text);
    CHECK(relaxed.tp >= exact.tp);
    CHECK(relaxed.fp <= exact.fp);
    CHECK(relaxed.fn <= exact.fn);
    CHECK(exact.tp + exact.fp == predictions.size());
    CHECK(relaxed.tp + relaxed.fp == predictions.size());
  }
}

TEST_CASE("prediction sets drop identical surface-type repeats") {
  PredictionSet set;
  set.add("p1", {"Mercury", "planet"});
  set.add("p1", {"Mercury", "planet"});
  set.add("p1", {"Mercury", "element"});
  set.add("p1", {"mercury", "planet"});  // case differs, kept
  CHECK(set.by_paragraph.at("p1").size() == 3);
}

TEST_CASE("micro pooling sums counts before computing ratios") {
  SilverDataset gold;
  {
    AnnotatedParagraph ap;
    ap.paragraph = Paragraph::make("p1", "alpha rests");
    ap.spans.push_back({0, 1, "e1", {"t1"}});
    gold.push_back(ap);
  }
  {
    AnnotatedParagraph ap;
    ap.paragraph = Paragraph::make("p2", "beta rests");
    ap.spans.push_back({0, 1, "e2", {"t2"}});
    gold.push_back(ap);
  }
  PredictionSet predictions;
  predictions.add("p1", {"alpha", "t1"});
  predictions.add("p1", {"zz", "t1"});
  // t1: (tp 1, fp 1, fn 0); t2: (0, 0, 1); pooled: (1, 1, 1)
  NerReport report = evaluate_ner(gold, predictions);
  REQUIRE(report.per_type.size() == 2);
  CHECK(report.per_type[0].exact == MatchCounts{1, 1, 0});
  CHECK(report.per_type[1].exact == MatchCounts{0, 0, 1});
  CHECK(report.exact_micro.precision == doctest::Approx(0.5));
  CHECK(report.exact_micro.recall == doctest::Approx(0.5));
  CHECK(report.exact_micro.f1 == doctest::Approx(0.5));
  // macro averages per-type ratios instead: P (0.5+0)/2, R (1+0)/2
  CHECK(report.exact_macro.precision == doctest::Approx(0.25));
  CHECK(report.exact_macro.recall == doctest::Approx(0.5));
  CHECK(report.exact_macro.f1 == doctest::Approx((2.0 / 3.0) / 2.0));
  CHECK(report.exact_macro.degenerate);  // t2 had no predictions
}

TEST_CASE("the type filter narrows the scored universe") {
  SilverDataset gold;
  AnnotatedParagraph ap;
  ap.paragraph = Paragraph::make("p1", "alpha beta");
  ap.spans.push_back({0, 1, "e1", {"t1"}});
  ap.spans.push_back({1, 2, "e2", {"t2"}});
  gold.push_back(ap);
  PredictionSet predictions;
  predictions.add("p1", {"alpha", "t1"});
  predictions.add("p1", {"beta", "t2"});
  predictions.add("p1", {"ghost", "t3"});

  std::set<std::string> keep = {"t1"};
  NerReport report = evaluate_ner(gold, predictions, &keep);
  REQUIRE(report.per_type.size() == 1);
  CHECK(report.per_type[0].type_id == "t1");
  CHECK(report.per_type[0].exact == MatchCounts{1, 0, 0});
}

TEST_CASE("predictions for unknown paragraphs are rejected") {
  SilverDataset gold;
  AnnotatedParagraph ap;
  ap.paragraph = Paragraph::make("p1", "alpha");
  ap.spans.push_back({0, 1, "e1", {"t1"}});
  gold.push_back(ap);
  PredictionSet predictions;
  predictions.add("p_ghost", {"alpha", "t1"});
  CHECK_THROWS_AS(evaluate_ner(gold, predictions), Error);
}

TEST_CASE("fp rate is the share of flagged paragraphs") {
  PredictionSet predictions;
  predictions.add("p1", {"alpha", "t"});
  predictions.add("p1", {"beta", "t"});   // second hit cannot double-count
  predictions.add("p2", {"alpha", "other"});
  std::vector<std::string> ids = {"p1", "p2", "p3", "p4"};
  CHECK(fp_rate(predictions, "t", ids) == doctest::Approx(0.25));
  CHECK(fp_rate(predictions, "other", ids) == doctest::Approx(0.25));
  CHECK(fp_rate(predictions, "unseen", ids) == doctest::Approx(0.0));
  CHECK_THROWS_AS(fp_rate(predictions, "t", {}), Error);
}

TEST_CASE("span prediction files resolve token ranges to surfaces") {
  SilverDataset gold;
  AnnotatedParagraph ap;
  ap.paragraph = Paragraph::make("p1", "Lester Young played");
  ap.spans.push_back({0, 2, "e1", {"saxophonist"}});
  gold.push_back(ap);

  std::string path = temp_path("span_preds.jsonl");
  write_file(path,
             "{\"paragraph_id\":\"p1\",\"predictions\":[{\"token_start\":0,"
             "\"token_end\":2,\"type_id\":\"saxophonist\"}]}\n");
  PredictionSet set = load_span_predictions(path, gold);
  REQUIRE(set.by_paragraph.at("p1").size() == 1);
  CHECK(set.by_paragraph.at("p1")[0].surface == "Lester Young");
  CHECK(set.by_paragraph.at("p1")[0].type_id == "saxophonist");

  std::string bad = temp_path("span_preds_bad.jsonl");
  write_file(bad,
             "{\"paragraph_id\":\"p1\",\"predictions\":[{\"token_start\":2,"
             "\"token_end\":9,\"type_id\":\"saxophonist\"}]}\n");
  CHECK_THROWS_AS(load_span_predictions(bad, gold), Error);

  std::string ghost = temp_path("span_preds_ghost.jsonl");
  write_file(ghost,
             "{\"paragraph_id\":\"p_ghost\",\"predictions\":[{\"token_start\":0,"
             "\"token_end\":1,\"type_id\":\"saxophonist\"}]}\n");
  CHECK_THROWS_AS(load_span_predictions(ghost, gold), Error);
  PredictionSet skipped = load_span_predictions(ghost, gold, true);
  CHECK(skipped.by_paragraph.empty());
}

TEST_CASE("string prediction files split comma-joined mentions") {
  std::string path = temp_path("string_preds.jsonl");
  write_file(path,
             "{\"paragraph_id\":\"p1\",\"entities\":[{\"entity_type\":\"sax\","
             "\"entities\":\"Lester Young,  Charlie Parker , ,Jimmy\"}]}\n");
  PredictionSet set = load_string_predictions(path);
  const auto& list = set.by_paragraph.at("p1");
  REQUIRE(list.size() == 3);
  CHECK(list[0].surface == "Lester Young");
  CHECK(list[1].surface == "Charlie Parker");
  CHECK(list[2].surface == "Jimmy");
  CHECK(list[0].type_id == "sax");
}

TEST_CASE("the loader dispatches on the record shape") {
  SilverDataset gold;
  AnnotatedParagraph ap;
  ap.paragraph = Paragraph::make("p1", "Lester Young played");
  ap.spans.push_back({0, 2, "e1", {"sax"}});
  gold.push_back(ap);

  std::string span_path = temp_path("dispatch_span.jsonl");
  write_file(span_path,
             "{\"paragraph_id\":\"p1\",\"predictions\":[{\"token_start\":0,"
             "\"token_end\":2,\"type_id\":\"sax\"}]}\n");
  std::string string_path = temp_path("dispatch_string.jsonl");
  write_file(string_path,
             "{\"paragraph_id\":\"p1\",\"entities\":[{\"entity_type\":\"sax\","
             "\"entities\":\"Lester Young\"}]}\n");
  PredictionSet from_spans = load_predictions(span_path, gold);
  PredictionSet from_strings = load_predictions(string_path, gold);
  CHECK(from_spans.by_paragraph.at("p1")[0].surface == "Lester Young");
  CHECK(from_strings.by_paragraph.at("p1")[0].surface == "Lester Young");
}

TEST_CASE("report files list counts per type then pooled and macro rows") {
  SilverDataset gold;
  AnnotatedParagraph ap;
  ap.paragraph = Paragraph::make("p1", "alpha beta");
  ap.spans.push_back({0, 1, "e1", {"t1"}});
  ap.spans.push_back({1, 2, "e2", {"t2"}});
  gold.push_back(ap);
  PredictionSet predictions;
  predictions.add("p1", {"alpha", "t1"});
  NerReport report = evaluate_ner(gold, predictions);
  std::string path = temp_path("ner_report.tsv");
  save_ner_report(report, path);

  std::ifstream in(path);
  std::string line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    std::vector<std::string> cols;
    size_t start = 0;
    while (true) {
      size_t tab = line.find('\t', start);
      cols.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    rows.push_back(cols);
  }
  REQUIRE(rows.size() == 5);  // header, t1, t2, micro, macro
  for (const auto& row : rows) CHECK(row.size() == 13);
  CHECK(rows[0][0] == "type_id");
  CHECK(rows[1][0] == "t1");
  CHECK(rows[2][0] == "t2");
  CHECK(rows[3][0] == "micro");
  CHECK(rows[4][0] == "macro");
  CHECK(rows[1][1] == "1");  // t1 exact tp
  CHECK(rows[3][1] == "1");  // pooled exact tp
  CHECK(rows[4][1] == "");   // macro rows carry no counts
}
