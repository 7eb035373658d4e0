#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "entkit/corpus.hpp"
#include "entkit/error.hpp"
#include "entkit/lexicon.hpp"

using namespace entkit;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("entkit_cm_" + name))
      .string();
}

std::string write_file(const std::string& name, const std::string& content) {
  std::string path = temp_path(name);
  std::ofstream out(path);
  out << content;
  return path;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Animal taxonomy chain plus an unrelated root; mirrors the fixture used
// across matcher and pipeline tests.
Lexicon chain_lexicon() {
  Lexicon lex;
  lex.add_type({"animal", "Animals", {}});
  lex.add_type({"invertebrate", "Invertebrates", {"animal"}});
  lex.add_type({"insect", "Insects", {"invertebrate"}});
  lex.add_type({"butterfly", "Butterflies", {"insect"}});
  lex.add_type({"company", "Companies", {}});
  EntityEntry moth{"e_moth", "Aristotelia devexella",
                   {"Aristotelia devexella"}, {"butterfly"}};
  lex.add_entity(moth);
  lex.validate();
  return lex;
}

}  // namespace

TEST_CASE("lexicon file loads with expected counts") {
  std::string path = write_file(
      "lex_counts.jsonl",
      R"({"kind":"type","type_id":"bird","label":"Birds","parent_ids":[]})"
      "\n"
      R"({"kind":"type","type_id":"city","label":"Cities","parent_ids":[]})"
      "\n"
      R"({"kind":"entity","entity_id":"e1","canonical_name":"Skylark","aliases":["Skylark"],"type_ids":["bird"]})"
      "\n"
      R"({"kind":"entity","entity_id":"e2","canonical_name":"Oriole","aliases":["Oriole","Baltimore Oriole"],"type_ids":["bird"]})"
      "\n"
      R"({"kind":"entity","entity_id":"e3","canonical_name":"Gdansk","aliases":["Gdansk"],"type_ids":["city"]})"
      "\n");
  Lexicon lex = load_lexicon(path);
  CHECK(lex.types().size() == 2);
  CHECK(lex.entities().size() == 3);
  CHECK(lex.find_entity("e2")->aliases.size() == 2);
  CHECK(lex.find_type("bird")->label == "Birds");
}

TEST_CASE("self-parent is a hierarchy cycle") {
  std::string path = write_file(
      "lex_selfcycle.jsonl",
      R"({"kind":"type","type_id":"a","label":"A","parent_ids":["a"]})" "\n");
  try {
    load_lexicon(path);
    FAIL("expected hierarchy cycle error");
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::hierarchy_cycle);
  }
}

TEST_CASE("two-node hierarchy cycle is rejected") {
  std::string path = write_file(
      "lex_cycle2.jsonl",
      R"({"kind":"type","type_id":"a","label":"A","parent_ids":["b"]})" "\n"
      R"({"kind":"type","type_id":"b","label":"B","parent_ids":["a"]})" "\n");
  try {
    load_lexicon(path);
    FAIL("expected hierarchy cycle error");
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::hierarchy_cycle);
  }
}

TEST_CASE("dangling references are rejected with their kind") {
  std::string entity_bad = write_file(
      "lex_dangle.jsonl",
      R"({"kind":"type","type_id":"a","label":"A","parent_ids":[]})" "\n"
      R"({"kind":"entity","entity_id":"e1","canonical_name":"X","aliases":["X"],"type_ids":["ghost"]})"
      "\n");
  try {
    load_lexicon(entity_bad);
    FAIL("expected dangling reference error");
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::dangling_reference);
  }

  std::string parent_bad = write_file(
      "lex_dangle2.jsonl",
      R"({"kind":"type","type_id":"a","label":"A","parent_ids":["ghost"]})"
      "\n");
  try {
    load_lexicon(parent_bad);
    FAIL("expected dangling reference error");
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::dangling_reference);
  }
}

TEST_CASE("duplicate ids are rejected") {
  std::string path = write_file(
      "lex_dup.jsonl",
      R"({"kind":"type","type_id":"a","label":"A","parent_ids":[]})" "\n"
      R"({"kind":"type","type_id":"a","label":"A again","parent_ids":[]})"
      "\n");
  try {
    load_lexicon(path);
    FAIL("expected duplicate id error");
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::duplicate_id);
  }
}

TEST_CASE("malformed json reports the line number") {
  std::string path = write_file(
      "lex_badjson.jsonl",
      R"({"kind":"type","type_id":"a","label":"A","parent_ids":[]})" "\n"
      "{not json\n");
  try {
    load_lexicon(path);
    FAIL("expected parse error");
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::parse);
    CHECK(std::string(err.what()).find(":2") != std::string::npos);
  }
}

TEST_CASE("closure walks the whole chain") {
  Lexicon lex = chain_lexicon();
  std::set<std::string> expected = {"butterfly", "insect", "invertebrate",
                                    "animal"};
  CHECK(hierarchy_closure(lex, {"butterfly"}) == expected);
}

TEST_CASE("closure of a root is itself") {
  Lexicon lex = chain_lexicon();
  CHECK(hierarchy_closure(lex, {"animal"}) ==
        std::set<std::string>{"animal"});
}

TEST_CASE("closure over a forest unions the branches") {
  Lexicon lex = chain_lexicon();
  std::set<std::string> expected = {"insect", "invertebrate", "animal",
                                    "company"};
  CHECK(hierarchy_closure(lex, {"insect", "company"}) == expected);
}

TEST_CASE("closure is idempotent and monotone") {
  Lexicon lex = chain_lexicon();
  std::set<std::string> once = hierarchy_closure(lex, {"butterfly", "company"});
  CHECK(hierarchy_closure(lex, once) == once);
  for (const auto& t : std::set<std::string>{"butterfly", "company"}) {
    CHECK(once.count(t) == 1);
  }
}

TEST_CASE("closure rejects unknown type ids") {
  Lexicon lex = chain_lexicon();
  CHECK_THROWS_AS(hierarchy_closure(lex, {"ghost"}), Error);
}

TEST_CASE("multiple parents are allowed and both are entered") {
  Lexicon lex;
  lex.add_type({"person", "People", {}});
  lex.add_type({"politician", "Politicians", {"person"}});
  lex.add_type({"french", "French People", {"person"}});
  lex.add_type({"french_politician", "French Politicians",
                {"politician", "french"}});
  lex.validate();
  std::set<std::string> expected = {"french_politician", "politician",
                                    "french", "person"};
  CHECK(hierarchy_closure(lex, {"french_politician"}) == expected);
}

TEST_CASE("lexicon save then load is byte-stable") {
  Lexicon lex = chain_lexicon();
  std::string p1 = temp_path("lex_rt1.jsonl");
  std::string p2 = temp_path("lex_rt2.jsonl");
  save_lexicon(lex, p1);
  Lexicon reloaded = load_lexicon(p1);
  save_lexicon(reloaded, p2);
  CHECK(slurp(p1) == slurp(p2));
  CHECK(reloaded.types().size() == lex.types().size());
  CHECK(reloaded.entities().size() == lex.entities().size());
}

TEST_CASE("corpus round trip preserves ids, text and order") {
  std::vector<Paragraph> corpus;
  corpus.push_back(Paragraph::make("p2", "A moth of the family."));
  corpus.push_back(Paragraph::make("p1", "St. Peter's Lutheran Church"));
  std::string p1 = temp_path("corpus_rt1.jsonl");
  std::string p2 = temp_path("corpus_rt2.jsonl");
  save_corpus(corpus, p1);
  std::vector<Paragraph> reloaded = load_corpus(p1);
  save_corpus(reloaded, p2);
  CHECK(slurp(p1) == slurp(p2));
  REQUIRE(reloaded.size() == 2);
  CHECK(reloaded[0].paragraph_id == "p2");
  CHECK(reloaded[1].text == "St. Peter's Lutheran Church");
  CHECK(reloaded[1].tokens.size() == 5);
}

TEST_CASE("duplicate paragraph ids are rejected") {
  std::string path = write_file("corpus_dup.jsonl",
                                R"({"paragraph_id":"p1","text":"one"})" "\n"
                                R"({"paragraph_id":"p1","text":"two"})" "\n");
  try {
    load_corpus(path);
    FAIL("expected duplicate id error");
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::duplicate_id);
  }
}

TEST_CASE("corpus reader streams records and ignores extra fields") {
  std::string path = write_file(
      "corpus_stream.jsonl",
      R"({"paragraph_id":"p1","text":"alpha beta","spans":[]})" "\n"
      "\n"
      R"({"paragraph_id":"p2","text":"gamma"})" "\n");
  CorpusReader reader(path);
  auto first = reader.next();
  REQUIRE(first.has_value());
  CHECK(first->paragraph_id == "p1");
  CHECK(first->tokens.size() == 2);
  auto second = reader.next();
  REQUIRE(second.has_value());
  CHECK(second->paragraph_id == "p2");
  CHECK_FALSE(reader.next().has_value());
}

TEST_CASE("linkgraph round trip") {
  LinkGraph graph;
  graph.candidates["e1"] = {"p1", "p2"};
  graph.candidates["e2"] = {"p2"};
  std::string p1 = temp_path("lg_rt1.jsonl");
  std::string p2 = temp_path("lg_rt2.jsonl");
  save_linkgraph(graph, p1);
  LinkGraph reloaded = load_linkgraph(p1);
  save_linkgraph(reloaded, p2);
  CHECK(slurp(p1) == slurp(p2));
  REQUIRE(reloaded.for_entity("e1") != nullptr);
  CHECK(reloaded.for_entity("e1")->size() == 2);
  CHECK(reloaded.for_entity("ghost") == nullptr);
}

TEST_CASE("dataset round trip and span validation") {
  SilverDataset dataset;
  AnnotatedParagraph ap;
  ap.paragraph = Paragraph::make("p1", "Aristotelia devexella is a moth");
  ap.spans.push_back({0, 2, "e_moth",
                      {"butterfly", "insect", "invertebrate", "animal"}});
  dataset.push_back(ap);
  std::string p1 = temp_path("ds_rt1.jsonl");
  std::string p2 = temp_path("ds_rt2.jsonl");
  save_dataset(dataset, p1);
  SilverDataset reloaded = load_dataset(p1);
  save_dataset(reloaded, p2);
  CHECK(slurp(p1) == slurp(p2));
  REQUIRE(reloaded.size() == 1);
  REQUIRE(reloaded[0].spans.size() == 1);
  CHECK(reloaded[0].spans[0] == ap.spans[0]);
}

TEST_CASE("dataset spans out of token range are rejected") {
  std::string path = write_file(
      "ds_range.jsonl",
      R"({"paragraph_id":"p1","text":"two tokens","spans":[{"token_start":0,"token_end":3,"entity_id":"e","type_ids":["t"]}]})"
      "\n");
  try {
    load_dataset(path);
    FAIL("expected invariant error");
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::invariant);
  }
}

TEST_CASE("dataset spans with empty type sets are rejected") {
  std::string path = write_file(
      "ds_types.jsonl",
      R"({"paragraph_id":"p1","text":"two tokens","spans":[{"token_start":0,"token_end":1,"entity_id":"e","type_ids":[]}]})"
      "\n");
  try {
    load_dataset(path);
    FAIL("expected invariant error");
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::invariant);
  }
}
