#include "synth.hpp"

#include <algorithm>
#include <array>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <unordered_set>

#include "entkit/error.hpp"
#include "entkit/io.hpp"
#include "entkit/rng.hpp"

namespace entkit::synth {
namespace {

struct TypeSpec {
  const char* type_id;
  const char* label;
  std::vector<const char*> parents;
  std::vector<const char*> markers;  // includes the folded label tokens
};

// Marker vocabularies are disjoint across types so paragraph context is
// unambiguous; intersectional types borrow their parents' markers at
// generation time rather than re-listing them.
const std::vector<TypeSpec>& type_table() {
  static const std::vector<TypeSpec> table = {
      {"creature", "Creatures", {},
       {"creatures", "wildlife", "fauna", "habitat", "organism", "biologists"}},
      {"invertebrate", "Invertebrates", {"creature"},
       {"invertebrates", "exoskeleton", "larval", "spineless", "molting", "antennae"}},
      {"insect", "Insects", {"invertebrate"},
       {"insects", "thorax", "entomologists", "swarm", "pollinating", "winged"}},
      {"butterfly", "Butterflies", {"insect"},
       {"butterflies", "nectar", "caterpillar", "chrysalis", "wingspan", "flutter"}},
      {"mammal", "Mammals", {"creature"},
       {"mammals", "fur", "grazing", "herd", "den", "whiskers"}},
      {"dog_breed", "Dog Breeds", {"mammal"},
       {"dog", "breeds", "kennel", "puppies", "muzzle", "obedience"}},
      {"person", "People", {},
       {"people", "born", "childhood", "career", "biography", "renowned"}},
      {"politician", "Politicians", {"person"},
       {"politicians", "parliament", "election", "minister", "campaign", "cabinet"}},
      {"musician", "Musicians", {"person"},
       {"musicians", "concert", "album", "melody", "recording", "tour"}},
      {"saxophonist", "Saxophonists", {"musician"},
       {"saxophonists", "saxophone", "jazz", "quartet", "reed", "improvisation"}},
      {"french_person", "French People", {"person"},
       {"french", "france", "paris", "provence", "bordeaux", "riviera"}},
      {"german_person", "German People", {"person"},
       {"german", "germany", "berlin", "bavaria", "rhineland", "munich"}},
      {"french_politician", "French Politicians", {"politician", "french_person"},
       {"statesman", "assemblee"}},
      {"german_musician", "German Musicians", {"musician", "german_person"},
       {"kapellmeister", "philharmonic"}},
      {"company", "Companies", {},
       {"companies", "shares", "corporate", "merger", "revenue", "headquarters"}},
      {"city", "Cities", {},
       {"cities", "urban", "mayor", "boulevard", "skyline", "municipal"}},
      {"stadium", "Stadiums", {},
       {"stadiums", "arena", "spectators", "grandstand", "tickets", "capacity"}},
      {"river", "Rivers", {},
       {"rivers", "riverbank", "delta", "tributary", "floodplain", "estuary"}},
      {"dish", "Dishes", {},
       {"dishes", "recipe", "simmered", "spices", "savory", "garnish"}},
      {"film", "Films", {},
       {"films", "cinema", "director", "screenplay", "premiere", "reel"}},
  };
  return table;
}

const std::vector<const char*>& filler_words() {
  static const std::vector<const char*> words = {
      "the", "a", "of", "and", "in", "was", "with", "near", "over", "under",
      "its", "this", "that", "from", "into", "while", "where", "which",
      "known", "often", "later", "early", "region", "local", "small", "large",
      "famous", "history", "account", "detail", "report", "notes",
      "describes", "mentions", "during", "between", "among", "several",
      "many", "few", "first", "second", "another", "nearby", "around",
      "beyond", "against", "toward", "record", "archive"};
  return words;
}

const std::vector<const char*>& name_syllables() {
  static const std::vector<const char*> syl = {
      "bel", "dor", "fen", "gar", "hul", "jin", "kor", "lam", "mor", "nev",
      "pol", "quil", "ras", "sol", "tav", "ul", "ver", "wex", "yor", "zan",
      "bra", "cren", "dray", "els", "fay", "gris", "hale", "ives", "jory",
      "kell", "mira", "ney", "ost", "pim", "rud", "sarn", "tol", "vash"};
  return syl;
}

std::string capitalize(std::string word) {
  if (!word.empty() && word[0] >= 'a' && word[0] <= 'z') {
    word[0] = static_cast<char>(word[0] - 'a' + 'A');
  }
  return word;
}

// Pre-seeding the used set with every vocabulary word keeps generated name
// tokens disjoint from context words even after case folding.
std::unordered_set<std::string> reserved_tokens() {
  std::unordered_set<std::string> used;
  for (const auto& spec : type_table()) {
    for (const char* marker : spec.markers) used.insert(capitalize(marker));
  }
  for (const char* word : filler_words()) used.insert(capitalize(word));
  return used;
}

// Globally unique capitalized pseudo-word; uniqueness keeps alias matches
// one-to-one with plantings.
std::string fresh_name_token(Rng& rng, std::unordered_set<std::string>& used) {
  const auto& syl = name_syllables();
  while (true) {
    std::string token = syl[rng.bounded(syl.size())];
    token += syl[rng.bounded(syl.size())];
    if (rng.bounded(3) == 0) token += syl[rng.bounded(syl.size())];
    token = capitalize(token);
    if (used.insert(token).second) return token;
  }
}

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& items) {
  if (items.empty()) throw std::logic_error("pick from empty vector");
  return items[rng.bounded(items.size())];
}

struct Generator {
  Rng rng;
  std::unordered_set<std::string> used_tokens = reserved_tokens();
  MiniCorpus out;
  std::map<std::string, std::vector<std::string>> entities_by_type;
  std::map<std::string, std::vector<std::string>> markers_by_type;  // own + ancestors
  std::vector<std::string> type_ids;
  uint32_t next_paragraph = 0;

  explicit Generator(uint64_t seed) : rng(seed) {}

  void build_lexicon() {
    for (const auto& spec : type_table()) {
      EntityType type;
      type.type_id = spec.type_id;
      type.label = spec.label;
      for (const char* parent : spec.parents) type.parent_ids.push_back(parent);
      out.lexicon.add_type(type);
      type_ids.push_back(spec.type_id);
    }
    for (const auto& spec : type_table()) {
      std::set<std::string> closed =
          hierarchy_closure(out.lexicon, {spec.type_id});
      std::vector<std::string> markers;
      for (const auto& tid : closed) {
        for (const auto& other : type_table()) {
          if (other.type_id == tid) {
            for (const char* m : other.markers) markers.push_back(m);
          }
        }
      }
      std::sort(markers.begin(), markers.end());
      markers_by_type[spec.type_id] = std::move(markers);
    }
    Rng names = rng.derive("names");
    for (const auto& spec : type_table()) {
      for (int i = 0; i < 8; ++i) {
        EntityEntry entity;
        entity.entity_id = std::string(spec.type_id) + "_e" + std::to_string(i);
        std::string first = fresh_name_token(names, used_tokens);
        std::string second = fresh_name_token(names, used_tokens);
        entity.canonical_name = first + " " + second;
        entity.aliases.insert(entity.canonical_name);
        if (names.bounded(2) == 0) {
          entity.aliases.insert(fresh_name_token(names, used_tokens));
        }
        entity.type_ids.insert(spec.type_id);
        out.lexicon.add_entity(entity);
        entities_by_type[spec.type_id].push_back(entity.entity_id);
      }
    }
    out.lexicon.validate();
  }

  std::string new_paragraph_id() {
    return "p" + std::to_string(next_paragraph++);
  }

  void append_context(std::vector<std::string>& tokens, Rng& r,
                      const std::string& type_id, size_t count) {
    const auto& markers = markers_by_type.at(type_id);
    for (size_t i = 0; i < count; ++i) {
      uint64_t roll = r.bounded(10);
      if (roll < 6) {
        tokens.push_back(pick(r, markers));
      } else {
        tokens.push_back(pick(r, filler_words()));
      }
      if (r.bounded(12) == 0) tokens.push_back(".");
    }
  }

  // Plants one alias of the entity, optionally with filler tokens
  // interleaved between alias tokens (still within the default slop).
  PlantedMention plant(std::vector<std::string>& tokens, Rng& r,
                       const std::string& paragraph_id,
                       const std::string& entity_id,
                       const std::string& context_type, bool decoy) {
    const EntityEntry* entity = out.lexicon.find_entity(entity_id);
    std::vector<std::string> aliases(entity->aliases.begin(),
                                     entity->aliases.end());
    const std::string& alias = pick(r, aliases);
    std::vector<std::string> alias_tokens;
    size_t pos = 0;
    while (pos < alias.size()) {
      size_t space = alias.find(' ', pos);
      if (space == std::string::npos) space = alias.size();
      alias_tokens.push_back(alias.substr(pos, space - pos));
      pos = space + 1;
    }
    PlantedMention mention;
    mention.paragraph_id = paragraph_id;
    mention.entity_id = entity_id;
    mention.type_ids = hierarchy_closure(out.lexicon, entity->type_ids);
    mention.decoy = decoy;
    mention.token_start = static_cast<uint32_t>(tokens.size());
    for (size_t i = 0; i < alias_tokens.size(); ++i) {
      if (i > 0 && r.bounded(10) == 0) {
        const auto& markers = markers_by_type.at(context_type);
        tokens.push_back(pick(r, markers));
      }
      tokens.push_back(alias_tokens[i]);
    }
    mention.token_end = static_cast<uint32_t>(tokens.size());
    return mention;
  }

  // Periods glue to the preceding word so the tokenizer re-derives exactly
  // the planned token list.
  static std::string render(const std::vector<std::string>& tokens) {
    std::string text;
    for (const auto& token : tokens) {
      if (token == "." && !text.empty()) {
        text += '.';
        continue;
      }
      if (!text.empty()) text += ' ';
      text += token;
    }
    return text;
  }

  void emit(const std::string& paragraph_id,
            const std::vector<std::string>& tokens,
            std::vector<PlantedMention> mentions) {
    Paragraph paragraph = Paragraph::make(paragraph_id, render(tokens));
    if (paragraph.tokens.size() != tokens.size()) {
      throw std::logic_error("token plan does not survive tokenization");
    }
    out.corpus.push_back(std::move(paragraph));
    for (auto& mention : mentions) {
      out.linkgraph.candidates[mention.entity_id].insert(paragraph_id);
      out.mentions.push_back(std::move(mention));
    }
  }

  // count distinct declared types drawn at random; one entity per type.
  void make_entity_paragraph(Rng& r, size_t type_count, bool with_decoy) {
    std::vector<std::string> order = type_ids;
    r.shuffle(order);
    order.resize(type_count);
    std::string paragraph_id = new_paragraph_id();
    std::vector<std::string> tokens;
    std::vector<PlantedMention> mentions;
    append_context(tokens, r, order[0], 3 + r.bounded(3));
    for (const auto& type_id : order) {
      const auto& pool = entities_by_type.at(type_id);
      mentions.push_back(plant(tokens, r, paragraph_id, pick(r, pool),
                               type_id, false));
      append_context(tokens, r, type_id, 5 + r.bounded(4));
    }
    if (with_decoy) {
      std::set<std::string> taken(order.begin(), order.end());
      std::string decoy_type;
      while (true) {
        decoy_type = pick(r, type_ids);
        // decoys come from types with no hierarchical relation to the
        // context so the planted alias is contextually out of place
        std::set<std::string> closed =
            hierarchy_closure(out.lexicon, {decoy_type});
        bool clash = false;
        for (const auto& present : taken) {
          std::set<std::string> present_closed =
              hierarchy_closure(out.lexicon, {present});
          for (const auto& tid : closed) {
            if (present_closed.count(tid)) clash = true;
          }
          for (const auto& tid : present_closed) {
            if (closed.count(tid)) clash = true;
          }
        }
        if (!clash) break;
      }
      const auto& pool = entities_by_type.at(decoy_type);
      mentions.push_back(plant(tokens, r, paragraph_id, pick(r, pool),
                               order[0], true));
      append_context(tokens, r, order[0], 4 + r.bounded(3));
    }
    tokens.push_back(".");
    emit(paragraph_id, tokens, std::move(mentions));
  }

  void make_background_paragraph(Rng& r) {
    std::string paragraph_id = new_paragraph_id();
    std::vector<std::string> tokens;
    size_t flavor_count = 1 + r.bounded(2);
    for (size_t i = 0; i < flavor_count; ++i) {
      append_context(tokens, r, pick(r, type_ids), 8 + r.bounded(8));
    }
    tokens.push_back(".");
    emit(paragraph_id, tokens, {});
  }

  void build_paragraphs() {
    Rng r = rng.derive("paragraphs");
    for (int i = 0; i < 1400; ++i) make_entity_paragraph(r, 2, false);
    for (int i = 0; i < 800; ++i) make_entity_paragraph(r, 3, false);
    for (int i = 0; i < 100; ++i) make_entity_paragraph(r, 2, true);
    for (int i = 0; i < 300; ++i) make_entity_paragraph(r, 1, false);
    for (int i = 0; i < 2400; ++i) make_background_paragraph(r);
  }

  void extend_linkgraph() {
    // a few candidate listings that never produce matches, plus dangling
    // paragraph ids, to exercise the warning paths
    Rng r = rng.derive("linkgraph");
    for (const auto& entity : out.lexicon.entities()) {
      if (r.bounded(10) != 0) continue;
      const auto& paragraph = out.corpus[r.bounded(out.corpus.size())];
      out.linkgraph.candidates[entity.entity_id].insert(
          paragraph.paragraph_id);
    }
    out.linkgraph.candidates["creature_e0"].insert("p_missing_a");
    out.linkgraph.candidates["film_e1"].insert("p_missing_b");
  }

  void build_vectors() {
    Rng r = rng.derive("vectors");
    const size_t dim = type_ids.size() + 4;
    out.paragraph_vectors = DenseVectorStore::with_dimension(dim);
    out.query_vectors = DenseVectorStore::with_dimension(dim);
    std::map<std::string, size_t> axis;
    for (size_t i = 0; i < type_ids.size(); ++i) axis[type_ids[i]] = i;
    std::map<std::string, std::set<std::string>> types_by_paragraph;
    for (const auto& mention : out.mentions) {
      if (mention.decoy) continue;
      types_by_paragraph[mention.paragraph_id].insert(
          mention.type_ids.begin(), mention.type_ids.end());
    }
    for (const auto& paragraph : out.corpus) {
      std::vector<double> values(dim, 0.0);
      auto it = types_by_paragraph.find(paragraph.paragraph_id);
      if (it != types_by_paragraph.end()) {
        for (const auto& type_id : it->second) {
          values[axis.at(type_id)] = 1.0 + 0.1 * r.real();
        }
      }
      for (size_t i = type_ids.size(); i < dim; ++i) {
        values[i] = 0.2 * r.real();
      }
      out.paragraph_vectors.add(paragraph.paragraph_id, values);
    }
    for (const auto& type_id : type_ids) {
      std::vector<double> values(dim, 0.0);
      values[axis.at(type_id)] = 1.0;
      for (size_t i = type_ids.size(); i < dim; ++i) {
        values[i] = 0.02 * r.real();
      }
      out.query_vectors.add(type_id, values);
    }
  }
};

}  // namespace

MiniCorpus make_mini_corpus(uint64_t seed) {
  Generator gen(seed);
  gen.build_lexicon();
  gen.build_paragraphs();
  gen.extend_linkgraph();
  gen.build_vectors();
  return std::move(gen.out);
}

void write_mini_corpus(const MiniCorpus& mini, const std::string& dir) {
  std::filesystem::create_directories(dir);
  auto path = [&dir](const char* name) {
    return (std::filesystem::path(dir) / name).string();
  };
  save_lexicon(mini.lexicon, path("lexicon.jsonl"));
  save_corpus(mini.corpus, path("corpus.jsonl"));
  save_linkgraph(mini.linkgraph, path("linkgraph.jsonl"));
  mini.paragraph_vectors.save(path("paragraph_vectors.txt"));
  mini.query_vectors.save(path("query_vectors.txt"));
  std::ofstream out = open_output(path("mentions.jsonl"));
  for (const auto& mention : mini.mentions) {
    OrderedJson row;
    row["paragraph_id"] = mention.paragraph_id;
    row["token_start"] = mention.token_start;
    row["token_end"] = mention.token_end;
    row["entity_id"] = mention.entity_id;
    row["type_ids"] = mention.type_ids;
    row["kind"] = mention.decoy ? "decoy" : "true";
    out << row.dump() << "\n";
  }
}

std::vector<PlantedMention> load_mentions(const std::string& path) {
  std::vector<PlantedMention> mentions;
  for_each_json_line(path, [&](size_t, const Json& row) {
    PlantedMention mention;
    mention.paragraph_id = row.at("paragraph_id").get<std::string>();
    mention.token_start = row.at("token_start").get<uint32_t>();
    mention.token_end = row.at("token_end").get<uint32_t>();
    mention.entity_id = row.at("entity_id").get<std::string>();
    for (const auto& tid : row.at("type_ids")) {
      mention.type_ids.insert(tid.get<std::string>());
    }
    mention.decoy = row.at("kind").get<std::string>() == "decoy";
    mentions.push_back(std::move(mention));
  });
  return mentions;
}

SeparableCorpus make_separable_corpus(uint64_t seed, size_t per_class) {
  static const std::vector<const char*> markers_a = {
      "meadow", "plumage", "nest", "migratory", "birdsong", "feathers",
      "perch", "fledgling", "beak", "aviary"};
  static const std::vector<const char*> markers_b = {
      "circuit", "throttle", "chassis", "laps", "pit", "gearbox",
      "downforce", "qualifying", "tyres", "paddock"};

  SeparableCorpus out;
  out.type_a = "meadow_bird";
  out.type_b = "race_car";
  out.per_class = per_class;

  EntityType type_a{out.type_a, "Meadow Birds", {}};
  EntityType type_b{out.type_b, "Race Cars", {}};
  out.lexicon.add_type(type_a);
  out.lexicon.add_type(type_b);

  Rng rng(seed);
  Rng names = rng.derive("names");
  std::unordered_set<std::string> used = reserved_tokens();
  for (const char* marker : markers_a) used.insert(capitalize(marker));
  for (const char* marker : markers_b) used.insert(capitalize(marker));
  std::map<std::string, std::vector<std::string>> entities;
  for (const auto& type_id : {out.type_a, out.type_b}) {
    for (int i = 0; i < 40; ++i) {
      EntityEntry entity;
      entity.entity_id = type_id + "_e" + std::to_string(i);
      entity.canonical_name = fresh_name_token(names, used) + " " +
                              fresh_name_token(names, used);
      entity.aliases.insert(entity.canonical_name);
      entity.type_ids.insert(type_id);
      out.lexicon.add_entity(entity);
      entities[type_id].push_back(entity.entity_id);
    }
  }
  out.lexicon.validate();

  Rng r = rng.derive("paragraphs");
  auto make_class = [&](const std::string& own_type,
                        const std::string& other_type,
                        const std::vector<const char*>& own_markers,
                        const char* prefix) {
    for (size_t i = 0; i < per_class; ++i) {
      std::string paragraph_id = std::string(prefix) + std::to_string(i);
      std::vector<std::string> tokens;
      auto context = [&](size_t count) {
        for (size_t k = 0; k < count; ++k) {
          if (r.bounded(10) < 6) {
            tokens.push_back(pick(r, own_markers));
          } else {
            tokens.push_back(pick(r, filler_words()));
          }
        }
      };
      auto plant_one = [&](const std::string& type_id, bool decoy) {
        const auto& pool = entities.at(type_id);
        const std::string& entity_id = pick(r, pool);
        const EntityEntry* entity = out.lexicon.find_entity(entity_id);
        const std::string& alias = *entity->aliases.begin();
        PlantedMention mention;
        mention.paragraph_id = paragraph_id;
        mention.entity_id = entity_id;
        mention.type_ids = {type_id};
        mention.decoy = decoy;
        mention.token_start = static_cast<uint32_t>(tokens.size());
        size_t pos = 0;
        while (pos < alias.size()) {
          size_t space = alias.find(' ', pos);
          if (space == std::string::npos) space = alias.size();
          tokens.push_back(alias.substr(pos, space - pos));
          pos = space + 1;
        }
        mention.token_end = static_cast<uint32_t>(tokens.size());
        out.mentions.push_back(std::move(mention));
      };
      context(4 + r.bounded(3));
      plant_one(own_type, false);
      context(8 + r.bounded(5));
      if (i % 5 == 0) {
        plant_one(other_type, true);
        context(4 + r.bounded(3));
      }
      std::string text;
      for (const auto& token : tokens) {
        if (!text.empty()) text += ' ';
        text += token;
      }
      out.corpus.push_back(Paragraph::make(paragraph_id, text));
    }
  };
  make_class(out.type_a, out.type_b, markers_a, "a");
  make_class(out.type_b, out.type_a, markers_b, "b");
  return out;
}

}  // namespace entkit::synth
