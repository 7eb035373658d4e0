#pragma once

#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace entkit {

// An entity type. parent_ids declare subset relations; the relation over a
// whole lexicon must form a DAG (multiple parents are allowed).
struct EntityType {
  std::string type_id;
  std::string label;
  std::vector<std::string> parent_ids;
};

// One entity with its alias surface forms. aliases always contains
// canonical_name; every alias tokenizes to at least one token.
struct EntityEntry {
  std::string entity_id;
  std::string canonical_name;
  std::set<std::string> aliases;
  std::set<std::string> type_ids;
};

class Lexicon {
 public:
  // Validates closure and invariants; throws Error on violation.
  void add_type(EntityType type);
  void add_entity(EntityEntry entity);

  // Full validation of cross-references and the hierarchy DAG. Loaders call
  // this after ingesting all records; call it yourself when building
  // programmatically.
  void validate() const;

  const EntityType* find_type(const std::string& type_id) const;
  const EntityEntry* find_entity(const std::string& entity_id) const;

  // Sorted by id, stable across runs.
  const std::vector<EntityType>& types() const { return types_; }
  const std::vector<EntityEntry>& entities() const { return entities_; }

  std::vector<std::string> type_ids() const;

 private:
  std::vector<EntityType> types_;
  std::vector<EntityEntry> entities_;
  std::unordered_map<std::string, size_t> type_index_;
  std::unordered_map<std::string, size_t> entity_index_;
};

// Reflexive-transitive closure over the parent DAG: the input types plus
// every ancestor. Throws on unknown type ids.
std::set<std::string> hierarchy_closure(const Lexicon& lexicon,
                                        const std::set<std::string>& type_ids);

// Line-delimited JSON records, two kinds: {"kind":"type",...} and
// {"kind":"entity",...}. See README for the exact schema.
Lexicon load_lexicon(const std::string& path);
void save_lexicon(const Lexicon& lexicon, const std::string& path);

}  // namespace entkit
