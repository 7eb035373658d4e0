#include "entkit/lexicon.hpp"

#include <algorithm>

#include "entkit/error.hpp"
#include "entkit/io.hpp"
#include "entkit/text.hpp"

namespace entkit {

namespace {

// Three-color DFS over the parent relation. Reports the first cycle found.
void check_acyclic(const std::vector<EntityType>& types,
                   const std::unordered_map<std::string, size_t>& index) {
  enum class Mark { unseen, active, done };
  std::vector<Mark> marks(types.size(), Mark::unseen);
  // Iterative DFS; stack holds (node, next-parent position).
  std::vector<std::pair<size_t, size_t>> stack;
  for (size_t root = 0; root < types.size(); ++root) {
    if (marks[root] != Mark::unseen) continue;
    stack.push_back({root, 0});
    marks[root] = Mark::active;
    while (!stack.empty()) {
      auto& [node, pos] = stack.back();
      if (pos == types[node].parent_ids.size()) {
        marks[node] = Mark::done;
        stack.pop_back();
        continue;
      }
      const std::string& parent = types[node].parent_ids[pos++];
      size_t p = index.at(parent);
      if (marks[p] == Mark::active)
        throw Error(ErrorKind::hierarchy_cycle,
                    "type hierarchy cycle through \"" + parent + "\"");
      if (marks[p] == Mark::unseen) {
        marks[p] = Mark::active;
        stack.push_back({p, 0});
      }
    }
  }
}

}  // namespace

void Lexicon::add_type(EntityType type) {
  if (type.type_id.empty())
    throw Error(ErrorKind::invariant, "type_id must be non-empty");
  if (type.label.empty())
    throw Error(ErrorKind::invariant, "type \"" + type.type_id + "\" has an empty label");
  if (type_index_.count(type.type_id))
    throw Error(ErrorKind::duplicate_id, "duplicate type_id \"" + type.type_id + "\"");
  auto pos = std::lower_bound(types_.begin(), types_.end(), type.type_id,
                              [](const EntityType& t, const std::string& id) {
                                return t.type_id < id;
                              });
  types_.insert(pos, std::move(type));
  type_index_.clear();
  for (size_t i = 0; i < types_.size(); ++i) type_index_[types_[i].type_id] = i;
}

void Lexicon::add_entity(EntityEntry entity) {
  if (entity.entity_id.empty())
    throw Error(ErrorKind::invariant, "entity_id must be non-empty");
  if (entity.type_ids.empty())
    throw Error(ErrorKind::invariant,
                "entity \"" + entity.entity_id + "\" has no types");
  if (entity_index_.count(entity.entity_id))
    throw Error(ErrorKind::duplicate_id,
                "duplicate entity_id \"" + entity.entity_id + "\"");
  entity.aliases.insert(entity.canonical_name);
  for (const auto& alias : entity.aliases) {
    if (tokenize(alias).empty())
      throw Error(ErrorKind::invariant, "entity \"" + entity.entity_id +
                                            "\" has an alias with no tokens");
  }
  auto pos = std::lower_bound(entities_.begin(), entities_.end(), entity.entity_id,
                              [](const EntityEntry& e, const std::string& id) {
                                return e.entity_id < id;
                              });
  entities_.insert(pos, std::move(entity));
  entity_index_.clear();
  for (size_t i = 0; i < entities_.size(); ++i)
    entity_index_[entities_[i].entity_id] = i;
}

void Lexicon::validate() const {
  for (const auto& type : types_) {
    for (const auto& parent : type.parent_ids) {
      if (!type_index_.count(parent))
        throw Error(ErrorKind::dangling_reference,
                    "type \"" + type.type_id + "\" references unknown parent \"" +
                        parent + "\"");
    }
  }
  check_acyclic(types_, type_index_);
  for (const auto& entity : entities_) {
    for (const auto& tid : entity.type_ids) {
      if (!type_index_.count(tid))
        throw Error(ErrorKind::dangling_reference,
                    "entity \"" + entity.entity_id + "\" references unknown type \"" +
                        tid + "\"");
    }
  }
}

const EntityType* Lexicon::find_type(const std::string& type_id) const {
  auto it = type_index_.find(type_id);
  return it == type_index_.end() ? nullptr : &types_[it->second];
}

const EntityEntry* Lexicon::find_entity(const std::string& entity_id) const {
  auto it = entity_index_.find(entity_id);
  return it == entity_index_.end() ? nullptr : &entities_[it->second];
}

std::vector<std::string> Lexicon::type_ids() const {
  std::vector<std::string> ids;
  ids.reserve(types_.size());
  for (const auto& t : types_) ids.push_back(t.type_id);
  return ids;
}

std::set<std::string> hierarchy_closure(const Lexicon& lexicon,
                                        const std::set<std::string>& type_ids) {
  std::set<std::string> closed;
  std::vector<const EntityType*> frontier;
  for (const auto& id : type_ids) {
    const EntityType* t = lexicon.find_type(id);
    if (!t)
      throw Error(ErrorKind::dangling_reference, "unknown type_id \"" + id + "\"");
    if (closed.insert(id).second) frontier.push_back(t);
  }
  while (!frontier.empty()) {
    const EntityType* t = frontier.back();
    frontier.pop_back();
    for (const auto& parent : t->parent_ids) {
      const EntityType* p = lexicon.find_type(parent);
      if (!p)
        throw Error(ErrorKind::dangling_reference,
                    "unknown parent type \"" + parent + "\"");
      if (closed.insert(parent).second) frontier.push_back(p);
    }
  }
  return closed;
}

Lexicon load_lexicon(const std::string& path) {
  Lexicon lexicon;
  for_each_json_line(path, [&](size_t, const Json& record) {
    std::string kind = require_string(record, "kind");
    if (kind == "type") {
      EntityType type;
      type.type_id = require_string(record, "type_id");
      type.label = require_string(record, "label");
      for (const auto& p : require_field(record, "parent_ids"))
        type.parent_ids.push_back(p.get<std::string>());
      lexicon.add_type(std::move(type));
    } else if (kind == "entity") {
      EntityEntry entity;
      entity.entity_id = require_string(record, "entity_id");
      entity.canonical_name = require_string(record, "canonical_name");
      for (const auto& a : require_field(record, "aliases"))
        entity.aliases.insert(a.get<std::string>());
      for (const auto& t : require_field(record, "type_ids"))
        entity.type_ids.insert(t.get<std::string>());
      lexicon.add_entity(std::move(entity));
    } else {
      throw Error(ErrorKind::parse, "unknown record kind \"" + kind + "\"");
    }
  });
  lexicon.validate();
  return lexicon;
}

void save_lexicon(const Lexicon& lexicon, const std::string& path) {
  std::ofstream out = open_output(path);
  for (const auto& type : lexicon.types()) {
    OrderedJson record;
    record["kind"] = "type";
    record["type_id"] = type.type_id;
    record["label"] = type.label;
    record["parent_ids"] = type.parent_ids;
    out << record.dump() << '\n';
  }
  for (const auto& entity : lexicon.entities()) {
    OrderedJson record;
    record["kind"] = "entity";
    record["entity_id"] = entity.entity_id;
    record["canonical_name"] = entity.canonical_name;
    record["aliases"] = entity.aliases;
    record["type_ids"] = entity.type_ids;
    out << record.dump() << '\n';
  }
}

}  // namespace entkit
