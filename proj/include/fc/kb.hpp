#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fc {

struct ClassInfo {
  std::string id;
  std::string name;
};

struct RelationInfo {
  std::string id;
  std::string name;
  std::string domain;   // domain class id, empty when undeclared ("-")
  std::string range;    // range class id, empty when undeclared ("-")
  std::string reverse;  // explicit reverse relation id, empty when undeclared
};

struct EntityInfo {
  std::string id;
  long long popularity = 0;
  std::vector<std::string> names;  // at least one surface name
};

enum class ObjectKind { Entity, Class, Literal };

struct Fact {
  std::string subject;  // entity id
  std::string relation;
  std::string object;  // entity id, class id, or literal lexical form
  ObjectKind object_kind = ObjectKind::Entity;
};

struct OntologyTriple {
  std::string domain;
  std::string relation;
  std::string range;
  auto operator<=>(const OntologyTriple&) const = default;
};

struct LoadError : std::runtime_error {
  LoadError(const std::string& message, std::size_t line);
  std::size_t line;  // 1-based line number in the input
};

struct LoadOptions {
  // Strict mode treats dangling references as errors and runs the
  // domain/range consistency check; the lenient mode downgrades dangling
  // references to warnings and drops the offending lines.
  bool strict = true;
};

struct LoadReport {
  std::vector<std::string> warnings;
};

// Returns the segment of an id before the first '.', used to group
// relations and classes (e.g. "rail.railway.terminuses" -> "rail").
std::string domain_grouping(std::string_view id);

// In-memory knowledge base backed by a sectioned TSV file with the sections
// #classes, #relations, #entities, #ontology and #facts.
class KnowledgeBase {
 public:
  static KnowledgeBase load(const std::filesystem::path& path, const LoadOptions& options = {},
                            LoadReport* report = nullptr);
  static KnowledgeBase load_string(std::string_view text, const LoadOptions& options = {},
                                   LoadReport* report = nullptr);

  const std::map<std::string, ClassInfo>& classes() const { return classes_; }
  const std::map<std::string, RelationInfo>& relations() const { return relations_; }
  const std::map<std::string, EntityInfo>& entities() const { return entities_; }
  const std::vector<Fact>& facts() const { return facts_; }
  const std::vector<OntologyTriple>& ontology() const { return ontology_; }

  bool has_class(const std::string& id) const { return classes_.count(id) > 0; }
  bool has_relation(const std::string& id) const { return relations_.count(id) > 0; }
  bool has_entity(const std::string& id) const { return entities_.count(id) > 0; }

  // Relation ids whose declared domain (range) is the given class.
  std::set<std::string> relations_with_domain(const std::string& class_id) const;
  std::set<std::string> relations_with_range(const std::string& class_id) const;

  // Declared reverse of a relation, when present.
  std::optional<std::string> reverse(const std::string& relation_id) const;

  // Entities declared as members of a class: subjects of facts whose object
  // position is that class id.
  std::set<std::string> class_members(const std::string& class_id) const;

  // Relations incident to an entity: relations of facts with the entity as
  // subject, relations of facts with it as object, and for object-position
  // facts additionally the declared reverse relation when one exists.
  std::set<std::string> incident_relations(const std::string& entity_id) const;

  // Stored (subject, object) pairs of a relation, in file order.
  const std::vector<std::pair<std::string, std::string>>& stored_pairs(
      const std::string& relation_id) const;

  // Fact view including virtual reverse facts: (s, r, o) holds when stored
  // directly or when the declared reverse r' of r has a stored fact (o, r', s).
  std::set<std::string> objects_of(const std::string& subject, const std::string& relation) const;
  std::set<std::string> subjects_of(const std::string& relation, const std::string& object) const;
  bool has_fact(const std::string& subject, const std::string& relation,
                const std::string& object) const;
  // All (subject, object) pairs of a relation under the virtual view.
  std::vector<std::pair<std::string, std::string>> pairs_of(const std::string& relation) const;

 private:
  void index();
  void check_integrity(const LoadOptions& options, LoadReport* report) const;

  std::map<std::string, ClassInfo> classes_;
  std::map<std::string, RelationInfo> relations_;
  std::map<std::string, EntityInfo> entities_;
  std::vector<Fact> facts_;
  std::vector<OntologyTriple> ontology_;

  std::map<std::string, std::vector<std::pair<std::string, std::string>>> facts_by_relation_;
  std::map<std::string, std::map<std::string, std::set<std::string>>> subject_index_;
  std::map<std::string, std::map<std::string, std::set<std::string>>> object_index_;
  std::map<std::string, std::set<std::string>> domain_index_;
  std::map<std::string, std::set<std::string>> range_index_;
  std::map<std::string, std::set<std::string>> members_;
  std::map<std::string, std::set<std::string>> incident_;
};

}  // namespace fc
